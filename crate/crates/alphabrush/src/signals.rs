//! Band-limited test spectra: smooth tensor bumps with exact compact support.

use num_complex::Complex64;
use rand::Rng;

use crate::bells::{Bell, Ramp};
use crate::brushlet2d::Spectrum;
use crate::covering::{Covering, Interval, Rect};

/// Smooth bump supported exactly on `[center - half, center + half]`.
#[derive(Debug, Clone, Copy)]
pub struct BellBump1 {
    bell: Bell,
}

impl BellBump1 {
    pub fn new(center: f64, half: f64) -> Self {
        let iv = Interval::free(
            center - 2.0 * half / 3.0,
            center + 2.0 * half / 3.0,
            half / 3.0,
            half / 3.0,
        );
        BellBump1 { bell: Bell::new(&iv, Ramp::default()) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.bell.eval(x)
    }

    pub fn support(&self) -> (f64, f64) {
        self.bell.support()
    }
}

/// Tensor bump with a complex amplitude.
#[derive(Debug, Clone, Copy)]
pub struct BellBump2 {
    pub x: BellBump1,
    pub y: BellBump1,
    pub amp: Complex64,
}

impl BellBump2 {
    pub fn new(center: [f64; 2], half: [f64; 2], amp: impl Into<Complex64>) -> Self {
        BellBump2 {
            x: BellBump1::new(center[0], half[0]),
            y: BellBump1::new(center[1], half[1]),
            amp: amp.into(),
        }
    }
}

impl Spectrum for BellBump2 {
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.amp * (self.x.eval(x) * self.y.eval(y))
    }
}

/// Finite sum of tensor bumps.
#[derive(Debug, Clone, Default)]
pub struct SumSpectrum {
    pub bumps: Vec<BellBump2>,
}

impl Spectrum for SumSpectrum {
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.bumps.iter().map(|b| b.eval(x, y)).sum()
    }
}

/// One random bump supported strictly inside `rect`, clear of the cutoff
/// collars.
pub fn random_bump_in_rect(rect: &Rect, rng: &mut impl Rng) -> BellBump2 {
    let dx = rect.ix.len();
    let dy = rect.iy.len();
    let cx = rect.ix.lo + dx * rng.random_range(0.3..0.7);
    let cy = rect.iy.lo + dy * rng.random_range(0.3..0.7);
    let hx = dx * rng.random_range(0.12..0.22);
    let hy = dy * rng.random_range(0.12..0.22);
    let amp = Complex64::from_polar(
        rng.random_range(0.5..2.0),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    BellBump2::new([cx, cy], [hx, hy], amp)
}

/// A random band-limited spectrum: `k` bumps in randomly chosen rectangles
/// of the covering.
pub fn random_field(cov: &Covering, k: usize, rng: &mut impl Rng) -> SumSpectrum {
    let rects: Vec<&Rect> = cov.rects().collect();
    let bumps = (0..k)
        .map(|_| {
            let rect = rects[rng.random_range(0..rects.len())];
            random_bump_in_rect(rect, rng)
        })
        .collect();
    SumSpectrum { bumps }
}
