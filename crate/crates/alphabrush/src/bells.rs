//! Ramp and bell functions.
//!
//! The ramp is the iterated-sine construction: `rho(xi) = sin(pi/4 (1 +
//! theta_k(xi)))` on `[-1, 1]` where `theta_k` is the k-fold composition of
//! the odd map `t -> sin(pi t / 2)` applied to a clamp. Oddness of `theta_k`
//! gives `rho(xi)^2 + rho(-xi)^2 = 1` up to rounding, and each composition
//! doubles the contact order at the endpoints.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::covering::Interval;
use crate::error::{Error, Result};
use crate::fft;

/// Smooth ramp, 0 below -1 and 1 above +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ramp {
    order: u32,
}

impl Default for Ramp {
    fn default() -> Self {
        Ramp { order: 3 }
    }
}

impl Ramp {
    pub fn new(order: u32) -> Self {
        Ramp { order }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= -1.0 {
            return 0.0;
        }
        if xi >= 1.0 {
            return 1.0;
        }
        let mut t = xi;
        for _ in 0..self.order {
            t = (FRAC_PI_2 * t).sin();
        }
        (FRAC_PI_4 * (1.0 + t)).sin()
    }
}

/// Bell function of an interval: up-ramp over `[lo - eps_lo, lo + eps_lo]`,
/// plateau, down-ramp over `[hi - eps_hi, hi + eps_hi]`.
#[derive(Debug, Clone, Copy)]
pub struct Bell {
    pub lo: f64,
    pub hi: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub ramp: Ramp,
}

impl Bell {
    pub fn new(interval: &Interval, ramp: Ramp) -> Self {
        Bell {
            lo: interval.lo,
            hi: interval.hi,
            eps_lo: interval.eps_lo,
            eps_hi: interval.eps_hi,
            ramp,
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.eps_lo, self.hi + self.eps_hi)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.lo + self.eps_lo, self.hi - self.eps_hi)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.ramp.eval((xi - self.lo) / self.eps_lo) * self.ramp.eval((self.hi - xi) / self.eps_hi)
    }

    /// Normalized profile `g_hat(u) = rho(|I| u / eps_lo) rho(|I| (1 - u) / eps_hi)`,
    /// so that `b(xi) = g_hat((xi - lo) / |I|)`.
    pub fn central_hat(&self, u: f64) -> f64 {
        let len = self.len();
        self.ramp.eval(len * u / self.eps_lo) * self.ramp.eval(len * (1.0 - u) / self.eps_hi)
    }

    /// Bell with the plateau widened to cover this bell's support; used for
    /// the companion partition in the multiplier machinery.
    pub fn widened(&self) -> Bell {
        Bell {
            lo: self.lo - 2.0 * self.eps_lo,
            hi: self.hi + 2.0 * self.eps_hi,
            eps_lo: self.eps_lo,
            eps_hi: self.eps_hi,
            ramp: self.ramp,
        }
    }
}

/// Time-domain samples of the central bell `g_I`, on the uniform grid
/// `x_k = k * step` for `k` in `-m/2 .. m/2` (wrapped), obtained by an
/// oversampled inverse transform of `central_hat`.
#[derive(Debug, Clone)]
pub struct CentralBellTime {
    /// Spacing of the time grid.
    pub step: f64,
    /// Frequency window width used for the transform (a multiple of 4).
    pub window: f64,
    /// Samples indexed by wrapped FFT order; use [`CentralBellTime::at`].
    values: Vec<Complex64>,
    plancherel: f64,
}

impl CentralBellTime {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `x = k * step`, signed index.
    pub fn at(&self, k: i64) -> Complex64 {
        let m = self.values.len() as i64;
        debug_assert!(k.unsigned_abs() <= (m / 2) as u64);
        self.values[(k.rem_euclid(m)) as usize]
    }

    pub fn max_index(&self) -> i64 {
        self.values.len() as i64 / 2 - 1
    }

    /// Least `c` with `|g(x)| <= c (1 + |x|)^{-r}` over the computed range
    /// `|x| <= x_cap`.
    pub fn decay_constant(&self, r: f64, x_cap: f64) -> f64 {
        let mut c: f64 = 0.0;
        let kmax = ((x_cap / self.step) as i64).min(self.max_index());
        for k in -kmax..=kmax {
            let x = k as f64 * self.step;
            c = c.max(self.at(k).norm() * (1.0 + x.abs()).powf(r));
        }
        c
    }

    /// Relative defect of the discrete energy identity between the two sides
    /// of the transform.
    pub fn plancherel_defect(&self) -> f64 {
        self.plancherel
    }
}

/// Options for the time-domain transform of a bell.
#[derive(Debug, Clone, Copy)]
pub struct TimeGridOpts {
    /// Minimum samples across each ramp of the profile.
    pub samples_per_ramp: usize,
    /// Cap on the transform size.
    pub max_len: usize,
}

impl Default for TimeGridOpts {
    fn default() -> Self {
        TimeGridOpts { samples_per_ramp: 64, max_len: 1 << 22 }
    }
}

/// Inverse transform of the normalized profile `central_hat` on an
/// oversampled frequency window.
pub fn central_bell_time(bell: &Bell, opts: &TimeGridOpts) -> Result<CentralBellTime> {
    let len = bell.len();
    let e_lo = bell.eps_lo / len;
    let e_hi = bell.eps_hi / len;
    // window [-w/2, w/2) must contain supp(central_hat) = [-e_lo, 1 + e_hi]
    let need = 2.2 * (1.0 + e_lo.max(e_hi));
    let window = (need / 4.0).ceil().max(4.0) * 4.0;
    let ramp = e_lo.min(e_hi);
    let mut m = 1usize;
    while (window / m as f64) > ramp / opts.samples_per_ramp as f64 {
        m *= 2;
        if m > opts.max_len {
            return Err(Error::RampUnderResolved {
                step: window / opts.max_len as f64,
                limit: ramp / opts.samples_per_ramp as f64,
                eps: ramp,
            });
        }
    }
    m = m.max(1 << 10);
    let h = window / m as f64;

    // samples of the profile over [-w/2, w/2)
    let mut buf: Vec<Complex64> = (0..m)
        .map(|i| {
            let u = -0.5 * window + i as f64 * h;
            Complex64::new(bell.central_hat(u), 0.0)
        })
        .collect();
    let energy_freq: f64 = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() * h;

    fft::dft_unscaled_inverse(&mut buf);
    // g(x_k) = h / sqrt(2 pi) * e^{-i w x_k / 2} * S_k, x_k = 2 pi k / (m h)
    let step = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let scale = h / (2.0 * std::f64::consts::PI).sqrt();
    for (k, v) in buf.iter_mut().enumerate() {
        let ks = if k < m / 2 { k as i64 } else { k as i64 - m as i64 };
        let x = ks as f64 * step;
        let phase = Complex64::from_polar(1.0, -0.5 * window * x);
        *v *= scale * phase;
    }
    let energy_time: f64 = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() * step;
    let plancherel = ((energy_time - energy_freq) / energy_freq).abs();

    Ok(CentralBellTime { step, window, values: buf, plancherel })
}
