//! Univariate brushlets and the interval projections.
//!
//! On the frequency side a brushlet is a windowed cosine,
//! `w_hat(xi) = sqrt(2/|I|) b_I(xi) cos(pi (n + 1/2) (xi - lo)/|I|)`,
//! and the family over all `n` spans the range of the orthogonal projection
//! `P_I` given by the bell and its two endpoint reflections. All operators
//! here act on spectra sampled on a shared [`Axis`], with reflections
//! resolved through the collar index maps so the operator identities hold to
//! rounding.

use num_complex::Complex64;

use crate::bells::Bell;
use crate::covering::Interval;
use crate::error::Result;
use crate::grid::{gauss_rule, Axis, IntervalOps};

/// Hump location `e_{n,I} = pi (n + 1/2) / |I|`.
pub fn hump(interval: &Interval, n: u32) -> f64 {
    std::f64::consts::PI * (n as f64 + 0.5) / interval.len()
}

/// Frequency-side brushlet value.
pub fn brushlet_hat(bell: &Bell, n: u32, xi: f64) -> f64 {
    let len = bell.len();
    let b = bell.eval(xi);
    if b == 0.0 {
        return 0.0;
    }
    let phase = std::f64::consts::PI * (n as f64 + 0.5) * (xi - bell.lo) / len;
    (2.0 / len).sqrt() * b * phase.cos()
}

/// Time-side brushlet value by direct quadrature of the inverse transform
/// over the bell support.
pub fn brushlet_time(bell: &Bell, n: u32, x: f64) -> Complex64 {
    time_quadrature(bell, n, &[x]).eval(x)
}

/// Precomputed quadrature for evaluating one brushlet at many time points.
pub struct TimeQuadrature {
    nodes: Vec<f64>,
    weighted_hat: Vec<f64>,
}

impl TimeQuadrature {
    pub fn eval(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::default();
        for (xi, wh) in self.nodes.iter().zip(&self.weighted_hat) {
            acc += wh * Complex64::from_polar(1.0, x * xi);
        }
        acc / (2.0 * std::f64::consts::PI).sqrt()
    }
}

/// Quadrature resolving both the cosine index and the largest |x| requested.
/// Panels break at the ramp seams, where the bell is not analytic.
pub fn time_quadrature(bell: &Bell, n: u32, xs: &[f64]) -> TimeQuadrature {
    let (slo, shi) = bell.support();
    let x_max = xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    // periods per unit of frequency from the cosine and the e^{i x xi} factor
    let per_unit = (n as f64 + 0.5) / (2.0 * bell.len()) + x_max / (2.0 * std::f64::consts::PI);
    let seams = [slo, bell.lo + bell.eps_lo, bell.hi - bell.eps_hi, shi];
    let mut nodes = Vec::new();
    let mut weighted_hat = Vec::new();
    for seg in seams.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let want = (((b - a) * per_unit * 8.0).ceil() as usize + 24).next_multiple_of(8);
        let pieces = want.div_ceil(32);
        let per = want.div_ceil(pieces);
        let rule = gauss_rule(per);
        for p in 0..pieces {
            let u = a + (b - a) * p as f64 / pieces as f64;
            let v = a + (b - a) * (p + 1) as f64 / pieces as f64;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let xi = u + (v - u) * t;
                nodes.push(xi);
                weighted_hat.push((v - u) * w * brushlet_hat(bell, n, xi));
            }
        }
    }
    TimeQuadrature { nodes, weighted_hat }
}

/// The orthogonal projection `P_I` on an axis-sampled spectrum:
/// `b(xi) [ b(xi) f(xi) + b(2 lo - xi) f(2 lo - xi) - b(2 hi - xi) f(2 hi - xi) ]`,
/// with the reflected samples looked up through the collar mirrors.
pub fn project_spectrum(
    axis: &Axis,
    interval: &Interval,
    bell: &Bell,
    f: &[Complex64],
) -> Result<Vec<Complex64>> {
    let ops = axis.interval_ops(interval)?;
    let mut out = vec![Complex64::default(); f.len()];
    project_range(axis, &ops, bell, |i| f[i], |i, v| out[i] = v);
    Ok(out)
}

/// Core projection kernel over accessor closures; shared with the tensor
/// operators that run along rows and columns of a 2-D block.
pub fn project_range(
    axis: &Axis,
    ops: &IntervalOps,
    bell: &Bell,
    get: impl Fn(usize) -> Complex64,
    mut set: impl FnMut(usize, Complex64),
) {
    let pts = axis.points();
    for i in ops.support.clone() {
        let xi = pts[i];
        let b0 = bell.eval(xi);
        if b0 == 0.0 {
            set(i, Complex64::default());
            continue;
        }
        let mut acc = b0 * get(i);
        if ops.lo.holds(i) {
            let m = ops.lo.mirror(i);
            acc += bell.eval(pts[m]) * get(m);
        }
        if ops.hi.holds(i) {
            let m = ops.hi.mirror(i);
            acc -= bell.eval(pts[m]) * get(m);
        }
        set(i, b0 * acc);
    }
}

/// Coefficients `c_n = <f, w_n>` for `n = 0 .. n_count`, by quadrature of
/// `f_hat * w_hat` over the bell support.
pub fn analyze_interval(
    axis: &Axis,
    interval: &Interval,
    bell: &Bell,
    f: &[Complex64],
    n_count: usize,
) -> Result<Vec<Complex64>> {
    let ops = axis.interval_ops(interval)?;
    let pts = axis.points();
    let w = axis.weights();
    let mut out = vec![Complex64::default(); n_count];
    let len = bell.len();
    let norm = (2.0 / len).sqrt();
    for i in ops.support.clone() {
        let b = bell.eval(pts[i]);
        if b == 0.0 {
            continue;
        }
        let fw = (w[i] * norm * b) * f[i];
        let base = std::f64::consts::PI * (pts[i] - bell.lo) / len;
        for (n, o) in out.iter_mut().enumerate() {
            *o += fw * ((n as f64 + 0.5) * base).cos();
        }
    }
    Ok(out)
}

/// Energy of `P_I f` on the grid.
pub fn projected_energy(
    axis: &Axis,
    interval: &Interval,
    bell: &Bell,
    f: &[Complex64],
) -> Result<f64> {
    let ops = axis.interval_ops(interval)?;
    let proj = project_spectrum(axis, interval, bell, f)?;
    let w = axis.weights();
    Ok(ops.support.clone().map(|i| w[i] * proj[i].norm_sqr()).sum())
}
