//! Adapted norms: hybrid weight, partition of unity, lattice boxes, the
//! coefficient sequence norm, and the multiplier (Fourier-side) norms.
//!
//! The sequence norm mixes an inner `l_q` sum over the lattice boxes
//! `U(Q, n)` with an outer spatial `L_p` integral. The boxes of one
//! rectangle are disjoint (their centers sit on a lattice of spacing `pi`
//! against radius-one balls), so the inner sum has at most one active term
//! per rectangle, and the integrand is piecewise constant on an ellipse
//! arrangement. The integral is evaluated exactly along rows and by
//! segment-adapted quadrature across rows; the support is finite, so
//! nothing is truncated.
//!
//! The multiplier norms come in two routes: an exact frequency-side route
//! for the Hilbert case `p = 2` (Plancherel turns `phi_Q(D) f` energies into
//! weighted quadratures of `phi_Q^2 |f_hat|^2`), and a spatial FFT route for
//! general `(p, q)` on a uniform grid, whose window/aliasing resolution is
//! reported by a refinement diagnostic rather than hidden.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bells::{Bell, Ramp};
use crate::brushlet2d::{AnalyzeOpts, Basis2, CoeffMap, Spectrum, SpectrumGrid};
use crate::covering::{Covering, Rect};
use crate::error::{Error, Result};
use crate::fft;

/// Hybrid radial weight: `|xi|^(2-alpha)` inside, `|xi|^alpha` outside, with
/// a smooth radial blend over `2/3 <= |xi| <= 4/3`.
#[derive(Debug, Clone, Copy)]
pub struct HybridWeight {
    pub alpha: f64,
    ramp: Ramp,
}

impl HybridWeight {
    pub fn new(alpha: f64, ramp: Ramp) -> Self {
        HybridWeight { alpha, ramp }
    }

    /// Radial profile; errors at the origin where the homogeneous weight is
    /// undefined.
    pub fn eval_radius(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::WeightAtOrigin);
        }
        // cutoff equal to one below 2/3 and zero above 4/3
        let cut = self.ramp.eval(3.0 - 3.0 * t);
        let beyond = if cut < 1.0 { (1.0 - cut) * t.powf(self.alpha) } else { 0.0 };
        let within = if cut > 0.0 { cut * t.powf(2.0 - self.alpha) } else { 0.0 };
        Ok(within + beyond)
    }

    pub fn eval(&self, xi: [f64; 2]) -> Result<f64> {
        self.eval_radius(xi[0].hypot(xi[1]))
    }

    /// Weight at the rectangle center.
    pub fn at_rect(&self, rect: &Rect) -> Result<f64> {
        self.eval(rect.center())
    }
}

/// Norm exponents; `q` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy)]
pub struct NormParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl NormParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("p must lie in (0, inf), got {p}")));
        }
        // negated form rejects NaN too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(q > 0.0) {
            return Err(Error::InvalidParams(format!("q must lie in (0, inf], got {q}")));
        }
        Ok(NormParams { s, p, q })
    }
}

/// Lattice box `U(Q, n)`: the ellipse `|delta_Q y - pi (n + a)| < 1`,
/// `a = (1/2, 1/2)`.
#[derive(Debug, Clone, Copy)]
pub struct UBox {
    pub center: [f64; 2],
    pub semi: [f64; 2],
}

impl UBox {
    pub fn new(rect: &Rect, n1: u32, n2: u32) -> Self {
        let [dx, dy] = rect.delta();
        UBox {
            center: [
                std::f64::consts::PI * (n1 as f64 + 0.5) / dx,
                std::f64::consts::PI * (n2 as f64 + 0.5) / dy,
            ],
            semi: [1.0 / dx, 1.0 / dy],
        }
    }

    /// `U(Q, n') = U(Q, n) + pi delta^{-1} (n' - n)`.
    pub fn translated(&self, rect: &Rect, dn: [i64; 2]) -> UBox {
        let [dx, dy] = rect.delta();
        UBox {
            center: [
                self.center[0] + std::f64::consts::PI * dn[0] as f64 / dx,
                self.center[1] + std::f64::consts::PI * dn[1] as f64 / dy,
            ],
            semi: self.semi,
        }
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.semi[0] * self.semi[1]
    }

    pub fn contains(&self, y: [f64; 2]) -> bool {
        let u = (y[0] - self.center[0]) / self.semi[0];
        let v = (y[1] - self.center[1]) / self.semi[1];
        u * u + v * v < 1.0
    }
}

/// Number of lattice boxes of one rectangle containing `y` (zero or one:
/// the centers are `pi`-spaced against radius-one balls).
pub fn ubox_count_at(rect: &Rect, y: [f64; 2]) -> usize {
    let [dx, dy] = rect.delta();
    let mut count = 0;
    // candidate indices around the scaled position
    let c1 = (dx * y[0] / std::f64::consts::PI - 0.5).round() as i64;
    let c2 = (dy * y[1] / std::f64::consts::PI - 0.5).round() as i64;
    for n1 in (c1 - 1)..=(c1 + 1) {
        for n2 in (c2 - 1)..=(c2 + 1) {
            if n1 < 0 || n2 < 0 {
                continue;
            }
            if UBox::new(rect, n1 as u32, n2 as u32).contains(y) {
                count += 1;
            }
        }
    }
    count
}

/// Active `(Q, n)` pairs at a point, over the whole covering.
pub fn active_pairs_at(cov: &Covering, y: [f64; 2]) -> usize {
    cov.rects().map(|r| ubox_count_at(r, y)).sum()
}

/// Term weighting of the sequence norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeqWeight {
    /// `h(xi_Q)^s |Q|^{1/2}`.
    #[default]
    Standard,
    /// `h(xi_Q)^{s+1}`, equivalent by the covering's size rule.
    HybridPlusOne,
}

/// Result of a sequence-norm evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SeqNormReport {
    pub value: f64,
    pub terms: usize,
    pub rows: usize,
    /// Integrand mass outside the evaluated region; the support is a finite
    /// ellipse union, so this is exactly zero.
    pub truncated_mass: f64,
}

struct SweepTerm {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    wq: f64,  // W^q, or W itself when q = inf
}

/// Sequence norm of a coefficient map.
pub fn sequence_norm(
    coeffs: &CoeffMap,
    cov: &Covering,
    hw: &HybridWeight,
    np: &NormParams,
    rows_hint: usize,
) -> Result<SeqNormReport> {
    sequence_norm_with(coeffs, cov, hw, np, SeqWeight::Standard, rows_hint)
}

pub fn sequence_norm_with(
    coeffs: &CoeffMap,
    cov: &Covering,
    hw: &HybridWeight,
    np: &NormParams,
    weight: SeqWeight,
    rows_hint: usize,
) -> Result<SeqNormReport> {
    let q_inf = np.q.is_infinite();
    let mut terms = Vec::with_capacity(coeffs.len());
    for (key, c) in coeffs.iter() {
        let mag = c.norm();
        if mag == 0.0 {
            continue;
        }
        let rect = cov
            .rect(key.rect)
            .ok_or_else(|| Error::Format(format!("unknown rect {:?}", key.rect)))?;
        let h = hw.at_rect(rect)?;
        let w = match weight {
            SeqWeight::Standard => h.powf(np.s) * rect.area().sqrt() * mag,
            SeqWeight::HybridPlusOne => h.powf(np.s + 1.0) * mag,
        };
        let ubox = UBox::new(rect, key.n1, key.n2);
        terms.push(SweepTerm {
            cx: ubox.center[0],
            cy: ubox.center[1],
            rx: ubox.semi[0],
            ry: ubox.semi[1],
            wq: if q_inf { w } else { pow_q(w, np.q) },
        });
    }
    if terms.is_empty() {
        return Ok(SeqNormReport { value: 0.0, terms: 0, rows: 0, truncated_mass: 0.0 });
    }

    // row segments between the vertical extremes of all ellipses
    let mut events: Vec<f64> = terms.iter().flat_map(|t| [t.cy - t.ry, t.cy + t.ry]).collect();
    events.sort_by(f64::total_cmp);
    events.dedup();
    let finest = terms.iter().map(|t| t.ry).fold(f64::INFINITY, f64::min);
    let span: f64 = events.last().unwrap() - events.first().unwrap();
    let base_rows = rows_hint.max(64);
    let mut total = 0.0;
    let mut rows_used = 0usize;
    let rule = crate::grid::gauss_rule(8);
    let segments: Vec<(f64, f64, usize)> = events
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let len = w[1] - w[0];
            // node budget proportional to length, resolving the finest box
            let nodes = ((len / span * base_rows as f64).ceil() as usize)
                .max(((len / finest) * 4.0).ceil() as usize)
                .clamp(8, 4 * base_rows);
            (w[0], w[1], nodes)
        })
        .collect();
    let row_values: Vec<(usize, f64)> = segments
        .par_iter()
        .map(|&(a, b, nodes)| {
            let pieces = nodes.div_ceil(8);
            let mut acc = 0.0;
            for piece in 0..pieces {
                let u = a + (b - a) * piece as f64 / pieces as f64;
                let v = a + (b - a) * (piece + 1) as f64 / pieces as f64;
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    let y = u + (v - u) * t;
                    acc += (v - u) * w * row_integral(&terms, y, np, q_inf);
                }
            }
            (pieces * 8, acc)
        })
        .collect();
    for (n, v) in row_values {
        rows_used += n;
        total += v;
    }
    Ok(SeqNormReport {
        value: root_p(total, np.p),
        terms: terms.len(),
        rows: rows_used,
        truncated_mass: 0.0,
    })
}

/// `int G(x, y)^p dx` along one row, exact on the interval arrangement.
fn row_integral(terms: &[SweepTerm], y: f64, np: &NormParams, q_inf: bool) -> f64 {
    // active intervals on this row
    let mut edges: Vec<(f64, f64, f64)> = Vec::new(); // (xlo, xhi, wq)
    for t in terms {
        let dy = (y - t.cy) / t.ry;
        if dy.abs() >= 1.0 {
            continue;
        }
        let half = t.rx * (1.0 - dy * dy).sqrt();
        edges.push((t.cx - half, t.cx + half, t.wq));
    }
    if edges.is_empty() {
        return 0.0;
    }
    let mut cuts: Vec<f64> = edges.iter().flat_map(|e| [e.0, e.1]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let mut combined = 0.0f64;
        for e in &edges {
            if e.0 <= mid && mid < e.1 {
                if q_inf {
                    combined = combined.max(e.2);
                } else {
                    combined += e.2;
                }
            }
        }
        if combined > 0.0 {
            // G^p = (sum W^q)^{p/q}; for q = inf the max is G itself
            let gp = if q_inf { combined.powf(np.p) } else { pow_ratio(combined, np.p, np.q) };
            acc += gp * (b - a);
        }
    }
    acc
}

fn pow_q(w: f64, q: f64) -> f64 {
    if q == 2.0 {
        w * w
    } else if q == 1.0 {
        w
    } else {
        w.powf(q)
    }
}

fn pow_ratio(t: f64, p: f64, q: f64) -> f64 {
    if p == q {
        t
    } else if p == 2.0 * q {
        t * t
    } else {
        t.powf(p / q)
    }
}

fn root_p(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t.sqrt()
    } else if p == 1.0 {
        t
    } else {
        t.powf(1.0 / p)
    }
}

/// Closed form of the single-coefficient sequence norm:
/// `h^s |Q|^{1/2} |c| (pi / |Q|)^{1/p}`.
pub fn single_coeff_norm(
    rect: &Rect,
    n1: u32,
    n2: u32,
    c: Complex64,
    hw: &HybridWeight,
    np: &NormParams,
) -> Result<f64> {
    let h = hw.at_rect(rect)?;
    let area = UBox::new(rect, n1, n2).area();
    Ok(h.powf(np.s) * rect.area().sqrt() * c.norm() * root_p(area, np.p))
}

/// Sequence norm of the analysis coefficients of a spectrum; the sampled
/// counterpart of the coefficient functional.
pub fn sfunc_norm(
    basis: &Basis2<'_>,
    f: &dyn Spectrum,
    hw: &HybridWeight,
    np: &NormParams,
    opts: &AnalyzeOpts,
    rows_hint: usize,
) -> Result<SeqNormReport> {
    let out = basis.analyze(f, opts)?;
    sequence_norm(&out.coeffs, basis.cov, hw, np, rows_hint)
}

/// Partition of unity subordinate to the covering: `phi_Q = b_Q^2` plus the
/// widened companion family.
pub struct Bapu {
    pub ramp: Ramp,
    entries: Vec<BapuEntry>,
}

struct BapuEntry {
    rect: Rect,
    bx: Bell,
    by: Bell,
    wx: Bell,
    wy: Bell,
}

impl Bapu {
    pub fn new(cov: &Covering, ramp: Ramp) -> Result<Self> {
        let mut entries = Vec::new();
        for rect in cov.rects() {
            for iv in [&rect.ix, &rect.iy] {
                let worst = iv.eps_lo.max(iv.eps_hi);
                // widened support lo - 3 eps must stay inside the 0.6 expansion
                if 3.0 * worst > 0.1 * iv.len() {
                    return Err(Error::ExpansionBudget {
                        eps: worst,
                        limit: 0.1 * iv.len() / 3.0,
                        len: iv.len(),
                    });
                }
            }
            let bx = Bell::new(&rect.ix, ramp);
            let by = Bell::new(&rect.iy, ramp);
            entries.push(BapuEntry { rect: *rect, wx: bx.widened(), wy: by.widened(), bx, by });
        }
        Ok(Bapu { ramp, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rect(&self, idx: usize) -> &Rect {
        &self.entries[idx].rect
    }

    /// `phi_Q(xi)`.
    pub fn phi(&self, idx: usize, xi: [f64; 2]) -> f64 {
        let e = &self.entries[idx];
        let v = e.bx.eval(xi[0]) * e.by.eval(xi[1]);
        v * v
    }

    /// Widened companion, equal to one on the support of `phi_Q`.
    pub fn phi_tilde(&self, idx: usize, xi: [f64; 2]) -> f64 {
        let e = &self.entries[idx];
        let v = e.wx.eval(xi[0]) * e.wy.eval(xi[1]);
        v * v
    }

    /// `sum_Q phi_Q(xi)`.
    pub fn sum_at(&self, xi: [f64; 2]) -> f64 {
        (0..self.entries.len()).map(|i| self.phi(i, xi)).sum()
    }

    /// Values of `phi_Q` at each point of one entry's support on a grid.
    fn support_indices(&self, idx: usize, grid: &SpectrumGrid) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let e = &self.entries[idx];
        let (xl, xh) = e.bx.support();
        let (yl, yh) = e.by.support();
        (grid.index_range(xl, xh), grid.index_range(yl, yh))
    }
}

/// Moderation constant of the weight over the covering: the largest
/// sup/inf ratio of the weight over a single rectangle.
pub fn moderation_check(cov: &Covering, hw: &HybridWeight, samples_per_side: usize) -> Result<f64> {
    let mut worst = 1.0f64;
    for rect in cov.rects() {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..=samples_per_side {
            for j in 0..=samples_per_side {
                let x = rect.ix.lo + rect.ix.len() * i as f64 / samples_per_side as f64;
                let y = rect.iy.lo + rect.iy.len() * j as f64 / samples_per_side as f64;
                if x == 0.0 && y == 0.0 {
                    continue;
                }
                let v = hw.eval([x, y])?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        worst = worst.max(hi / lo);
    }
    Ok(worst)
}

/// Exact `p = q = 2` multiplier norm:
/// `( sum_Q h(xi_Q)^{2s} int phi_Q^2 |f_hat|^2 )^{1/2}`.
pub fn tl_norm_p2q2(
    basis: &Basis2<'_>,
    bapu: &Bapu,
    hw: &HybridWeight,
    f: &dyn Spectrum,
    s: f64,
) -> Result<f64> {
    let per_rect = multiplier_energies(basis, bapu, f)?;
    let mut total = 0.0;
    for (idx, energy) in per_rect.iter().enumerate() {
        let h = hw.at_rect(bapu.rect(idx))?;
        total += h.powf(2.0 * s) * energy;
    }
    Ok(total.sqrt())
}

/// Exact `p = 2` decomposition-space norm:
/// `( sum_Q (h(xi_Q)^s |phi_Q(D) f|_{L2})^q )^{1/q}` with the sup for
/// `q = inf`.
pub fn mod_norm_p2(
    basis: &Basis2<'_>,
    bapu: &Bapu,
    hw: &HybridWeight,
    f: &dyn Spectrum,
    s: f64,
    q: f64,
) -> Result<f64> {
    let per_rect = multiplier_energies(basis, bapu, f)?;
    let mut acc = 0.0f64;
    for (idx, energy) in per_rect.iter().enumerate() {
        let h = hw.at_rect(bapu.rect(idx))?;
        let term = h.powf(s) * energy.sqrt();
        if q.is_infinite() {
            acc = acc.max(term);
        } else {
            acc += pow_q(term, q);
        }
    }
    Ok(if q.is_infinite() { acc } else { root_p(acc, q) })
}

/// `int phi_Q^2 |f_hat|^2` per rectangle, on the shared composite grid.
fn multiplier_energies(basis: &Basis2<'_>, bapu: &Bapu, f: &dyn Spectrum) -> Result<Vec<f64>> {
    let pts = basis.axis.points();
    let w = basis.axis.weights();
    (0..bapu.len())
        .into_par_iter()
        .map(|idx| {
            let e = &bapu.entries[idx];
            let (xl, xh) = e.bx.support();
            let (yl, yh) = e.by.support();
            let xr = basis.axis.range(xl, xh);
            let yr = basis.axis.range(yl, yh);
            let mut acc = 0.0;
            for i in xr.clone() {
                let bx2 = {
                    let b = e.bx.eval(pts[i]);
                    b * b
                };
                if bx2 == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for j in yr.clone() {
                    let by = e.by.eval(pts[j]);
                    if by == 0.0 {
                        continue;
                    }
                    let phi = bx2 * (by * by);
                    inner += w[j] * phi * phi * f.eval(pts[i], pts[j]).norm_sqr();
                }
                acc += w[i] * inner;
            }
            Ok(acc)
        })
        .collect()
}

/// Spatial-route multiplier norms on a uniform grid, general `(p, q)`.
/// Accuracy is window-limited; pair with [`refinement_delta`].
pub fn tl_norm_spatial(
    grid: &SpectrumGrid,
    bapu: &Bapu,
    hw: &HybridWeight,
    np: &NormParams,
) -> Result<f64> {
    let m = grid.m();
    let h = grid.step();
    let q_inf = np.q.is_infinite();
    let mut acc = Array2::<f64>::zeros((m, m));
    let scale = h * h / (2.0 * std::f64::consts::PI);
    for idx in 0..bapu.len() {
        let hs = hw.at_rect(bapu.rect(idx))?.powf(np.s);
        let (xr, yr) = bapu.support_indices(idx, grid);
        if xr.is_empty() || yr.is_empty() {
            continue;
        }
        let mut buf = Array2::<Complex64>::default((m, m));
        for i in xr.clone() {
            let x = grid.point(i);
            for j in yr.clone() {
                let phi = bapu.phi(idx, [x, grid.point(j)]);
                if phi != 0.0 {
                    buf[[i, j]] = phi * grid.values[[i, j]];
                }
            }
        }
        fft::dft2_unscaled_inverse(&mut buf);
        for (a, v) in acc.iter_mut().zip(buf.iter()) {
            let term = hs * scale * v.norm();
            if q_inf {
                *a = a.max(term);
            } else {
                *a += pow_q(term, np.q);
            }
        }
    }
    let dx = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let mut total = 0.0;
    for a in acc.iter() {
        let g = if q_inf { *a } else { root_p(*a, np.q) };
        total += pow_q(g, np.p) * dx * dx;
    }
    Ok(root_p(total, np.p))
}

/// Spatial-route decomposition norm on a uniform grid.
pub fn mod_norm_spatial(
    grid: &SpectrumGrid,
    bapu: &Bapu,
    hw: &HybridWeight,
    np: &NormParams,
) -> Result<f64> {
    let m = grid.m();
    let h = grid.step();
    let dx = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let scale = h * h / (2.0 * std::f64::consts::PI);
    let mut acc = 0.0f64;
    for idx in 0..bapu.len() {
        let hs = hw.at_rect(bapu.rect(idx))?.powf(np.s);
        let (xr, yr) = bapu.support_indices(idx, grid);
        if xr.is_empty() || yr.is_empty() {
            continue;
        }
        let mut buf = Array2::<Complex64>::default((m, m));
        for i in xr.clone() {
            let x = grid.point(i);
            for j in yr.clone() {
                let phi = bapu.phi(idx, [x, grid.point(j)]);
                if phi != 0.0 {
                    buf[[i, j]] = phi * grid.values[[i, j]];
                }
            }
        }
        fft::dft2_unscaled_inverse(&mut buf);
        let lp = if np.p == 2.0 {
            (buf.iter().map(|v| (scale * v.norm()).powi(2)).sum::<f64>() * dx * dx).sqrt()
        } else {
            root_p(
                buf.iter().map(|v| pow_q(scale * v.norm(), np.p)).sum::<f64>() * dx * dx,
                np.p,
            )
        };
        let term = hs * lp;
        if np.q.is_infinite() {
            acc = acc.max(term);
        } else {
            acc += pow_q(term, np.q);
        }
    }
    Ok(if np.q.is_infinite() { acc } else { root_p(acc, np.q) })
}

/// Relative change of the spatial route when the grid is refined once
/// (double the sample count at fixed extent, doubling the spatial window).
pub fn refinement_delta(
    f: &dyn Spectrum,
    extent: f64,
    m: usize,
    bapu: &Bapu,
    hw: &HybridWeight,
    np: &NormParams,
) -> Result<f64> {
    let coarse = tl_norm_spatial(&SpectrumGrid::sample(extent, m, f), bapu, hw, np)?;
    let fine = tl_norm_spatial(&SpectrumGrid::sample(extent, 2 * m, f), bapu, hw, np)?;
    Ok((fine - coarse).abs() / fine.max(f64::MIN_POSITIVE))
}

/// Cutoff collar widths at the two truncation boundaries of the covered
/// annulus (double the edge cutoffs, for sampling safely inside).
pub fn boundary_margins(cov: &Covering) -> (f64, f64) {
    let (lo, hi) = cov.covered_range();
    let a = cov.params.alpha;
    (
        2.0 * crate::covering::EPS_FACTOR * crate::covering::pure_weight(lo, a),
        2.0 * crate::covering::EPS_FACTOR * crate::covering::pure_weight(hi, a),
    )
}

/// Ratio statistics of the sequence functional against the exact `(2, 2)`
/// multiplier norm over a family of spectra.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl EquivalenceReport {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

pub fn equivalence_experiment(
    basis: &Basis2<'_>,
    bapu: &Bapu,
    hw: &HybridWeight,
    s: f64,
    fields: &[&dyn Spectrum],
    opts: &AnalyzeOpts,
    rows_hint: usize,
) -> Result<EquivalenceReport> {
    let np = NormParams::new(s, 2.0, 2.0)?;
    let mut ratios = Vec::with_capacity(fields.len());
    for f in fields {
        let seq = sfunc_norm(basis, *f, hw, &np, opts, rows_hint)?;
        let tl = tl_norm_p2q2(basis, bapu, hw, *f, s)?;
        ratios.push(seq.value / tl);
    }
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0f64, f64::max);
    Ok(EquivalenceReport { ratios, min, max })
}
