//! Knot-adapted composite quadrature grid.
//!
//! Design notes
//! -----
//! - One shared 1-D grid serves both axes and every interval in play. The
//!   knots of the covering cannot be placed on a common uniform grid (their
//!   gaps have no usable common divisor), so the grid is built from panels
//!   between knot collars, with Gauss-Legendre nodes per panel.
//! - Each knot `r` with cutoff `eps` owns a collar `[r - eps, r + eps]` split
//!   into two half panels whose nodes are parametrized by shared offsets
//!   `o_i = eps * x_i`: the left node `r - o_i` and the right node `r + o_i`
//!   mirror each other *by index*, so the reflected point `2r - xi` used by
//!   the projection operators is another grid node, never an interpolation.
//! - Mirrored nodes carry equal weights, which makes the discrete projections
//!   exactly self-adjoint for the grid inner product.
//! - Plateau panels are subdivided until the fastest cosine the grid must
//!   carry (index `max_osc_index` on the shortest interval containing the
//!   panel) is resolved by `nodes_per_period` nodes per period.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use crate::covering::{Covering, Interval};
use crate::error::{Error, Result};

/// Gauss-Legendre rule on `(0, 1)`, nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_eval(n: usize, t: f64) -> (f64, f64) {
    // value and derivative of P_n at t
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

fn compute_rule(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut t = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut d = 1.0;
        for _ in 0..64 {
            let (p, dp) = legendre_eval(n, t);
            d = dp;
            let dt = p / dp;
            t -= dt;
            if dt.abs() <= 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        if 2 * k + 1 == n {
            t = 0.0; // middle root is exact
            let (_, dp) = legendre_eval(n, t);
            d = dp;
        }
        let w = 2.0 / ((1.0 - t * t) * d * d);
        // t descends as k grows; map the pair +-t to (0,1)
        nodes[k] = 0.5 * (1.0 - t);
        nodes[n - 1 - k] = 0.5 * (1.0 + t);
        weights[k] = 0.5 * w;
        weights[n - 1 - k] = 0.5 * w;
    }
    GaussRule { nodes, weights }
}

/// Cached Gauss-Legendre rule of order `n` on `(0, 1)`.
pub fn gauss_rule(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(compute_rule(n))).clone()
}

/// Resolution parameters of the composite grid.
#[derive(Debug, Clone, Copy)]
pub struct AxisSpec {
    /// Nodes per half collar panel.
    pub collar_nodes: usize,
    /// Nodes per period of the fastest cosine carried by a panel.
    pub nodes_per_period: f64,
    /// Extra nodes per plateau panel.
    pub guard_nodes: usize,
    /// Plateau panels are split so no panel exceeds this count.
    pub max_panel_nodes: usize,
    /// Smallest node count of a plateau panel.
    pub min_panel_nodes: usize,
    /// Largest cosine index the grid is guaranteed to resolve.
    pub max_osc_index: usize,
}

impl Default for AxisSpec {
    fn default() -> Self {
        AxisSpec {
            collar_nodes: 24,
            nodes_per_period: 6.0,
            guard_nodes: 8,
            max_panel_nodes: 48,
            min_panel_nodes: 6,
            max_osc_index: 32,
        }
    }
}

impl AxisSpec {
    /// Coarser grid for projection identities that carry no oscillation.
    pub fn projection_only() -> Self {
        AxisSpec { max_osc_index: 0, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub first: usize,
    pub count: usize,
}

/// Mirror-paired node block around one knot.
#[derive(Debug, Clone, Copy)]
pub struct Collar {
    pub knot: f64,
    pub eps: f64,
    left_first: usize,
    right_first: usize,
    count: usize,
}

impl Collar {
    /// Global index of the node at the mirrored position `2 knot - xi`.
    pub fn mirror(&self, idx: usize) -> usize {
        debug_assert!(self.holds(idx));
        if idx >= self.right_first {
            let i = idx - self.right_first; // offset rank o_i
            self.left_first + (self.count - 1 - i)
        } else {
            let i = self.count - 1 - (idx - self.left_first);
            self.right_first + i
        }
    }

    pub fn holds(&self, idx: usize) -> bool {
        (self.left_first..self.left_first + self.count).contains(&idx)
            || (self.right_first..self.right_first + self.count).contains(&idx)
    }

    pub fn left_range(&self) -> Range<usize> {
        self.left_first..self.left_first + self.count
    }

    pub fn right_range(&self) -> Range<usize> {
        self.right_first..self.right_first + self.count
    }
}

/// Shared composite 1-D grid.
#[derive(Debug, Clone)]
pub struct Axis {
    points: Vec<f64>,
    weights: Vec<f64>,
    panels: Vec<Panel>,
    collars: Vec<Collar>,
    collar_by_knot: HashMap<u64, usize>,
    max_osc_index: usize,
}

impl Axis {
    /// Builds the grid for a set of knots `(position, cutoff)` and the
    /// intervals that will be sampled on it.
    pub fn build(knots: &[(f64, f64)], intervals: &[(f64, f64)], spec: &AxisSpec) -> Result<Axis> {
        if knots.is_empty() {
            return Err(Error::InvalidParams("axis needs at least one knot".into()));
        }
        let mut sorted: Vec<(f64, f64)> = knots.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        sorted.dedup_by_key(|e| e.0.to_bits());
        for w in sorted.windows(2) {
            let ((a, ea), (b, eb)) = (w[0], w[1]);
            if a + ea > b - eb {
                return Err(Error::CollarOverlap { at: b });
            }
        }

        let rule = gauss_rule(spec.collar_nodes);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut panels = Vec::new();
        let mut collars = Vec::new();
        let mut collar_by_knot = HashMap::new();

        let density = |lo: f64, hi: f64| -> f64 {
            // periods per unit length of the fastest cosine on this stretch
            let mut periods: f64 = 0.0;
            for &(a, b) in intervals {
                if a <= lo && hi <= b && b > a {
                    periods = periods.max((spec.max_osc_index as f64 + 0.5) / (2.0 * (b - a)));
                }
            }
            periods
        };

        let push_plateau = |points: &mut Vec<f64>,
                                weights: &mut Vec<f64>,
                                panels: &mut Vec<Panel>,
                                lo: f64,
                                hi: f64| {
            if hi <= lo {
                return;
            }
            let len = hi - lo;
            let want = (len * density(lo, hi) * spec.nodes_per_period).ceil() as usize
                + spec.guard_nodes;
            let want = want.max(spec.min_panel_nodes);
            let pieces = want.div_ceil(spec.max_panel_nodes);
            let per = want.div_ceil(pieces);
            let sub_rule = gauss_rule(per);
            for p in 0..pieces {
                let a = lo + len * p as f64 / pieces as f64;
                let b = lo + len * (p + 1) as f64 / pieces as f64;
                let first = points.len();
                for (x, w) in sub_rule.nodes.iter().zip(&sub_rule.weights) {
                    points.push(a + (b - a) * x);
                    weights.push((b - a) * w);
                }
                panels.push(Panel { lo: a, hi: b, first, count: per });
            }
        };

        for (i, &(knot, eps)) in sorted.iter().enumerate() {
            if i == 0 {
                // nothing left of the first collar: supports end there
            } else {
                let (prev, prev_eps) = sorted[i - 1];
                push_plateau(&mut points, &mut weights, &mut panels, prev + prev_eps, knot - eps);
            }
            // left half collar: nodes knot - o_i, ascending
            let n = spec.collar_nodes;
            let left_first = points.len();
            for k in 0..n {
                let o = eps * rule.nodes[n - 1 - k];
                points.push(knot - o);
                weights.push(eps * rule.weights[n - 1 - k]);
            }
            panels.push(Panel { lo: knot - eps, hi: knot, first: left_first, count: n });
            // right half collar: nodes knot + o_i, ascending
            let right_first = points.len();
            for k in 0..n {
                let o = eps * rule.nodes[k];
                points.push(knot + o);
                weights.push(eps * rule.weights[k]);
            }
            panels.push(Panel { lo: knot, hi: knot + eps, first: right_first, count: n });
            collar_by_knot.insert(knot.to_bits(), collars.len());
            collars.push(Collar { knot, eps, left_first, right_first, count: n });
        }

        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Ok(Axis {
            points,
            weights,
            panels,
            collars,
            collar_by_knot,
            max_osc_index: spec.max_osc_index,
        })
    }

    /// Grid adapted to every interval and square of a covering.
    pub fn for_covering(cov: &Covering, spec: &AxisSpec) -> Result<Axis> {
        let knots = cov.knot_table();
        let mut intervals: Vec<(f64, f64)> = cov
            .levels
            .values()
            .flatten()
            .map(|iv| (iv.lo, iv.hi))
            .collect();
        for j in cov.params.levels() {
            let sq = cov.square_interval(j);
            intervals.push((sq.lo, sq.hi));
        }
        Axis::build(&knots, &intervals, spec)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn max_osc_index(&self) -> usize {
        self.max_osc_index
    }

    pub fn lo(&self) -> f64 {
        self.panels.first().map_or(0.0, |p| p.lo)
    }

    pub fn hi(&self) -> f64 {
        self.panels.last().map_or(0.0, |p| p.hi)
    }

    /// Indices of nodes inside `[lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> Range<usize> {
        let a = self.points.partition_point(|&p| p < lo);
        let b = self.points.partition_point(|&p| p <= hi);
        a..b
    }

    pub fn collar_at(&self, knot: f64) -> Option<&Collar> {
        self.collar_by_knot.get(&knot.to_bits()).map(|&i| &self.collars[i])
    }

    pub fn collars(&self) -> &[Collar] {
        &self.collars
    }

    /// Node ranges and mirror maps needed to project onto `interval`;
    /// fails unless both endpoint collars exist with the exact cutoffs.
    pub fn interval_ops(&self, interval: &Interval) -> Result<IntervalOps> {
        let mismatch = |reason: &str| Error::GridMismatch {
            lo: interval.lo,
            hi: interval.hi,
            reason: reason.to_string(),
        };
        let lo = self
            .collar_at(interval.lo)
            .copied()
            .ok_or_else(|| mismatch("no collar at left endpoint"))?;
        let hi = self
            .collar_at(interval.hi)
            .copied()
            .ok_or_else(|| mismatch("no collar at right endpoint"))?;
        if lo.eps != interval.eps_lo {
            return Err(mismatch("left cutoff differs from the grid collar"));
        }
        if hi.eps != interval.eps_hi {
            return Err(mismatch("right cutoff differs from the grid collar"));
        }
        let support = lo.left_first..hi.right_first + hi.count;
        Ok(IntervalOps { support, lo, hi })
    }

    /// Weighted inner product `sum w_i a_i conj(b_i)` over a range.
    pub fn dot(&self, range: Range<usize>, a: &[f64], b: &[f64]) -> f64 {
        range.map(|i| self.weights[i] * a[i] * b[i]).sum()
    }
}

/// Precomputed access pattern for one interval on an [`Axis`].
#[derive(Debug, Clone)]
pub struct IntervalOps {
    pub support: Range<usize>,
    pub lo: Collar,
    pub hi: Collar,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        for n in [2usize, 5, 16, 24, 31] {
            let r = gauss_rule(n);
            for k in 0..(2 * n).min(30) {
                let exact = 1.0 / (k as f64 + 1.0);
                let got: f64 =
                    r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n = {n}, k = {k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn gauss_rule_oscillatory_accuracy() {
        // enough nodes per period reach near machine accuracy
        let r = gauss_rule(40);
        let omega = 2.0 * PI * 5.0; // five periods on (0,1)
        let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * (omega * x).cos()).sum();
        let exact = (omega).sin() / omega;
        assert!((got - exact).abs() < 1e-13);
    }

    fn demo_axis() -> Axis {
        let knots = [(0.0, 0.05), (1.0, 0.1), (2.5, 0.2)];
        let intervals = [(0.0, 1.0), (1.0, 2.5)];
        Axis::build(&knots, &intervals, &AxisSpec::default()).unwrap()
    }

    #[test]
    fn axis_points_sorted_and_weighted() {
        let ax = demo_axis();
        assert!(ax.points().windows(2).all(|w| w[0] < w[1]));
        let total: f64 = ax.weights().iter().sum();
        // total measure = full span
        assert!((total - (ax.hi() - ax.lo())).abs() < 1e-12);
    }

    #[test]
    fn collar_mirror_is_exact() {
        let ax = demo_axis();
        for collar in ax.collars() {
            for idx in collar.left_range().chain(collar.right_range()) {
                let m = collar.mirror(idx);
                assert_eq!(collar.mirror(m), idx);
                // stored offsets agree up to one rounding of knot +- o
                let (a, b) = (ax.points()[idx.min(m)], ax.points()[idx.max(m)]);
                let skew = ((collar.knot - a) - (b - collar.knot)).abs();
                assert!(skew <= 4.0 * f64::EPSILON * collar.knot.abs().max(1.0), "skew {skew}");
                // mirrored nodes carry identical weights
                assert_eq!(ax.weights()[idx].to_bits(), ax.weights()[m].to_bits());
            }
        }
    }

    #[test]
    fn interval_ops_rejects_foreign_interval() {
        let ax = demo_axis();
        let iv = Interval::free(0.1, 1.0, 0.05, 0.1);
        assert!(ax.interval_ops(&iv).is_err());
        let iv = Interval::free(0.0, 1.0, 0.06, 0.1);
        assert!(ax.interval_ops(&iv).is_err());
        let iv = Interval::free(0.0, 1.0, 0.05, 0.1);
        assert!(ax.interval_ops(&iv).is_ok());
    }

    #[test]
    fn axis_rejects_overlapping_collars() {
        let knots = [(0.0, 0.3), (0.5, 0.3)];
        let err = Axis::build(&knots, &[], &AxisSpec::default()).unwrap_err();
        assert!(matches!(err, Error::CollarOverlap { .. }));
    }

    #[test]
    fn covering_axis_builds() {
        use crate::covering::{AlphaParams, R1};
        let cov = Covering::build(AlphaParams::new(0.5, R1::ONE, -2, 4).unwrap()).unwrap();
        let ax = Axis::for_covering(&cov, &AxisSpec::default()).unwrap();
        // every interval of the covering is operable
        for iv in cov.levels.values().flatten() {
            ax.interval_ops(iv).unwrap();
        }
        for j in cov.params.levels() {
            ax.interval_ops(&cov.square_interval(j)).unwrap();
        }
        assert!(ax.len() > 500 && ax.len() < 40_000, "{}", ax.len());
    }
}
