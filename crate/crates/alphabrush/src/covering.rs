//! Structured covering of the frequency plane.
//!
//! The plane minus the origin is tiled by rectangular "annuli": square frames
//! whose corner radii follow the knot law `j^(1/(1-alpha))` for high
//! frequencies and `|j|^(-1/(1-alpha))` for low frequencies. Each frame is cut
//! into rectangles built from one level's univariate interval subdivision, and
//! every interval carries cutoff radii that make the bell functions of
//! adjacent intervals compatible, both within a level and across the seams
//! where two levels meet.
//!
//! Levels `j = -1` and `j = 1` describe the same square `[-1, 1]^2`. The
//! low-frequency side tiles it (refining toward the origin), so level one
//! keeps its endpoint intervals for bookkeeping but contributes no
//! rectangles of its own; the high-frequency annuli start at `j = 2`, whose
//! inner edge glues against the outer edge of level `-1` at frequency one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Scale factor of the cutoff rule.
pub const EPS_FACTOR: f64 = 0.01;

/// Subdivision density `r1 = 1/m`. Integer `m` keeps `N_j = |j| m` integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct R1 {
    denom: u32,
}

impl R1 {
    pub const ONE: R1 = R1 { denom: 1 };

    pub fn new(denom: u32) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidParams("r1 denominator must be positive".into()));
        }
        Ok(R1 { denom })
    }

    pub fn denom(&self) -> u32 {
        self.denom
    }

    pub fn value(&self) -> f64 {
        1.0 / f64::from(self.denom)
    }

    /// Parses `"1"`, `"1/4"`, or a decimal that equals `1/m` exactly.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            if num.trim() != "1" {
                return Err(Error::InvalidParams(format!("r1 must be of the form 1/m, got {s}")));
            }
            let denom: u32 = den
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad r1 denominator in {s}")))?;
            return R1::new(denom);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad r1 value {s}")))?;
        if v <= 0.0 || v > 1.0 {
            return Err(Error::InvalidParams(format!("r1 must lie in (0, 1], got {s}")));
        }
        let denom = (1.0 / v).round();
        if (1.0 / denom - v).abs() > 1e-12 || denom < 1.0 {
            return Err(Error::InvalidParams(format!("r1 must equal 1/m for integer m, got {s}")));
        }
        R1::new(denom as u32)
    }
}

impl std::fmt::Display for R1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.denom == 1 {
            write!(f, "1")
        } else {
            write!(f, "1/{}", self.denom)
        }
    }
}

/// Parameters of the truncated covering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    pub alpha: f64,
    pub r1: R1,
    pub j_min: i32,
    pub j_max: i32,
}

impl AlphaParams {
    pub fn new(alpha: f64, r1: R1, j_min: i32, j_max: i32) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParams(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        if j_min > -1 || j_max < 1 {
            return Err(Error::InvalidParams(format!(
                "need j_min <= -1 <= 1 <= j_max, got [{j_min}, {j_max}]"
            )));
        }
        Ok(AlphaParams { alpha, r1, j_min, j_max })
    }

    /// Growth exponent `beta = 1/(1 - alpha)`.
    pub fn beta(&self) -> f64 {
        1.0 / (1.0 - self.alpha)
    }

    /// Subdivision count `N_j = |j| / r1`.
    pub fn n_sub(&self, j: i32) -> u32 {
        j.unsigned_abs() * self.r1.denom()
    }

    pub fn level_in_range(&self, j: i32) -> bool {
        (self.j_min..=-1).contains(&j) || (1..=self.j_max).contains(&j)
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        (self.j_min..=-1).chain(1..=self.j_max)
    }

    fn check_level(&self, j: i32) -> Result<()> {
        if j == 0 {
            return Err(Error::LevelZero);
        }
        if !self.level_in_range(j) {
            return Err(Error::LevelOutOfRange { j, j_min: self.j_min, j_max: self.j_max });
        }
        Ok(())
    }
}

/// Knot magnitude `k^(sign * beta)`; the single code path keeps knots shared
/// by two levels bit-identical.
fn knot_pow(k: u32, beta: f64) -> f64 {
    f64::from(k).powf(beta)
}

/// Outer boundary of the square `A_j` (positive half).
pub fn outer_knot(params: &AlphaParams, j: i32) -> f64 {
    let b = params.beta();
    if j >= 1 {
        knot_pow(j as u32, b)
    } else {
        knot_pow(j.unsigned_abs(), -b)
    }
}

/// Compatibility knot shared with the adjacent finer level (positive half).
pub fn inner_knot(params: &AlphaParams, j: i32) -> f64 {
    let b = params.beta();
    if j >= 1 {
        knot_pow((j - 1) as u32, b)
    } else {
        knot_pow(j.unsigned_abs() + 1, -b)
    }
}

/// Full knot list of one level: `2 N_j + 2` values, with the imposed endpoint
/// choices first and last and the interior knots equispaced between the
/// compatibility knots. Repeated values appear when the interior degenerates
/// (level `|j| = 1` on the high-frequency side).
pub fn knot_sequence(params: &AlphaParams, j: i32) -> Result<Vec<f64>> {
    params.check_level(j)?;
    let n = params.n_sub(j) as usize;
    let outer = outer_knot(params, j);
    let inner = inner_knot(params, j);
    debug_assert!(inner < outer);

    let m = 2 * n - 1; // interior interval count
    let mut knots = vec![0.0; 2 * n + 2];
    knots[0] = -outer;
    knots[2 * n + 1] = outer;
    let step = 2.0 * inner / m as f64;
    for k in 0..=m {
        if 2 * k <= m {
            let v = -inner + k as f64 * step;
            knots[1 + k] = v;
            knots[1 + m - k] = -v; // exact mirror symmetry
        }
    }
    knots[1] = -inner;
    knots[2 * n] = inner;
    for v in &mut knots {
        if *v == 0.0 {
            *v = 0.0; // normalize -0.0 so knots key uniquely by bits
        }
    }
    Ok(knots)
}

/// How cutoff radii are assigned to knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsilonRule {
    /// Pure-power weight at knots shared across levels, adjacent-length rule
    /// at interior knots. Keeps every compatibility condition intact.
    #[default]
    Hybrid,
    /// `|r|^alpha / 100` at every knot. Degenerates near the origin; kept as
    /// a regression configuration.
    LiteralPower,
}

/// Pure power weight `t^alpha` for `t >= 1`, `t^(2-alpha)` for `t < 1`.
pub fn pure_weight(t: f64, alpha: f64) -> f64 {
    if t >= 1.0 {
        t.powf(alpha)
    } else {
        t.powf(2.0 - alpha)
    }
}

/// Univariate frequency interval with its two cutoff radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub level: i32,
    pub index: i32,
}

impl Interval {
    /// Ad-hoc interval outside any covering (tests, fused projections).
    pub fn free(lo: f64, hi: f64, eps_lo: f64, eps_hi: f64) -> Self {
        Interval { lo, hi, eps_lo, eps_hi, level: 0, index: 0 }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Support of the associated bell.
    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.eps_lo, self.hi + self.eps_hi)
    }

    /// Region where the associated bell equals one.
    pub fn plateau(&self) -> (f64, f64) {
        (self.lo + self.eps_lo, self.hi - self.eps_hi)
    }

    /// Union with an adjacent compatible interval on the right.
    pub fn fuse(&self, right: &Interval) -> Interval {
        debug_assert_eq!(self.hi, right.lo);
        Interval {
            lo: self.lo,
            hi: right.hi,
            eps_lo: self.eps_lo,
            eps_hi: right.eps_hi,
            level: self.level,
            index: self.index,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.eps_lo <= 0.0 {
            return Err(Error::EpsilonNonPositive { j: self.level, knot: self.lo, eps: self.eps_lo });
        }
        if self.eps_hi <= 0.0 {
            return Err(Error::EpsilonNonPositive { j: self.level, knot: self.hi, eps: self.eps_hi });
        }
        if self.eps_lo + self.eps_hi > self.len() {
            return Err(Error::EpsilonBudget {
                j: self.level,
                index: self.index,
                eps_lo: self.eps_lo,
                eps_hi: self.eps_hi,
                len: self.len(),
            });
        }
        Ok(())
    }
}

/// Assigns cutoff radii to one level's knots and returns its nonempty
/// intervals, indexed `-N_j ..= N_j` as in the subdivision.
pub fn assign_epsilons(
    params: &AlphaParams,
    j: i32,
    knots: &[f64],
    rule: EpsilonRule,
) -> Result<Vec<Interval>> {
    let n = params.n_sub(j) as i32;
    debug_assert_eq!(knots.len(), 2 * n as usize + 2);
    for w in knots.windows(2) {
        if w[1] < w[0] {
            return Err(Error::KnotsNotIncreasing { at: w[0] });
        }
    }
    let outer = outer_knot(params, j);
    let inner = inner_knot(params, j);

    // One epsilon per knot; adjacent intervals share it by construction.
    let eps_at = |idx: usize| -> f64 {
        let r = knots[idx];
        match rule {
            EpsilonRule::LiteralPower => EPS_FACTOR * r.abs().powf(params.alpha),
            EpsilonRule::Hybrid => {
                // At level |j| = 1 the compatibility knot collapses to 0 and
                // is not shared with any other level.
                let shared = r.abs() == outer || (inner > 0.0 && r.abs() == inner);
                if shared {
                    EPS_FACTOR * pure_weight(r.abs(), params.alpha)
                } else {
                    // shortest adjacent nonempty interval
                    let mut best = f64::INFINITY;
                    for i in (0..idx).rev() {
                        if knots[i] < r {
                            best = best.min(r - knots[i]);
                            break;
                        }
                    }
                    for &k in &knots[idx + 1..] {
                        if k > r {
                            best = best.min(k - r);
                            break;
                        }
                    }
                    EPS_FACTOR * best
                }
            }
        }
    };

    let mut out = Vec::with_capacity(knots.len() - 1);
    for i in 0..knots.len() - 1 {
        if knots[i + 1] == knots[i] {
            continue; // degenerate middle of level |j| = 1
        }
        let iv = Interval {
            lo: knots[i],
            hi: knots[i + 1],
            eps_lo: eps_at(i),
            eps_hi: eps_at(i + 1),
            level: j,
            index: i as i32 - n,
        };
        iv.validate()?;
        out.push(iv);
    }
    Ok(out)
}

/// Which edge of the annulus frame a rectangle sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    L,
    R,
    T,
    B,
}

impl Side {
    pub fn code(&self) -> u8 {
        match self {
            Side::L => 0,
            Side::R => 1,
            Side::T => 2,
            Side::B => 3,
        }
    }

    pub fn from_code(c: u8) -> Result<Side> {
        Ok(match c {
            0 => Side::L,
            1 => Side::R,
            2 => Side::T,
            3 => Side::B,
            _ => return Err(Error::Format(format!("bad side code {c}"))),
        })
    }

    pub fn letter(&self) -> char {
        match self {
            Side::L => 'L',
            Side::R => 'R',
            Side::T => 'T',
            Side::B => 'B',
        }
    }

    pub fn from_letter(c: char) -> Result<Side> {
        Ok(match c {
            'L' => Side::L,
            'R' => Side::R,
            'T' => Side::T,
            'B' => Side::B,
            _ => return Err(Error::Format(format!("bad side letter {c}"))),
        })
    }
}

/// Stable identity of a rectangle: level, frame side, position along it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RectId {
    pub j: i32,
    pub side: Side,
    pub n_along: i32,
}

/// Tensor rectangle `Q = I x J` of the covering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub id: RectId,
    pub ix: Interval,
    pub iy: Interval,
}

impl Rect {
    /// Midpoint `xi_Q`.
    pub fn center(&self) -> [f64; 2] {
        [self.ix.mid(), self.iy.mid()]
    }

    /// Diagonal of the dilation matrix `delta_Q = diag(|I|, |J|)`.
    pub fn delta(&self) -> [f64; 2] {
        [self.ix.len(), self.iy.len()]
    }

    /// Area `|Q|`.
    pub fn area(&self) -> f64 {
        self.ix.len() * self.iy.len()
    }

    /// Expanded rectangle `Q^e = delta_Q([-0.6, 0.6]^2) + xi_Q`.
    pub fn expanded(&self) -> [(f64, f64); 2] {
        let c = self.center();
        let d = self.delta();
        [(c[0] - 0.6 * d[0], c[0] + 0.6 * d[0]), (c[1] - 0.6 * d[1], c[1] + 0.6 * d[1])]
    }

    pub fn contains(&self, xi: [f64; 2]) -> bool {
        self.ix.lo <= xi[0] && xi[0] <= self.ix.hi && self.iy.lo <= xi[1] && xi[1] <= self.iy.hi
    }

    pub fn contains_open(&self, xi: [f64; 2]) -> bool {
        self.ix.lo < xi[0] && xi[0] < self.ix.hi && self.iy.lo < xi[1] && xi[1] < self.iy.hi
    }

    /// Eccentricity `max(|I|,|J|) / min(|I|,|J|)`.
    pub fn eccentricity(&self) -> f64 {
        let [a, b] = self.delta();
        a.max(b) / a.min(b)
    }
}

/// Rectangles of one annulus frame, built from the level's intervals.
///
/// Levels `0` and `1` contribute nothing: the square of level one is already
/// tiled by the low-frequency annuli (`A_{-1} = A_1`).
pub fn build_annulus(intervals: &[Interval], j: i32) -> Vec<Rect> {
    if j == 0 || j == 1 || intervals.is_empty() {
        return Vec::new();
    }
    let first = intervals[0];
    let last = *intervals.last().unwrap();
    let mut rects = Vec::with_capacity(4 * intervals.len());
    for side in [Side::L, Side::R, Side::T, Side::B] {
        for iv in intervals {
            let interior = iv.index > first.index && iv.index < last.index;
            let rect = match side {
                Side::L => Rect { id: RectId { j, side, n_along: iv.index }, ix: first, iy: *iv },
                Side::R => Rect { id: RectId { j, side, n_along: iv.index }, ix: last, iy: *iv },
                Side::T if interior => {
                    Rect { id: RectId { j, side, n_along: iv.index }, ix: *iv, iy: last }
                }
                Side::B if interior => {
                    Rect { id: RectId { j, side, n_along: iv.index }, ix: *iv, iy: first }
                }
                _ => continue,
            };
            rects.push(rect);
        }
    }
    rects.sort_by_key(|r| r.id);
    rects
}

/// The truncated covering: per-level interval subdivisions plus the flat
/// rectangle list of all annuli.
#[derive(Debug, Clone)]
pub struct Covering {
    pub params: AlphaParams,
    pub levels: BTreeMap<i32, Vec<Interval>>,
    pub annuli: BTreeMap<i32, Vec<Rect>>,
}

impl Covering {
    pub fn build(params: AlphaParams) -> Result<Self> {
        Self::build_with_rule(params, EpsilonRule::Hybrid)
    }

    pub fn build_with_rule(params: AlphaParams, rule: EpsilonRule) -> Result<Self> {
        let mut levels = BTreeMap::new();
        let mut annuli = BTreeMap::new();
        for j in params.levels() {
            let knots = knot_sequence(&params, j)?;
            let intervals = assign_epsilons(&params, j, &knots, rule)?;
            annuli.insert(j, build_annulus(&intervals, j));
            levels.insert(j, intervals);
        }
        Ok(Covering { params, levels, annuli })
    }

    /// All rectangles in id order.
    pub fn rects(&self) -> impl Iterator<Item = &Rect> {
        self.annuli.values().flatten()
    }

    pub fn rect_count(&self) -> usize {
        self.annuli.values().map(Vec::len).sum()
    }

    pub fn rect(&self, id: RectId) -> Option<&Rect> {
        self.annuli.get(&id.j)?.iter().find(|r| r.id == id)
    }

    /// Sup-norm radii `(lo, hi)` of the covered annulus: the union of all
    /// rectangles is `{ lo <= max(|xi_1|, |xi_2|) <= hi }`.
    pub fn covered_range(&self) -> (f64, f64) {
        (inner_knot(&self.params, self.j_min()), outer_knot(&self.params, self.j_max()))
    }

    pub fn j_min(&self) -> i32 {
        self.params.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.params.j_max
    }

    /// The square `A_j` as an interval with the pure-rule cutoffs, as used by
    /// the telescoping identities.
    pub fn square_interval(&self, j: i32) -> Interval {
        let r = outer_knot(&self.params, j);
        let eps = EPS_FACTOR * pure_weight(r, self.params.alpha);
        Interval { lo: -r, hi: r, eps_lo: eps, eps_hi: eps, level: j, index: 0 }
    }

    /// Every knot of the covering with its cutoff radius, deduplicated.
    pub fn knot_table(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for ivs in self.levels.values() {
            for iv in ivs {
                v.push((iv.lo, iv.eps_lo));
                v.push((iv.hi, iv.eps_hi));
            }
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.dedup_by_key(|e| e.0.to_bits());
        v
    }

    /// Largest ratio `eps / |I|` over all intervals; the bell and partition
    /// machinery needs this comfortably below `0.1`.
    pub fn max_eps_ratio(&self) -> f64 {
        self.levels
            .values()
            .flatten()
            .map(|iv| iv.eps_lo.max(iv.eps_hi) / iv.len())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, j_min: i32, j_max: i32) -> AlphaParams {
        AlphaParams::new(alpha, R1::ONE, j_min, j_max).unwrap()
    }

    #[test]
    fn knots_level_three_alpha_half() {
        let p = params(0.5, -2, 4);
        let knots = knot_sequence(&p, 3).unwrap();
        assert_eq!(knots.len(), 8);
        assert_eq!(knots[0], -9.0);
        assert_eq!(knots[1], -4.0);
        assert_eq!(knots[6], 4.0);
        assert_eq!(knots[7], 9.0);
        // interior equispaced over [-4, 4] in five pieces
        let expect = [-2.4, -0.8, 0.8, 2.4];
        for (k, e) in knots[2..6].iter().zip(expect) {
            assert!((k - e).abs() < 1e-12, "{k} vs {e}");
        }
        let ivs = assign_epsilons(&p, 3, &knots, EpsilonRule::Hybrid).unwrap();
        let last = ivs.last().unwrap();
        assert_eq!((last.lo, last.hi), (4.0, 9.0));
    }

    #[test]
    fn knots_level_minus_two_alpha_half() {
        let p = params(0.5, -2, 4);
        let knots = knot_sequence(&p, -2).unwrap();
        assert_eq!(knots[0], -0.25);
        assert_eq!(knots[1], -(1.0f64 / 9.0));
        assert_eq!(knots[knots.len() - 2], 1.0 / 9.0);
        assert_eq!(knots[knots.len() - 1], 0.25);
        let ivs = assign_epsilons(&p, -2, &knots, EpsilonRule::Hybrid).unwrap();
        let last = ivs.last().unwrap();
        assert_eq!((last.lo, last.hi), (1.0 / 9.0, 0.25));
        // interior knots at +-1/27
        assert!((ivs[1].hi + 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn level_one_degenerates_to_two_intervals() {
        for alpha in [0.0, 0.5, 0.8] {
            let p = params(alpha, -2, 2);
            let knots = knot_sequence(&p, 1).unwrap();
            let ivs = assign_epsilons(&p, 1, &knots, EpsilonRule::Hybrid).unwrap();
            assert_eq!(ivs.len(), 2, "alpha = {alpha}");
            assert_eq!((ivs[0].lo, ivs[0].hi), (-1.0, 0.0));
            assert_eq!((ivs[1].lo, ivs[1].hi), (0.0, 1.0));
        }
    }

    #[test]
    fn epsilon_examples() {
        let p = params(0.5, -2, 4);
        // shared knot 9 on level 3
        let ivs = assign_epsilons(&p, 3, &knot_sequence(&p, 3).unwrap(), EpsilonRule::Hybrid).unwrap();
        let outer = ivs.last().unwrap();
        assert!((outer.eps_hi - 0.03).abs() < 1e-15);
        // budget of the outer interval holds with room to spare
        assert!(outer.eps_lo + outer.eps_hi <= outer.len());
        // shared knot 1/4 on level -2, low-frequency branch
        let ivs = assign_epsilons(&p, -2, &knot_sequence(&p, -2).unwrap(), EpsilonRule::Hybrid).unwrap();
        let outer = ivs.last().unwrap();
        assert!((outer.eps_hi - 1.25e-3).abs() < 1e-18);
        // interior knot of an equispaced level: eps = h / 100
        let inner = &ivs[1];
        let h = 2.0 / 27.0;
        assert!((inner.eps_hi - h / 100.0).abs() < 1e-15);
    }

    #[test]
    fn literal_rule_degenerates_at_level_one() {
        let p = params(0.5, -2, 2);
        let knots = knot_sequence(&p, 1).unwrap();
        let err = assign_epsilons(&p, 1, &knots, EpsilonRule::LiteralPower).unwrap_err();
        assert!(matches!(err, Error::EpsilonNonPositive { .. }), "{err}");
        assert!(Covering::build_with_rule(p, EpsilonRule::LiteralPower).is_err());
    }

    #[test]
    fn literal_rule_breaks_budget_deep_down() {
        // far below frequency one the literal cutoffs outgrow the intervals
        let p = params(0.5, -12, 1);
        assert!(Covering::build_with_rule(p, EpsilonRule::LiteralPower).is_err());
        assert!(Covering::build(p).is_ok());
    }

    #[test]
    fn annulus_counts() {
        let p = params(0.5, -3, 3);
        let cov = Covering::build(p).unwrap();
        // N = 1 frame: 2 * 3 + 2 * 1 = 8
        assert_eq!(cov.annuli[&-1].len(), 8);
        // N = 3 frame: 2 * 7 + 2 * 5 = 24
        assert_eq!(cov.annuli[&3].len(), 24);
        assert_eq!(cov.annuli[&-3].len(), 24);
        // level one is tiled by the low-frequency side
        assert!(cov.annuli[&1].is_empty());
        assert!(!cov.annuli.contains_key(&0));
    }

    #[test]
    fn covering_level_keys() {
        let p = params(0.5, -2, 2);
        let cov = Covering::build(p).unwrap();
        let keys: Vec<i32> = cov.annuli.keys().copied().collect();
        assert_eq!(keys, vec![-2, -1, 1, 2]);
        assert!(!cov.annuli[&-2].is_empty());
        assert!(!cov.annuli[&-1].is_empty());
        assert!(!cov.annuli[&2].is_empty());
    }

    #[test]
    fn left_column_of_level_three() {
        let p = params(0.5, -2, 4);
        let cov = Covering::build(p).unwrap();
        for r in &cov.annuli[&3] {
            if r.id.side == Side::L {
                assert_eq!((r.ix.lo, r.ix.hi), (-9.0, -4.0));
            }
        }
    }

    #[test]
    fn alpha_zero_gives_unit_order_intervals() {
        let p = params(0.0, -2, 4);
        let cov = Covering::build(p).unwrap();
        for j in 2..=4 {
            for iv in &cov.levels[&j] {
                assert!(iv.len() >= 2.0 / 3.0 && iv.len() <= 1.0 + 1e-12, "len {}", iv.len());
            }
        }
    }

    #[test]
    fn rect_affine_reproduction() {
        let p = params(0.5, -2, 4);
        let cov = Covering::build(p).unwrap();
        for r in cov.rects() {
            let c = r.center();
            let d = r.delta();
            // Q = delta_Q([-1/2, 1/2]^2) + xi_Q
            assert!((c[0] - 0.5 * d[0] - r.ix.lo).abs() <= 1e-12 * (1.0 + r.ix.lo.abs()));
            assert!((c[0] + 0.5 * d[0] - r.ix.hi).abs() <= 1e-12 * (1.0 + r.ix.hi.abs()));
            assert!((c[1] - 0.5 * d[1] - r.iy.lo).abs() <= 1e-12 * (1.0 + r.iy.lo.abs()));
            assert!((c[1] + 0.5 * d[1] - r.iy.hi).abs() <= 1e-12 * (1.0 + r.iy.hi.abs()));
        }
    }

    #[test]
    fn cross_level_knots_bit_identical() {
        let p = params(0.5, -4, 4);
        let cov = Covering::build(p).unwrap();
        for j in 2..=4 {
            let fine = &cov.levels[&j];
            let coarse = &cov.levels[&(j - 1)];
            assert_eq!(fine[0].hi.to_bits(), coarse[0].lo.to_bits());
            assert_eq!(fine.last().unwrap().lo.to_bits(), coarse.last().unwrap().hi.to_bits());
            // shared cutoffs across the seam
            assert_eq!(fine[0].eps_hi.to_bits(), coarse[0].eps_lo.to_bits());
        }
        for j in -3..=-1 {
            let level = &cov.levels[&j];
            let finer = &cov.levels[&(j - 1)];
            // inner compatibility knot of level j = outer edge of level j-1
            assert_eq!(level[0].hi.to_bits(), finer[0].lo.to_bits());
            assert_eq!(level[0].eps_hi.to_bits(), finer[0].eps_lo.to_bits());
        }
        // the (-1, 1) pair shares the outer square exactly
        assert_eq!(cov.levels[&-1][0].lo.to_bits(), cov.levels[&1][0].lo.to_bits());
        assert_eq!(
            cov.levels[&-1].last().unwrap().hi.to_bits(),
            cov.levels[&1].last().unwrap().hi.to_bits()
        );
    }

    #[test]
    fn knot_sequence_rejects_bad_levels() {
        let p = params(0.5, -2, 4);
        assert!(matches!(knot_sequence(&p, 0), Err(Error::LevelZero)));
        assert!(matches!(knot_sequence(&p, 5), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(knot_sequence(&p, -3), Err(Error::LevelOutOfRange { .. })));
    }
}
