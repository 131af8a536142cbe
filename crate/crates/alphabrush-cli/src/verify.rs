//! The verification suite behind `alphabrush verify`.
//!
//! Every check runs the library against the configured covering with a
//! seeded generator, records measured values next to the thresholds it was
//! judged by, and never stops early: the report always carries all checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use alphabrush::bells::{central_bell_time, Bell, TimeGridOpts};
use alphabrush::brushlet1d::project_spectrum;
use alphabrush::brushlet2d::{
    telescoping_check, side_fusion_check, AnalyzeOpts, Basis2, BrushletIndex2D, CoeffMap,
    Expansion,
};
use alphabrush::covering::{Covering, Interval, Side};
use alphabrush::error::Result;
use alphabrush::grid::{Axis, AxisSpec};
use alphabrush::maximal::check_maxbound;
use alphabrush::signals::BellBump2;
use alphabrush::spaces::{
    boundary_margins, equivalence_experiment, sequence_norm, single_coeff_norm, ubox_count_at,
    Bapu, HybridWeight, NormParams,
};
use alphabrush::validate::{partition_check, validate_covering};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub threshold: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            pass: false,
            measured: BTreeMap::new(),
            threshold: BTreeMap::new(),
            note: None,
        }
    }

    fn measure(&mut self, key: &str, value: f64) -> &mut Self {
        self.measured.insert(key.into(), value);
        self
    }

    fn against(&mut self, key: &str, value: f64) -> &mut Self {
        self.threshold.insert(key.into(), value);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: RunConfig,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn rng_for(cfg: &RunConfig, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.run.seed.wrapping_mul(0x9e37_79b9).wrapping_add(stream))
}

/// Adjacent compatible interval pairs: consecutive within a level, plus the
/// cross-level pairs meeting at a shared knot.
pub fn compatible_pairs(cov: &Covering) -> Vec<(Interval, Interval)> {
    let mut pairs = Vec::new();
    let mut enders: BTreeMap<u64, Vec<Interval>> = BTreeMap::new();
    let mut starters: BTreeMap<u64, Vec<Interval>> = BTreeMap::new();
    for ivs in cov.levels.values() {
        for w in ivs.windows(2) {
            pairs.push((w[0], w[1]));
        }
        for iv in ivs {
            enders.entry(iv.hi.to_bits()).or_default().push(*iv);
            starters.entry(iv.lo.to_bits()).or_default().push(*iv);
        }
    }
    for (knot, ends) in &enders {
        if let Some(starts) = starters.get(knot) {
            for a in ends {
                for b in starts {
                    if a.level != b.level {
                        pairs.push((*a, *b));
                    }
                }
            }
        }
    }
    pairs
}

pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let cov = cfg.build_covering()?;
    let ramp = cfg.ramp();
    let hw = HybridWeight::new(cov.params.alpha, ramp);
    let th = &cfg.thresholds;

    let mut checks = Vec::new();

    // geometry of the covering
    {
        let mut c = CheckResult::new("covering_geometry");
        let rep = validate_covering(&cov, &hw, &cfg.validation_thresholds())?;
        c.measure("n0", rep.n0 as f64)
            .measure("moderation_a", rep.moderation_a)
            .measure("eps_c", rep.eps_c)
            .measure("eccentricity_k", rep.eccentricity_k)
            .measure("qrule_lo", rep.qrule_lo)
            .measure("qrule_hi", rep.qrule_hi);
        if let Some(e) = rep.geom_exponent_pos {
            c.measure("geom_exponent_pos", e);
        }
        if let Some(e) = rep.geom_exponent_neg {
            c.measure("geom_exponent_neg", e);
        }
        c.against("n0_max", th.n0_max as f64)
            .against("eccentricity_max", th.eccentricity_max)
            .against("exponent_tol", th.exponent_tol);
        c.pass = rep.all_pass();
        checks.push(c);
    }

    // partition of the covered annulus
    {
        let mut c = CheckResult::new("covering_partition");
        let mut rng = rng_for(cfg, 1);
        let rep = partition_check(&cov, 100_000, &mut rng);
        c.measure("min_closed_hits", rep.min_closed_hits as f64)
            .measure("max_closed_hits", rep.max_closed_hits as f64)
            .measure("max_open_hits", rep.max_open_hits as f64)
            .against("n0_max", th.n0_max as f64);
        c.pass = rep.min_closed_hits >= 1
            && rep.max_closed_hits <= th.n0_max
            && rep.max_open_hits <= 1;
        checks.push(c);
    }

    // ramp complementarity
    {
        let mut c = CheckResult::new("ramp_identity");
        let r = ramp;
        let mut rng = rng_for(cfg, 2);
        let mut worst = 0.0f64;
        for _ in 0..100_000 {
            let xi: f64 = rng.random_range(-3.0..3.0);
            worst = worst.max((r.eval(xi).powi(2) + r.eval(-xi).powi(2) - 1.0).abs());
        }
        c.measure("max_deviation", worst).against("tol", th.ramp_identity);
        c.pass = worst <= th.ramp_identity;
        checks.push(c);
    }

    // bell compatibility along every seam
    {
        let mut c = CheckResult::new("bell_compatibility");
        let mut worst = 0.0f64;
        let mut pair_count = 0usize;
        for (a, b) in compatible_pairs(&cov) {
            let ba = Bell::new(&a, ramp);
            let bb = Bell::new(&b, ramp);
            let lo = a.lo + a.eps_lo;
            let hi = b.hi - b.eps_hi;
            let n = 400;
            for k in 0..=n {
                let xi = lo + (hi - lo) * k as f64 / n as f64;
                let s = ba.eval(xi).powi(2) + bb.eval(xi).powi(2);
                worst = worst.max((s - 1.0).abs());
            }
            pair_count += 1;
        }
        c.measure("max_deviation", worst)
            .measure("pairs", pair_count as f64)
            .against("tol", th.bell_compatibility);
        c.pass = worst <= th.bell_compatibility;
        checks.push(c);
    }

    // projection calculus on sampled spectra
    {
        let mut c = CheckResult::new("projection_algebra");
        let axis = Axis::for_covering(&cov, &AxisSpec::projection_only())?;
        let mut rng = rng_for(cfg, 3);
        let field: Vec<Complex64> = {
            let coefs: Vec<(f64, f64, f64)> = (0..6)
                .map(|_| {
                    (
                        rng.random_range(0.2..2.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.3..1.5),
                    )
                })
                .collect();
            axis.points()
                .iter()
                .map(|&x| {
                    let mut v = Complex64::default();
                    for (a, b, s) in &coefs {
                        v += Complex64::new((a * x + b).sin(), (s * x - b).cos());
                    }
                    v
                })
                .collect()
        };
        let gfield: Vec<Complex64> =
            axis.points().iter().map(|&x| Complex64::new((0.7 * x).cos(), (1.1 * x).sin())).collect();
        let mut worst_idem = 0.0f64;
        let mut worst_adj = 0.0f64;
        let mut worst_sum = 0.0f64;
        let mut worst_fuse = 0.0f64;
        let w = axis.weights();
        for (a, b) in compatible_pairs(&cov) {
            let ba = Bell::new(&a, ramp);
            let bb = Bell::new(&b, ramp);
            let pa = project_spectrum(&axis, &a, &ba, &field)?;
            let paa = project_spectrum(&axis, &a, &ba, &pa)?;
            worst_idem = worst_idem
                .max(pa.iter().zip(&paa).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
            let pg = project_spectrum(&axis, &a, &ba, &gfield)?;
            let lhs: Complex64 = (0..axis.len()).map(|i| w[i] * pa[i] * gfield[i].conj()).sum();
            let rhs: Complex64 = (0..axis.len()).map(|i| w[i] * field[i] * pg[i].conj()).sum();
            worst_adj = worst_adj.max((lhs - rhs).norm());
            // gluing across the pair
            let pb = project_spectrum(&axis, &b, &bb, &field)?;
            for i in axis.range(a.lo + a.eps_lo, b.hi - b.eps_hi) {
                worst_sum = worst_sum.max((pa[i] + pb[i] - field[i]).norm());
            }
            let fused = a.fuse(&b);
            let pu = project_spectrum(&axis, &fused, &Bell::new(&fused, ramp), &field)?;
            for i in 0..axis.len() {
                worst_fuse = worst_fuse.max((pa[i] + pb[i] - pu[i]).norm());
            }
        }
        c.measure("idempotence", worst_idem)
            .measure("self_adjointness", worst_adj)
            .measure("gluing_sum", worst_sum)
            .measure("gluing_fusion", worst_fuse)
            .against("tol", th.projection);
        c.pass = worst_idem <= th.projection
            && worst_adj <= th.projection
            && worst_sum <= th.projection
            && worst_fuse <= th.projection;
        checks.push(c);
    }

    let basis = Basis2::new(&cov, &cfg.axis_spec(), ramp)?;

    // orthonormality across the seams
    {
        let mut c = CheckResult::new("gram_orthonormality");
        let subset = gram_subset(&cov, 200, &mut rng_for(cfg, 4));
        let g = basis.gram(&subset)?;
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for i in 0..subset.len() {
            for j in 0..subset.len() {
                if i == j {
                    diag = diag.max((g[[i, j]] - 1.0).abs());
                } else {
                    off = off.max(g[[i, j]].abs());
                }
            }
        }
        c.measure("size", subset.len() as f64)
            .measure("max_offdiag", off)
            .measure("max_diag_dev", diag)
            .against("offdiag_tol", th.gram_offdiag)
            .against("diag_tol", th.gram_diag);
        c.pass = off <= th.gram_offdiag && diag <= th.gram_diag;
        checks.push(c);
    }

    // telescoping and the side fusions
    {
        let mut c = CheckResult::new("telescoping");
        let pbasis = Basis2::new(&cov, &AxisSpec::projection_only(), ramp)?;
        let f = |x: f64, y: f64| {
            Complex64::new((0.6 * x - 0.2 * y).cos(), (0.3 * x + 0.5 * y).sin())
        };
        let rep = telescoping_check(&pbasis, &f)?;
        let mut per_level = 0.0f64;
        for (_, d) in &rep.per_level {
            per_level = per_level.max(*d);
        }
        let mut fusion = 0.0f64;
        for j in cov.params.levels() {
            if j == 1 {
                continue;
            }
            fusion = fusion.max(side_fusion_check(&pbasis, j, &f)?);
        }
        c.measure("per_level_max", per_level)
            .measure("summed", rep.summed)
            .measure("side_fusion_max", fusion)
            .against("tol", th.telescoping);
        c.pass = per_level <= th.telescoping
            && rep.summed <= th.telescoping
            && fusion <= th.telescoping;
        checks.push(c);
    }

    // analysis/synthesis round trips on random expansions
    {
        let mut c = CheckResult::new("synthesis_roundtrip");
        let mut rng = rng_for(cfg, 5);
        let rects: Vec<_> = cov.rects().map(|r| r.id).collect();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let mut coeffs = CoeffMap::new();
            for _ in 0..15 {
                coeffs.insert(
                    BrushletIndex2D {
                        rect: rects[rng.random_range(0..rects.len())],
                        n1: rng.random_range(0..12),
                        n2: rng.random_range(0..12),
                    },
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                );
            }
            let f = Expansion::new(&cov, &coeffs, ramp)?;
            let out = basis.analyze(&f, &AnalyzeOpts { tail_tol: cfg.norms.tail_tol, ..Default::default() })?;
            worst = worst.max(basis.synthesis_error(&out.coeffs, &f)?);
        }
        c.measure("max_rel_error", worst).against("tol", th.roundtrip);
        c.pass = worst <= th.roundtrip;
        checks.push(c);
    }

    let bapu = Bapu::new(&cov, ramp)?;

    // partition of unity
    {
        let mut c = CheckResult::new("bapu_partition");
        let mut rng = rng_for(cfg, 6);
        let (rlo, rhi) = cov.covered_range();
        let (m_lo, m_hi) = boundary_margins(&cov);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 100_000 {
            let x: f64 = rng.random_range(-rhi..rhi);
            let y: f64 = rng.random_range(-rhi..rhi);
            let sup = x.abs().max(y.abs());
            if sup < rlo + m_lo || sup > rhi - m_hi {
                continue;
            }
            worst = worst.max((bapu.sum_at([x, y]) - 1.0).abs());
            done += 1;
        }
        c.measure("max_deviation", worst).against("tol", th.bapu);
        c.pass = worst <= th.bapu;
        checks.push(c);
    }

    // lattice box overlap
    {
        let mut c = CheckResult::new("ubox_overlap");
        let mut rng = rng_for(cfg, 7);
        let rects: Vec<_> = cov.rects().collect();
        let mut max_per_rect = 0usize;
        for _ in 0..20_000 {
            let rect = rects[rng.random_range(0..rects.len())];
            let [dx, dy] = rect.delta();
            let y = [
                rng.random_range(-2.0..40.0) / dx,
                rng.random_range(-2.0..40.0) / dy,
            ];
            max_per_rect = max_per_rect.max(ubox_count_at(rect, y));
        }
        c.measure("max_boxes_per_rect", max_per_rect as f64).against("bound", 1.0);
        c.pass = max_per_rect <= 1;
        checks.push(c);
    }

    // sequence norm against the closed form
    {
        let mut c = CheckResult::new("sequence_norm_closed_form");
        let mut rng = rng_for(cfg, 8);
        let rects: Vec<_> = cov.rects().collect();
        let mut worst = 0.0f64;
        for (s, p, q) in [(0.0, 2.0, 2.0), (0.5, 2.0, 2.0), (0.0, 1.5, 3.0), (-0.3, 3.0, 1.0)] {
            let np = NormParams::new(s, p, q)?;
            for _ in 0..3 {
                let rect = rects[rng.random_range(0..rects.len())];
                let n1 = rng.random_range(0..8);
                let n2 = rng.random_range(0..8);
                let value = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
                if value.norm() == 0.0 {
                    continue;
                }
                let mut coeffs = CoeffMap::new();
                coeffs.insert(BrushletIndex2D { rect: rect.id, n1, n2 }, value);
                let got = sequence_norm(&coeffs, &cov, &hw, &np, cfg.norms.rows)?;
                let expect = single_coeff_norm(rect, n1, n2, value, &hw, &np)?;
                worst = worst.max((got.value - expect).abs() / expect);
            }
        }
        c.measure("max_rel_dev", worst).against("tol", th.seq_closed_form);
        c.pass = worst <= th.seq_closed_form;
        checks.push(c);
    }

    // unconditionality mechanism: the norm sees magnitudes only
    {
        let mut c = CheckResult::new("sequence_norm_invariance");
        let mut rng = rng_for(cfg, 9);
        let rects: Vec<_> = cov.rects().collect();
        let mut coeffs = CoeffMap::new();
        for _ in 0..40 {
            coeffs.insert(
                BrushletIndex2D {
                    rect: rects[rng.random_range(0..rects.len())].id,
                    n1: rng.random_range(0..10),
                    n2: rng.random_range(0..10),
                },
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        let np = NormParams::new(0.0, 2.0, 2.0)?;
        let base = sequence_norm(&coeffs, &cov, &hw, &np, cfg.norms.rows)?.value;
        let flipped = CoeffMap::from_entries(coeffs.iter().map(|(k, v)| {
            let sign = match (k.n1 * 7 + k.n2) % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(-1.0, 0.0),
                2 => Complex64::new(0.0, 1.0),
                _ => Complex64::new(0.0, -1.0),
            };
            (*k, v * sign)
        }));
        let flipped_value = sequence_norm(&flipped, &cov, &hw, &np, cfg.norms.rows)?.value;
        let bit_equal = flipped_value.to_bits() == base.to_bits();
        let rotated = CoeffMap::from_entries(
            coeffs
                .iter()
                .map(|(k, v)| (*k, v * Complex64::from_polar(1.0, 0.123 + k.n1 as f64))),
        );
        let rotated_value = sequence_norm(&rotated, &cov, &hw, &np, cfg.norms.rows)?.value;
        let phase_dev = (rotated_value - base).abs() / base;
        c.measure("sign_flip_bit_equal", if bit_equal { 1.0 } else { 0.0 })
            .measure("phase_rel_dev", phase_dev)
            .against("bit_equal", 1.0)
            .against("phase_tol", 1e-12);
        c.pass = bit_equal && phase_dev <= 1e-12;
        checks.push(c);
    }

    // sequence functional against the exact multiplier norm
    {
        let mut c = CheckResult::new("norm_equivalence");
        let mut rng = rng_for(cfg, 10);
        let rects: Vec<_> = cov.rects().collect();
        let fields: Vec<BellBump2> = (0..50)
            .map(|_| {
                let rect = rects[rng.random_range(0..rects.len())];
                alphabrush::signals::random_bump_in_rect(rect, &mut rng)
            })
            .collect();
        let refs: Vec<&dyn alphabrush::brushlet2d::Spectrum> =
            fields.iter().map(|f| f as &dyn alphabrush::brushlet2d::Spectrum).collect();
        let rep = equivalence_experiment(
            &basis,
            &bapu,
            &hw,
            0.0,
            &refs,
            &AnalyzeOpts { tail_tol: cfg.norms.tail_tol, ..Default::default() },
            cfg.norms.rows,
        )?;
        c.measure("ratio_min", rep.min)
            .measure("ratio_max", rep.max)
            .measure("spread", rep.spread())
            .against("lo", th.equivalence_lo)
            .against("hi", th.equivalence_hi);
        c.pass = rep.min >= th.equivalence_lo && rep.max <= th.equivalence_hi;
        checks.push(c);
    }

    // pointwise bound sweep
    {
        let mut c = CheckResult::new("maxbound_sweep");
        let mut rng = rng_for(cfg, 11);
        let mut per_rect: Vec<f64> = Vec::new();
        let mut levels: Vec<i32> = cov.params.levels().filter(|&j| j != 1).collect();
        levels.reverse();
        for j in levels.into_iter().take(3) {
            let rect = cov.annuli[&j]
                .iter()
                .find(|r| r.id.side == Side::L && r.id.n_along == 0)
                .copied()
                .unwrap_or_else(|| cov.annuli[&j][0]);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let mut coeffs = CoeffMap::new();
                for _ in 0..10 {
                    coeffs.insert(
                        BrushletIndex2D {
                            rect: rect.id,
                            n1: rng.random_range(0..6),
                            n2: rng.random_range(0..6),
                        },
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    );
                }
                let rep = check_maxbound(&rect, &coeffs, 0.5, 161, ramp)?;
                worst = worst.max(rep.max_ratio);
            }
            per_rect.push(worst);
        }
        let hi = per_rect.iter().cloned().fold(0.0f64, f64::max);
        let lo = per_rect.iter().cloned().fold(f64::INFINITY, f64::min);
        c.measure("constant_max", hi)
            .measure("constant_min", lo)
            .measure("spread", hi / lo)
            .against("spread_max", th.maxbound_spread);
        c.pass = (hi / lo).is_finite() && hi / lo <= th.maxbound_spread;
        checks.push(c);
    }

    // decay certificates of the central bells
    {
        let mut c = CheckResult::new("bell_decay");
        let mut cs = Vec::new();
        for scale in [0.5, 2.0, 8.0] {
            let bell = Bell {
                lo: 0.0,
                hi: scale,
                eps_lo: 0.04 * scale,
                eps_hi: 0.04 * scale,
                ramp,
            };
            let g = central_bell_time(&bell, &TimeGridOpts::default())?;
            cs.push(g.decay_constant(4.0, 2000.0));
        }
        let hi = cs.iter().cloned().fold(0.0f64, f64::max);
        let lo = cs.iter().cloned().fold(f64::INFINITY, f64::min);
        c.measure("constant_max", hi)
            .measure("constant_min", lo)
            .measure("spread", hi / lo)
            .against("spread_max", th.decay_spread);
        c.pass = hi.is_finite() && lo > 0.0 && hi / lo <= th.decay_spread;
        checks.push(c);
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { config: cfg.clone(), seed: cfg.run.seed, checks, all_pass })
}

/// Builds a subset of basis elements that straddles every seam of the
/// covering: all rectangles once, the seam-adjacent rectangles with extra
/// cosine pairs, random fill to the requested size.
pub fn gram_subset(cov: &Covering, at_least: usize, rng: &mut ChaCha8Rng) -> Vec<BrushletIndex2D> {
    let mut subset = Vec::new();
    for rect in cov.rects() {
        subset.push(BrushletIndex2D { rect: rect.id, n1: 0, n2: 0 });
    }
    // seams: the outer edge of each level meets the next annulus
    for rect in cov.rects() {
        let (lo, hi) = cov.covered_range();
        let touches_seam = [rect.ix.lo.abs(), rect.ix.hi.abs(), rect.iy.lo.abs(), rect.iy.hi.abs()]
            .iter()
            .any(|&k| k > lo && k < hi && (k - 1.0).abs() < 1e-12);
        let outer = rect.id.n_along.abs() == (cov.params.n_sub(rect.id.j) as i32);
        if touches_seam || outer {
            for (n1, n2) in [(1, 0), (0, 1), (2, 1)] {
                subset.push(BrushletIndex2D { rect: rect.id, n1, n2 });
            }
        }
    }
    let rects: Vec<_> = cov.rects().map(|r| r.id).collect();
    while subset.len() < at_least {
        subset.push(BrushletIndex2D {
            rect: rects[rng.random_range(0..rects.len())],
            n1: rng.random_range(0..6),
            n2: rng.random_range(0..6),
        });
    }
    subset.sort();
    subset.dedup();
    subset
}
