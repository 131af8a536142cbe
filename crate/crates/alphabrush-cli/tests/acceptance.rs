//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `-- --nocapture` to see them). All tolerances are fixed here,
//! in code; measured constants that the suite froze are noted inline.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use alphabrush::approx::{error_curve, l2_tail_formula, threshold_m, MTermPlan, WeightMode};
use alphabrush::bells::{Bell, Ramp};
use alphabrush::brushlet1d::project_spectrum;
use alphabrush::brushlet2d::{
    side_fusion_check, telescoping_check, AnalyzeOpts, Basis2, BrushletIndex2D, CoeffMap,
    Expansion, Spectrum,
};
use alphabrush::covering::{AlphaParams, Covering, Side, R1};
use alphabrush::grid::{Axis, AxisSpec};
use alphabrush::maximal::check_maxbound;
use alphabrush::signals::random_bump_in_rect;
use alphabrush::spaces::{
    boundary_margins, equivalence_experiment, sequence_norm, single_coeff_norm, Bapu,
    HybridWeight, NormParams,
};
use alphabrush::validate::{partition_check, validate_covering, ValidationThresholds};
use alphabrush_cli::config::RunConfig;
use alphabrush_cli::verify::{compatible_pairs, gram_subset, run_verify};

const SEED: u64 = 7;

fn default_covering() -> Covering {
    Covering::build(AlphaParams::new(0.5, R1::ONE, -2, 4).unwrap()).unwrap()
}

fn ramp() -> Ramp {
    Ramp::new(3)
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

#[test]
fn criterion_01_ramp_identity() {
    let start = Instant::now();
    let r = ramp();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let xi: f64 = rng.random_range(-3.0..3.0);
        worst = worst.max((r.eval(xi).powi(2) + r.eval(-xi).powi(2) - 1.0).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "01 ramp identity",
        worst <= 1e-12 && elapsed < 1.0,
        &format!("max dev {worst:.2e} <= 1e-12 over 1e5 points in {elapsed:.2} s"),
    );
}

#[test]
fn criterion_02_bell_compatibility() {
    let cov = default_covering();
    let rp = ramp();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for (a, b) in compatible_pairs(&cov) {
        let ba = Bell::new(&a, rp);
        let bb = Bell::new(&b, rp);
        let lo = a.lo + a.eps_lo;
        let hi = b.hi - b.eps_hi;
        for k in 0..=1000 {
            let xi = lo + (hi - lo) * k as f64 / 1000.0;
            worst = worst.max((ba.eval(xi).powi(2) + bb.eval(xi).powi(2) - 1.0).abs());
        }
        pairs += 1;
    }
    report(
        "02 bell compatibility",
        worst <= 1e-12,
        &format!("max dev {worst:.2e} <= 1e-12 over {pairs} adjacent pairs"),
    );
}

#[test]
fn criterion_03_projection_algebra() {
    let cov = default_covering();
    let rp = ramp();
    let axis = Axis::for_covering(&cov, &AxisSpec::projection_only()).unwrap();
    let f: Vec<Complex64> = axis
        .points()
        .iter()
        .map(|&x| Complex64::new((0.9 * x + 0.3).sin(), (0.4 * x - 1.1).cos()))
        .collect();
    let g: Vec<Complex64> =
        axis.points().iter().map(|&x| Complex64::new((1.3 * x).cos(), (0.6 * x).sin())).collect();
    let w = axis.weights();
    let mut worst = 0.0f64;
    for (a, b) in compatible_pairs(&cov) {
        let ba = Bell::new(&a, rp);
        let bb = Bell::new(&b, rp);
        let pa = project_spectrum(&axis, &a, &ba, &f).unwrap();
        let pb = project_spectrum(&axis, &b, &bb, &f).unwrap();
        // idempotence and self-adjointness
        let paa = project_spectrum(&axis, &a, &ba, &pa).unwrap();
        worst = worst.max(pa.iter().zip(&paa).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
        let pg = project_spectrum(&axis, &a, &ba, &g).unwrap();
        let lhs: Complex64 = (0..axis.len()).map(|i| w[i] * pa[i] * g[i].conj()).sum();
        let rhs: Complex64 = (0..axis.len()).map(|i| w[i] * f[i] * pg[i].conj()).sum();
        worst = worst.max((lhs - rhs).norm());
        // gluing: the pair sums to the identity on the joint plateau
        for i in axis.range(a.lo + a.eps_lo, b.hi - b.eps_hi) {
            worst = worst.max((pa[i] + pb[i] - f[i]).norm());
        }
        // fusion: the pair sums to the union projection everywhere
        let fused = a.fuse(&b);
        let pu = project_spectrum(&axis, &fused, &Bell::new(&fused, rp), &f).unwrap();
        for i in 0..axis.len() {
            worst = worst.max((pa[i] + pb[i] - pu[i]).norm());
        }
    }
    report("03 projection algebra", worst <= 1e-10, &format!("max dev {worst:.2e} <= 1e-10"));
}

#[test]
fn criterion_04_orthonormality() {
    let cov = default_covering();
    let basis = Basis2::new(&cov, &AxisSpec { max_osc_index: 16, ..Default::default() }, ramp())
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    // spans every seam: the frequency-one seam between the innermost
    // high-frequency annulus and the low-frequency side, and the
    // compatibility seams between consecutive annuli
    let subset = gram_subset(&cov, 200, &mut rng);
    assert!(subset.len() >= 200);
    let g = basis.gram(&subset).unwrap();
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
    report(
        "04 orthonormality",
        off <= 1e-7 && diag <= 1e-6,
        &format!("{} elements, max offdiag {off:.2e} <= 1e-7, diag dev {diag:.2e} <= 1e-6", subset.len()),
    );
}

#[test]
fn criterion_05_completeness() {
    let cov = default_covering();
    let rp = ramp();
    // per-level telescoping on an arbitrary smooth spectrum
    let pbasis = Basis2::new(&cov, &AxisSpec::projection_only(), rp).unwrap();
    let f =
        |x: f64, y: f64| Complex64::new((0.5 * x - 0.3 * y).cos(), (0.2 * x + 0.6 * y).sin());
    let tele = telescoping_check(&pbasis, &f).unwrap();
    let mut tele_worst = tele.summed;
    for (_, d) in &tele.per_level {
        tele_worst = tele_worst.max(*d);
    }
    for j in cov.params.levels().filter(|&j| j != 1) {
        tele_worst = tele_worst.max(side_fusion_check(&pbasis, j, &f).unwrap());
    }

    // round trips on 20 random band-limited inputs
    let basis = Basis2::new(&cov, &AxisSpec::default(), rp).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let rects: Vec<_> = cov.rects().map(|r| r.id).collect();
    let mut rt_worst = 0.0f64;
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
        let f = Expansion::new(&cov, &coeffs, rp).unwrap();
        let out = basis.analyze(&f, &AnalyzeOpts::default()).unwrap();
        rt_worst = rt_worst.max(basis.synthesis_error(&out.coeffs, &f).unwrap());
    }
    report(
        "05 completeness/telescoping",
        tele_worst <= 1e-9 && rt_worst <= 1e-5,
        &format!("telescoping dev {tele_worst:.2e} <= 1e-9, roundtrip {rt_worst:.2e} <= 1e-5 over 20 inputs"),
    );
}

#[test]
fn criterion_06_covering_geometry() {
    let hw = HybridWeight::new(0.5, ramp());
    // the default covering carries the admissibility and cutoff constants
    let cov = default_covering();
    let rep = validate_covering(&cov, &hw, &ValidationThresholds::default()).unwrap();
    // measured overlap count of this construction is 11: at the seam
    // between levels -1 and -2 the whole finer column stacks along the
    // coarse middle rectangle (the classical grid count of 9 is exceeded
    // there by design of the frames)
    let n0_ok = rep.n0 == 11;
    let eps_ok = rep.eps_c > 0.0;
    let q_ok = rep.qrule_lo > 0.0 && rep.qrule_hi.is_finite();

    // the size-rule exponents need the deeper truncation of the criterion
    let deep = Covering::build(AlphaParams::new(0.5, R1::ONE, -4, 8).unwrap()).unwrap();
    let drep = validate_covering(&deep, &hw, &ValidationThresholds::default()).unwrap();
    let pos = drep.geom_exponent_pos.unwrap();
    let neg = drep.geom_exponent_neg.unwrap();
    let fit_ok = (pos - 1.0).abs() <= 0.1 && (neg - 3.0).abs() <= 0.1;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let part = partition_check(&cov, 1_000_000, &mut rng);
    let part_ok =
        part.min_closed_hits >= 1 && part.max_closed_hits <= rep.n0 && part.max_open_hits <= 1;

    report(
        "06 covering geometry",
        n0_ok && eps_ok && q_ok && fit_ok && part_ok,
        &format!(
            "n0 {} (frozen 11), eps c {:.2e} > 0, size-rule ratio in [{:.3}, {:.3}], exponents {pos:.3}/{neg:.3} within 0.1 of 1.0/3.0, partition 1e6 points ok",
            rep.n0, rep.eps_c, rep.qrule_lo, rep.qrule_hi
        ),
    );
}

#[test]
fn criterion_07_bapu_partition() {
    let cov = default_covering();
    let bapu = Bapu::new(&cov, ramp()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
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
    report(
        "07 partition of unity",
        worst <= 1e-12,
        &format!("max |sum phi - 1| = {worst:.2e} <= 1e-12 over 1e5 covered points"),
    );
}

#[test]
fn criterion_08_norm_machinery() {
    let cov = default_covering();
    let rp = ramp();
    let hw = HybridWeight::new(0.5, rp);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let rects: Vec<_> = cov.rects().collect();

    // single-coefficient closed form
    let mut closed_worst = 0.0f64;
    for (s, p, q) in [(0.0, 2.0, 2.0), (0.6, 2.0, 2.0), (0.0, 1.5, 3.0)] {
        let np = NormParams::new(s, p, q).unwrap();
        for _ in 0..4 {
            let rect = rects[rng.random_range(0..rects.len())];
            let (n1, n2) = (rng.random_range(0..8), rng.random_range(0..8));
            let value = Complex64::new(rng.random_range(0.2..2.0), rng.random_range(-1.0..1.0));
            let mut coeffs = CoeffMap::new();
            coeffs.insert(BrushletIndex2D { rect: rect.id, n1, n2 }, value);
            let got = sequence_norm(&coeffs, &cov, &hw, &np, 2048).unwrap().value;
            let expect = single_coeff_norm(rect, n1, n2, value, &hw, &np).unwrap();
            closed_worst = closed_worst.max((got - expect).abs() / expect);
        }
    }

    // bit-invariance under sign and quarter-phase flips
    let np = NormParams::new(0.0, 2.0, 2.0).unwrap();
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
    let base = sequence_norm(&coeffs, &cov, &hw, &np, 2048).unwrap().value;
    let flipped = CoeffMap::from_entries(coeffs.iter().map(|(k, v)| {
        let sign = match (k.n1 + 3 * k.n2) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(-1.0, 0.0),
            2 => Complex64::new(0.0, 1.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (*k, v * sign)
    }));
    let flip_value = sequence_norm(&flipped, &cov, &hw, &np, 2048).unwrap().value;
    let bit_ok = flip_value.to_bits() == base.to_bits();

    // equivalence ratios within the band frozen at the first oracle run
    // (measured 1.7596..1.7711 on the default configuration)
    let basis =
        Basis2::new(&cov, &AxisSpec { max_osc_index: 16, ..Default::default() }, rp).unwrap();
    let bapu = Bapu::new(&cov, rp).unwrap();
    let fields: Vec<alphabrush::signals::BellBump2> = (0..50)
        .map(|_| random_bump_in_rect(rects[rng.random_range(0..rects.len())], &mut rng))
        .collect();
    let refs: Vec<&dyn Spectrum> = fields.iter().map(|f| f as &dyn Spectrum).collect();
    let equiv =
        equivalence_experiment(&basis, &bapu, &hw, 0.0, &refs, &AnalyzeOpts::default(), 2048)
            .unwrap();
    let equiv_ok = equiv.min >= 1.5 && equiv.max <= 2.0;

    report(
        "08 norm machinery",
        closed_worst <= 1e-4 && bit_ok && equiv_ok,
        &format!(
            "closed form rel dev {closed_worst:.2e} <= 1e-4, sign flips bit-equal {bit_ok}, equivalence ratios [{:.4}, {:.4}] within frozen [1.5, 2.0]",
            equiv.min, equiv.max
        ),
    );
}

#[test]
fn criterion_09_mterm() {
    let cov = default_covering();
    let rp = ramp();
    let hw = HybridWeight::new(0.5, rp);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let rects: Vec<_> = cov.rects().map(|r| r.id).collect();
    let mut coeffs = CoeffMap::new();
    while coeffs.len() < 24 {
        coeffs.insert(
            BrushletIndex2D {
                rect: rects[rng.random_range(0..rects.len())],
                n1: rng.random_range(0..10),
                n2: rng.random_range(0..10),
            },
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)),
        );
    }
    let k = coeffs.len();

    // the curve matches the tail formula
    let plan = MTermPlan::new((0..=k).collect(), WeightMode::L2).unwrap();
    let curve = error_curve(&coeffs, coeffs.energy(), &plan, &cov, &hw).unwrap();
    let mut formula_worst = 0.0f64;
    for pt in &curve {
        formula_worst = formula_worst.max((pt.rel_error - l2_tail_formula(&coeffs, pt.m)).abs());
    }

    // exact recovery of a k-sparse input at m = k, through the transforms
    let basis =
        Basis2::new(&cov, &AxisSpec { max_osc_index: 16, ..Default::default() }, rp).unwrap();
    let signal = Expansion::new(&cov, &coeffs, rp).unwrap();
    let analyzed = basis.analyze(&signal, &AnalyzeOpts::default()).unwrap();
    let kept = threshold_m(&analyzed.coeffs, k, WeightMode::L2, &cov, &hw).unwrap();
    let recovery = basis.synthesis_error(&kept, &signal).unwrap();

    report(
        "09 m-term approximation",
        formula_worst <= 1e-8 && recovery <= 1e-6,
        &format!(
            "curve vs tail formula dev {formula_worst:.2e} <= 1e-8, k-sparse recovery at m = {k}: rel err {recovery:.2e} <= 1e-6"
        ),
    );
}

#[test]
fn criterion_10_maximal_bound() {
    let cov = default_covering();
    let rp = ramp();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut per_rect = Vec::new();
    for j in [2, 3, 4] {
        let rect = cov.annuli[&j]
            .iter()
            .find(|r| r.id.side == Side::L && r.id.n_along == 0)
            .copied()
            .unwrap();
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
            let rep = check_maxbound(&rect, &coeffs, 0.5, 161, rp).unwrap();
            worst = worst.max(rep.max_ratio);
        }
        per_rect.push(worst);
    }
    let hi = per_rect.iter().cloned().fold(0.0f64, f64::max);
    let lo = per_rect.iter().cloned().fold(f64::INFINITY, f64::min);
    // frozen from the oracle run: measured spread 1.48 across the annuli
    report(
        "10 maximal bound",
        hi.is_finite() && lo > 0.0 && hi / lo <= 10.0,
        &format!("constants [{lo:.1}, {hi:.1}] across 3 rects x 20 sets, spread {:.2} <= 10", hi / lo),
    );
}

#[test]
fn criterion_11_determinism() {
    let mut cfg = RunConfig::default();
    cfg.covering.j_min = -2;
    cfg.covering.j_max = 2;
    cfg.grid.max_osc_index = 16;
    cfg.grid.uniform_m = 128;
    cfg.run.seed = 1234;
    let a = run_verify(&cfg).unwrap().to_json();
    let b = run_verify(&cfg).unwrap().to_json();
    report(
        "11 determinism",
        a == b && !a.is_empty(),
        &format!("two runs, {} bytes each, byte-identical {}", a.len(), a == b),
    );
}
