//! Subcommand implementations. Each returns an exit code: 0 on success,
//! 1 when a verification fails, 2 on usage or input errors (mapped by the
//! caller).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use alphabrush::approx::{error_curve, threshold_m, MTermPlan, WeightMode};
use alphabrush::bells::{central_bell_time, Bell, TimeGridOpts};
use alphabrush::brushlet2d::{
    synthesize_uniform, AnalyzeOpts, Basis2, CoeffMap, SpectrumGrid,
};
use alphabrush::covering::Interval;
use alphabrush::error::{Error, Result};
use alphabrush::formats;
use alphabrush::maximal::{check_maxbound, hl_maximal, peetre_maximal, RadiusLadder, SampledField};
use alphabrush::signals::BellBump2;
use alphabrush::spaces::{
    mod_norm_p2, mod_norm_spatial, sequence_norm, tl_norm_p2q2, tl_norm_spatial, Bapu,
    HybridWeight, NormParams,
};
use alphabrush::validate::validate_covering;

use crate::config::RunConfig;
use crate::spectrum::{bandlimit_to_covering, image_spectrum, read_pgm, GridSpectrum};
use crate::verify::{gram_subset, run_verify};

pub fn covering_build(cfg: &RunConfig, out: &Path) -> Result<()> {
    let cov = cfg.build_covering()?;
    formats::write_covering(out, &cov)
}

pub fn covering_validate(cfg: &RunConfig, path: &Path) -> Result<bool> {
    let cov = formats::read_covering(path)?;
    let hw = HybridWeight::new(cov.params.alpha, cfg.ramp());
    let report = validate_covering(&cov, &hw, &cfg.validation_thresholds())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(report.all_pass())
}

/// `--interval lo,hi,eps_lo,eps_hi`.
pub fn parse_interval(spec: &str) -> Result<Interval> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Format(format!("expected lo,hi,eps_lo,eps_hi, got {spec}")));
    }
    let vals: Vec<f64> = parts
        .iter()
        .map(|s| s.trim().parse().map_err(|_| Error::Format(format!("bad number {s}"))))
        .collect::<Result<_>>()?;
    Ok(Interval::free(vals[0], vals[1], vals[2], vals[3]))
}

pub fn bells_render(
    cfg: &RunConfig,
    interval: &Interval,
    samples: usize,
    with_time: bool,
    out: &Path,
) -> Result<()> {
    let bell = Bell::new(interval, cfg.ramp());
    let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
    writeln!(file, "xi,b")?;
    let (lo, hi) = bell.support();
    let pad = 0.05 * (hi - lo);
    for k in 0..=samples {
        let xi = lo - pad + (hi - lo + 2.0 * pad) * k as f64 / samples as f64;
        writeln!(file, "{xi:.12e},{:.12e}", bell.eval(xi))?;
    }
    if with_time {
        let g = central_bell_time(&bell, &TimeGridOpts::default())?;
        let time_path = out.with_extension("time.csv");
        let mut tf = std::io::BufWriter::new(std::fs::File::create(&time_path)?);
        writeln!(tf, "x,abs_g")?;
        let kmax = g.max_index().min(4000);
        for k in -kmax..=kmax {
            writeln!(tf, "{:.12e},{:.12e}", k as f64 * g.step, g.at(k).norm())?;
        }
    }
    Ok(())
}

fn basis_for<'c>(cfg: &RunConfig, cov: &'c alphabrush::covering::Covering) -> Result<Basis2<'c>> {
    Basis2::new(cov, &cfg.axis_spec(), cfg.ramp())
}

#[derive(Debug, Serialize)]
pub struct AnalyzeSummary {
    pub coefficients: usize,
    pub field_energy: f64,
    pub captured_energy: f64,
    pub uncovered_energy: f64,
    pub tail_energy: f64,
    pub warnings: Vec<String>,
}

pub fn analyze(
    cfg: &RunConfig,
    covering_path: &Path,
    input: &Path,
    tail_tol: f64,
    out: &Path,
) -> Result<AnalyzeSummary> {
    let cov = formats::read_covering(covering_path)?;
    let basis = basis_for(cfg, &cov)?;
    let grid = formats::read_grid(input)?;
    let mut warnings = Vec::new();
    if !grid.covers(&cov) {
        warnings.push(format!(
            "input extent {} does not cover the covering (need > {})",
            grid.extent,
            cov.covered_range().1
        ));
    }
    let f = GridSpectrum::new(grid);
    let outcome = basis.analyze(&f, &AnalyzeOpts { tail_tol, ..Default::default() })?;
    if outcome.coverage_warning(1e-6) {
        warnings.push(format!(
            "{:.3e} of the input energy lies outside the covered annulus",
            outcome.uncovered_energy / outcome.field_energy.max(f64::MIN_POSITIVE)
        ));
    }
    if outcome.tail_warning(1e-6) {
        warnings.push(format!(
            "{:.3e} of the input energy sits beyond the cosine caps",
            outcome.tail_energy / outcome.field_energy.max(f64::MIN_POSITIVE)
        ));
    }
    formats::write_coeffs(out, &outcome.coeffs)?;
    Ok(AnalyzeSummary {
        coefficients: outcome.coeffs.len(),
        field_energy: outcome.field_energy,
        captured_energy: outcome.coeffs.energy(),
        uncovered_energy: outcome.uncovered_energy,
        tail_energy: outcome.tail_energy,
        warnings,
    })
}

pub fn synthesize(
    cfg: &RunConfig,
    covering_path: &Path,
    coeffs_path: &Path,
    m: usize,
    extent: f64,
    out: &Path,
) -> Result<()> {
    let cov = formats::read_covering(covering_path)?;
    let coeffs = formats::read_coeffs(coeffs_path)?;
    let extent = if extent > 0.0 { extent } else { cfg.uniform_extent(&cov) };
    let grid = synthesize_uniform(&cov, cfg.ramp(), &coeffs, extent, m)?;
    formats::write_grid(out, &grid)
}

#[derive(Debug, Serialize)]
pub struct GramSummary {
    pub size: usize,
    pub max_offdiag: f64,
    pub max_diag_dev: f64,
}

pub fn gram(
    cfg: &RunConfig,
    covering_path: &Path,
    count: usize,
    matrix_out: Option<&Path>,
) -> Result<GramSummary> {
    let cov = formats::read_covering(covering_path)?;
    let basis = basis_for(cfg, &cov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let subset = gram_subset(&cov, count, &mut rng);
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
    if let Some(path) = matrix_out {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "a,b,value")?;
        for i in 0..subset.len() {
            for j in 0..subset.len() {
                writeln!(file, "{i},{j},{:.17e}", g[[i, j]])?;
            }
        }
    }
    Ok(GramSummary { size: subset.len(), max_offdiag: off, max_diag_dev: diag })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    TriebelLizorkin,
    Decomposition,
    Sequence,
    SequenceOfSpectrum,
}

impl NormKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "f" => NormKind::TriebelLizorkin,
            "m" => NormKind::Decomposition,
            "seq" => NormKind::Sequence,
            "sfunc" => NormKind::SequenceOfSpectrum,
            _ => return Err(Error::Format(format!("unknown norm kind {s}"))),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct NormOutput {
    pub value: f64,
    pub truncation_mass: f64,
    pub warnings: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
pub fn norm(
    cfg: &RunConfig,
    kind: NormKind,
    s: f64,
    p: f64,
    q: f64,
    covering_path: &Path,
    coeffs_path: Option<&Path>,
    input_path: Option<&Path>,
) -> Result<NormOutput> {
    let cov = formats::read_covering(covering_path)?;
    let hw = HybridWeight::new(cov.params.alpha, cfg.ramp());
    let np = NormParams::new(s, p, q)?;
    let mut warnings = Vec::new();
    let need_coeffs = || -> Result<CoeffMap> {
        formats::read_coeffs(
            coeffs_path.ok_or_else(|| Error::Format("norm kind needs --coeffs".into()))?,
        )
    };
    let need_grid = || -> Result<SpectrumGrid> {
        formats::read_grid(
            input_path.ok_or_else(|| Error::Format("norm kind needs --input".into()))?,
        )
    };
    let out = match kind {
        NormKind::Sequence => {
            let coeffs = need_coeffs()?;
            let rep = sequence_norm(&coeffs, &cov, &hw, &np, cfg.norms.rows)?;
            NormOutput { value: rep.value, truncation_mass: rep.truncated_mass, warnings }
        }
        NormKind::SequenceOfSpectrum => {
            let grid = need_grid()?;
            let basis = basis_for(cfg, &cov)?;
            let f = GridSpectrum::new(grid);
            let outcome =
                basis.analyze(&f, &AnalyzeOpts { tail_tol: cfg.norms.tail_tol, ..Default::default() })?;
            if outcome.tail_warning(1e-6) {
                warnings.push("analysis tail above 1e-6 of the field energy".into());
            }
            let rep = sequence_norm(&outcome.coeffs, &cov, &hw, &np, cfg.norms.rows)?;
            NormOutput { value: rep.value, truncation_mass: rep.truncated_mass, warnings }
        }
        NormKind::TriebelLizorkin => {
            let grid = need_grid()?;
            let bapu = Bapu::new(&cov, cfg.ramp())?;
            if p == 2.0 && q == 2.0 {
                let basis = basis_for(cfg, &cov)?;
                let f = GridSpectrum::new(grid);
                let value = tl_norm_p2q2(&basis, &bapu, &hw, &f, s)?;
                NormOutput { value, truncation_mass: 0.0, warnings }
            } else {
                let value = tl_norm_spatial(&grid, &bapu, &hw, &np)?;
                warnings.push(
                    "spatial route: accuracy limited by the uniform grid window".into(),
                );
                NormOutput { value, truncation_mass: f64::NAN, warnings }
            }
        }
        NormKind::Decomposition => {
            let grid = need_grid()?;
            let bapu = Bapu::new(&cov, cfg.ramp())?;
            if p == 2.0 {
                let basis = basis_for(cfg, &cov)?;
                let f = GridSpectrum::new(grid);
                let value = mod_norm_p2(&basis, &bapu, &hw, &f, s, q)?;
                NormOutput { value, truncation_mass: 0.0, warnings }
            } else {
                let value = mod_norm_spatial(&grid, &bapu, &hw, &np)?;
                warnings.push(
                    "spatial route: accuracy limited by the uniform grid window".into(),
                );
                NormOutput { value, truncation_mass: f64::NAN, warnings }
            }
        }
    };
    Ok(out)
}

pub fn compress(
    cfg: &RunConfig,
    covering_path: &Path,
    input: &Path,
    m_values: &[usize],
    mode: WeightMode,
    report: &Path,
) -> Result<()> {
    let cov = formats::read_covering(covering_path)?;
    let basis = basis_for(cfg, &cov)?;
    let grid = formats::read_grid(input)?;
    let f = GridSpectrum::new(grid);
    let outcome =
        basis.analyze(&f, &AnalyzeOpts { tail_tol: cfg.norms.tail_tol, ..Default::default() })?;
    let hw = HybridWeight::new(cov.params.alpha, cfg.ramp());
    let plan = MTermPlan::new(m_values.to_vec(), mode)?;
    let curve = error_curve(&outcome.coeffs, outcome.field_energy, &plan, &cov, &hw)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(report)?);
    writeln!(file, "m,rel_error")?;
    for pt in curve {
        writeln!(file, "{},{:.12e}", pt.m, pt.rel_error)?;
    }
    Ok(())
}

pub enum MaximalKind {
    HardyLittlewood { r: f64 },
    Peetre { a: f64, big_r: f64 },
    Maxbound { r: f64, sets: usize },
}

pub fn maximal(
    cfg: &RunConfig,
    kind: MaximalKind,
    grid_m: usize,
    step: f64,
    out: &Path,
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
    match kind {
        MaximalKind::HardyLittlewood { r } => {
            let u = SampledField::from_fn([step, step], grid_m, |x, y| {
                ((-x * x - y * y) * 0.5).exp() * (2.0 * x).cos()
            });
            let ladder = RadiusLadder::for_field(&u);
            let m = hl_maximal(&u, r, &ladder);
            writeln!(file, "x,y,u,maximal")?;
            for i in 0..u.m() {
                for j in 0..u.m() {
                    let [x, y] = u.coord(i, j);
                    writeln!(file, "{x:.8e},{y:.8e},{:.8e},{:.8e}", u.values[[i, j]], m.values[[i, j]])?;
                }
            }
        }
        MaximalKind::Peetre { a, big_r } => {
            let u = SampledField::from_fn([step, step], grid_m, |x, y| {
                ((-x * x - y * y) * 0.5).exp() * (x + y).sin()
            });
            let m = peetre_maximal(&u, a, big_r);
            writeln!(file, "x,y,u,maximal")?;
            for i in 0..u.m() {
                for j in 0..u.m() {
                    let [x, y] = u.coord(i, j);
                    writeln!(file, "{x:.8e},{y:.8e},{:.8e},{:.8e}", u.values[[i, j]], m.values[[i, j]])?;
                }
            }
        }
        MaximalKind::Maxbound { r, sets } => {
            let cov = cfg.build_covering()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
            writeln!(file, "j,side,n_along,set,max_ratio")?;
            let rects: Vec<_> = cov.rects().copied().collect();
            for rect in rects.iter().take(3) {
                for set in 0..sets {
                    let mut coeffs = CoeffMap::new();
                    for _ in 0..10 {
                        coeffs.insert(
                            alphabrush::brushlet2d::BrushletIndex2D {
                                rect: rect.id,
                                n1: rng.random_range(0..6),
                                n2: rng.random_range(0..6),
                            },
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                        );
                    }
                    let rep = check_maxbound(rect, &coeffs, r, grid_m, cfg.ramp())?;
                    writeln!(
                        file,
                        "{},{},{},{set},{:.8e}",
                        rect.id.j,
                        rect.id.side.letter(),
                        rect.id.n_along,
                        rep.max_ratio
                    )?;
                }
            }
        }
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, out: Option<&Path>) -> Result<bool> {
    let report = run_verify(cfg)?;
    let json = report.to_json();
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, &json)?;
        }
        None => println!("{json}"),
    }
    for check in &report.checks {
        eprintln!("{} {}", if check.pass { "pass" } else { "FAIL" }, check.name);
    }
    Ok(report.all_pass)
}

#[derive(Debug, Serialize)]
pub struct DemoMetrics {
    pub out_of_band_energy_fraction: f64,
    pub coefficients: usize,
    pub roundtrip_rel_error: f64,
    pub curve: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

/// End-to-end: load or synthesize a spectrum, band-limit it to the covered
/// annulus, analyze, threshold, reconstruct, and emit plot data.
pub fn demo(
    cfg: &RunConfig,
    input: Option<&Path>,
    m_values: &[usize],
    mode: WeightMode,
    out_dir: &Path,
) -> Result<DemoMetrics> {
    std::fs::create_dir_all(out_dir)?;
    let cov = cfg.build_covering()?;
    let extent = cfg.uniform_extent(&cov);
    let m = cfg.grid.uniform_m;
    let mut warnings = Vec::new();

    let mut grid = match input {
        Some(path) if path.extension().is_some_and(|e| e == "pgm") => {
            let img = read_pgm(path)?;
            image_spectrum(&img, extent, m)
        }
        Some(path) => formats::read_grid(path)?,
        None => {
            // synthetic default: a handful of bumps at different scales
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
            let rects: Vec<_> = cov.rects().collect();
            let bumps: Vec<BellBump2> = (0..4)
                .map(|_| {
                    let rect = rects[rng.random_range(0..rects.len())];
                    alphabrush::signals::random_bump_in_rect(rect, &mut rng)
                })
                .collect();
            let sum = alphabrush::signals::SumSpectrum { bumps };
            SpectrumGrid::sample(extent, m, &sum)
        }
    };
    let removed = bandlimit_to_covering(&mut grid, &cov);
    if removed > 1e-9 {
        warnings.push(format!("removed {removed:.3e} of the input energy outside the covered annulus"));
    }

    let basis = basis_for(cfg, &cov)?;
    let f = GridSpectrum::new(grid);
    let outcome =
        basis.analyze(&f, &AnalyzeOpts { tail_tol: cfg.norms.tail_tol, ..Default::default() })?;
    formats::write_coeffs(&out_dir.join("coeffs.bin"), &outcome.coeffs)?;

    let hw = HybridWeight::new(cov.params.alpha, cfg.ramp());
    let mut ms: Vec<usize> = m_values.to_vec();
    if ms.is_empty() {
        ms = vec![10, 100, 1000];
    }
    ms.retain(|&v| v > 0);
    ms.sort();
    ms.dedup();
    let plan = MTermPlan::new(ms.clone(), mode)?;
    let curve = error_curve(&outcome.coeffs, outcome.field_energy, &plan, &cov, &hw)?;
    {
        let mut file = std::io::BufWriter::new(std::fs::File::create(out_dir.join("error_curve.csv"))?);
        writeln!(file, "m,rel_error")?;
        for pt in &curve {
            writeln!(file, "{},{:.12e}", pt.m, pt.rel_error)?;
        }
    }

    // reconstruction at the largest m
    let best_m = *ms.last().unwrap();
    let kept = threshold_m(&outcome.coeffs, best_m, mode, &cov, &hw)?;
    let recon = synthesize_uniform(&cov, cfg.ramp(), &kept, extent, m)?;
    formats::write_grid(&out_dir.join("reconstruction.spg"), &recon)?;
    let roundtrip = {
        // relative L2 error of the full coefficient set against the input
        basis.synthesis_error(&outcome.coeffs, &f)?
    };

    // tiling plot data: one row per rectangle
    {
        let mut file = std::io::BufWriter::new(std::fs::File::create(out_dir.join("tiling.csv"))?);
        writeln!(file, "j,side,n_along,x_lo,x_hi,y_lo,y_hi")?;
        for rect in cov.rects() {
            writeln!(
                file,
                "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                rect.id.j,
                rect.id.side.letter(),
                rect.id.n_along,
                rect.ix.lo,
                rect.ix.hi,
                rect.iy.lo,
                rect.iy.hi
            )?;
        }
    }

    // the resolved configuration travels with the outputs
    std::fs::write(out_dir.join("config.toml"), cfg.to_toml())?;

    let metrics = DemoMetrics {
        out_of_band_energy_fraction: removed,
        coefficients: outcome.coeffs.len(),
        roundtrip_rel_error: roundtrip,
        curve: curve.iter().map(|p| (p.m, p.rel_error)).collect(),
        warnings,
    };
    std::fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics).expect("metrics serialize"),
    )?;
    Ok(metrics)
}

/// Parses `10,100,1000`.
pub fn parse_m_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Format(format!("bad m value {t}"))))
        .collect()
}

/// Writes a JSON value to stdout.
pub fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializes"));
}

/// Resolved-config sidecar next to an output file.
pub fn write_config_sidecar(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut side = out.as_os_str().to_owned();
    side.push(".config.toml");
    std::fs::write(PathBuf::from(side), cfg.to_toml())?;
    Ok(())
}

/// Map measured values for the summary line of `covering validate`.
pub fn measured_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
