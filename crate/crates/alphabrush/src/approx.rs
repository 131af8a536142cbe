//! Nonlinear m-term approximation by coefficient thresholding.
//!
//! In an orthonormal basis the best m-term approximation keeps the m largest
//! coefficients, and the squared error is the retained-complement energy.

use num_complex::Complex64;

use crate::brushlet2d::{BrushletIndex2D, CoeffMap};
use crate::covering::Covering;
use crate::error::Result;
use crate::spaces::HybridWeight;

/// How retained terms are ranked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    /// By plain magnitude `|c|`.
    L2,
    /// By the weighted magnitude `h(xi_Q)^s |Q|^{1/2} |c|`.
    FNorm { s: f64 },
}

/// Thresholding plan: strictly increasing term counts and a ranking mode.
#[derive(Debug, Clone)]
pub struct MTermPlan {
    pub m_values: Vec<usize>,
    pub mode: WeightMode,
}

impl MTermPlan {
    pub fn new(m_values: Vec<usize>, mode: WeightMode) -> Result<Self> {
        if !m_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(crate::error::Error::InvalidParams(
                "m values must be strictly increasing".into(),
            ));
        }
        Ok(MTermPlan { m_values, mode })
    }
}

fn ranking_weight(
    key: &BrushletIndex2D,
    c: Complex64,
    mode: WeightMode,
    cov: &Covering,
    hw: &HybridWeight,
) -> Result<f64> {
    Ok(match mode {
        WeightMode::L2 => c.norm(),
        WeightMode::FNorm { s } => {
            let rect = cov.rect(key.rect).ok_or_else(|| {
                crate::error::Error::Format(format!("unknown rect {:?}", key.rect))
            })?;
            hw.at_rect(rect)?.powf(s) * rect.area().sqrt() * c.norm()
        }
    })
}

/// Keys in retention order: by descending ranking weight, ties broken by the
/// lexicographic key order.
pub fn ranked_keys(
    coeffs: &CoeffMap,
    mode: WeightMode,
    cov: &Covering,
    hw: &HybridWeight,
) -> Result<Vec<(BrushletIndex2D, f64)>> {
    let mut ranked: Vec<(BrushletIndex2D, f64)> = coeffs
        .iter()
        .map(|(k, c)| Ok((*k, ranking_weight(k, *c, mode, cov, hw)?)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

/// The m retained terms.
pub fn threshold_m(
    coeffs: &CoeffMap,
    m: usize,
    mode: WeightMode,
    cov: &Covering,
    hw: &HybridWeight,
) -> Result<CoeffMap> {
    let ranked = ranked_keys(coeffs, mode, cov, hw)?;
    Ok(CoeffMap::from_entries(
        ranked.into_iter().take(m).map(|(k, _)| (k, coeffs.get(&k))),
    ))
}

/// One point of the error curve.
#[derive(Debug, Clone, Copy)]
pub struct ErrorPoint {
    pub m: usize,
    /// Relative L2 error of the m-term synthesis against the analyzed field.
    pub rel_error: f64,
}

/// Error curve of m-term approximation against a field of known grid energy.
///
/// By orthonormality `|f - sum_retained c w|^2 = |f|^2 - sum_retained |c|^2`,
/// which covers both the dropped terms and any analysis tail.
pub fn error_curve(
    coeffs: &CoeffMap,
    field_energy: f64,
    plan: &MTermPlan,
    cov: &Covering,
    hw: &HybridWeight,
) -> Result<Vec<ErrorPoint>> {
    let ranked = ranked_keys(coeffs, plan.mode, cov, hw)?;
    let energies: Vec<f64> = ranked.iter().map(|(k, _)| coeffs.get(k).norm_sqr()).collect();
    // suffix sums from the small end keep the dropped mass exact near full
    // retention
    let mut suffix = vec![0.0; energies.len() + 1];
    for (i, e) in energies.iter().enumerate().rev() {
        suffix[i] = suffix[i + 1] + e;
    }
    let captured = suffix[0];
    let total = field_energy.max(f64::MIN_POSITIVE);
    // summation-order noise between the two totals is not analysis tail
    let analysis_tail = {
        let d = field_energy - captured;
        if d.abs() <= 32.0 * f64::EPSILON * field_energy {
            0.0
        } else {
            d.max(0.0)
        }
    };
    Ok(plan
        .m_values
        .iter()
        .map(|&m| {
            let dropped = suffix[m.min(energies.len())];
            ErrorPoint { m, rel_error: ((analysis_tail + dropped) / total).sqrt() }
        })
        .collect())
}

/// Parseval tail formula for the
/// L2 ranking: `error(m) = (sum_{rank > m} |c|^2)^{1/2} / |f|`, ignoring any
/// analysis tail. Used as the independent check of the curve.
pub fn l2_tail_formula(coeffs: &CoeffMap, m: usize) -> f64 {
    let mut mags: Vec<f64> = coeffs.iter().map(|(_, c)| c.norm_sqr()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let dropped: f64 = mags.iter().skip(m).rev().sum();
    let total: f64 = mags.iter().sum();
    (dropped / total.max(f64::MIN_POSITIVE)).sqrt()
}

/// Brute-force best m-subset error for small maps (the metric projection
/// onto m-sparse expansions), for validating the thresholding rule.
pub fn best_subset_error(coeffs: &CoeffMap, m: usize) -> f64 {
    let mags: Vec<f64> = coeffs.iter().map(|(_, c)| c.norm_sqr()).collect();
    let total: f64 = mags.iter().sum();
    assert!(mags.len() <= 20, "brute force is exponential");
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << mags.len()) {
        if mask.count_ones() as usize != m.min(mags.len()) {
            continue;
        }
        let kept: f64 = mags
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| e)
            .sum();
        best = best.min(total - kept);
    }
    (best.max(0.0) / total.max(f64::MIN_POSITIVE)).sqrt()
}
