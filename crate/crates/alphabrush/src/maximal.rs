//! Discrete maximal operators and the pointwise bound that controls
//! brushlet sums by averages over the lattice boxes.
//!
//! The suprema are taken over discrete families (a dyadic radius ladder for
//! the averaging operator, the grid itself for the weighted supremum), so
//! every assertion is an exact statement about the implemented objects.

use ndarray::Array2;
use rayon::prelude::*;

use crate::bells::{Bell, Ramp};
use crate::brushlet1d::time_quadrature;
use crate::brushlet2d::CoeffMap;
use crate::covering::Rect;
use crate::error::Result;
use crate::spaces::UBox;

/// Real field on a centered grid with per-axis steps,
/// `x_i = (i - (m - 1)/2) steps[0]`, `y_j = (j - (m - 1)/2) steps[1]`
/// (odd `m` keeps the grid symmetric under the reflection maps). Anisotropic
/// steps let thin lattice boxes be resolved at the same relative accuracy
/// for every rectangle.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub steps: [f64; 2],
    pub values: Array2<f64>,
}

impl SampledField {
    pub fn new(steps: [f64; 2], values: Array2<f64>) -> Self {
        assert_eq!(values.nrows(), values.ncols());
        SampledField { steps, values }
    }

    pub fn from_fn(steps: [f64; 2], m: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let [x, y] = Self::coord_of(steps, m, i, j);
                values[[i, j]] = f(x, y);
            }
        }
        SampledField { steps, values }
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    fn coord_of(steps: [f64; 2], m: usize, i: usize, j: usize) -> [f64; 2] {
        let c = (m - 1) as f64 / 2.0;
        [(i as f64 - c) * steps[0], (j as f64 - c) * steps[1]]
    }

    pub fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        Self::coord_of(self.steps, self.m(), i, j)
    }

    /// Grid index of the reflected point `R x` for the four reflection maps
    /// `id, -id, (x1, -x2), (-x1, x2)`; exact on the symmetric grid.
    pub fn reflect_index(&self, i: usize, j: usize, map: u8) -> (usize, usize) {
        let last = self.m() - 1;
        match map {
            0 => (i, j),
            1 => (last - i, last - j),
            2 => (i, last - j),
            _ => (last - i, j),
        }
    }
}

/// Dyadic radius ladder from the grid step up to the domain diameter; the
/// zero entry is the degenerate one-sample ball.
#[derive(Debug, Clone)]
pub struct RadiusLadder {
    pub radii: Vec<f64>,
}

impl RadiusLadder {
    pub fn for_field(field: &SampledField) -> Self {
        let mut radii = vec![0.0];
        let mut r = field.steps[0].min(field.steps[1]);
        let diam = field.steps[0].max(field.steps[1])
            * (field.m() as f64)
            * std::f64::consts::SQRT_2;
        while r <= diam {
            radii.push(r);
            r *= 2.0;
        }
        RadiusLadder { radii }
    }
}

/// Discrete averaging maximal operator: over each ladder radius, the mean of
/// `|u|^r` on the grid ball, then the `1/r` root; a lower bound of the
/// continuum operator that includes the point evaluation (zero radius), so
/// `M_r u >= |u|` exactly.
pub fn hl_maximal(u: &SampledField, r: f64, ladder: &RadiusLadder) -> SampledField {
    let m = u.m();
    let pow: Array2<f64> = u.values.map(|v| v.abs().powf(r));
    // prefix sums per row for O(1) interval sums
    let mut prefix = Array2::<f64>::zeros((m, m + 1));
    for i in 0..m {
        for j in 0..m {
            prefix[[i, j + 1]] = prefix[[i, j]] + pow[[i, j]];
        }
    }
    // per radius, the half-widths of the disc rows; the balls are Euclidean
    // in physical coordinates whatever the per-axis steps are
    let [sx, sy] = u.steps;
    let discs: Vec<(i64, Vec<i64>)> = ladder
        .radii
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| {
            let k = (t / sx).floor() as i64;
            let rows: Vec<i64> = (-k..=k)
                .map(|di| {
                    let rem = t * t - (di as f64 * sx).powi(2);
                    (rem.max(0.0).sqrt() / sy).floor() as i64
                })
                .collect();
            (k, rows)
        })
        .collect();

    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; m];
            for j in 0..m {
                let mut best = pow[[i, j]]; // the degenerate ball
                for (k, halves) in &discs {
                    let mut sum = 0.0;
                    let mut count = 0usize;
                    for (row, half) in (-k..=*k).zip(halves) {
                        let ii = i as i64 + row;
                        if ii < 0 || ii >= m as i64 {
                            continue;
                        }
                        let jlo = (j as i64 - half).max(0) as usize;
                        let jhi = ((j as i64 + half).min(m as i64 - 1)) as usize;
                        sum += prefix[[ii as usize, jhi + 1]] - prefix[[ii as usize, jlo]];
                        count += jhi - jlo + 1;
                    }
                    if count > 0 {
                        best = best.max(sum / count as f64);
                    }
                }
                out[j] = best.powf(1.0 / r);
            }
            out
        })
        .collect();
    let mut values = Array2::zeros((m, m));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    SampledField { steps: u.steps, values }
}

/// Discrete weighted supremum `sup_z <R (x - z)>^{-a} |u(z)|` over the grid.
#[allow(clippy::needless_range_loop)]
pub fn peetre_maximal(u: &SampledField, a: f64, big_r: f64) -> SampledField {
    let m = u.m();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; m];
            for j in 0..m {
                let x = u.coord(i, j);
                let mut best = 0.0f64;
                for zi in 0..m {
                    for zj in 0..m {
                        let v = u.values[[zi, zj]].abs();
                        if v <= best {
                            continue; // weight never exceeds one
                        }
                        let z = u.coord(zi, zj);
                        let y = [big_r * (x[0] - z[0]), big_r * (x[1] - z[1])];
                        let w = (1.0 + y[0] * y[0] + y[1] * y[1]).powf(-a / 2.0);
                        best = best.max(w * v);
                    }
                }
                out[j] = best;
            }
            out
        })
        .collect();
    let mut values = Array2::zeros((m, m));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    SampledField { steps: u.steps, values }
}

/// Report of the pointwise bound sweep on one rectangle.
#[derive(Debug, Clone)]
pub struct MaxboundReport {
    pub rect: crate::covering::RectId,
    /// Largest observed LHS/RHS ratio (the empirical constant).
    pub max_ratio: f64,
    /// Points where the bound was evaluated.
    pub samples: usize,
}

/// Evaluates `sum_n |c_n| |w_{n,Q}(x)|` against
/// `|Q|^{1/2} sum_l M_r(sum_n |c_n| chi_{U(Q,n)})(R_l x)` on a symmetric
/// grid sized to the coefficient boxes, and reports the worst ratio.
#[allow(clippy::needless_range_loop)]
pub fn check_maxbound(
    rect: &Rect,
    coeffs: &CoeffMap,
    r: f64,
    grid_m: usize,
    ramp: Ramp,
) -> Result<MaxboundReport> {
    assert!(r > 0.0 && r <= 1.0);
    let entries: Vec<(u32, u32, f64)> = coeffs
        .iter()
        .filter(|(k, _)| k.rect == rect.id)
        .map(|(k, c)| (k.n1, k.n2, c.norm()))
        .collect();
    if entries.is_empty() {
        return Ok(MaxboundReport { rect: rect.id, max_ratio: 0.0, samples: 0 });
    }
    let grid_m = if grid_m.is_multiple_of(2) { grid_m + 1 } else { grid_m };

    // box-mass field on an anisotropic grid wide enough for every box and
    // its mirrors, with per-axis steps resolving the box semi-axes equally
    let mut reach = [0.0f64; 2];
    for (n1, n2, _) in &entries {
        let b = UBox::new(rect, *n1, *n2);
        reach[0] = reach[0].max(b.center[0].abs() + b.semi[0]);
        reach[1] = reach[1].max(b.center[1].abs() + b.semi[1]);
    }
    let steps = [2.2 * reach[0] / grid_m as f64, 2.2 * reach[1] / grid_m as f64];
    let mass = SampledField::from_fn(steps, grid_m, |x, y| {
        let mut acc = 0.0;
        for (n1, n2, c) in &entries {
            if UBox::new(rect, *n1, *n2).contains([x, y]) {
                acc += c;
            }
        }
        acc
    });
    let ladder = RadiusLadder::for_field(&mass);
    let maximal = hl_maximal(&mass, r, &ladder);

    // left side: brushlet magnitudes factorize along the axes
    let bx = Bell::new(&rect.ix, ramp);
    let by = Bell::new(&rect.iy, ramp);
    let xs: Vec<f64> = (0..grid_m).map(|i| mass.coord(i, 0)[0]).collect();
    let ys: Vec<f64> = (0..grid_m).map(|j| mass.coord(0, j)[1]).collect();
    let mut col_cache: std::collections::HashMap<u32, Vec<f64>> = Default::default();
    let mut row_cache: std::collections::HashMap<u32, Vec<f64>> = Default::default();
    for (n1, n2, _) in &entries {
        col_cache.entry(*n1).or_insert_with(|| {
            let q = time_quadrature(&bx, *n1, &xs);
            xs.iter().map(|&x| q.eval(x).norm()).collect()
        });
        row_cache.entry(*n2).or_insert_with(|| {
            let q = time_quadrature(&by, *n2, &ys);
            ys.iter().map(|&y| q.eval(y).norm()).collect()
        });
    }

    let area_sqrt = rect.area().sqrt();
    let mut max_ratio = 0.0f64;
    let mut samples = 0usize;
    for i in 0..grid_m {
        for j in 0..grid_m {
            let mut lhs = 0.0;
            for (n1, n2, c) in &entries {
                lhs += c * col_cache[n1][i] * row_cache[n2][j];
            }
            let mut rhs = 0.0;
            for map in 0..4u8 {
                let (ri, rj) = mass.reflect_index(i, j, map);
                rhs += maximal.values[[ri, rj]];
            }
            rhs *= area_sqrt;
            if rhs > 0.0 {
                max_ratio = max_ratio.max(lhs / rhs);
                samples += 1;
            }
        }
    }
    Ok(MaxboundReport { rect: rect.id, max_ratio, samples })
}

/// Empirical constant of the brushlet envelope
/// `|w_{n,Q}(x)| <= C |Q|^{1/2} sum_l (1 + |R_l delta_Q x - pi (n + a)|)^{-N}`
/// over a grid of sample points.
pub fn envelope_constant(rect: &Rect, n1: u32, n2: u32, big_n: f64, grid_m: usize, ramp: Ramp) -> f64 {
    let bx = Bell::new(&rect.ix, ramp);
    let by = Bell::new(&rect.iy, ramp);
    let ubox = UBox::new(rect, n1, n2);
    let grid_m = if grid_m.is_multiple_of(2) { grid_m + 1 } else { grid_m };
    let center = (grid_m - 1) as f64 / 2.0;
    let sx = 3.0 * 2.0 * (ubox.center[0].abs() + ubox.semi[0]) / grid_m as f64;
    let sy = 3.0 * 2.0 * (ubox.center[1].abs() + ubox.semi[1]) / grid_m as f64;
    let xs: Vec<f64> = (0..grid_m).map(|i| (i as f64 - center) * sx).collect();
    let ys: Vec<f64> = (0..grid_m).map(|j| (j as f64 - center) * sy).collect();
    let qx = time_quadrature(&bx, n1, &xs);
    let qy = time_quadrature(&by, n2, &ys);
    let wx: Vec<f64> = xs.iter().map(|&x| qx.eval(x).norm()).collect();
    let wy: Vec<f64> = ys.iter().map(|&y| qy.eval(y).norm()).collect();
    let [dx, dy] = rect.delta();
    let t1 = std::f64::consts::PI * (n1 as f64 + 0.5);
    let t2 = std::f64::consts::PI * (n2 as f64 + 0.5);
    let area_sqrt = rect.area().sqrt();
    let mut worst = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let lhs = wx[i] * wy[j];
            let sx = dx * x;
            let sy = dy * y;
            let mut envelope = 0.0;
            for (ex, ey) in [(sx, sy), (-sx, -sy), (sx, -sy), (-sx, sy)] {
                let d = ((ex - t1).powi(2) + (ey - t2).powi(2)).sqrt();
                envelope += (1.0 + d).powf(-big_n);
            }
            worst = worst.max(lhs / (area_sqrt * envelope));
        }
    }
    worst
}
