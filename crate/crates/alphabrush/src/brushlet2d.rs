//! Tensor brushlets over the covering rectangles.
//!
//! A basis element is `w_{n,Q} = w_{n1,I} (x) w_{n2,J}` for `Q = I x J`, and
//! the rectangle projection `P_Q = P_I (x) P_J` acts separably along the two
//! axes of a sampled spectrum. Analysis integrates the spectrum against the
//! tensor windows with a per-rectangle adaptive cosine cap; synthesis is the
//! plain linear combination. The Gram matrix factorizes into cached 1-D
//! inner products, and the telescoping check verifies that each annulus
//! fills the gap between consecutive squares as an operator identity on the
//! grid.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bells::{Bell, Ramp};
use crate::brushlet1d::{brushlet_hat, project_range};
use crate::covering::{Covering, Interval, Rect, RectId};
use crate::error::Result;
use crate::grid::{Axis, AxisSpec, IntervalOps};

/// Index of one tensor brushlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BrushletIndex2D {
    pub rect: RectId,
    pub n1: u32,
    pub n2: u32,
}

/// Sparse coefficient container keyed by (rectangle, cosine pair), ordered
/// for reproducible output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoeffMap {
    entries: BTreeMap<BrushletIndex2D, Complex64>,
}

impl CoeffMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: BrushletIndex2D, value: Complex64) {
        if value != Complex64::default() {
            self.entries.insert(key, value);
        }
    }

    pub fn get(&self, key: &BrushletIndex2D) -> Complex64 {
        self.entries.get(key).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BrushletIndex2D, &Complex64)> {
        self.entries.iter()
    }

    pub fn energy(&self) -> f64 {
        self.entries.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> CoeffMap {
        CoeffMap {
            entries: self.entries.iter().map(|(k, v)| (*k, v * factor)).collect(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (BrushletIndex2D, Complex64)>) -> Self {
        CoeffMap { entries: entries.into_iter().filter(|(_, v)| *v != Complex64::default()).collect() }
    }
}

/// Spectrum given as a pointwise function of frequency.
pub trait Spectrum: Sync {
    fn eval(&self, x: f64, y: f64) -> Complex64;
}

impl<F: Fn(f64, f64) -> Complex64 + Sync> Spectrum for F {
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        self(x, y)
    }
}

/// Spectrum given by a finite brushlet expansion, with support rejection so
/// wide grid scans stay cheap.
pub struct Expansion {
    entries: Vec<ExpansionEntry>,
}

struct ExpansionEntry {
    sx: (f64, f64),
    sy: (f64, f64),
    bx: Bell,
    by: Bell,
    n1: u32,
    n2: u32,
    c: Complex64,
}

impl Expansion {
    pub fn new(cov: &Covering, coeffs: &CoeffMap, ramp: Ramp) -> Result<Self> {
        let entries = coeffs
            .iter()
            .map(|(k, c)| {
                let rect = cov
                    .rect(k.rect)
                    .ok_or_else(|| crate::error::Error::Format(format!("unknown rect {:?}", k.rect)))?;
                let bx = Bell::new(&rect.ix, ramp);
                let by = Bell::new(&rect.iy, ramp);
                Ok(ExpansionEntry {
                    sx: bx.support(),
                    sy: by.support(),
                    bx,
                    by,
                    n1: k.n1,
                    n2: k.n2,
                    c: *c,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Expansion { entries })
    }
}

impl Spectrum for Expansion {
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let mut acc = Complex64::default();
        for e in &self.entries {
            if x < e.sx.0 || x > e.sx.1 || y < e.sy.0 || y > e.sy.1 {
                continue;
            }
            acc += e.c * (brushlet_hat(&e.bx, e.n1, x) * brushlet_hat(&e.by, e.n2, y));
        }
        acc
    }
}

/// Uniform square sampling of a spectrum, `xi_k = -extent + k h` with
/// `h = 2 extent / m`; the layout FFT-based multiplier norms work on.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub extent: f64,
    /// `values[[ix, iy]]` at `(point(ix), point(iy))`.
    pub values: Array2<Complex64>,
}

impl SpectrumGrid {
    pub fn sample(extent: f64, m: usize, f: &dyn Spectrum) -> Self {
        let h = 2.0 * extent / m as f64;
        let pts: Vec<f64> = (0..m).map(|k| -extent + k as f64 * h).collect();
        let rows: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|i| (0..m).map(|j| f.eval(pts[i], pts[j])).collect())
            .collect();
        let mut values = Array2::default((m, m));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        SpectrumGrid { extent, values }
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn step(&self) -> f64 {
        2.0 * self.extent / self.m() as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        -self.extent + k as f64 * self.step()
    }

    /// Index range of grid points inside `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> Range<usize> {
        let h = self.step();
        let a = ((lo + self.extent) / h).ceil().max(0.0) as usize;
        let b = (((hi + self.extent) / h).floor() as usize + 1).min(self.m());
        a.min(self.m())..b
    }

    /// Riemann energy `h^2 sum |v|^2`.
    pub fn energy(&self) -> f64 {
        let h = self.step();
        h * h * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Whether the grid covers every expanded rectangle of the covering.
    pub fn covers(&self, cov: &Covering) -> bool {
        let (_, hi) = cov.covered_range();
        let margin = cov
            .levels
            .values()
            .flatten()
            .map(|iv| iv.eps_lo.max(iv.eps_hi))
            .fold(0.0f64, f64::max);
        self.extent >= hi + margin
    }
}

/// Basis context: covering + shared grid + ramp.
pub struct Basis2<'a> {
    pub cov: &'a Covering,
    pub axis: Axis,
    pub ramp: Ramp,
}

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOpts {
    /// Per-field relative energy the coefficient tails may lose in total.
    pub tail_tol: f64,
    /// Starting cosine cap per axis.
    pub start_cap: usize,
}

impl Default for AnalyzeOpts {
    fn default() -> Self {
        AnalyzeOpts { tail_tol: 1e-12, start_cap: 8 }
    }
}

/// Per-rectangle analysis record.
#[derive(Debug, Clone)]
pub struct RectAnalysis {
    pub id: RectId,
    pub projected_energy: f64,
    pub captured_energy: f64,
    pub cap: (usize, usize),
    pub deficit_met: bool,
}

/// Outcome of a full analysis pass.
#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub coeffs: CoeffMap,
    pub rects: Vec<RectAnalysis>,
    pub field_energy: f64,
    /// Energy outside the union of the rectangle projections,
    /// `field - sum_Q |P_Q f|^2`; nonzero means part of the spectrum lies
    /// off the covered annulus.
    pub uncovered_energy: f64,
    /// Energy seen by the projections but not captured under the cosine
    /// caps, `sum_Q (|P_Q f|^2 - sum_n |c|^2)`. Spectra with features at the
    /// cutoff scale converge only for caps of order |I|/eps.
    pub tail_energy: f64,
}

impl AnalyzeOutcome {
    pub fn coverage_warning(&self, rel_tol: f64) -> bool {
        self.uncovered_energy > rel_tol * self.field_energy.max(f64::MIN_POSITIVE)
    }

    pub fn tail_warning(&self, rel_tol: f64) -> bool {
        self.tail_energy > rel_tol * self.field_energy.max(f64::MIN_POSITIVE)
    }
}

impl<'a> Basis2<'a> {
    pub fn new(cov: &'a Covering, spec: &AxisSpec, ramp: Ramp) -> Result<Self> {
        let axis = Axis::for_covering(cov, spec)?;
        Ok(Basis2 { cov, axis, ramp })
    }

    pub fn bell_x(&self, rect: &Rect) -> Bell {
        Bell::new(&rect.ix, self.ramp)
    }

    pub fn bell_y(&self, rect: &Rect) -> Bell {
        Bell::new(&rect.iy, self.ramp)
    }

    /// Tensor window value; exactly the product of the 1-D evaluations.
    pub fn hat(&self, rect: &Rect, n1: u32, n2: u32, xi: [f64; 2]) -> f64 {
        brushlet_hat(&self.bell_x(rect), n1, xi[0]) * brushlet_hat(&self.bell_y(rect), n2, xi[1])
    }

    /// Weighted window matrix of one axis factor: `W[i][n] = w_i what_n(x_i)`
    /// over the support range.
    fn window_matrix(&self, interval: &Interval, ops: &IntervalOps, n_count: usize) -> Array2<f64> {
        let bell = Bell::new(interval, self.ramp);
        let pts = self.axis.points();
        let w = self.axis.weights();
        let r = ops.support.clone();
        let mut m = Array2::zeros((r.len(), n_count));
        for (row, i) in r.enumerate() {
            for n in 0..n_count {
                m[[row, n]] = w[i] * brushlet_hat(&bell, n as u32, pts[i]);
            }
        }
        m
    }

    /// Plain (unweighted) window values over the support range.
    fn window_values(&self, interval: &Interval, ops: &IntervalOps, n_count: usize) -> Array2<f64> {
        let bell = Bell::new(interval, self.ramp);
        let pts = self.axis.points();
        let r = ops.support.clone();
        let mut m = Array2::zeros((r.len(), n_count));
        for (row, i) in r.enumerate() {
            for n in 0..n_count {
                m[[row, n]] = brushlet_hat(&bell, n as u32, pts[i]);
            }
        }
        m
    }

    fn sample_block(&self, f: &dyn Spectrum, xr: Range<usize>, yr: Range<usize>) -> Array2<Complex64> {
        let pts = self.axis.points();
        let mut block = Array2::default((xr.len(), yr.len()));
        for (bi, i) in xr.clone().enumerate() {
            for (bj, j) in yr.clone().enumerate() {
                block[[bi, bj]] = f.eval(pts[i], pts[j]);
            }
        }
        block
    }

    /// `P_Q f` on the support block of `rect`: project along x, then y.
    /// Returns the block and its global index ranges.
    pub fn project_rect_block(
        &self,
        rect: &Rect,
        f: &dyn Spectrum,
    ) -> Result<(Array2<Complex64>, Range<usize>, Range<usize>)> {
        let ox = self.axis.interval_ops(&rect.ix)?;
        let oy = self.axis.interval_ops(&rect.iy)?;
        let mut block = self.sample_block(f, ox.support.clone(), oy.support.clone());
        self.apply_projection(&mut block, &ox, &oy, rect);
        Ok((block, ox.support, oy.support))
    }

    fn apply_projection(
        &self,
        block: &mut Array2<Complex64>,
        ox: &IntervalOps,
        oy: &IntervalOps,
        rect: &Rect,
    ) {
        let bx = self.bell_x(rect);
        let by = self.bell_y(rect);
        let x0 = ox.support.start;
        let y0 = oy.support.start;
        let (nx, ny) = block.dim();
        let mut line = vec![Complex64::default(); nx.max(ny)];
        // along x for every y sample
        for j in 0..ny {
            project_range(
                &self.axis,
                ox,
                &bx,
                |i| block[[i - x0, j]],
                |i, v| line[i - x0] = v,
            );
            for i in 0..nx {
                block[[i, j]] = line[i];
            }
        }
        // along y for every x sample
        for i in 0..nx {
            project_range(
                &self.axis,
                oy,
                &by,
                |j| block[[i, j - y0]],
                |j, v| line[j - y0] = v,
            );
            for j in 0..ny {
                block[[i, j]] = line[j];
            }
        }
    }

    fn block_energy(&self, block: &Array2<Complex64>, xr: &Range<usize>, yr: &Range<usize>) -> f64 {
        let w = self.axis.weights();
        let mut e = 0.0;
        for (bi, i) in xr.clone().enumerate() {
            let wx = w[i];
            for (bj, j) in yr.clone().enumerate() {
                e += wx * w[j] * block[[bi, bj]].norm_sqr();
            }
        }
        e
    }

    /// Coefficients of one rectangle up to the given caps.
    fn rect_coeffs(
        &self,
        rect: &Rect,
        raw: &Array2<Complex64>,
        ox: &IntervalOps,
        oy: &IntervalOps,
        cap1: usize,
        cap2: usize,
    ) -> Array2<Complex64> {
        let wx = self.window_matrix(&rect.ix, ox, cap1);
        let wy = self.window_matrix(&rect.iy, oy, cap2);
        let (nx, ny) = raw.dim();
        // tmp[n1][j] = sum_i wx[i][n1] raw[i][j]
        let mut tmp = Array2::<Complex64>::default((cap1, ny));
        for i in 0..nx {
            for n in 0..cap1 {
                let s = wx[[i, n]];
                if s == 0.0 {
                    continue;
                }
                for j in 0..ny {
                    tmp[[n, j]] += s * raw[[i, j]];
                }
            }
        }
        let mut c = Array2::<Complex64>::default((cap1, cap2));
        for n in 0..cap1 {
            for j in 0..ny {
                let v = tmp[[n, j]];
                if v == Complex64::default() {
                    continue;
                }
                for m in 0..cap2 {
                    c[[n, m]] += v * wy[[j, m]];
                }
            }
        }
        c
    }

    /// Full analysis over the covering with adaptive per-rectangle caps.
    pub fn analyze(&self, f: &dyn Spectrum, opts: &AnalyzeOpts) -> Result<AnalyzeOutcome> {
        let field_energy = self.grid_energy(f);
        let budget = opts.tail_tol * field_energy.max(f64::MIN_POSITIVE)
            / self.cov.rect_count().max(1) as f64;
        let rects: Vec<&Rect> = self.cov.rects().collect();
        let results: Result<Vec<_>> = rects
            .par_iter()
            .map(|rect| -> Result<(Vec<(BrushletIndex2D, Complex64)>, RectAnalysis)> {
                let ox = self.axis.interval_ops(&rect.ix)?;
                let oy = self.axis.interval_ops(&rect.iy)?;
                let raw = self.sample_block(f, ox.support.clone(), oy.support.clone());
                let mut proj = raw.clone();
                self.apply_projection(&mut proj, &ox, &oy, rect);
                let projected = self.block_energy(&proj, &ox.support, &oy.support);
                drop(proj);

                let max_cap = self.axis.max_osc_index();
                let mut cap = opts.start_cap.min(max_cap);
                let (c, captured, met, cap_used) = loop {
                    let c = self.rect_coeffs(rect, &raw, &ox, &oy, cap, cap);
                    let captured: f64 = c.iter().map(|v| v.norm_sqr()).sum();
                    let deficit = projected - captured;
                    if deficit <= budget || projected <= budget {
                        break (c, captured, true, cap);
                    }
                    if cap >= max_cap {
                        break (c, captured, false, cap);
                    }
                    cap = (cap * 2).min(max_cap);
                };

                let mut entries = Vec::new();
                if projected > budget {
                    for n1 in 0..cap_used {
                        for n2 in 0..cap_used {
                            let v = c[[n1, n2]];
                            if v.norm_sqr() > 0.0 {
                                entries.push((
                                    BrushletIndex2D { rect: rect.id, n1: n1 as u32, n2: n2 as u32 },
                                    v,
                                ));
                            }
                        }
                    }
                }
                Ok((
                    entries,
                    RectAnalysis {
                        id: rect.id,
                        projected_energy: projected,
                        captured_energy: captured,
                        cap: (cap_used, cap_used),
                        deficit_met: met,
                    },
                ))
            })
            .collect();
        let results = results?;
        let mut coeffs = CoeffMap::new();
        let mut reports = Vec::with_capacity(results.len());
        let mut projected_total = 0.0;
        for (entries, report) in results {
            for (k, v) in entries {
                coeffs.insert(k, v);
            }
            projected_total += report.projected_energy;
            reports.push(report);
        }
        let captured_total = coeffs.energy();
        Ok(AnalyzeOutcome {
            coeffs,
            rects: reports,
            field_energy,
            uncovered_energy: (field_energy - projected_total).max(0.0),
            tail_energy: (projected_total - captured_total).max(0.0),
        })
    }

    /// Weighted grid energy of a spectrum over the full tensor grid.
    pub fn grid_energy(&self, f: &dyn Spectrum) -> f64 {
        let pts = self.axis.points();
        let w = self.axis.weights();
        let rows: Vec<f64> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..pts.len() {
                    acc += w[j] * f.eval(pts[i], pts[j]).norm_sqr();
                }
                w[i] * acc
            })
            .collect();
        rows.iter().sum()
    }

    /// Synthesized spectrum value at one frequency point.
    pub fn synthesize_at(&self, coeffs: &CoeffMap, xi: [f64; 2]) -> Complex64 {
        let mut acc = Complex64::default();
        let mut current: Option<(RectId, Rect)> = None;
        for (key, c) in coeffs.iter() {
            let rect = match &current {
                Some((id, r)) if *id == key.rect => *r,
                _ => {
                    let r = *self.cov.rect(key.rect).expect("coefficient rect in covering");
                    current = Some((key.rect, r));
                    r
                }
            };
            let v = self.hat(&rect, key.n1, key.n2, xi);
            if v != 0.0 {
                acc += c * v;
            }
        }
        acc
    }

    /// Synthesis accumulated on the axis block `xr x yr`.
    pub fn synthesize_block(
        &self,
        coeffs: &CoeffMap,
        xr: Range<usize>,
        yr: Range<usize>,
    ) -> Result<Array2<Complex64>> {
        let mut out = Array2::default((xr.len(), yr.len()));
        let mut by_rect: BTreeMap<RectId, Vec<(u32, u32, Complex64)>> = BTreeMap::new();
        for (k, v) in coeffs.iter() {
            by_rect.entry(k.rect).or_default().push((k.n1, k.n2, *v));
        }
        for (id, entries) in by_rect {
            let rect = *self
                .cov
                .rect(id)
                .ok_or_else(|| crate::error::Error::Format(format!("unknown rect {id:?}")))?;
            let ox = self.axis.interval_ops(&rect.ix)?;
            let oy = self.axis.interval_ops(&rect.iy)?;
            let ix = intersect(&ox.support, &xr);
            let iy = intersect(&oy.support, &yr);
            if ix.is_empty() || iy.is_empty() {
                continue;
            }
            let cap1 = entries.iter().map(|e| e.0).max().unwrap() as usize + 1;
            let cap2 = entries.iter().map(|e| e.1).max().unwrap() as usize + 1;
            let vx = self.window_values(&rect.ix, &ox, cap1);
            let vy = self.window_values(&rect.iy, &oy, cap2);
            // coefficient matrix for this rect
            let mut cm = Array2::<Complex64>::default((cap1, cap2));
            for (n1, n2, v) in entries {
                cm[[n1 as usize, n2 as usize]] = v;
            }
            // tmp[i][n2] = sum_n1 vx[i][n1] cm[n1][n2], restricted to ix
            for gi in ix.clone() {
                let row_v = gi - ox.support.start;
                let mut tmp: Array1<Complex64> = Array1::default(cap2);
                for n1 in 0..cap1 {
                    let s = vx[[row_v, n1]];
                    if s == 0.0 {
                        continue;
                    }
                    for n2 in 0..cap2 {
                        tmp[n2] += s * cm[[n1, n2]];
                    }
                }
                for gj in iy.clone() {
                    let col_v = gj - oy.support.start;
                    let mut acc = Complex64::default();
                    for n2 in 0..cap2 {
                        acc += tmp[n2] * vy[[col_v, n2]];
                    }
                    out[[gi - xr.start, gj - yr.start]] += acc;
                }
            }
        }
        Ok(out)
    }

    /// Relative L2 error of `sum c w` against `f`, streamed over x-strips.
    pub fn synthesis_error(&self, coeffs: &CoeffMap, f: &dyn Spectrum) -> Result<f64> {
        let n = self.axis.len();
        let w = self.axis.weights();
        let pts = self.axis.points();
        let strip = 256usize;
        let mut err2 = 0.0;
        let mut energy = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + strip).min(n);
            let synth = self.synthesize_block(coeffs, start..end, 0..n)?;
            for i in start..end {
                let wx = w[i];
                for j in 0..n {
                    let fv = f.eval(pts[i], pts[j]);
                    energy += wx * w[j] * fv.norm_sqr();
                    err2 += wx * w[j] * (synth[[i - start, j]] - fv).norm_sqr();
                }
            }
            start = end;
        }
        Ok((err2 / energy.max(f64::MIN_POSITIVE)).sqrt())
    }

    /// Gram matrix of a subset, through cached 1-D factor products.
    pub fn gram(&self, subset: &[BrushletIndex2D]) -> Result<Array2<f64>> {
        let mut factors: FactorCache = HashMap::new();
        let rects: Result<Vec<&Rect>> = subset
            .iter()
            .map(|b| {
                self.cov
                    .rect(b.rect)
                    .ok_or_else(|| crate::error::Error::Format(format!("unknown rect {:?}", b.rect)))
            })
            .collect();
        let rects = rects?;
        let mut g = Array2::zeros((subset.len(), subset.len()));
        for a in 0..subset.len() {
            for b in a..subset.len() {
                let fx = self.factor_dot(
                    &mut factors,
                    &rects[a].ix,
                    subset[a].n1,
                    &rects[b].ix,
                    subset[b].n1,
                )?;
                let fy = if fx == 0.0 {
                    0.0
                } else {
                    self.factor_dot(
                        &mut factors,
                        &rects[a].iy,
                        subset[a].n2,
                        &rects[b].iy,
                        subset[b].n2,
                    )?
                };
                let v = fx * fy;
                g[[a, b]] = v;
                g[[b, a]] = v;
            }
        }
        Ok(g)
    }

    fn factor_dot(
        &self,
        cache: &mut FactorCache,
        ia: &Interval,
        na: u32,
        ib: &Interval,
        nb: u32,
    ) -> Result<f64> {
        let ka = (ia.level, ia.index, na);
        let kb = (ib.level, ib.index, nb);
        let key = if ka <= kb { (ka, kb) } else { (kb, ka) };
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
        let (alo, ahi) = ia.support();
        let (blo, bhi) = ib.support();
        let lo = alo.max(blo);
        let hi = ahi.min(bhi);
        let v = if hi <= lo {
            0.0 // disjoint supports: exact zero
        } else {
            let ba = Bell::new(ia, self.ramp);
            let bb = Bell::new(ib, self.ramp);
            let pts = self.axis.points();
            let w = self.axis.weights();
            self.axis
                .range(lo, hi)
                .map(|i| w[i] * brushlet_hat(&ba, na, pts[i]) * brushlet_hat(&bb, nb, pts[i]))
                .sum()
        };
        cache.insert(key, v);
        Ok(v)
    }
}

type FactorKey = ((i32, i32, u32), (i32, i32, u32));
type FactorCache = HashMap<FactorKey, f64>;

fn intersect(a: &Range<usize>, b: &Range<usize>) -> Range<usize> {
    a.start.max(b.start)..a.end.min(b.end)
}

/// Synthesis sampled on a uniform square grid (file-facing path; the grid
/// need not be adapted to the covering).
pub fn synthesize_uniform(
    cov: &Covering,
    ramp: Ramp,
    coeffs: &CoeffMap,
    extent: f64,
    m: usize,
) -> Result<SpectrumGrid> {
    let h = 2.0 * extent / m as f64;
    let pts: Vec<f64> = (0..m).map(|k| -extent + k as f64 * h).collect();
    let mut values = Array2::<Complex64>::default((m, m));
    let mut by_rect: BTreeMap<RectId, Vec<(u32, u32, Complex64)>> = BTreeMap::new();
    for (k, v) in coeffs.iter() {
        by_rect.entry(k.rect).or_default().push((k.n1, k.n2, *v));
    }
    for (id, entries) in by_rect {
        let rect = cov
            .rect(id)
            .ok_or_else(|| crate::error::Error::Format(format!("unknown rect {id:?}")))?;
        let bx = Bell::new(&rect.ix, ramp);
        let by = Bell::new(&rect.iy, ramp);
        let (xl, xh) = bx.support();
        let (yl, yh) = by.support();
        let xr = pts.partition_point(|&p| p < xl)..pts.partition_point(|&p| p <= xh);
        let yr = pts.partition_point(|&p| p < yl)..pts.partition_point(|&p| p <= yh);
        if xr.is_empty() || yr.is_empty() {
            continue;
        }
        let cap1 = entries.iter().map(|e| e.0).max().unwrap() as usize + 1;
        let cap2 = entries.iter().map(|e| e.1).max().unwrap() as usize + 1;
        let wx: Vec<Vec<f64>> = xr
            .clone()
            .map(|i| (0..cap1).map(|n| brushlet_hat(&bx, n as u32, pts[i])).collect())
            .collect();
        let wy: Vec<Vec<f64>> = yr
            .clone()
            .map(|j| (0..cap2).map(|n| brushlet_hat(&by, n as u32, pts[j])).collect())
            .collect();
        let mut cm = Array2::<Complex64>::default((cap1, cap2));
        for (n1, n2, v) in entries {
            cm[[n1 as usize, n2 as usize]] = v;
        }
        for (bi, i) in xr.clone().enumerate() {
            let mut tmp: Vec<Complex64> = vec![Complex64::default(); cap2];
            for n1 in 0..cap1 {
                let s = wx[bi][n1];
                if s == 0.0 {
                    continue;
                }
                for (n2, t) in tmp.iter_mut().enumerate() {
                    *t += s * cm[[n1, n2]];
                }
            }
            for (bj, j) in yr.clone().enumerate() {
                let mut acc = Complex64::default();
                for n2 in 0..cap2 {
                    acc += tmp[n2] * wy[bj][n2];
                }
                values[[i, j]] += acc;
            }
        }
    }
    Ok(SpectrumGrid { extent, values })
}

/// Deviation of one telescoping step and of the summed form.
#[derive(Debug, Clone)]
pub struct TelescopingReport {
    /// Per-level `max |P_{A_{j-1} x A_{j-1}} f + sum_Q P_Q f - P_{A_j x A_j} f|`.
    pub per_level: Vec<(i32, f64)>,
    /// `max |sum_j sum_Q P_Q f - (P_{A_max x A_max} - P_{A_below x A_below}) f|`.
    pub summed: f64,
}

/// Runs the telescoping identities on a sampled spectrum.
pub fn telescoping_check(basis: &Basis2<'_>, f: &dyn Spectrum) -> Result<TelescopingReport> {
    let cov = basis.cov;
    let n = basis.axis.len();
    let mut per_level = Vec::new();

    let mut acc_all = Array2::<Complex64>::default((n, n));
    for j in cov.params.levels() {
        if j == 1 {
            continue; // the square of level one belongs to the low-frequency side
        }
        let mut acc = Array2::<Complex64>::default((n, n));
        for rect in &cov.annuli[&j] {
            add_projection(basis, &mut acc, 1.0, &rect.ix, &rect.iy, f)?;
            add_projection(basis, &mut acc_all, 1.0, &rect.ix, &rect.iy, f)?;
        }
        let inner = inner_square(cov, j);
        add_projection(basis, &mut acc, 1.0, &inner, &inner, f)?;
        let outer = cov.square_interval(j);
        add_projection(basis, &mut acc, -1.0, &outer, &outer, f)?;
        let dev = acc.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        per_level.push((j, dev));
    }

    // summed form over the whole truncation range
    let top = cov.square_interval(cov.j_max());
    add_projection(basis, &mut acc_all, -1.0, &top, &top, f)?;
    let below = inner_square(cov, cov.j_min());
    add_projection(basis, &mut acc_all, 1.0, &below, &below, f)?;
    let summed = acc_all.iter().map(|v| v.norm()).fold(0.0f64, f64::max);

    Ok(TelescopingReport { per_level, summed })
}

/// The square just inside level `j`: `A_{j-1}` for positive levels (with the
/// `(-1, 1)` identification), `A_{j-1}` with `|j-1| = |j| + 1` below.
fn inner_square(cov: &Covering, j: i32) -> Interval {
    // A square interval with pure-rule cutoffs at +-r, where r is the inner
    // edge of level j.
    let r = crate::covering::inner_knot(&cov.params, j);
    let eps = crate::covering::EPS_FACTOR * crate::covering::pure_weight(r, cov.params.alpha);
    Interval { lo: -r, hi: r, eps_lo: eps, eps_hi: eps, level: 0, index: 0 }
}

/// Accumulates `sign * (P_I (x) P_J) f` into the full-axis accumulator.
pub fn add_projection(
    basis: &Basis2<'_>,
    acc: &mut Array2<Complex64>,
    sign: f64,
    ix: &Interval,
    iy: &Interval,
    f: &dyn Spectrum,
) -> Result<()> {
    let ox = basis.axis.interval_ops(ix)?;
    let oy = basis.axis.interval_ops(iy)?;
    let mut block = basis.sample_block(f, ox.support.clone(), oy.support.clone());
    let rect = Rect {
        id: RectId { j: ix.level, side: crate::covering::Side::L, n_along: 0 },
        ix: *ix,
        iy: *iy,
    };
    basis.apply_projection(&mut block, &ox, &oy, &rect);
    for (bi, i) in ox.support.clone().enumerate() {
        for (bj, j) in oy.support.clone().enumerate() {
            acc[[i, j]] += sign * block[[bi, bj]];
        }
    }
    Ok(())
}

/// Max deviation of the column/row fusion: the L column of level `j` sums to
/// `P_{I_out} (x) P_{A_j}` on the grid (and likewise for R/T/B).
pub fn side_fusion_check(basis: &Basis2<'_>, j: i32, f: &dyn Spectrum) -> Result<f64> {
    use crate::covering::Side;
    let cov = basis.cov;
    let n = basis.axis.len();
    let square = cov.square_interval(j);
    let level = &cov.levels[&j];
    let first = level[0];
    let last = *level.last().unwrap();
    let mut worst = 0.0f64;
    for side in [Side::L, Side::R, Side::T, Side::B] {
        let mut acc = Array2::<Complex64>::default((n, n));
        let mut any = false;
        for rect in &cov.annuli[&j] {
            if rect.id.side == side {
                add_projection(basis, &mut acc, 1.0, &rect.ix, &rect.iy, f)?;
                any = true;
            }
        }
        if !any {
            continue;
        }
        match side {
            Side::L => add_projection(basis, &mut acc, -1.0, &first, &square, f)?,
            Side::R => add_projection(basis, &mut acc, -1.0, &last, &square, f)?,
            // interior columns only: the tops and bottoms span the inner square
            Side::T => {
                let inner = inner_square(cov, j);
                add_projection(basis, &mut acc, -1.0, &inner, &last, f)?
            }
            Side::B => {
                let inner = inner_square(cov, j);
                add_projection(basis, &mut acc, -1.0, &inner, &first, f)?
            }
        }
        worst = worst.max(acc.iter().map(|v| v.norm()).fold(0.0f64, f64::max));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{AlphaParams, R1};
    use crate::signals::BellBump2;

    fn small_cov() -> Covering {
        Covering::build(AlphaParams::new(0.5, R1::ONE, -2, 2).unwrap()).unwrap()
    }

    fn basis(cov: &Covering) -> Basis2<'_> {
        Basis2::new(cov, &AxisSpec { max_osc_index: 24, ..Default::default() }, Ramp::default())
            .unwrap()
    }

    #[test]
    fn hat_is_exact_tensor_product() {
        let cov = small_cov();
        let b = basis(&cov);
        let rect = cov.rects().next().unwrap();
        let xi = [rect.ix.mid() + 0.01, rect.iy.mid() - 0.02];
        let lhs = b.hat(rect, 2, 3, xi);
        let rhs = brushlet_hat(&b.bell_x(rect), 2, xi[0]) * brushlet_hat(&b.bell_y(rect), 3, xi[1]);
        assert_eq!(lhs.to_bits(), rhs.to_bits());
        // outside the expanded support the tensor window vanishes
        let (sx, _) = b.bell_x(rect).support();
        assert_eq!(b.hat(rect, 2, 3, [sx - 0.01, xi[1]]), 0.0);
    }

    #[test]
    fn hat_unit_norm_by_quadrature() {
        let cov = small_cov();
        let b = basis(&cov);
        let rect = cov.rects().nth(3).unwrap();
        let ox = b.axis.interval_ops(&rect.ix).unwrap();
        let oy = b.axis.interval_ops(&rect.iy).unwrap();
        let pts = b.axis.points();
        let w = b.axis.weights();
        let mut nrm = 0.0;
        for i in ox.support.clone() {
            for j in oy.support.clone() {
                let v = b.hat(rect, 1, 2, [pts[i], pts[j]]);
                nrm += w[i] * w[j] * v * v;
            }
        }
        assert!((nrm - 1.0).abs() <= 1e-6, "{nrm}");
    }

    #[test]
    fn rect_projection_idempotent_and_commuting() {
        let cov = small_cov();
        let b = basis(&cov);
        let rect = cov.rects().nth(5).unwrap();
        let f = |x: f64, y: f64| Complex64::new((x + 0.3 * y).sin(), (0.7 * x - y).cos());
        let (p1, xr, yr) = b.project_rect_block(rect, &f).unwrap();
        // project the projected block again: feed it back as a spectrum
        let pts = b.axis.points().to_vec();
        let xr0 = xr.start;
        let yr0 = yr.start;
        let lookup = move |x: f64, y: f64| -> Complex64 {
            let i = pts.partition_point(|&p| p < x) - xr0;
            let j = pts.partition_point(|&p| p < y) - yr0;
            p1[[i, j]]
        };
        let rect2 = *rect;
        let (p2, _, _) = b.project_rect_block(&rect2, &lookup).unwrap();
        let (p1b, _, _) = b.project_rect_block(&rect2, &f).unwrap();
        let dev = p2
            .iter()
            .zip(p1b.iter())
            .map(|(a, c)| (a - c).norm())
            .fold(0.0f64, f64::max);
        assert!(dev <= 1e-10, "{dev}");
    }

    #[test]
    fn rect_projection_keeps_plateau_supported_fields() {
        let cov = small_cov();
        let b = basis(&cov);
        let rect = cov.rects().nth(2).unwrap();
        let (px0, px1) = rect.ix.plateau();
        let (py0, py1) = rect.iy.plateau();
        let bump = BellBump2::new(
            [0.5 * (px0 + px1), 0.5 * (py0 + py1)],
            [0.2 * (px1 - px0), 0.2 * (py1 - py0)],
            1.0,
        );
        let (p, xr, yr) = b.project_rect_block(rect, &bump).unwrap();
        let pts = b.axis.points();
        let mut dev = 0.0f64;
        for (bi, i) in xr.clone().enumerate() {
            for (bj, j) in yr.clone().enumerate() {
                dev = dev.max((p[[bi, bj]] - bump.eval(pts[i], pts[j])).norm());
            }
        }
        assert!(dev <= 1e-12, "{dev}");
    }

    #[test]
    fn analyze_unit_mass_on_basis_element() {
        let cov = small_cov();
        let b = basis(&cov);
        let rect = *cov.rects().nth(7).unwrap();
        let target = BrushletIndex2D { rect: rect.id, n1: 2, n2: 1 };
        let f = move |x: f64, y: f64| b_hat_for(&rect, 2, 1, x, y);
        let out = b.analyze(&f, &AnalyzeOpts::default()).unwrap();
        let c = out.coeffs.get(&target);
        assert!((c.re - 1.0).abs() <= 1e-8 && c.im.abs() <= 1e-12, "{c}");
        for (k, v) in out.coeffs.iter() {
            if *k != target {
                assert!(v.norm() <= 1e-8, "{k:?}: {v}");
            }
        }
    }

    fn b_hat_for(rect: &Rect, n1: u32, n2: u32, x: f64, y: f64) -> Complex64 {
        let bx = Bell::new(&rect.ix, Ramp::default());
        let by = Bell::new(&rect.iy, Ramp::default());
        Complex64::new(brushlet_hat(&bx, n1, x) * brushlet_hat(&by, n2, y), 0.0)
    }

    #[test]
    fn analyze_sees_all_covered_energy() {
        let cov = small_cov();
        let b = basis(&cov);
        // band-limited bump inside the covered annulus: the rectangle
        // projections account for every bit of energy
        let bump = BellBump2::new([1.8, 0.6], [0.9, 0.5], 1.0);
        let out = b.analyze(&bump, &AnalyzeOpts::default()).unwrap();
        assert!(
            out.uncovered_energy <= 1e-9 * out.field_energy,
            "uncovered {} of {}",
            out.uncovered_energy,
            out.field_energy
        );
        assert!(!out.coverage_warning(1e-6));
        // features at the cutoff scale leave a small capped tail
        assert!(out.tail_energy <= 0.05 * out.field_energy, "tail {}", out.tail_energy);
    }

    #[test]
    fn analyze_roundtrip_recovers_expansions() {
        use rand::{Rng, SeedableRng};
        let cov = small_cov();
        let b = basis(&cov);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rects: Vec<RectId> = cov.rects().map(|r| r.id).collect();
        let mut coeffs = CoeffMap::new();
        for _ in 0..12 {
            let rect = rects[rng.random_range(0..rects.len())];
            let key = BrushletIndex2D {
                rect,
                n1: rng.random_range(0..10),
                n2: rng.random_range(0..10),
            };
            coeffs.insert(
                key,
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        let f = Expansion::new(&cov, &coeffs, b.ramp).unwrap();
        let out = b.analyze(&f, &AnalyzeOpts::default()).unwrap();
        for (k, v) in coeffs.iter() {
            let got = out.coeffs.get(k);
            assert!((got - v).norm() <= 1e-8, "{k:?}: {got} vs {v}");
        }
        let err = b.synthesis_error(&out.coeffs, &f).unwrap();
        assert!(err <= 1e-5, "roundtrip {err}");
    }

    #[test]
    fn analyze_warns_on_uncovered_hole() {
        let cov = small_cov();
        let b = basis(&cov);
        // spectrum inside the hole |xi|_inf < 1/9 that the truncation leaves open
        let bump = BellBump2::new([0.0, 0.0], [0.05, 0.05], 1.0);
        let out = b.analyze(&bump, &AnalyzeOpts::default()).unwrap();
        assert!(out.coeffs.energy() <= 1e-10 * out.field_energy);
        assert!(out.coverage_warning(1e-3));
    }

    #[test]
    fn synthesize_linear_and_zero() {
        let cov = small_cov();
        let b = basis(&cov);
        let rect = cov.rects().nth(4).unwrap();
        let key = BrushletIndex2D { rect: rect.id, n1: 0, n2: 3 };
        let single = CoeffMap::from_entries([(key, Complex64::new(2.5, -1.0))]);
        let xi = [rect.ix.mid() + 0.05, rect.iy.mid()];
        let got = b.synthesize_at(&single, xi);
        let expect = Complex64::new(2.5, -1.0) * b.hat(rect, 0, 3, xi);
        assert!((got - expect).norm() <= 1e-14);
        let zero = CoeffMap::new();
        assert_eq!(b.synthesize_at(&zero, xi), Complex64::default());
    }

    #[test]
    fn gram_identity_within_and_across_rects() {
        let cov = small_cov();
        let b = basis(&cov);
        let mut subset = Vec::new();
        for rect in cov.rects() {
            for (n1, n2) in [(0, 0), (1, 0), (0, 2)] {
                subset.push(BrushletIndex2D { rect: rect.id, n1, n2 });
            }
        }
        let g = b.gram(&subset).unwrap();
        for a in 0..subset.len() {
            for c in 0..subset.len() {
                let expect = if a == c { 1.0 } else { 0.0 };
                let tol = if a == c { 1e-6 } else { 1e-7 };
                assert!(
                    (g[[a, c]] - expect).abs() <= tol,
                    "({:?},{:?}): {}",
                    subset[a],
                    subset[c],
                    g[[a, c]]
                );
            }
        }
    }

    #[test]
    fn gram_far_levels_are_exact_zeros() {
        let cov = small_cov();
        let b = basis(&cov);
        // level -2 against level 2 never touch: supports are disjoint
        let low = cov.annuli[&-2][0].id;
        let high = cov.annuli[&2][0].id;
        let g = b
            .gram(&[
                BrushletIndex2D { rect: low, n1: 0, n2: 0 },
                BrushletIndex2D { rect: high, n1: 0, n2: 0 },
            ])
            .unwrap();
        assert_eq!(g[[0, 1]], 0.0);
    }

    #[test]
    fn telescoping_per_level_and_summed() {
        let cov = small_cov();
        let b = Basis2::new(&cov, &AxisSpec::projection_only(), Ramp::default()).unwrap();
        let f = |x: f64, y: f64| {
            Complex64::new((0.6 * x - 0.2 * y).cos(), (0.3 * x + 0.5 * y).sin())
        };
        let report = telescoping_check(&b, &f).unwrap();
        for (j, dev) in &report.per_level {
            assert!(*dev <= 1e-9, "level {j}: {dev}");
        }
        assert!(report.summed <= 1e-9, "summed {}", report.summed);
    }

    #[test]
    fn side_fusion_matches_tensor_projection() {
        let cov = small_cov();
        let b = Basis2::new(&cov, &AxisSpec::projection_only(), Ramp::default()).unwrap();
        let f = |x: f64, y: f64| Complex64::new((0.4 * x + y).sin(), (x - 0.8 * y).cos());
        for j in [-2, -1, 2] {
            let dev = side_fusion_check(&b, j, &f).unwrap();
            assert!(dev <= 1e-9, "level {j}: {dev}");
        }
    }
}
