//! File formats: covering documents, coefficient files, spectrum grids.
//!
//! Floats in the covering document are decimal strings with 17 significant
//! digits, which round-trip f64 exactly and keep golden files byte-stable.
//! Coefficient files are little-endian packed records behind a 16-byte
//! header, sorted by key for reproducible diffs.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::brushlet2d::{BrushletIndex2D, CoeffMap, SpectrumGrid};
use crate::covering::{AlphaParams, Covering, RectId, Side, R1};
use crate::error::{Error, Result};

const COEFF2_MAGIC: &[u8; 8] = b"ABRUSH2D";
const COEFF1_MAGIC: &[u8; 8] = b"ABRUSH1D";
const GRID_MAGIC: &[u8; 8] = b"ABRUSHSG";
const FORMAT_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Format(format!("bad float {s}")))
}

/// Serialized form of a covering; field order is canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringDoc {
    pub alpha: f64,
    pub r1: String,
    pub j_range: [i32; 2],
    pub levels: Vec<LevelDoc>,
    pub rects: Vec<RectDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelDoc {
    pub j: i32,
    pub knots: Vec<String>,
    pub eps: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RectDoc {
    pub j: i32,
    pub side: char,
    pub ix: [String; 2],
    pub iy: [String; 2],
    pub eps: [String; 4],
    pub xi: [String; 2],
}

/// Covering to document.
pub fn covering_to_doc(cov: &Covering) -> CoveringDoc {
    let mut levels = Vec::new();
    for (j, ivs) in &cov.levels {
        let mut knots = Vec::with_capacity(ivs.len() + 1);
        let mut eps = Vec::with_capacity(ivs.len() + 1);
        for (i, iv) in ivs.iter().enumerate() {
            if i == 0 {
                knots.push(fmt_f64(iv.lo));
                eps.push(fmt_f64(iv.eps_lo));
            }
            knots.push(fmt_f64(iv.hi));
            eps.push(fmt_f64(iv.eps_hi));
        }
        levels.push(LevelDoc { j: *j, knots, eps });
    }
    let rects = cov
        .rects()
        .map(|r| RectDoc {
            j: r.id.j,
            side: r.id.side.letter(),
            ix: [fmt_f64(r.ix.lo), fmt_f64(r.ix.hi)],
            iy: [fmt_f64(r.iy.lo), fmt_f64(r.iy.hi)],
            eps: [
                fmt_f64(r.ix.eps_lo),
                fmt_f64(r.ix.eps_hi),
                fmt_f64(r.iy.eps_lo),
                fmt_f64(r.iy.eps_hi),
            ],
            xi: [fmt_f64(r.center()[0]), fmt_f64(r.center()[1])],
        })
        .collect();
    CoveringDoc {
        alpha: cov.params.alpha,
        r1: cov.params.r1.to_string(),
        j_range: [cov.params.j_min, cov.params.j_max],
        levels,
        rects,
    }
}

/// Rebuilds the covering from a document and verifies every stored knot,
/// cutoff and rectangle against the reconstruction, bit for bit.
pub fn covering_from_doc(doc: &CoveringDoc) -> Result<Covering> {
    let params = AlphaParams::new(doc.alpha, R1::parse(&doc.r1)?, doc.j_range[0], doc.j_range[1])?;
    let cov = Covering::build(params)?;
    let expect = covering_to_doc(&cov);
    if expect.levels.len() != doc.levels.len() || expect.rects.len() != doc.rects.len() {
        return Err(Error::Format("document does not match its parameters".into()));
    }
    for (a, b) in expect.levels.iter().zip(&doc.levels) {
        if a.j != b.j || a.knots.len() != b.knots.len() {
            return Err(Error::Format(format!("level {} structure differs", b.j)));
        }
        for (ka, kb) in a.knots.iter().zip(&b.knots) {
            if parse_f64(ka)?.to_bits() != parse_f64(kb)?.to_bits() {
                return Err(Error::Format(format!("level {} knot {kb} differs from {ka}", b.j)));
            }
        }
        for (ea, eb) in a.eps.iter().zip(&b.eps) {
            if parse_f64(ea)?.to_bits() != parse_f64(eb)?.to_bits() {
                return Err(Error::Format(format!("level {} cutoff {eb} differs", b.j)));
            }
        }
    }
    for (a, b) in expect.rects.iter().zip(&doc.rects) {
        if a.j != b.j || a.side != b.side {
            return Err(Error::Format("rect list differs from reconstruction".into()));
        }
        for (sa, sb) in a
            .ix
            .iter()
            .chain(&a.iy)
            .chain(&a.eps)
            .chain(&a.xi)
            .zip(b.ix.iter().chain(&b.iy).chain(&b.eps).chain(&b.xi))
        {
            if parse_f64(sa)?.to_bits() != parse_f64(sb)?.to_bits() {
                return Err(Error::Format(format!("rect value {sb} differs from {sa}")));
            }
        }
    }
    Ok(cov)
}

pub fn write_covering(path: &Path, cov: &Covering) -> Result<()> {
    let doc = covering_to_doc(cov);
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &doc)
        .map_err(|e| Error::Format(format!("covering json: {e}")))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_covering(path: &Path) -> Result<Covering> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let doc: CoveringDoc =
        serde_json::from_reader(file).map_err(|e| Error::Format(format!("covering json: {e}")))?;
    covering_from_doc(&doc)
}

fn write_header(out: &mut impl Write, magic: &[u8; 8], count: u32) -> Result<()> {
    out.write_all(magic)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&count.to_le_bytes())?;
    Ok(())
}

fn read_header(input: &mut impl Read, magic: &[u8; 8]) -> Result<u32> {
    let mut head = [0u8; 16];
    input.read_exact(&mut head)?;
    if &head[..8] != magic {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(u32::from_le_bytes(head[12..16].try_into().unwrap()))
}

/// Writes a coefficient map, sorted by `(j, side, n_along, n1, n2)`.
pub fn write_coeffs(path: &Path, coeffs: &CoeffMap) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut out, COEFF2_MAGIC, coeffs.len() as u32)?;
    for (key, value) in coeffs.iter() {
        out.write_all(&key.rect.j.to_le_bytes())?;
        out.write_all(&[key.rect.side.code()])?;
        out.write_all(&key.rect.n_along.to_le_bytes())?;
        out.write_all(&key.n1.to_le_bytes())?;
        out.write_all(&key.n2.to_le_bytes())?;
        out.write_all(&value.re.to_le_bytes())?;
        out.write_all(&value.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_coeffs(path: &Path) -> Result<CoeffMap> {
    let mut input = BufReader::new(std::fs::File::open(path)?);
    let count = read_header(&mut input, COEFF2_MAGIC)?;
    let mut buf = [0u8; 33];
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        input.read_exact(&mut buf)?;
        let j = i32::from_le_bytes(buf[0..4].try_into().unwrap());
        let side = Side::from_code(buf[4])?;
        let n_along = i32::from_le_bytes(buf[5..9].try_into().unwrap());
        let n1 = u32::from_le_bytes(buf[9..13].try_into().unwrap());
        let n2 = u32::from_le_bytes(buf[13..17].try_into().unwrap());
        let re = f64::from_le_bytes(buf[17..25].try_into().unwrap());
        let im = f64::from_le_bytes(buf[25..33].try_into().unwrap());
        entries.push((
            BrushletIndex2D { rect: RectId { j, side, n_along }, n1, n2 },
            Complex64::new(re, im),
        ));
    }
    Ok(CoeffMap::from_entries(entries))
}

/// One univariate coefficient record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeff1D {
    pub j: i32,
    pub index: i32,
    pub n: u32,
    pub value: Complex64,
}

pub fn write_coeffs_1d(path: &Path, coeffs: &[Coeff1D]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut out, COEFF1_MAGIC, coeffs.len() as u32)?;
    for c in coeffs {
        out.write_all(&c.j.to_le_bytes())?;
        out.write_all(&c.index.to_le_bytes())?;
        out.write_all(&c.n.to_le_bytes())?;
        out.write_all(&c.value.re.to_le_bytes())?;
        out.write_all(&c.value.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_coeffs_1d(path: &Path) -> Result<Vec<Coeff1D>> {
    let mut input = BufReader::new(std::fs::File::open(path)?);
    let count = read_header(&mut input, COEFF1_MAGIC)?;
    let mut buf = [0u8; 28];
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        input.read_exact(&mut buf)?;
        out.push(Coeff1D {
            j: i32::from_le_bytes(buf[0..4].try_into().unwrap()),
            index: i32::from_le_bytes(buf[4..8].try_into().unwrap()),
            n: u32::from_le_bytes(buf[8..12].try_into().unwrap()),
            value: Complex64::new(
                f64::from_le_bytes(buf[12..20].try_into().unwrap()),
                f64::from_le_bytes(buf[20..28].try_into().unwrap()),
            ),
        });
    }
    Ok(out)
}

/// CSV rows `(j, interval-index, n, Re, Im)`.
pub fn write_coeffs_1d_csv(path: &Path, coeffs: &[Coeff1D]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "j,interval_index,n,re,im")?;
    for c in coeffs {
        writeln!(out, "{},{},{},{:.17e},{:.17e}", c.j, c.index, c.n, c.value.re, c.value.im)?;
    }
    Ok(())
}

/// Writes a spectrum grid: header, m, extent, then row-major complex pairs.
pub fn write_grid(path: &Path, grid: &SpectrumGrid) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut out, GRID_MAGIC, grid.m() as u32)?;
    out.write_all(&grid.extent.to_le_bytes())?;
    for v in grid.values.iter() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<SpectrumGrid> {
    let mut input = BufReader::new(std::fs::File::open(path)?);
    let m = read_header(&mut input, GRID_MAGIC)? as usize;
    let mut buf8 = [0u8; 8];
    input.read_exact(&mut buf8)?;
    let extent = f64::from_le_bytes(buf8);
    // negated form rejects NaN extents too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(extent > 0.0) || m == 0 || m > 1 << 16 {
        return Err(Error::Format("bad grid dimensions".into()));
    }
    let mut values = ndarray::Array2::default((m, m));
    let mut pair = [0u8; 16];
    for i in 0..m {
        for jj in 0..m {
            input.read_exact(&mut pair)?;
            values[[i, jj]] = Complex64::new(
                f64::from_le_bytes(pair[0..8].try_into().unwrap()),
                f64::from_le_bytes(pair[8..16].try_into().unwrap()),
            );
        }
    }
    Ok(SpectrumGrid { extent, values })
}
