//! Spectrum adapters: pointwise evaluation of stored uniform grids and
//! image inputs.

use ndarray::Array2;
use num_complex::Complex64;

use alphabrush::brushlet2d::{Spectrum, SpectrumGrid};
use alphabrush::error::{Error, Result};

/// Separable Catmull-Rom interpolation of a uniform grid spectrum; zero
/// outside the stored extent.
pub struct GridSpectrum {
    grid: SpectrumGrid,
}

impl GridSpectrum {
    pub fn new(grid: SpectrumGrid) -> Self {
        GridSpectrum { grid }
    }

    pub fn grid(&self) -> &SpectrumGrid {
        &self.grid
    }

    fn sample(&self, i: i64, j: i64) -> Complex64 {
        let m = self.grid.m() as i64;
        if i < 0 || j < 0 || i >= m || j >= m {
            Complex64::default()
        } else {
            self.grid.values[[i as usize, j as usize]]
        }
    }
}

fn catmull_rom(p: [Complex64; 4], t: f64) -> Complex64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p[1])
        + (p[2] - p[0]) * t
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t2
        + (3.0 * p[1] - p[0] - 3.0 * p[2] + p[3]) * t3)
}

impl Spectrum for GridSpectrum {
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let h = self.grid.step();
        let fx = (x + self.grid.extent) / h;
        let fy = (y + self.grid.extent) / h;
        let m = self.grid.m() as f64;
        if fx < 0.0 || fy < 0.0 || fx > m - 1.0 || fy > m - 1.0 {
            return Complex64::default();
        }
        let ix = fx.floor() as i64;
        let iy = fy.floor() as i64;
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let mut rows = [Complex64::default(); 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let i = ix - 1 + r as i64;
            let p = [
                self.sample(i, iy - 1),
                self.sample(i, iy),
                self.sample(i, iy + 1),
                self.sample(i, iy + 2),
            ];
            *row = catmull_rom(p, ty);
        }
        catmull_rom(rows, tx)
    }
}

/// Binary 8- or 16-bit PGM (P5).
pub fn read_pgm(path: &std::path::Path) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path)?;
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        // skip whitespace and comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated pgm header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Format("only binary P5 pgm is supported".into()));
    }
    let w: usize = token()?.parse().map_err(|_| Error::Format("bad pgm width".into()))?;
    let h: usize = token()?.parse().map_err(|_| Error::Format("bad pgm height".into()))?;
    let maxval: u32 = token()?.parse().map_err(|_| Error::Format("bad pgm maxval".into()))?;
    pos += 1; // single whitespace after the header
    let bpp = if maxval > 255 { 2 } else { 1 };
    if bytes.len() < pos + w * h * bpp {
        return Err(Error::Format("truncated pgm data".into()));
    }
    let mut out = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let idx = pos + (r * w + c) * bpp;
            let v = if bpp == 2 {
                u16::from_be_bytes([bytes[idx], bytes[idx + 1]]) as f64
            } else {
                bytes[idx] as f64
            };
            out[[r, c]] = v / maxval as f64;
        }
    }
    Ok(out)
}

/// Centered spectrum of a real image, placed on a square grid with the
/// given frequency extent. The image is zero-padded or cropped to `m x m`.
pub fn image_spectrum(image: &Array2<f64>, extent: f64, m: usize) -> SpectrumGrid {
    let mut field = Array2::<Complex64>::default((m, m));
    let (h, w) = image.dim();
    let mean = image.sum() / (h * w) as f64;
    for r in 0..h.min(m) {
        for c in 0..w.min(m) {
            field[[r, c]] = Complex64::new(image[[r, c]] - mean, 0.0);
        }
    }
    alphabrush::fft::dft2_unscaled_inverse(&mut field);
    // center the zero frequency and normalize to unit energy
    let mut values = Array2::<Complex64>::default((m, m));
    for i in 0..m {
        for j in 0..m {
            let si = (i + m / 2) % m;
            let sj = (j + m / 2) % m;
            values[[i, j]] = field[[si, sj]];
        }
    }
    let h_step = 2.0 * extent / m as f64;
    let energy: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h_step * h_step;
    if energy > 0.0 {
        let scale = 1.0 / energy.sqrt();
        values.mapv_inplace(|v| v * scale);
    }
    SpectrumGrid { extent, values }
}

/// Zeroes everything outside the covered annulus; returns the energy
/// fraction that was removed.
pub fn bandlimit_to_covering(
    grid: &mut SpectrumGrid,
    cov: &alphabrush::covering::Covering,
) -> f64 {
    let (lo, hi) = cov.covered_range();
    let (m_lo, m_hi) = alphabrush::spaces::boundary_margins(cov);
    let total = grid.energy();
    let m = grid.m();
    for i in 0..m {
        let x = grid.point(i);
        for j in 0..m {
            let y = grid.point(j);
            let sup = x.abs().max(y.abs());
            if sup < lo + m_lo || sup > hi - m_hi {
                grid.values[[i, j]] = Complex64::default();
            }
        }
    }
    let kept = grid.energy();
    if total > 0.0 {
        (total - kept) / total
    } else {
        0.0
    }
}
