//! Thin wrappers around rustfft with the scalings used in this crate.
//!
//! Convention: the continuous transform is unitary, `f_hat(xi) =
//! (2 pi)^{-1/2} integral f(x) e^{-i x xi} dx`, so Plancherel holds without
//! extra factors and local cosine orthonormality transfers verbatim between
//! the two sides.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Mutex;

static PLANNER: Mutex<Option<FftPlanner<f64>>> = Mutex::new(None);

fn with_planner<R>(f: impl FnOnce(&mut FftPlanner<f64>) -> R) -> R {
    let mut guard = PLANNER.lock().unwrap();
    let planner = guard.get_or_insert_with(FftPlanner::new);
    f(planner)
}

/// In-place `S_k = sum_m x_m e^{-2 pi i k m / M}`.
pub fn dft_unscaled_forward(data: &mut [Complex64]) {
    let fft = with_planner(|p| p.plan_fft_forward(data.len()));
    fft.process(data);
}

/// In-place `S_k = sum_m x_m e^{+2 pi i k m / M}` (no `1/M`).
pub fn dft_unscaled_inverse(data: &mut [Complex64]) {
    let fft = with_planner(|p| p.plan_fft_inverse(data.len()));
    fft.process(data);
}

/// Two-dimensional unscaled inverse DFT, rows then columns.
pub fn dft2_unscaled_inverse(data: &mut Array2<Complex64>) {
    let (rows, cols) = data.dim();
    let row_fft = with_planner(|p| p.plan_fft_inverse(cols));
    for mut row in data.rows_mut() {
        let slice = row.as_slice_mut().expect("row-major layout");
        row_fft.process(slice);
    }
    let col_fft = with_planner(|p| p.plan_fft_inverse(rows));
    let mut scratch = vec![Complex64::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            scratch[r] = data[[r, c]];
        }
        col_fft.process(&mut scratch);
        for r in 0..rows {
            data[[r, c]] = scratch[r];
        }
    }
}

/// Signed FFT-order index for slot `k` of an `m`-point transform.
pub fn signed_index(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip() {
        let n = 64;
        let orig: Vec<Complex64> =
            (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut buf = orig.clone();
        dft_unscaled_forward(&mut buf);
        dft_unscaled_inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_unscaled() {
        let n = 128;
        let orig: Vec<Complex64> =
            (0..n).map(|i| Complex64::new((i as f64 * 0.11).sin(), 0.2)).collect();
        let e0: f64 = orig.iter().map(|v| v.norm_sqr()).sum();
        let mut buf = orig;
        dft_unscaled_forward(&mut buf);
        let e1: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        assert!((e1 - n as f64 * e0).abs() <= 1e-9 * e1.abs());
    }
}
