//! Planned 2D discrete Fourier transforms on N×N grids.
//!
//! Convention: f(x) = Σ_k û(k) e^{2πik·x} with û(k) = (1/N²) Σ_x f(x) e^{-2πik·x},
//! so Parseval reads (1/N²) Σ_x |f|² = Σ_k |û|² with no 2π factors.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Plans {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Apply the planned 1D transform to every row of the row-major N×N buffer.
fn transform_rows(fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], n: usize) {
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
}

/// Unnormalized 2D forward DFT, in place.
pub(crate) fn dft2_forward(buf: &mut [Complex64], n: usize) {
    let p = plans(n);
    transform_rows(&p.fwd, buf, n);
    transpose(buf, n);
    transform_rows(&p.fwd, buf, n);
    transpose(buf, n);
}

/// Unnormalized 2D inverse DFT, in place.
pub(crate) fn dft2_inverse(buf: &mut [Complex64], n: usize) {
    let p = plans(n);
    transform_rows(&p.inv, buf, n);
    transpose(buf, n);
    transform_rows(&p.inv, buf, n);
    transpose(buf, n);
}

/// Forward transform of a real N×N field to coefficients û(k), including the
/// 1/N² normalization.
pub(crate) fn coefficients_of(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft2_forward(&mut buf, n);
    let scale = 1.0 / (n * n) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Evaluate f(x) = Σ û(k) e^{2πik·x} on the grid; the complex result carries
/// a negligible imaginary part for Hermitian input.
pub(crate) fn synthesis_of(coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    dft2_inverse(&mut buf, n);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_round_trip() {
        let n = 16;
        let values: Vec<f64> = (0..n * n)
            .map(|i| ((i * 7919 + 13) % 101) as f64 / 101.0 - 0.5)
            .collect();
        let coeffs = coefficients_of(&values, n);
        let back = synthesis_of(&coeffs, n);
        for (v, b) in values.iter().zip(back.iter()) {
            assert!((v - b.re).abs() < 1e-12);
            assert!(b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn single_cosine_lands_on_two_bins() {
        let n = 32;
        let values: Vec<f64> = (0..n * n)
            .map(|idx| {
                let i = idx / n;
                (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()
            })
            .collect();
        let coeffs = coefficients_of(&values, n);
        // modes (±1, 0) carry 1/2 each, everything else vanishes
        for i in 0..n {
            for j in 0..n {
                let c = coeffs[i * n + j];
                let expected = if j == 0 && (i == 1 || i == n - 1) {
                    0.5
                } else {
                    0.0
                };
                assert!(
                    (c.re - expected).abs() < 1e-13 && c.im.abs() < 1e-13,
                    "bin ({i},{j}) = {c}"
                );
            }
        }
    }
}
