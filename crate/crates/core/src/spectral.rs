//! FFT kernels shared by the correlation and exponential-sum statistics.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// `c[h] = Σ_n a[n]·conj(b[n+h])` for `h = 0..=max_lag`, with `a`, `b` zero outside
/// their slices (no wraparound).
pub fn cross_correlate(a: &[Complex64], b: &[Complex64], max_lag: usize) -> Vec<Complex64> {
    Correlator::new(b, a.len(), max_lag).correlate(a)
}

/// [`cross_correlate`] against a fixed `b`, keeping its transform.
pub struct Correlator {
    size: usize,
    max_lag: usize,
    fb: Vec<Complex64>,
}

impl Correlator {
    /// `a_len` is the longest `a` that will be passed to [`Correlator::correlate`].
    pub fn new(b: &[Complex64], a_len: usize, max_lag: usize) -> Self {
        let size = (a_len.max(b.len()) + max_lag + 1).next_power_of_two();
        let mut fb = vec![Complex64::new(0.0, 0.0); size];
        fb[..b.len()].copy_from_slice(b);
        plan(size, false).process(&mut fb);
        for z in fb.iter_mut() {
            *z = z.conj();
        }
        Correlator { size, max_lag, fb }
    }

    pub fn correlate(&self, a: &[Complex64]) -> Vec<Complex64> {
        let size = self.size;
        assert!(a.len() + self.max_lag < size, "input longer than planned");
        let mut fa = vec![Complex64::new(0.0, 0.0); size];
        fa[..a.len()].copy_from_slice(a);
        plan(size, false).process(&mut fa);
        for (x, y) in fa.iter_mut().zip(&self.fb) {
            *x *= y;
        }
        plan(size, true).process(&mut fa);
        let scale = 1.0 / size as f64;
        (0..=self.max_lag).map(|h| fa[(size - h) % size] * scale).collect()
    }
}

/// `|Σ_j x[j]·e(j·k/grid)|` for every `k < grid`, where `e(t) = exp(2πit)`.
pub fn trig_poly_moduli(x: &[Complex64], grid: usize) -> Vec<f64> {
    assert!(grid >= x.len(), "grid must cover the block");
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    buf[..x.len()].copy_from_slice(x);
    plan(grid, true).process(&mut buf);
    buf.iter().map(|z| z.norm()).collect()
}

/// Direct evaluation of `|Σ_j x[j]·e(j·alpha)|`.
pub fn trig_poly_modulus(x: &[Complex64], alpha: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &v) in x.iter().enumerate() {
        acc += v * crate::seqgen::e(crate::seqgen::frac_mul(j as f64, alpha));
    }
    acc.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cross_correlation_matches_direct_sums() {
        let a: Vec<_> = (0..37).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let b: Vec<_> = (0..50).map(|i| Complex64::new((i as f64 * 0.7).cos(), 0.1 * i as f64)).collect();
        let got = cross_correlate(&a, &b, 12);
        for h in 0..=12 {
            let mut want = Complex64::new(0.0, 0.0);
            for n in 0..a.len() {
                if n + h < b.len() {
                    want += a[n] * b[n + h].conj();
                }
            }
            assert!((got[h] - want).norm() < 1e-9, "lag {h}");
        }
    }

    #[test]
    fn grid_moduli_of_constant_block_peak_at_zero() {
        let x = vec![c(1.0); 8];
        let m = trig_poly_moduli(&x, 64);
        assert!((m[0] - 8.0).abs() < 1e-12);
        assert!(m[32] < 1e-9);
    }
}
