//! Gowers–Host–Kra uniformity seminorms of a sequence at finite scale.
//!
//! Degree 1: `‖u‖² = (1/H) Σ_{h=1..H} ρ_N(h)`.
//! Degree s+1: `‖u‖^{2^{s+1}} = (1/H) Σ_{h=1..H} ‖v_h‖^{2^s}` with
//! `v_h(n) = u(n+h)·conj(u(n))`.
//!
//! The inner `Σ_{h=1..H} ρ_N(h)` is a single pass: for each `n` the lag sum
//! collapses to a window of prefix sums, so degree `s` costs
//! `O(N · H_2 ⋯ H_s)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{AveragingMode, AveragingScheme, Weights};
use crate::error::{Error, Result};
use crate::seqgen::SequenceSample;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityResult {
    pub degree: u32,
    /// `H_1..H_s`, innermost first.
    pub windows: Vec<usize>,
    pub cutoffs: Vec<usize>,
    /// Seminorm at every cutoff.
    pub per_cutoff: Vec<f64>,
    /// Seminorm at the largest cutoff.
    pub value: f64,
    /// Averaged quantity before clamping and root-taking, largest cutoff.
    pub raw: Complex64,
    pub imag_residue: f64,
}

/// `‖u‖_{u^1}` with window `H`.
pub fn u1_norm(u: &SequenceSample, scheme: &AveragingScheme, h: usize) -> Result<UniformityResult> {
    us_norm_any(u, scheme, &[h])
}

/// `‖u‖_{u^s}` for `s ∈ {2, 3}`; `windows = [H_1, …, H_s]`, innermost first.
pub fn us_norm(u: &SequenceSample, scheme: &AveragingScheme, s: u32, windows: &[usize]) -> Result<UniformityResult> {
    if !(s == 2 || s == 3) {
        return Err(Error::Unsupported(format!("uniformity degree {s}; supported degrees are 2 and 3")));
    }
    if windows.len() != s as usize {
        return Err(Error::validation(format!("degree {s} needs {s} windows, got {}", windows.len())));
    }
    us_norm_any(u, scheme, windows)
}

fn us_norm_any(u: &SequenceSample, scheme: &AveragingScheme, windows: &[usize]) -> Result<UniformityResult> {
    if windows.iter().any(|&h| h == 0) {
        return Err(Error::validation("windows must be positive"));
    }
    let total: usize = windows.iter().sum();
    scheme.check_fits(u.len(), total, "uniformity norm")?;
    if windows[0] >= scheme.lengths()[0] {
        return Err(Error::bounds(format!(
            "innermost window {} must be smaller than the first cutoff {}",
            windows[0],
            scheme.lengths()[0]
        )));
    }
    let s = windows.len() as u32;
    let raws: Vec<Complex64> = scheme
        .lengths()
        .iter()
        .map(|&n| raw_average(u.values(), n, scheme.mode, windows))
        .collect();
    let root = |z: &Complex64| z.re.max(0.0).powf(1.0 / 2f64.powi(s as i32));
    let per_cutoff: Vec<f64> = raws.iter().map(root).collect();
    let raw = *raws.last().expect("non-empty");
    Ok(UniformityResult {
        degree: s,
        windows: windows.to_vec(),
        cutoffs: scheme.lengths().to_vec(),
        value: *per_cutoff.last().expect("non-empty"),
        per_cutoff,
        raw,
        imag_residue: raws.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
    })
}

/// The averaged quantity `‖u‖^{2^s}` before clamping, at cutoff `n`.
pub fn raw_average(u: &[Complex64], n: usize, mode: AveragingMode, windows: &[usize]) -> Complex64 {
    match windows {
        [h] => lag_window_sum(u, n, mode, *h) / *h as f64,
        [rest @ .., outer] => {
            let parts: Vec<Complex64> = (1..=*outer)
                .into_par_iter()
                .map(|h| {
                    let v: Vec<Complex64> = u[h..].iter().zip(u).map(|(a, b)| a * b.conj()).collect();
                    raw_average(&v, n, mode, rest)
                })
                .collect();
            parts.iter().sum::<Complex64>() / *outer as f64
        }
        [] => unreachable!("at least one window"),
    }
}

/// `Σ_{h=1..H} ρ_N(h)` for the truncated, weighted autocorrelation of `v`.
fn lag_window_sum(v: &[Complex64], n: usize, mode: AveragingMode, h: usize) -> Complex64 {
    let w = Weights::new(mode, n);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(ZERO);
    let mut acc = ZERO;
    for x in &v[..n] {
        acc += x;
        prefix.push(acc);
    }
    let mut total = ZERO;
    for i in 0..n {
        let hi = (i + 1 + h).min(n);
        let window = prefix[hi] - prefix[i + 1];
        total += v[i] * window.conj() * w.at(i + 1);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::seqgen::{alternating, constant, quadratic_phase};

    #[test]
    fn constant_has_unit_norms() {
        let one = constant(3000).unwrap();
        let s = AveragingScheme::cesaro(vec![2000]).unwrap();
        assert!((u1_norm(&one, &s, 20).unwrap().value - 1.0).abs() < 0.01);
        assert!((us_norm(&one, &s, 2, &[10, 10]).unwrap().value - 1.0).abs() < 0.01);
        assert!((us_norm(&one, &s, 3, &[5, 5, 5]).unwrap().value - 1.0).abs() < 0.01);
    }

    #[test]
    fn alternating_u1_vanishes_u2_does_not() {
        let a = alternating(5000).unwrap();
        let s = AveragingScheme::cesaro(vec![4000]).unwrap();
        let u1 = u1_norm(&a, &s, 50).unwrap();
        assert!(u1.value <= 2.0 / 50.0, "{}", u1.value);
        let u2 = us_norm(&a, &s, 2, &[20, 20]).unwrap();
        assert!(u2.value > 0.99, "{}", u2.value);
    }

    #[test]
    fn window_sum_matches_direct_oracle() {
        let q = quadratic_phase(1200, 3f64.sqrt() - 1.0).unwrap();
        for mode in [AveragingMode::Cesaro, AveragingMode::Logarithmic] {
            let fast = raw_average(q.values(), 1000, mode, &[7, 5]);
            let slow = oracle::us_raw_direct(q.values(), 1000, mode, &[7, 5]);
            assert!((fast - slow).norm() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn unsupported_degree() {
        let one = constant(100).unwrap();
        let s = AveragingScheme::cesaro(vec![50]).unwrap();
        assert!(matches!(us_norm(&one, &s, 4, &[2, 2, 2, 2]), Err(Error::Unsupported(_))));
        assert!(matches!(us_norm(&one, &s, 2, &[2]), Err(Error::Validation(_))));
    }
}
