//! Cesàro and logarithmic averages evaluated along an increasing list of cutoffs.
//!
//! A [`ConvergenceReport`] is the finite stand-in for a limit along `(N_k)`:
//! one value per cutoff, the value at the largest cutoff as the tail estimate,
//! and the spread over the last third of cutoffs as a convergence signal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingMode {
    Cesaro,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingScheme {
    pub mode: AveragingMode,
    lengths: Vec<usize>,
}

impl AveragingScheme {
    pub fn new(mode: AveragingMode, lengths: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::validation("an averaging scheme needs at least one cutoff"));
        }
        if lengths[0] == 0 {
            return Err(Error::validation("cutoffs must be positive"));
        }
        if let Some(w) = lengths.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "cutoffs must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(AveragingScheme { mode, lengths })
    }

    pub fn cesaro(lengths: Vec<usize>) -> Result<Self> {
        Self::new(AveragingMode::Cesaro, lengths)
    }

    pub fn logarithmic(lengths: Vec<usize>) -> Result<Self> {
        Self::new(AveragingMode::Logarithmic, lengths)
    }

    /// A single Cesàro cutoff.
    pub fn single(n: usize) -> Self {
        Self::cesaro(vec![n.max(1)]).expect("one positive cutoff")
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn max_cutoff(&self) -> usize {
        *self.lengths.last().expect("non-empty")
    }

    /// Errors unless `max_cutoff + extra <= available`.
    pub fn check_fits(&self, available: usize, extra: usize, what: &str) -> Result<()> {
        let need = self.max_cutoff() + extra;
        if need > available {
            return Err(Error::bounds(format!(
                "{what} needs {need} values (cutoff {} + {extra}) but the sample has {available}",
                self.max_cutoff()
            )));
        }
        Ok(())
    }

    /// Per-index weights `w_N(n)` for `n = 1..=n_cut`, summing to 1.
    pub fn weights(&self, n_cut: usize) -> Weights {
        Weights::new(self.mode, n_cut)
    }
}

/// Averaging weights at a single cutoff.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    mode: AveragingMode,
    norm: f64,
}

impl Weights {
    pub fn new(mode: AveragingMode, n_cut: usize) -> Self {
        let norm = match mode {
            AveragingMode::Cesaro => n_cut as f64,
            AveragingMode::Logarithmic => harmonic(n_cut),
        };
        Weights { mode, norm }
    }

    /// Weight of index `n >= 1`.
    #[inline]
    pub fn at(&self, n: usize) -> f64 {
        match self.mode {
            AveragingMode::Cesaro => 1.0 / self.norm,
            AveragingMode::Logarithmic => 1.0 / (n as f64 * self.norm),
        }
    }
}

/// `L(N) = 1 + 1/2 + … + 1/N`, summed with compensation.
pub fn harmonic(n: usize) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for k in 1..=n {
        let x = 1.0 / k as f64;
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub cutoffs: Vec<usize>,
    pub values: Vec<Complex64>,
    pub tail: Complex64,
    pub spread: f64,
}

impl ConvergenceReport {
    pub fn from_values(cutoffs: Vec<usize>, values: Vec<Complex64>) -> Self {
        assert_eq!(cutoffs.len(), values.len());
        assert!(!values.is_empty());
        let k = values.len();
        let last = &values[k - k.div_ceil(3)..];
        let mut spread = 0.0f64;
        for (i, a) in last.iter().enumerate() {
            for b in &last[i + 1..] {
                spread = spread.max((a - b).norm());
            }
        }
        ConvergenceReport { cutoffs, tail: values[k - 1], values, spread }
    }

    pub fn from_real(cutoffs: Vec<usize>, values: Vec<f64>) -> Self {
        Self::from_values(cutoffs, values.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    }

    /// Real part at the largest cutoff.
    pub fn tail_re(&self) -> f64 {
        self.tail.re
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

/// Weighted averages of `x(1..)` at every cutoff of `scheme`.
pub fn average(x: &[Complex64], scheme: &AveragingScheme) -> Result<ConvergenceReport> {
    scheme.check_fits(x.len(), 0, "average")?;
    let mut plain = Complex64::new(0.0, 0.0);
    let mut logw = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(scheme.lengths().len());
    let mut next = 0;
    for (i, &v) in x.iter().enumerate().take(scheme.max_cutoff()) {
        let n = i + 1;
        plain += v;
        logw += v / n as f64;
        if n == scheme.lengths()[next] {
            out.push(match scheme.mode {
                AveragingMode::Cesaro => plain / n as f64,
                AveragingMode::Logarithmic => logw / harmonic(n),
            });
            next += 1;
        }
    }
    Ok(ConvergenceReport::from_values(scheme.lengths().to_vec(), out))
}

pub fn average_real(x: &[f64], scheme: &AveragingScheme) -> Result<ConvergenceReport> {
    let z: Vec<_> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    average(&z, scheme)
}

/// `(1/L(N)) Σ_{d_k <= N} 1/d_k` at every cutoff.
pub fn log_density(indices: &[usize], scheme: &AveragingScheme) -> Result<ConvergenceReport> {
    let ones = vec![1.0; indices.len()];
    log_weighted_average(indices, &ones, scheme)
}

/// `(1/L(N)) Σ_{d_k <= N} ρ_k/d_k` at every cutoff, weights `ρ_k ∈ [0, 1]`.
pub fn log_weighted_average(indices: &[usize], weights: &[f64], scheme: &AveragingScheme) -> Result<ConvergenceReport> {
    if indices.len() != weights.len() {
        return Err(Error::validation(format!(
            "{} indices but {} weights",
            indices.len(),
            weights.len()
        )));
    }
    if let Some(i) = weights.iter().position(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::validation(format!("weight {} at position {i} is outside [0, 1]", weights[i])));
    }
    if indices.first() == Some(&0) {
        return Err(Error::validation("indices must be positive"));
    }
    if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::validation(format!("indices must increase, got {} then {}", w[0], w[1])));
    }
    let mut out = Vec::with_capacity(scheme.lengths().len());
    let mut acc = 0.0;
    let mut k = 0;
    for &n_cut in scheme.lengths() {
        while k < indices.len() && indices[k] <= n_cut {
            acc += weights[k] / indices[k] as f64;
            k += 1;
        }
        out.push(acc / harmonic(n_cut));
    }
    Ok(ConvergenceReport::from_real(scheme.lengths().to_vec(), out))
}

/// Roughly geometric grid of `count` integers from `lo` to `hi`, deduplicated.
pub fn geometric_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    assert!(lo >= 1 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![hi];
    }
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<usize> = (0..count)
        .map(|i| ((lo as f64) * ratio.powi(i as i32)).round() as usize)
        .collect();
    out[count - 1] = hi;
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn harmonic_of_four() {
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
        assert_eq!(harmonic(1), 1.0);
    }

    #[test]
    fn constant_averages_to_one() {
        let x = vec![c(1.0); 500];
        for mode in [AveragingMode::Cesaro, AveragingMode::Logarithmic] {
            let s = AveragingScheme::new(mode, vec![1, 10, 100, 500]).unwrap();
            let r = average(&x, &s).unwrap();
            for v in r.values {
                assert!((v.re - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn alternating_cesaro_cancels_exactly() {
        let x: Vec<_> = (1..=1000).map(|n| c(if n % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let r = average(&x, &AveragingScheme::cesaro(vec![1000]).unwrap()).unwrap();
        assert_eq!(r.tail.re, 0.0);
    }

    #[test]
    fn cutoff_beyond_series_is_a_bounds_error() {
        let x = vec![c(1.0); 10];
        let err = average(&x, &AveragingScheme::cesaro(vec![11]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Bounds(_)));
    }

    #[test]
    fn scheme_validation() {
        assert!(AveragingScheme::cesaro(vec![]).is_err());
        assert!(AveragingScheme::cesaro(vec![10, 10]).is_err());
        assert!(AveragingScheme::cesaro(vec![0, 10]).is_err());
    }

    #[test]
    fn log_density_edge_cases() {
        let s = AveragingScheme::logarithmic(vec![10, 100, 1000]).unwrap();
        let all: Vec<usize> = (1..=1000).collect();
        for v in log_density(&all, &s).unwrap().real_values() {
            assert!((v - 1.0).abs() < 1e-13);
        }
        let one = log_density(&[1], &s).unwrap();
        assert!((one.tail.re - 1.0 / harmonic(1000)).abs() < 1e-15);
        assert!(log_density(&[3, 2], &s).is_err());
        let zero = log_weighted_average(&all, &vec![0.0; 1000], &s).unwrap();
        assert_eq!(zero.tail.re, 0.0);
        assert!(log_weighted_average(&[1], &[1.5], &s).is_err());
    }

    #[test]
    fn spread_uses_last_third() {
        let r = ConvergenceReport::from_real(vec![1, 2, 3, 4, 5, 6], vec![9.0, 9.0, 9.0, 9.0, 1.0, 1.5]);
        assert_eq!(r.spread, 0.5);
        assert_eq!(r.tail.re, 1.5);
        let single = ConvergenceReport::from_real(vec![1], vec![2.0]);
        assert_eq!(single.spread, 0.0);
    }

    #[test]
    fn report_json_fields() {
        let r = ConvergenceReport::from_real(vec![1, 2], vec![0.5, 0.25]);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["cutoffs"], serde_json::json!([1, 2]));
        assert_eq!(v["values"][1], serde_json::json!([0.25, 0.0]));
        assert_eq!(v["tail"], serde_json::json!([0.25, 0.0]));
        assert_eq!(v["spread"], serde_json::json!(0.0));
    }

    #[test]
    fn geometric_grid_endpoints() {
        assert_eq!(geometric_grid(100, 10_000, 3), vec![100, 1000, 10_000]);
        assert_eq!(geometric_grid(5, 5, 4), vec![5]);
    }
}
