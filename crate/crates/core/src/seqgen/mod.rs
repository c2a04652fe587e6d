//! Bounded arithmetic-function samples: generation, transforms and persistence.

mod character;
mod io;
mod sieve;

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use character::{jacobi, Character};
pub use io::{load_sequence, save_sequence, SequenceFormat, BINARY_MAGIC};
pub use sieve::{liouville_table, mobius_table, LINEAR_SIEVE_LIMIT};

/// Default cap on `N` for sieve-generated samples.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 31;

/// Alphabets larger than this are not tracked.
pub const MAX_ALPHABET: usize = 256;

const ALPHABET_QUANTUM: f64 = 1e9;

/// A finite window `u(1..=N)` of a bounded complex sequence.
///
/// `values[0]` holds `u(1)`. Every value has modulus at most `bound`; when an
/// alphabet is present every value is (up to 1e-9) one of its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSample {
    values: Vec<Complex64>,
    bound: f64,
    alphabet: Option<Vec<Complex64>>,
    pub label: String,
}

impl SequenceSample {
    pub fn new(
        values: Vec<Complex64>,
        bound: f64,
        alphabet: Option<Vec<Complex64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("a sample needs at least one value"));
        }
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::validation(format!("bound {bound} is not a finite non-negative number")));
        }
        let tol = bound * 1e-12 + 1e-15;
        for (i, v) in values.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::validation(format!("u({}) is not finite", i + 1)));
            }
            if v.norm() > bound + tol {
                return Err(Error::validation(format!(
                    "|u({})| = {} exceeds the bound {bound}",
                    i + 1,
                    v.norm()
                )));
            }
        }
        if let Some(alpha) = &alphabet {
            let keys: HashMap<_, _> = alpha.iter().map(|a| (quantize(*a), ())).collect();
            if keys.len() != alpha.len() {
                return Err(Error::validation("alphabet entries must be distinct"));
            }
            if let Some(i) = values.iter().position(|v| !keys.contains_key(&quantize(*v))) {
                return Err(Error::validation(format!("u({}) = {} is not in the alphabet", i + 1, values[i])));
            }
        }
        Ok(SequenceSample { values, bound, alphabet, label: label.into() })
    }

    /// Builds a sample with the tightest bound and an inferred alphabet.
    pub fn from_values(values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        let bound = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let alphabet = distinct_values(&values, MAX_ALPHABET);
        Self::new(values, bound, alphabet, label)
    }

    pub fn from_real(values: &[f64], label: impl Into<String>) -> Result<Self> {
        Self::from_values(values.iter().map(|&x| Complex64::new(x, 0.0)).collect(), label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `u(n)` for `1 <= n <= len`.
    pub fn get(&self, n: usize) -> Complex64 {
        self.values[n - 1]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn alphabet(&self) -> Option<&[Complex64]> {
        self.alphabet.as_deref()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// The first `n` values as a new sample.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::bounds(format!("cannot truncate a sample of length {} to {n}", self.len())));
        }
        let values = self.values[..n].to_vec();
        let alphabet = self.alphabet.as_ref().and_then(|_| distinct_values(&values, MAX_ALPHABET));
        Self::new(values, self.bound, alphabet, self.label.clone())
    }

    /// `v_h(n) = u(n+h)·conj(u(n))` for `n = 1..=len-h`.
    pub fn shifted_product(&self, h: usize) -> Result<Self> {
        if h >= self.len() {
            return Err(Error::bounds(format!("shift {h} leaves no values in a sample of length {}", self.len())));
        }
        let values: Vec<_> = self.values[h..]
            .iter()
            .zip(&self.values)
            .map(|(a, b)| a * b.conj())
            .collect();
        let alphabet = self.alphabet.as_ref().and_then(|_| distinct_values(&values, MAX_ALPHABET));
        Self::new(values, self.bound * self.bound, alphabet, format!("{}*shift{h}", self.label))
    }
}

fn quantize(z: Complex64) -> (i64, i64) {
    ((z.re * ALPHABET_QUANTUM).round() as i64, (z.im * ALPHABET_QUANTUM).round() as i64)
}

/// Distinct values (first occurrence order), or `None` beyond `cap` of them.
pub fn distinct_values(values: &[Complex64], cap: usize) -> Option<Vec<Complex64>> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for &v in values {
        if seen.insert(quantize(v), ()).is_none() {
            out.push(v);
            if out.len() > cap {
                return None;
            }
        }
    }
    Some(out)
}

/// Index of every value in `alphabet`, matched at 1e-9 resolution.
pub(crate) fn symbol_indices(values: &[Complex64], alphabet: &[Complex64]) -> Result<Vec<u16>> {
    let map: HashMap<_, u16> = alphabet.iter().enumerate().map(|(i, a)| (quantize(*a), i as u16)).collect();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            map.get(&quantize(*v))
                .copied()
                .ok_or_else(|| Error::validation(format!("u({}) = {v} is not in the alphabet", i + 1)))
        })
        .collect()
}

/// Fractional part of `m·alpha`, carrying the product's rounding error.
pub fn frac_mul(m: f64, alpha: f64) -> f64 {
    let p = m * alpha;
    let err = m.mul_add(alpha, -p);
    let f = (p - p.floor()) + err;
    f - f.floor()
}

/// `exp(2πi·t)`.
pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * t)
}

/// A stored value plus one sieve byte.
const BYTES_PER_VALUE: usize = 17;

/// `budget` is in bytes.
fn check_budget(n: usize, budget: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("N must be at least 1"));
    }
    if n.saturating_mul(BYTES_PER_VALUE) > budget {
        return Err(Error::Resource {
            what: format!("sequence length N = {n} needs {} bytes", n.saturating_mul(BYTES_PER_VALUE)),
            limit: budget as u128,
        });
    }
    Ok(())
}

fn signs_to_sample(table: Vec<i8>, alphabet: &[f64], label: String) -> Result<SequenceSample> {
    let values = table[1..].iter().map(|&s| Complex64::new(s as f64, 0.0)).collect();
    let alphabet = alphabet.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    Ok(SequenceSample { values, bound: 1.0, alphabet: Some(alphabet), label })
}

/// Möbius function `μ(1..=n)`.
pub fn mobius(n: usize) -> Result<SequenceSample> {
    mobius_with_budget(n, DEFAULT_MEMORY_BUDGET)
}

pub fn mobius_with_budget(n: usize, budget: usize) -> Result<SequenceSample> {
    check_budget(n, budget)?;
    signs_to_sample(mobius_table(n), &[-1.0, 0.0, 1.0], format!("mobius({n})"))
}

/// Liouville function `λ(1..=n)`.
pub fn liouville(n: usize) -> Result<SequenceSample> {
    liouville_with_budget(n, DEFAULT_MEMORY_BUDGET)
}

pub fn liouville_with_budget(n: usize, budget: usize) -> Result<SequenceSample> {
    check_budget(n, budget)?;
    signs_to_sample(liouville_table(n), &[-1.0, 1.0], format!("liouville({n})"))
}

/// The constant sequence 1.
pub fn constant(n: usize) -> Result<SequenceSample> {
    check_budget(n, DEFAULT_MEMORY_BUDGET)?;
    SequenceSample::from_real(&vec![1.0; n], format!("const({n})"))
}

/// `(-1)^n`.
pub fn alternating(n: usize) -> Result<SequenceSample> {
    check_budget(n, DEFAULT_MEMORY_BUDGET)?;
    let v: Vec<f64> = (1..=n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
    SequenceSample::from_real(&v, format!("alternating({n})"))
}

/// `e(n·alpha)`.
pub fn linear_phase(n: usize, alpha: f64) -> Result<SequenceSample> {
    check_budget(n, DEFAULT_MEMORY_BUDGET)?;
    let values = (1..=n).map(|k| e(frac_mul(k as f64, alpha))).collect();
    SequenceSample::new(values, 1.0, None, format!("phase({n},{alpha})"))
}

/// `e(n²·alpha)`.
pub fn quadratic_phase(n: usize, alpha: f64) -> Result<SequenceSample> {
    check_budget(n, DEFAULT_MEMORY_BUDGET)?;
    if n as f64 * n as f64 > 2f64.powi(53) {
        return Err(Error::Resource { what: "n² must be exact in f64".into(), limit: 1 << 26 });
    }
    let values = (1..=n).map(|k| e(frac_mul((k * k) as f64, alpha))).collect();
    SequenceSample::new(values, 1.0, None, format!("quadphase({n},{alpha})"))
}

/// Seeded i.i.d. uniform ±1 signs.
pub fn iid_signs(n: usize, seed: u64) -> Result<SequenceSample> {
    check_budget(n, DEFAULT_MEMORY_BUDGET)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
        .collect();
    let alphabet = vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
    Ok(SequenceSample { values, bound: 1.0, alphabet: Some(alphabet), label: format!("iid({n},{seed})") })
}

/// `u(n)·χ(n)` for a Dirichlet character modulo `q`.
pub fn dirichlet_twist(u: &SequenceSample, q: u64, chi: &Character) -> Result<SequenceSample> {
    let table = chi.table(q)?;
    let values: Vec<_> = u
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * table[(i as u64 + 1) as usize % table.len()])
        .collect();
    let alphabet = match (&u.alphabet, distinct_values(&table, MAX_ALPHABET)) {
        (Some(_), Some(_)) => distinct_values(&values, MAX_ALPHABET),
        _ => None,
    };
    Ok(SequenceSample { values, bound: u.bound, alphabet, label: format!("{}*chi[{q}]", u.label) })
}

/// `u(n)·e(n·alpha)`.
pub fn modulate(u: &SequenceSample, alpha: f64) -> SequenceSample {
    let values: Vec<_> = u
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * e(frac_mul((i + 1) as f64, alpha)))
        .collect();
    let alphabet = if alpha == 0.0 {
        u.alphabet.clone()
    } else if u.alphabet.is_some() && small_denominator(alpha, 64).is_some() {
        distinct_values(&values, MAX_ALPHABET)
    } else {
        None
    };
    SequenceSample { values, bound: u.bound, alphabet, label: format!("{}*e({alpha})", u.label) }
}

/// Denominator `q <= max_q` with `|alpha - p/q| < 1e-12`, if any.
pub fn small_denominator(alpha: f64, max_q: u64) -> Option<u64> {
    (1..=max_q).find(|&q| {
        let x = alpha * q as f64;
        (x - x.round()).abs() < 1e-12 * q as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(u: &SequenceSample) -> Vec<f64> {
        u.values().iter().map(|z| z.re).collect()
    }

    #[test]
    fn mobius_small_values() {
        let mu = mobius(12).unwrap();
        assert_eq!(re(&mu), vec![1.0, -1.0, -1.0, 0.0, -1.0, 1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
        assert_eq!(mobius(1).unwrap().values(), &[Complex64::new(1.0, 0.0)]);
        let partial: f64 = re(&mobius(10).unwrap()).iter().sum();
        assert_eq!(partial, -1.0);
    }

    #[test]
    fn liouville_small_values() {
        let l = liouville(13).unwrap();
        assert_eq!(l.get(1).re, 1.0);
        for p in [2, 3, 5, 7, 11, 13] {
            assert_eq!(l.get(p).re, -1.0);
        }
        assert_eq!(l.get(8).re, -1.0);
        assert_eq!(l.get(12).re, -1.0);
    }

    #[test]
    fn budget_is_enforced() {
        let err = mobius_with_budget(1000, 16_999).unwrap_err();
        assert!(matches!(err, Error::Resource { limit: 16_999, .. }));
        assert!(mobius_with_budget(1000, 17_000).is_ok());
        assert_eq!(err.exit_code(), 3);
        assert!(mobius(0).is_err());
    }

    #[test]
    fn modulate_half_turn_on_constant() {
        let one = constant(6).unwrap();
        let v = modulate(&one, 0.5);
        for n in 1..=6 {
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v.get(n) - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
        assert_eq!(v.alphabet().map(|a| a.len()), Some(2));
        assert_eq!(modulate(&one, 0.0), SequenceSample { label: one.label.clone() + "*e(0)", ..one.clone() });
    }

    #[test]
    fn modulate_third_on_liouville() {
        let l = liouville(10).unwrap();
        let v = modulate(&l, 1.0 / 3.0);
        let want = l.get(4) * Complex64::from_polar(1.0, 8.0 * std::f64::consts::PI / 3.0);
        assert!((v.get(4) - want).norm() < 1e-12);
    }

    #[test]
    fn sample_validation() {
        let bad = SequenceSample::new(vec![Complex64::new(2.0, 0.0)], 1.0, None, "x");
        assert!(matches!(bad, Err(Error::Validation(_))));
        let off_alphabet = SequenceSample::new(
            vec![Complex64::new(0.5, 0.0)],
            1.0,
            Some(vec![Complex64::new(1.0, 0.0)]),
            "x",
        );
        assert!(off_alphabet.is_err());
        assert!(SequenceSample::new(vec![], 1.0, None, "x").is_err());
    }

    #[test]
    fn shifted_product_of_alternating_is_constant() {
        let a = alternating(10).unwrap();
        let v = a.shifted_product(3).unwrap();
        assert_eq!(v.len(), 7);
        assert!(v.values().iter().all(|z| (z.re + 1.0).abs() < 1e-15));
    }

    #[test]
    fn frac_mul_is_accurate_for_large_products() {
        let alpha = 2f64.sqrt() - 1.0;
        let m = 1e9_f64;
        let f = frac_mul(m, alpha);
        assert!((0.0..1.0).contains(&f));
        let g = frac_mul(m + 1.0, alpha);
        let step = (g - f).rem_euclid(1.0);
        assert!((step - alpha).abs() < 1e-6);
    }
}
