use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Dirichlet character modulo `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Character {
    Principal,
    /// `n ↦ (n | q)`, the Jacobi symbol; `q` odd.
    Jacobi,
    /// `g^a ↦ e(index·a/(q−1))` for a primitive root `g`; `q` prime.
    PrimeIndex(u64),
    /// Explicit values `χ(0), …, χ(q−1)`.
    Table(Vec<Complex64>),
}

impl Character {
    /// Values `χ(0..q)`.
    pub fn table(&self, q: u64) -> Result<Vec<Complex64>> {
        if q == 0 {
            return Err(Error::validation("modulus must be positive"));
        }
        let real = |x: f64| Complex64::new(x, 0.0);
        match self {
            Character::Principal => Ok((0..q).map(|n| real(if gcd(n, q) == 1 { 1.0 } else { 0.0 })).collect()),
            Character::Jacobi => {
                if q % 2 == 0 {
                    return Err(Error::validation(format!("Jacobi symbol needs an odd modulus, got {q}")));
                }
                Ok((0..q).map(|n| real(jacobi(n, q) as f64)).collect())
            }
            Character::PrimeIndex(index) => {
                if q < 3 || !is_prime(q) {
                    return Err(Error::Unsupported(format!(
                        "index characters need a prime modulus >= 3, got {q}; pass an explicit table"
                    )));
                }
                let g = primitive_root(q);
                let mut t = vec![real(0.0); q as usize];
                let mut x = 1u64;
                for a in 0..q - 1 {
                    t[x as usize] = crate::seqgen::e(((index * a) % (q - 1)) as f64 / (q - 1) as f64);
                    x = x * g % q;
                }
                Ok(t)
            }
            Character::Table(t) => {
                validate_table(t, q)?;
                Ok(t.clone())
            }
        }
    }
}

fn validate_table(t: &[Complex64], q: u64) -> Result<()> {
    if t.len() as u64 != q {
        return Err(Error::validation(format!("character table has {} entries, modulus is {q}", t.len())));
    }
    if (t[(1 % q) as usize] - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::validation("character table must have chi(1) = 1"));
    }
    for a in 0..q {
        for b in a..q {
            let lhs = t[(a * b % q) as usize];
            let rhs = t[a as usize] * t[b as usize];
            if (lhs - rhs).norm() > 1e-9 {
                return Err(Error::validation(format!(
                    "table is not multiplicative mod {q}: chi({a}·{b}) = {lhs} but chi({a})·chi({b}) = {rhs}"
                )));
            }
        }
    }
    Ok(())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("every prime has a primitive root")
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Jacobi symbol `(a | n)` for odd `n >= 1`.
pub fn jacobi(a: u64, n: u64) -> i32 {
    assert!(n % 2 == 1, "Jacobi symbol needs odd n");
    let mut a = a % n;
    let mut n = n;
    let mut s = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                s = -s;
            }
        }
        (a, n) = (n, a);
        if a % 4 == 3 && n % 4 == 3 {
            s = -s;
        }
        a %= n;
    }
    if n == 1 {
        s
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{constant, dirichlet_twist, liouville};

    #[test]
    fn principal_mod_one_is_identity() {
        let l = liouville(50).unwrap();
        let t = dirichlet_twist(&l, 1, &Character::Principal).unwrap();
        assert_eq!(t.values(), l.values());
    }

    #[test]
    fn nontrivial_mod_four_on_constant() {
        let r = |x: f64| Complex64::new(x, 0.0);
        let chi = Character::Table(vec![r(0.0), r(1.0), r(0.0), r(-1.0)]);
        let t = dirichlet_twist(&constant(8).unwrap(), 4, &chi).unwrap();
        let got: Vec<f64> = t.values().iter().map(|z| z.re).collect();
        assert_eq!(got, vec![1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn jacobi_mod_three_on_liouville() {
        let t = dirichlet_twist(&liouville(5).unwrap(), 3, &Character::Jacobi).unwrap();
        assert_eq!(t.get(2).re, 1.0);
    }

    #[test]
    fn non_multiplicative_table_names_a_pair() {
        let r = |x: f64| Complex64::new(x, 0.0);
        let chi = Character::Table(vec![r(0.0), r(1.0), r(1.0), r(-1.0), r(0.0)]);
        let err = dirichlet_twist(&constant(4).unwrap(), 5, &chi).unwrap_err().to_string();
        assert!(err.contains("not multiplicative"), "{err}");
    }

    #[test]
    fn prime_index_character_is_multiplicative() {
        let t = Character::PrimeIndex(2).table(7).unwrap();
        validate_table(&t, 7).unwrap();
        // index (q-1)/2 is the Legendre symbol
        let legendre = Character::PrimeIndex(3).table(7).unwrap();
        for n in 0..7 {
            assert!((legendre[n as usize].re - jacobi(n, 7) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_known_values() {
        assert_eq!(jacobi(2, 3), -1);
        assert_eq!(jacobi(1001, 9907), -1);
        assert_eq!(jacobi(19, 45), 1);
        assert_eq!(jacobi(3, 9), 0);
    }
}
