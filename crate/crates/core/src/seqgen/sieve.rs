//! Möbius and Liouville tables.
//!
//! Up to [`LINEAR_SIEVE_LIMIT`] a linear sieve fills the whole table in one
//! pass. Above it the range is cut into fixed segments that are sieved
//! independently against the base primes up to `sqrt(n)` and concatenated in
//! order, so memory stays proportional to the output.

use rayon::prelude::*;

pub const LINEAR_SIEVE_LIMIT: usize = 1 << 26;
const SEGMENT: usize = 1 << 18;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Mobius,
    Liouville,
}

/// `t[k] = μ(k)` for `1 <= k <= n`; `t[0] = 0`.
pub fn mobius_table(n: usize) -> Vec<i8> {
    table(n, Kind::Mobius)
}

/// `t[k] = λ(k)` for `1 <= k <= n`; `t[0] = 0`.
pub fn liouville_table(n: usize) -> Vec<i8> {
    table(n, Kind::Liouville)
}

fn table(n: usize, kind: Kind) -> Vec<i8> {
    if n <= LINEAR_SIEVE_LIMIT {
        linear(n, kind)
    } else {
        segmented(n, kind)
    }
}

fn linear(n: usize, kind: Kind) -> Vec<i8> {
    let mut out = vec![0i8; n + 1];
    if n == 0 {
        return out;
    }
    out[1] = 1;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            out[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                out[ip] = match kind {
                    Kind::Mobius => 0,
                    Kind::Liouville => -out[i],
                };
                break;
            }
            out[ip] = -out[i];
        }
    }
    out
}

fn base_primes(limit: usize) -> Vec<u64> {
    let mut is_p = vec![true; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if is_p[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                is_p[j] = false;
                j += i;
            }
        }
    }
    primes
}

fn segmented(n: usize, kind: Kind) -> Vec<i8> {
    let root = (n as f64).sqrt() as usize + 1;
    let primes = base_primes(root);
    let starts: Vec<usize> = (1..=n).step_by(SEGMENT).collect();
    let parts: Vec<Vec<i8>> = starts
        .par_iter()
        .map(|&lo| sieve_segment(lo as u64, (lo + SEGMENT).min(n + 1) as u64, &primes, kind))
        .collect();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0);
    for p in parts {
        out.extend_from_slice(&p);
    }
    out
}

fn sieve_segment(lo: u64, hi: u64, primes: &[u64], kind: Kind) -> Vec<i8> {
    let len = (hi - lo) as usize;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut sign = vec![1i8; len];
    for &p in primes {
        if p * p >= hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        let mut x = first;
        while x < hi {
            let i = (x - lo) as usize;
            if sign[i] != 0 {
                rem[i] /= p;
                sign[i] = -sign[i];
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    match kind {
                        Kind::Mobius => {
                            sign[i] = 0;
                            break;
                        }
                        Kind::Liouville => sign[i] = -sign[i],
                    }
                }
            }
            x += p;
        }
    }
    for i in 0..len {
        if sign[i] != 0 && rem[i] > 1 {
            sign[i] = -sign[i];
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segmented_matches_linear() {
        let n = 3 * SEGMENT + 12_345;
        for kind in [Kind::Mobius, Kind::Liouville] {
            assert!(linear(n, kind) == segmented(n, kind));
        }
    }

    #[test]
    fn segment_near_a_square_of_a_large_prime() {
        // 1_000_003 is prime; its square sits in a far segment.
        let p: u64 = 1_000_003;
        let primes = base_primes(p as usize + 1);
        let lo = p * p - 5;
        let mu = sieve_segment(lo, lo + 10, &primes, Kind::Mobius);
        let lam = sieve_segment(lo, lo + 10, &primes, Kind::Liouville);
        assert_eq!(mu[5], 0);
        assert_eq!(lam[5], 1);
    }
}
