//! Slow reference implementations used to cross-check the fast paths.
//!
//! Everything here is a direct transcription of a definition, with no
//! transforms, prefix sums or caching.

use num_complex::Complex64;

use crate::averaging::{AveragingMode, Weights};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Prime factorization by trial division, with multiplicity.
pub fn factor(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn mobius(n: u64) -> i8 {
    let f = factor(n);
    if f.windows(2).any(|w| w[0] == w[1]) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn liouville(n: u64) -> i8 {
    if factor(n).len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `Σ_{n <= N-h} w_N(n)·u(n)·conj(u(n+h))` for `h = 0..=h_max`.
pub fn autocorr(u: &[Complex64], n: usize, h_max: usize, mode: AveragingMode) -> Vec<Complex64> {
    let w = Weights::new(mode, n);
    (0..=h_max)
        .map(|h| {
            let mut acc = ZERO;
            for m in 1..=n - h {
                acc += u[m - 1] * u[m + h - 1].conj() * w.at(m);
            }
            acc
        })
        .collect()
}

/// Uniformity-norm raw average by explicit nested loops:
/// `(1/H_s) Σ_{h_s} … (1/H_1) Σ_{h_1} Σ_{n} w_N(n) Π_ω C^{|ω|+s+1} u(n + ω·h)`
/// with the sum truncated to `n + h_1 <= N`. The conjugation pattern is the
/// one produced by iterating `v(n) = u(n+h)·conj(u(n))`.
pub fn us_raw_direct(u: &[Complex64], n: usize, mode: AveragingMode, windows: &[usize]) -> Complex64 {
    let s = windows.len();
    let w = Weights::new(mode, n);
    let mut total = ZERO;
    let outer: usize = windows[1..].iter().product();
    for idx in 0..outer {
        // decode (h_2, …, h_s) in [1, H_i]
        let mut rest = idx;
        let mut hs = vec![0usize; s];
        for i in 1..s {
            hs[i] = rest % windows[i] + 1;
            rest /= windows[i];
        }
        for h1 in 1..=windows[0] {
            hs[0] = h1;
            let mut inner = ZERO;
            for m in 1..=n.saturating_sub(h1) {
                let mut prod = Complex64::new(1.0, 0.0);
                for mask in 0..(1usize << s) {
                    let shift: usize = (0..s).filter(|i| mask >> i & 1 == 1).map(|i| hs[i]).sum();
                    let z = u[m + shift - 1];
                    prod *= if (mask.count_ones() as usize + s) % 2 == 0 { z.conj() } else { z };
                }
                inner += prod * w.at(m);
            }
            total += inner;
        }
    }
    let norm: f64 = windows.iter().map(|&h| h as f64).product();
    total / norm
}

/// `(1/H^k) Σ_{t ∈ [1,H]^k} |Σ_{n<=N} w_N(n)·u(n)·Π v_i(n+t_i)|`.
pub fn chowlak(u: &[Complex64], vs: &[&[Complex64]], n: usize, mode: AveragingMode, h: usize) -> f64 {
    let k = vs.len();
    let w = Weights::new(mode, n);
    let count = h.pow(k as u32);
    let mut total = 0.0;
    for idx in 0..count {
        let mut rest = idx;
        let t: Vec<usize> = (0..k)
            .map(|_| {
                let s = rest % h + 1;
                rest /= h;
                s
            })
            .collect();
        let mut acc = ZERO;
        for m in 1..=n {
            let mut x = u[m - 1] * w.at(m);
            for (v, &s) in vs.iter().zip(&t) {
                x *= v[m + s - 1];
            }
            acc += x;
        }
        total += acc.norm();
    }
    total / count as f64
}

fn same(a: &[Complex64], b: &[Complex64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= 1e-9)
}

/// Cesàro cancellation statistic for an explicit block set, scanning
/// every position and comparing windows element by element (to 1e-9).
pub fn cancellation(u: &[Complex64], n: usize, m: usize, blocks: &[Vec<Complex64>]) -> f64 {
    let mut acc = ZERO;
    for p in 1..=n {
        let start = m + p - 1;
        if blocks.iter().any(|b| same(&u[start..start + b.len()], b)) {
            acc += u[p - 1];
        }
    }
    acc.norm() / n as f64
}

/// `max_S |Σ_{i∈S} z_i|` over all `2^len` subsets.
pub fn subset_sup(z: &[Complex64]) -> f64 {
    assert!(z.len() <= 24, "exhaustive search is limited to 24 terms");
    (0u32..1 << z.len())
        .map(|mask| (0..z.len()).filter(|i| mask >> i & 1 == 1).map(|i| z[i]).sum::<Complex64>().norm())
        .fold(0.0, f64::max)
}

/// Per-block sums `Σ_{n<=N} u(n)·1[block at m+n = B]` over all observed blocks, Cesàro-normalized.
pub fn block_sums(u: &[Complex64], n: usize, m: usize, ell: usize) -> Vec<(Vec<Complex64>, Complex64)> {
    let mut out: Vec<(Vec<Complex64>, Complex64)> = Vec::new();
    for p in 1..=n {
        let b = &u[m + p - 1..m + p - 1 + ell];
        match out.iter_mut().find(|(k, _)| same(k, b)) {
            Some((_, s)) => *s += u[p - 1],
            None => out.push((b.to_vec(), u[p - 1])),
        }
    }
    for (_, s) in out.iter_mut() {
        *s /= n as f64;
    }
    out
}

/// `max_j |Σ_i x_i·e(i·j/points)|` by direct evaluation at every grid point.
pub fn dense_sup(x: &[Complex64], points: usize) -> f64 {
    (0..points)
        .map(|j| {
            let a = j as f64 / points as f64;
            x.iter()
                .enumerate()
                .map(|(i, &z)| z * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (i as f64 * a).fract()))
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}
