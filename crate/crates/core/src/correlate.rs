//! Autocorrelations and the statistics built from them: averaged Chowla sums,
//! short-interval variance, the Wiener atom estimate and the reduction from
//! double to multiple correlations.
//!
//! Sums are one-sided and truncated: `ρ_N(h) = Σ_{n <= N-h} w_N(n)·u(n)·conj(u(n+h))`
//! with Cesàro weights `1/N` or logarithmic weights `1/(n·L(N))`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{AveragingMode, AveragingScheme, ConvergenceReport, Weights};
use crate::error::{Error, Result};
use crate::seqgen::SequenceSample;
use crate::spectral::{cross_correlate, Correlator};

/// Enumerate all shift tuples when `H^k` is at most this.
pub const EXACT_ENUMERATION_LIMIT: u64 = 100_000;

const FFT_MIN_LAG: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub n: usize,
    pub h_max: usize,
    pub mode: AveragingMode,
    /// `values[h] = ρ_N(h)` for `h = 0..=h_max`.
    pub values: Vec<Complex64>,
}

impl CorrelationProfile {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "h,abs_rho")?;
        for (h, v) in self.values.iter().enumerate() {
            writeln!(f, "{h},{}", v.norm())?;
        }
        f.flush()?;
        Ok(())
    }
}

/// One entry of a sweep over the window parameter `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub h: usize,
    pub report: ConvergenceReport,
}

fn check_lag_range(len: usize, n: usize, h: usize) -> Result<()> {
    if h >= n {
        return Err(Error::bounds(format!("lag {h} must be smaller than N = {n}")));
    }
    if n + h > len {
        return Err(Error::bounds(format!("N + H = {} exceeds the sample length {len}", n + h)));
    }
    Ok(())
}

/// Cesàro autocorrelation profile `ρ_N(0..=h)`.
pub fn autocorr(u: &SequenceSample, n: usize, h: usize) -> Result<CorrelationProfile> {
    autocorr_weighted(u, n, h, AveragingMode::Cesaro)
}

pub fn autocorr_weighted(u: &SequenceSample, n: usize, h: usize, mode: AveragingMode) -> Result<CorrelationProfile> {
    check_lag_range(u.len(), n, h)?;
    let values = if h >= FFT_MIN_LAG && n >= 4 * FFT_MIN_LAG {
        autocorr_fft(u.values(), n, h, mode)
    } else {
        autocorr_direct(u.values(), n, h, mode)
    };
    Ok(CorrelationProfile { n, h_max: h, mode, values })
}

/// O(N·H) evaluation.
pub fn autocorr_direct(u: &[Complex64], n: usize, h_max: usize, mode: AveragingMode) -> Vec<Complex64> {
    let w = Weights::new(mode, n);
    (0..=h_max)
        .map(|h| {
            let mut acc = ZERO;
            for i in 0..n.saturating_sub(h) {
                acc += u[i] * u[i + h].conj() * w.at(i + 1);
            }
            acc
        })
        .collect()
}

/// O(N log N) evaluation through a zero-padded cross-correlation.
pub fn autocorr_fft(u: &[Complex64], n: usize, h_max: usize, mode: AveragingMode) -> Vec<Complex64> {
    let w = Weights::new(mode, n);
    let a: Vec<_> = u[..n].iter().enumerate().map(|(i, v)| v * w.at(i + 1)).collect();
    cross_correlate(&a, &u[..n], h_max)
}

fn profiles(u: &SequenceSample, scheme: &AveragingScheme, h_max: usize) -> Result<Vec<CorrelationProfile>> {
    scheme
        .lengths()
        .iter()
        .map(|&n| autocorr_weighted(u, n, h_max, scheme.mode))
        .collect()
}

fn check_sweep(hs: &[usize]) -> Result<usize> {
    match hs.iter().max() {
        Some(&m) if hs.iter().all(|&h| h >= 1) => Ok(m),
        _ => Err(Error::validation("window sweep must be a non-empty list of positive H")),
    }
}

/// Averaged 2-Chowla statistic `(1/H) Σ_{h=1..H} |ρ_{N_k}(h)|`, one report per `H`.
pub fn averaged_chowla2(u: &SequenceSample, scheme: &AveragingScheme, hs: &[usize]) -> Result<Vec<SweepEntry>> {
    let h_max = check_sweep(hs)?;
    let profs = profiles(u, scheme, h_max)?;
    Ok(hs
        .iter()
        .map(|&h| {
            let vals = profs
                .iter()
                .map(|p| p.values[1..=h].iter().map(|z| z.norm()).sum::<f64>() / h as f64)
                .collect();
            SweepEntry { h, report: ConvergenceReport::from_real(scheme.lengths().to_vec(), vals) }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChowlaKReport {
    pub h: usize,
    pub k: usize,
    /// True when every tuple in `[1, H]^k` was enumerated.
    pub exact: bool,
    pub tuples: u64,
    pub report: ConvergenceReport,
    /// Monte Carlo standard error per cutoff (zeros when exact).
    pub stderr: Vec<f64>,
}

/// Averaged Chowla statistic
/// `(1/H^k) Σ_{h_1..h_k <= H} |Σ_{n <= N} w_N(n)·u(n)·Π v_i(n+h_i)|`.
///
/// All tuples are enumerated when `H^k <= 100 000`; otherwise `samples`
/// tuples are drawn uniformly with a ChaCha8 stream seeded by `seed`.
pub fn averaged_chowlak(
    u: &SequenceSample,
    vs: &[&SequenceSample],
    scheme: &AveragingScheme,
    h: usize,
    samples: usize,
    seed: u64,
) -> Result<ChowlaKReport> {
    let vals: Vec<&[Complex64]> = vs.iter().map(|v| v.values()).collect();
    chowlak_slices(u.values(), &vals, scheme, h, samples, seed)
}

pub(crate) fn chowlak_slices(
    u: &[Complex64],
    vs: &[&[Complex64]],
    scheme: &AveragingScheme,
    h: usize,
    samples: usize,
    seed: u64,
) -> Result<ChowlaKReport> {
    let k = vs.len();
    if k == 0 {
        return Err(Error::validation("averaged Chowla needs at least one shifted sequence (k >= 1)"));
    }
    if h == 0 {
        return Err(Error::validation("H must be positive"));
    }
    scheme.check_fits(u.len(), 0, "averaged Chowla (u)")?;
    for (i, v) in vs.iter().enumerate() {
        scheme.check_fits(v.len(), h, &format!("averaged Chowla (v_{})", i + 1))?;
    }
    let total = (h as u64).checked_pow(k as u32);
    let cutoffs = scheme.lengths().to_vec();
    match total {
        Some(t) if t <= EXACT_ENUMERATION_LIMIT => {
            let vals = cutoffs
                .iter()
                .map(|&n| chowlak_exact_at(u, vs, n, scheme.mode, h))
                .collect();
            Ok(ChowlaKReport {
                h,
                k,
                exact: true,
                tuples: t,
                report: ConvergenceReport::from_real(cutoffs.clone(), vals),
                stderr: vec![0.0; cutoffs.len()],
            })
        }
        _ => {
            if samples == 0 {
                return Err(Error::validation("Monte Carlo estimation needs samples >= 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tuples: Vec<Vec<usize>> = (0..samples)
                .map(|_| (0..k).map(|_| rng.gen_range(1..=h)).collect())
                .collect();
            let per: Vec<Vec<f64>> = tuples
                .par_iter()
                .map(|t| inner_all_cutoffs(u, vs, t, scheme))
                .collect();
            let m = samples as f64;
            let mut means = vec![0.0; cutoffs.len()];
            let mut errs = vec![0.0; cutoffs.len()];
            for c in 0..cutoffs.len() {
                let mean = per.iter().map(|r| r[c]).sum::<f64>() / m;
                let var = if samples > 1 {
                    per.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (m - 1.0)
                } else {
                    0.0
                };
                means[c] = mean;
                errs[c] = (var / m).sqrt();
            }
            Ok(ChowlaKReport {
                h,
                k,
                exact: false,
                tuples: samples as u64,
                report: ConvergenceReport::from_real(cutoffs, means),
                stderr: errs,
            })
        }
    }
}

/// `|Σ_{n<=N} w(n)·u(n)·Π v_i(n+t_i)|` at every cutoff, one pass.
fn inner_all_cutoffs(u: &[Complex64], vs: &[&[Complex64]], t: &[usize], scheme: &AveragingScheme) -> Vec<f64> {
    let mut plain = ZERO;
    let mut logw = ZERO;
    let mut out = Vec::with_capacity(scheme.lengths().len());
    let mut next = 0;
    for i in 0..scheme.max_cutoff() {
        let mut x = u[i];
        for (v, &s) in vs.iter().zip(t) {
            x *= v[i + s];
        }
        plain += x;
        logw += x / (i + 1) as f64;
        if i + 1 == scheme.lengths()[next] {
            let n = i + 1;
            out.push(match scheme.mode {
                AveragingMode::Cesaro => (plain / n as f64).norm(),
                AveragingMode::Logarithmic => (logw / crate::averaging::harmonic(n)).norm(),
            });
            next += 1;
        }
    }
    out
}

fn chowlak_exact_at(u: &[Complex64], vs: &[&[Complex64]], n: usize, mode: AveragingMode, h: usize) -> f64 {
    let w = Weights::new(mode, n);
    let k = vs.len();
    let (head, last) = vs.split_at(k - 1);
    let last = last[0];
    let conj_last: Vec<Complex64> = last[..n + h].iter().map(|z| z.conj()).collect();
    let correlator = (h >= FFT_MIN_LAG).then(|| Correlator::new(&conj_last, n, h));
    let prefixes: Vec<Vec<usize>> = tuples(k - 1, h);
    let sums: Vec<f64> = prefixes
        .par_iter()
        .map(|t| {
            let g: Vec<Complex64> = (0..n)
                .map(|i| {
                    let mut x = u[i] * w.at(i + 1);
                    for (v, &s) in head.iter().zip(t) {
                        x *= v[i + s];
                    }
                    x
                })
                .collect();
            if let Some(corr) = &correlator {
                let c = corr.correlate(&g);
                c[1..=h].iter().map(|z| z.norm()).sum::<f64>()
            } else {
                (1..=h)
                    .map(|s| {
                        let mut acc = ZERO;
                        for (i, gi) in g.iter().enumerate() {
                            acc += gi * last[i + s];
                        }
                        acc.norm()
                    })
                    .sum::<f64>()
            }
        })
        .collect();
    sums.iter().sum::<f64>() / (h as f64).powi(k as i32)
}

/// All tuples in `[1, h]^len`, lexicographic.
fn tuples(len: usize, h: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=h).map(move |s| {
                    let mut t = t.clone();
                    t.push(s);
                    t
                })
            })
            .collect();
    }
    out
}

/// Short-interval variance `Σ_{n<=N} w_N(n)·|(1/H) Σ_{h=1..H} u(n+h)|²`, one report per `H`.
pub fn short_interval_variance(u: &SequenceSample, scheme: &AveragingScheme, hs: &[usize]) -> Result<Vec<SweepEntry>> {
    let h_max = check_sweep(hs)?;
    scheme.check_fits(u.len(), h_max, "short-interval variance")?;
    let end = scheme.max_cutoff() + h_max;
    let mut prefix = Vec::with_capacity(end + 1);
    prefix.push(ZERO);
    let mut acc = ZERO;
    for v in &u.values()[..end] {
        acc += v;
        prefix.push(acc);
    }
    Ok(hs
        .iter()
        .map(|&h| {
            let mut plain = 0.0;
            let mut logw = 0.0;
            let mut out = Vec::with_capacity(scheme.lengths().len());
            let mut next = 0;
            for n in 1..=scheme.max_cutoff() {
                let s = ((prefix[n + h] - prefix[n]) / h as f64).norm_sqr();
                plain += s;
                logw += s / n as f64;
                if n == scheme.lengths()[next] {
                    out.push(match scheme.mode {
                        AveragingMode::Cesaro => plain / n as f64,
                        AveragingMode::Logarithmic => logw / crate::averaging::harmonic(n),
                    });
                    next += 1;
                }
            }
            SweepEntry { h, report: ConvergenceReport::from_real(scheme.lengths().to_vec(), out) }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerEntry {
    pub h: usize,
    pub report: ConvergenceReport,
    /// Largest `|Im|` across cutoffs; the atom itself is real in the limit.
    pub imag_residue: f64,
}

/// Wiener atom estimate `(1/H) Σ_{h=0..H-1} ρ_N(h)`, one report per `H`.
pub fn wiener_atom(u: &SequenceSample, scheme: &AveragingScheme, hs: &[usize]) -> Result<Vec<WienerEntry>> {
    let h_max = check_sweep(hs)?;
    let profs = profiles(u, scheme, h_max - 1)?;
    Ok(hs
        .iter()
        .map(|&h| {
            let vals: Vec<Complex64> = profs
                .iter()
                .map(|p| p.values[..h].iter().sum::<Complex64>() / h as f64)
                .collect();
            let imag_residue = vals.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            WienerEntry { h, report: ConvergenceReport::from_values(scheme.lengths().to_vec(), vals), imag_residue }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareVsAbsolute {
    pub mean_abs: f64,
    pub mean_sq: f64,
    /// `mean_sq^{1/4} + mean_sq^{1/2}`.
    pub rhs: f64,
    pub holds: bool,
}

impl SquareVsAbsolute {
    /// For values bounded by 1.
    pub fn of(xs: &[Complex64]) -> Self {
        let m = xs.len() as f64;
        let mean_abs = xs.iter().map(|z| z.norm()).sum::<f64>() / m;
        let mean_sq = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
        let rhs = mean_sq.powf(0.25) + mean_sq.sqrt();
        SquareVsAbsolute { mean_abs, mean_sq, rhs, holds: mean_abs <= rhs * (1.0 + 1e-12) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixAReport {
    pub h: usize,
    pub h_prime: usize,
    pub k: usize,
    pub cutoffs: Vec<usize>,
    /// Multi-correlation average `A` with `b_i(n) = u(n+i)`.
    pub a: Vec<f64>,
    pub a_exact: bool,
    /// `D(H') = (1/H') Σ_{|h| <= H'} |ρ_N(h)|²`.
    pub d: Vec<f64>,
    /// `sqrt(D) + H'/N + H'^k/H`.
    pub bound: Vec<f64>,
    pub holds: bool,
    /// Square-vs-absolute check on `ρ_N(1..=H)/bound²` at the largest cutoff.
    pub square_vs_absolute: SquareVsAbsolute,
}

/// Compares the averaged multiple correlation against the double-correlation
/// bound with unit constants.
pub fn appendix_a_report(
    u: &SequenceSample,
    scheme: &AveragingScheme,
    h: usize,
    h_prime: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<AppendixAReport> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if h_prime == 0 || h_prime >= h {
        return Err(Error::validation(format!("need 1 <= H' < H, got H' = {h_prime}, H = {h}")));
    }
    scheme.check_fits(u.len(), h + k, "double-vs-multiple correlation report")?;
    let vals = u.values();
    let shifted: Vec<&[Complex64]> = (1..=k).map(|i| &vals[i..]).collect();
    let multi = chowlak_slices(vals, &shifted, scheme, h, samples, seed)?;
    let profs = profiles(u, scheme, h)?;
    let hp = h_prime as f64;
    let mut d = Vec::new();
    let mut bound = Vec::new();
    for (p, &n) in profs.iter().zip(scheme.lengths()) {
        let side: f64 = p.values[1..=h_prime].iter().map(|z| z.norm_sqr()).sum();
        let dv = (p.values[0].norm_sqr() + 2.0 * side) / hp;
        d.push(dv);
        bound.push(dv.sqrt() + hp / n as f64 + hp.powi(k as i32) / h as f64);
    }
    let a = multi.report.real_values();
    let holds = a.iter().zip(&bound).all(|(x, b)| x <= b);
    let b2 = (u.bound() * u.bound()).max(f64::MIN_POSITIVE);
    let normalized: Vec<Complex64> = profs.last().expect("non-empty").values[1..=h].iter().map(|z| z / b2).collect();
    Ok(AppendixAReport {
        h,
        h_prime,
        k,
        cutoffs: scheme.lengths().to_vec(),
        a,
        a_exact: multi.exact,
        d,
        bound,
        holds,
        square_vs_absolute: SquareVsAbsolute::of(&normalized),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{alternating, constant, iid_signs, linear_phase, mobius};

    #[test]
    fn constant_profile_is_boundary_truncated() {
        let one = constant(200).unwrap();
        let p = autocorr(&one, 100, 50).unwrap();
        for h in 0..=50 {
            assert!((p.values[h].re - (100 - h) as f64 / 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_profile_has_parity_signs() {
        let a = alternating(300).unwrap();
        let p = autocorr(&a, 200, 40).unwrap();
        for h in 0..=40 {
            let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
            assert!((p.values[h].re - sign * (200 - h) as f64 / 200.0).abs() < 1e-12);
        }
    }

    #[test]
    fn range_violations() {
        let one = constant(100).unwrap();
        assert!(matches!(autocorr(&one, 60, 50), Err(Error::Bounds(_))));
        assert!(matches!(autocorr(&one, 10, 10), Err(Error::Bounds(_))));
    }

    #[test]
    fn fft_and_direct_agree_with_log_weights() {
        let mu = mobius(3000).unwrap();
        let a = autocorr_direct(mu.values(), 2000, 60, AveragingMode::Logarithmic);
        let b = autocorr_fft(mu.values(), 2000, 60, AveragingMode::Logarithmic);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn short_interval_variance_edge_cases() {
        let s = AveragingScheme::cesaro(vec![1000]).unwrap();
        let one = short_interval_variance(&constant(1100).unwrap(), &s, &[10]).unwrap();
        assert!((one[0].report.tail.re - 1.0).abs() < 1e-12);
        let alt = short_interval_variance(&alternating(1100).unwrap(), &s, &[2, 10, 50]).unwrap();
        for e in alt {
            assert_eq!(e.report.tail.re, 0.0);
        }
    }

    #[test]
    fn wiener_atom_edge_cases() {
        let s = AveragingScheme::cesaro(vec![5000]).unwrap();
        let one = wiener_atom(&constant(6000).unwrap(), &s, &[10]).unwrap();
        assert!((one[0].report.tail.re - 1.0).abs() < 0.01);
        let alt = wiener_atom(&alternating(6000).unwrap(), &s, &[10, 11]).unwrap();
        for e in &alt {
            assert!(e.report.tail.norm() <= 1.0 / e.h as f64);
        }
    }

    #[test]
    fn chowla2_distinguishes_parity_from_noise() {
        let s = AveragingScheme::cesaro(vec![20_000]).unwrap();
        let alt = averaged_chowla2(&alternating(20_100).unwrap(), &s, &[50]).unwrap();
        assert!(alt[0].report.tail.re > 0.99);
        let one = averaged_chowla2(&constant(20_100).unwrap(), &s, &[50]).unwrap();
        assert!(one[0].report.tail.re > 0.99);
        let noise = averaged_chowla2(&iid_signs(20_100, 3).unwrap(), &s, &[50]).unwrap();
        assert!(noise[0].report.tail.re < 0.02);
    }

    #[test]
    fn chowlak_rejects_k_zero() {
        let one = constant(100).unwrap();
        let s = AveragingScheme::cesaro(vec![50]).unwrap();
        assert!(matches!(averaged_chowlak(&one, &[], &s, 5, 10, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn chowlak_constant_u_is_bounded_by_one() {
        let one = constant(400).unwrap();
        let v = linear_phase(400, 0.3).unwrap();
        let s = AveragingScheme::cesaro(vec![300]).unwrap();
        let r = averaged_chowlak(&one, &[&v, &v], &s, 20, 10, 0).unwrap();
        assert!(r.exact);
        assert!(r.report.tail.re <= 1.0 + 1e-12);
    }

    #[test]
    fn chowlak_monte_carlo_reports_stderr() {
        let u = iid_signs(3000, 1).unwrap();
        let s = AveragingScheme::cesaro(vec![1000, 2000]).unwrap();
        let r = averaged_chowlak(&u, &[&u, &u, &u], &s, 50, 200, 9).unwrap();
        assert!(!r.exact);
        assert_eq!(r.tuples, 200);
        assert!(r.stderr.iter().all(|&e| e > 0.0));
        let again = averaged_chowlak(&u, &[&u, &u, &u], &s, 50, 200, 9).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn square_vs_absolute_inequality() {
        let xs: Vec<_> = (0..100).map(|i| Complex64::new(((i * 7) % 13) as f64 / 13.0, 0.0)).collect();
        assert!(SquareVsAbsolute::of(&xs).holds);
    }

    #[test]
    fn multi_correlation_bound_on_constant() {
        let one = constant(3000).unwrap();
        let s = AveragingScheme::cesaro(vec![2000]).unwrap();
        let r = appendix_a_report(&one, &s, 40, 5, 2, 100, 0).unwrap();
        assert!((r.a[0] - 1.0).abs() < 1e-9);
        assert!(r.d[0] > 1.0);
        assert!(r.holds);
    }
}
