//! Block-wise orthogonality statistics against rotations.
//!
//! For a partition `1 = b_1 < b_2 < …` and a horizon `N`, with
//! `K_N = max{k : b_k < N}`, the blocks are `[b_k, b_{k+1})` for `k < K_N`
//! plus the partial block `[b_{K_N}, N)`. Every statistic is normalized by `1/N`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqgen::{e, frac_mul, SequenceSample};
use crate::spectral::{trig_poly_moduli, trig_poly_modulus};

pub const DEFAULT_OVERSAMPLE: usize = 64;
/// Blocks shorter than this are refined by default.
pub const REFINE_BELOW: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PartitionKind {
    /// `b_k = ⌈c·k^γ⌉`, with `1` prepended and repeats removed.
    Power { c: f64, gamma: f64 },
    /// `b_{k+1} = b_k + ⌈√b_k · ln(b_k + 1)⌉`.
    SqrtLog,
    Explicit { cuts: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub kind: PartitionKind,
    pub n: usize,
    /// All cuts below `n`; `cuts.len()` is `K_N`.
    pub cuts: Vec<usize>,
    /// `(b_K - b_{K-1}) / b_{K-1}` for the last full block.
    pub last_gap_ratio: f64,
    /// Index (0-based) from which gaps are non-decreasing.
    pub monotone_from: usize,
}

impl BlockPartition {
    pub fn new(kind: PartitionKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::validation("partition horizon must be at least 2"));
        }
        let cuts = match &kind {
            PartitionKind::Power { c, gamma } => {
                if !(*c > 0.0 && c.is_finite()) || !(*gamma > 1.0 && *gamma <= 2.0) {
                    return Err(Error::validation(format!("power partition needs c > 0 and γ in (1,2], got c={c}, γ={gamma}")));
                }
                let mut cuts = vec![1usize];
                for k in 1usize.. {
                    let b = (c * (k as f64).powf(*gamma)).ceil() as usize;
                    if b >= n {
                        break;
                    }
                    if b > *cuts.last().unwrap() {
                        cuts.push(b);
                    }
                }
                cuts
            }
            PartitionKind::SqrtLog => {
                let mut cuts = vec![1usize];
                loop {
                    let b = *cuts.last().unwrap();
                    let gap = ((b as f64).sqrt() * ((b + 1) as f64).ln()).ceil().max(1.0) as usize;
                    if b + gap >= n {
                        break;
                    }
                    cuts.push(b + gap);
                }
                cuts
            }
            PartitionKind::Explicit { cuts } => {
                if cuts.first() != Some(&1) {
                    return Err(Error::validation("explicit partition must start at 1"));
                }
                if let Some(w) = cuts.windows(2).find(|w| w[0] >= w[1]) {
                    return Err(Error::validation(format!("explicit partition not increasing at {} -> {}", w[0], w[1])));
                }
                cuts.iter().copied().filter(|&b| b < n).collect()
            }
        };
        let gaps: Vec<usize> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
        let last_gap_ratio = match cuts.len() {
            0 | 1 => f64::INFINITY,
            k => (cuts[k - 1] - cuts[k - 2]) as f64 / cuts[k - 2] as f64,
        };
        let mut monotone_from = gaps.len();
        while monotone_from > 0 && (monotone_from == gaps.len() || gaps[monotone_from - 1] <= gaps[monotone_from]) {
            monotone_from -= 1;
        }
        Ok(BlockPartition { kind, n, cuts, last_gap_ratio, monotone_from })
    }

    pub fn k_n(&self) -> usize {
        self.cuts.len()
    }

    /// Half-open blocks `[start, end)` in index order.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        (0..self.cuts.len())
            .map(|k| (self.cuts[k], self.cuts.get(k + 1).copied().unwrap_or(self.n)))
            .collect()
    }

    fn check(&self, u: &SequenceSample) -> Result<()> {
        if self.n > u.len() {
            return Err(Error::bounds(format!("partition horizon {} exceeds sample length {}", self.n, u.len())));
        }
        Ok(())
    }
}

/// `|Σ_{b_k <= n < b_{k+1}} u(n)·e(nα)|` for each block.
pub fn momo_rotation_blocks(u: &SequenceSample, part: &BlockPartition, alpha: f64) -> Result<Vec<f64>> {
    part.check(u)?;
    Ok(part
        .blocks()
        .iter()
        .map(|&(a, b)| (a..b).map(|n| u.get(n) * e(frac_mul(n as f64, alpha))).sum::<Complex64>().norm())
        .collect())
}

/// Fixed-frequency statistic `(1/N) Σ_k |Σ_{n in block k} u(n)·e(nα)|`.
pub fn momo_rotation(u: &SequenceSample, part: &BlockPartition, alpha: f64) -> Result<f64> {
    Ok(momo_rotation_blocks(u, part, alpha)?.iter().sum::<f64>() / part.n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSup {
    pub k: usize,
    pub start: usize,
    pub len: usize,
    pub grid_sup: f64,
    /// Reported supremum: the refined value when refinement ran, else `grid_sup`.
    pub sup: f64,
    /// Frequency of the maximum, relative to the block start.
    pub argmax: f64,
    /// `grid_sup >= guarantee · true sup`.
    pub guarantee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomoSupReport {
    pub n: usize,
    pub oversample: usize,
    pub value: f64,
    pub grid_value: f64,
    /// Smallest per-block guarantee factor.
    pub guarantee: f64,
    pub blocks: Vec<BlockSup>,
}

impl MomoSupReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "k,b_k,length,sup,guarantee_factor")?;
        for b in &self.blocks {
            writeln!(f, "{},{},{},{},{}", b.k, b.start, b.len, b.sup, b.guarantee)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Grid size used for a block of length `len`.
pub fn grid_size(len: usize, oversample: usize) -> usize {
    (oversample * len.max(1)).next_power_of_two()
}

/// `sup_α |Σ_j x_j e(jα)|` on an oversampled grid, optionally polished by a
/// golden-section search around the grid maximum.
/// Returns `(grid_sup, sup, argmax, guarantee)`.
pub fn sup_modulus(x: &[Complex64], oversample: usize, refine: bool) -> (f64, f64, f64, f64) {
    let g = grid_size(x.len(), oversample);
    let moduli = trig_poly_moduli(x, g);
    let (kmax, grid_sup) = moduli
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
    let guarantee = (1.0 - PI * x.len() as f64 / g as f64).max(0.0);
    let mut argmax = kmax as f64 / g as f64;
    let mut sup = grid_sup;
    if refine && x.len() > 1 {
        let f = |a: f64| trig_poly_modulus(x, a);
        let (mut lo, mut hi) = (argmax - 1.0 / g as f64, argmax + 1.0 / g as f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - r * (hi - lo);
        let mut d = lo + r * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..48 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - r * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + r * (hi - lo);
                fd = f(d);
            }
        }
        let (a, v) = if fc > fd { (c, fc) } else { (d, fd) };
        if v > sup {
            sup = v;
            argmax = a.rem_euclid(1.0);
        }
    }
    (grid_sup, sup, argmax, guarantee)
}

/// `(1/N) Σ_k sup_α |Σ_{n in block k} u(n)·e(nα)|`. `refine = None` refines
/// blocks shorter than [`REFINE_BELOW`].
pub fn momo_sup(u: &SequenceSample, part: &BlockPartition, oversample: usize, refine: Option<bool>) -> Result<MomoSupReport> {
    part.check(u)?;
    if oversample < 8 {
        return Err(Error::validation(format!("oversample must be at least 8, got {oversample}")));
    }
    let blocks: Vec<BlockSup> = part
        .blocks()
        .into_par_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let x = &u.values()[a - 1..b - 1];
            let (grid_sup, sup, argmax, guarantee) = sup_modulus(x, oversample, refine.unwrap_or(x.len() < REFINE_BELOW));
            BlockSup { k: k + 1, start: a, len: b - a, grid_sup, sup, argmax, guarantee }
        })
        .collect();
    let n = part.n as f64;
    Ok(MomoSupReport {
        n: part.n,
        oversample,
        value: blocks.iter().map(|b| b.sup).sum::<f64>() / n,
        grid_value: blocks.iter().map(|b| b.grid_sup).sum::<f64>() / n,
        guarantee: blocks.iter().map(|b| b.guarantee).fold(1.0, f64::min),
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrtReport {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub guarantee: f64,
}

/// Monte Carlo estimate of `(1/N) Σ_{n<=N} sup_α |(1/M) Σ_{n<=m<n+M} u(m)·e(mα)|`.
pub fn mrt_swapped(u: &SequenceSample, n: usize, m: usize, samples: usize, seed: u64, oversample: usize) -> Result<MrtReport> {
    if samples == 0 || n == 0 || m == 0 {
        return Err(Error::validation("N, M and the sample count must be positive"));
    }
    if oversample < 8 {
        return Err(Error::validation(format!("oversample must be at least 8, got {oversample}")));
    }
    if n + m > u.len() {
        return Err(Error::bounds(format!("N + M = {} exceeds sample length {}", n + m, u.len())));
    }
    let refine = m < REFINE_BELOW;
    let vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let start = rng.gen_range(1..=n);
            let x = &u.values()[start - 1..start - 1 + m];
            sup_modulus(x, oversample, refine).1 / m as f64
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / samples as f64;
    let var = if samples > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
    } else {
        0.0
    };
    Ok(MrtReport {
        n,
        m,
        samples,
        seed,
        mean,
        stderr: (var / samples as f64).sqrt(),
        guarantee: (1.0 - PI * m as f64 / grid_size(m, oversample) as f64).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{linear_phase, mobius};

    #[test]
    fn power_cuts_match_formula() {
        let p = BlockPartition::new(PartitionKind::Power { c: 1.0, gamma: 1.5 }, 100).unwrap();
        let mut want = vec![1usize];
        for k in 1..100usize {
            let b = (k as f64).powf(1.5).ceil() as usize;
            if b < 100 && b > *want.last().unwrap() {
                want.push(b);
            }
        }
        assert_eq!(p.cuts, want);
        assert_eq!(&p.cuts[..4], &[1, 3, 6, 8]);
    }

    #[test]
    fn explicit_tail_block() {
        let p = BlockPartition::new(PartitionKind::Explicit { cuts: vec![1, 10, 100] }, 50).unwrap();
        assert_eq!(p.k_n(), 2);
        assert_eq!(p.blocks(), vec![(1, 10), (10, 50)]);
        assert!(BlockPartition::new(PartitionKind::Explicit { cuts: vec![1, 10, 5] }, 50).is_err());
        assert!(BlockPartition::new(PartitionKind::Explicit { cuts: vec![2, 10] }, 50).is_err());
    }

    #[test]
    fn quadratic_partition_gap_ratio() {
        let p = BlockPartition::new(PartitionKind::Power { c: 2.0, gamma: 2.0 }, 1_000_000).unwrap();
        assert!(p.last_gap_ratio <= 0.01, "{}", p.last_gap_ratio);
        assert_eq!(p.monotone_from, 0);
    }

    #[test]
    fn sqrt_log_gaps_grow() {
        let p = BlockPartition::new(PartitionKind::SqrtLog, 1_000_000).unwrap();
        assert!(p.last_gap_ratio < 0.05);
        let gaps: Vec<usize> = p.cuts.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps[p.monotone_from..].windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn resonance_rotation_and_sup() {
        let alpha = 2f64.sqrt() - 1.0;
        let n = 20_000;
        let u = linear_phase(n, -alpha).unwrap();
        let p = BlockPartition::new(PartitionKind::Power { c: 1.0, gamma: 1.5 }, n).unwrap();
        let rot = momo_rotation(&u, &p, alpha).unwrap();
        assert!((rot - (n - 1) as f64 / n as f64).abs() < 1e-9);
        let s = momo_sup(&u, &p, 64, None).unwrap();
        assert!(s.value <= (n - 1) as f64 / n as f64 + 1e-9);
        assert!(s.grid_value >= s.guarantee * rot - 1e-12);
        assert!(s.value > 0.999);
    }

    #[test]
    fn zero_sequence_is_zero() {
        let u = SequenceSample::from_real(&vec![0.0; 1000], "zero").unwrap();
        let p = BlockPartition::new(PartitionKind::SqrtLog, 1000).unwrap();
        assert_eq!(momo_rotation(&u, &p, 0.3).unwrap(), 0.0);
        assert_eq!(momo_sup(&u, &p, 16, Some(true)).unwrap().value, 0.0);
        assert_eq!(mrt_swapped(&u, 500, 100, 10, 1, 16).unwrap().mean, 0.0);
    }

    #[test]
    fn sup_dominates_grid_rotations() {
        let u = mobius(3000).unwrap();
        let p = BlockPartition::new(PartitionKind::Explicit { cuts: vec![1, 700, 1500] }, 3000).unwrap();
        let s = momo_sup(&u, &p, 8, Some(false)).unwrap();
        for (k, bs) in s.blocks.iter().enumerate() {
            let g = grid_size(bs.len, 8);
            for j in (0..g).step_by(37) {
                let r = momo_rotation_blocks(&u, &p, j as f64 / g as f64).unwrap()[k];
                assert!(r <= bs.sup * (1.0 + 1e-9) + 1e-9);
            }
        }
    }

    #[test]
    fn refinement_never_decreases() {
        let u = mobius(5000).unwrap();
        let p = BlockPartition::new(PartitionKind::Power { c: 1.0, gamma: 1.5 }, 5000).unwrap();
        let s = momo_sup(&u, &p, 8, Some(true)).unwrap();
        assert!(s.blocks.iter().all(|b| b.sup >= b.grid_sup));
        assert!(s.value >= s.grid_value);
    }

    #[test]
    fn oversample_floor() {
        let u = mobius(100).unwrap();
        let p = BlockPartition::new(PartitionKind::SqrtLog, 100).unwrap();
        assert!(momo_sup(&u, &p, 4, None).is_err());
    }

    #[test]
    fn mrt_resonance() {
        let u = linear_phase(5000, -0.3819).unwrap();
        let r = mrt_swapped(&u, 4000, 200, 20, 9, 64).unwrap();
        assert!(r.mean > r.guarantee && r.mean <= 1.0 + 1e-12);
    }
}
