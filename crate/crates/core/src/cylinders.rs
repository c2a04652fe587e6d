//! Empirical cylinder statistics for finite-valued sequences.
//!
//! A block of length `ℓ` at position `p` is `(u(p), …, u(p+ℓ-1))`. The
//! cancellation statistic for a set `C` of blocks and a shift `m` is
//! `|Σ_{n<=N} w_N(n)·u(n)·1[block at m+n ∈ C]|`. Blocks are encoded as base-`s`
//! integers over the sample's alphabet.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::{harmonic, AveragingMode, AveragingScheme, ConvergenceReport};
use crate::error::{Error, Result};
use crate::seqgen::{symbol_indices, SequenceSample};

/// Cap on distinct blocks considered in one statistic.
pub const MAX_BLOCKS: usize = 1 << 20;

/// Number of directions in the complex relaxation of the subset supremum.
pub const DIRECTIONS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSet {
    /// Every block that occurs in the sample.
    All,
    Explicit(Vec<Vec<Complex64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockQuery {
    pub ell: usize,
    pub m: usize,
    pub blocks: BlockSet,
}

/// Block codes of a finite-valued sample.
struct Coded {
    alphabet: Vec<Complex64>,
    base: u64,
    ell: usize,
    /// `codes[p-1]` encodes the block starting at `p`.
    codes: Vec<u64>,
}

impl Coded {
    fn new(u: &SequenceSample, ell: usize, positions: usize) -> Result<Self> {
        let alphabet = u
            .alphabet()
            .ok_or_else(|| Error::NotFiniteAlphabet(format!("sample '{}' has no alphabet", u.label)))?
            .to_vec();
        if ell == 0 {
            return Err(Error::validation("block length must be at least 1"));
        }
        let base = alphabet.len() as u64;
        let width = base.checked_pow(ell as u32).ok_or_else(|| Error::Resource {
            what: format!("block space {}^{ell} does not fit 64-bit codes", alphabet.len()),
            limit: u64::MAX as u128,
        })?;
        let need = positions + ell - 1;
        if need > u.len() {
            return Err(Error::bounds(format!("blocks need {need} values but the sample has {}", u.len())));
        }
        let syms = symbol_indices(&u.values()[..need], &alphabet)?;
        let mut codes = Vec::with_capacity(positions);
        let mut code = 0u64;
        for &s in &syms[..ell] {
            code = code * base + s as u64;
        }
        codes.push(code);
        let lead = width / base;
        for p in 1..positions {
            code = (code - syms[p - 1] as u64 * lead) * base + syms[p + ell - 1] as u64;
            codes.push(code);
        }
        Ok(Coded { alphabet, base, ell, codes })
    }

    fn decode(&self, mut code: u64) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.ell];
        for slot in out.iter_mut().rev() {
            *slot = self.alphabet[(code % self.base) as usize];
            code /= self.base;
        }
        out
    }

    fn encode(&self, block: &[Complex64]) -> Result<u64> {
        if block.len() != self.ell {
            return Err(Error::validation(format!("block {block:?} has length {}, expected {}", block.len(), self.ell)));
        }
        let syms = symbol_indices(block, &self.alphabet)
            .map_err(|_| Error::validation(format!("block {block:?} uses symbols outside the alphabet")))?;
        Ok(syms.iter().fold(0u64, |c, &s| c * self.base + s as u64))
    }
}

/// Per-block weighted sums `s_B(N) = Σ_{n<=N} w_N(n)·x(n)·1[block at m+n = B]`
/// for every cutoff. Blocks are sorted by code.
struct BlockSums {
    codes: Vec<u64>,
    /// `sums[c][b]` for cutoff `c`, block `b`.
    sums: Vec<Vec<Complex64>>,
}

fn block_sums(coded: &Coded, scheme: &AveragingScheme, m: usize, x: impl Fn(usize) -> Complex64) -> Result<BlockSums> {
    let n_max = scheme.max_cutoff();
    let window = &coded.codes[m..m + n_max];
    let mut codes = window.to_vec();
    codes.sort_unstable();
    codes.dedup();
    if codes.len() > MAX_BLOCKS {
        return Err(Error::Resource { what: format!("{} distinct blocks", codes.len()), limit: MAX_BLOCKS as u128 });
    }
    let index: HashMap<u64, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut acc = vec![ZERO; codes.len()];
    let mut sums = Vec::with_capacity(scheme.lengths().len());
    let mut next = 0;
    for (i, c) in window.iter().enumerate() {
        let n = i + 1;
        let v = x(n);
        acc[index[c]] += match scheme.mode {
            AveragingMode::Cesaro => v,
            AveragingMode::Logarithmic => v / n as f64,
        };
        if n == scheme.lengths()[next] {
            let norm = match scheme.mode {
                AveragingMode::Cesaro => n as f64,
                AveragingMode::Logarithmic => harmonic(n),
            };
            sums.push(acc.iter().map(|z| z / norm).collect());
            next += 1;
        }
    }
    Ok(BlockSums { codes, sums })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFrequency {
    pub block: Vec<Complex64>,
    pub frequency: f64,
}

/// Frequencies of blocks starting at `n = 1..=N`, sorted by block code.
pub fn block_frequencies(u: &SequenceSample, n: usize, ell: usize) -> Result<Vec<BlockFrequency>> {
    if n == 0 {
        return Err(Error::validation("N must be positive"));
    }
    let coded = Coded::new(u, ell, n)?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for &c in &coded.codes {
        *counts.entry(c).or_default() += 1;
    }
    let mut keys: Vec<_> = counts.keys().copied().collect();
    keys.sort_unstable();
    Ok(keys
        .into_iter()
        .map(|c| BlockFrequency { block: coded.decode(c), frequency: counts[&c] as f64 / n as f64 })
        .collect())
}

/// Cancellation statistic for an explicit or full set of blocks.
pub fn cancellation_stat(u: &SequenceSample, scheme: &AveragingScheme, q: &BlockQuery) -> Result<ConvergenceReport> {
    let coded = Coded::new(u, q.ell, q.m + scheme.max_cutoff())?;
    let wanted: Option<Vec<u64>> = match &q.blocks {
        BlockSet::All => None,
        BlockSet::Explicit(bs) => Some(bs.iter().map(|b| coded.encode(b)).collect::<Result<_>>()?),
    };
    let sums = block_sums(&coded, scheme, q.m, |n| u.get(n))?;
    let vals = sums
        .sums
        .iter()
        .map(|row| {
            let total: Complex64 = match &wanted {
                None => row.iter().sum(),
                Some(w) => sums
                    .codes
                    .iter()
                    .zip(row)
                    .filter(|(c, _)| w.contains(c))
                    .map(|(_, z)| z)
                    .sum(),
            };
            total.norm()
        })
        .collect();
    Ok(ConvergenceReport::from_real(scheme.lengths().to_vec(), vals))
}

/// Supremum of `|Σ_{B ∈ S} s_B|` over subsets `S`, with a maximizing subset.
///
/// Real sums: exact, by splitting on sign. Complex sums: best of the
/// half-planes `Re(e^{-iθ}s_B) > 0` over [`DIRECTIONS`] directions, within a
/// factor `cos(π/DIRECTIONS)` of the supremum.
pub fn subset_sup(sums: &[Complex64]) -> (f64, Vec<usize>) {
    if sums.iter().all(|z| z.im == 0.0) {
        let pos: Vec<usize> = (0..sums.len()).filter(|&i| sums[i].re > 0.0).collect();
        let neg: Vec<usize> = (0..sums.len()).filter(|&i| sums[i].re < 0.0).collect();
        let p: f64 = pos.iter().map(|&i| sums[i].re).sum();
        let q: f64 = neg.iter().map(|&i| -sums[i].re).sum();
        return if p >= q { (p, pos) } else { (q, neg) };
    }
    let mut best = (0.0, Vec::new());
    for j in 0..DIRECTIONS {
        let dir = Complex64::from_polar(1.0, -2.0 * PI * j as f64 / DIRECTIONS as f64);
        let set: Vec<usize> = (0..sums.len()).filter(|&i| (sums[i] * dir).re > 0.0).collect();
        let val = set.iter().map(|&i| sums[i]).sum::<Complex64>().norm();
        if val > best.0 {
            best = (val, set);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseReport {
    pub m: usize,
    pub ell: usize,
    pub report: ConvergenceReport,
    /// Maximizing block set at the largest cutoff.
    pub witness: Vec<Vec<Complex64>>,
    /// True for real-valued samples, where the supremum is exact.
    pub exact: bool,
    /// Reported value is at least `guarantee` times the true supremum.
    pub guarantee: f64,
}

/// `sup_C` of the cancellation statistic over all sets of length-`ℓ` blocks.
pub fn worst_case_cancellation(u: &SequenceSample, scheme: &AveragingScheme, m: usize, ell: usize) -> Result<WorstCaseReport> {
    let coded = Coded::new(u, ell, m + scheme.max_cutoff())?;
    let sums = block_sums(&coded, scheme, m, |n| u.get(n))?;
    let exact = u.is_real();
    let mut vals = Vec::with_capacity(sums.sums.len());
    let mut witness = Vec::new();
    for row in &sums.sums {
        let (v, set) = subset_sup(row);
        vals.push(v);
        witness = set;
    }
    Ok(WorstCaseReport {
        m,
        ell,
        report: ConvergenceReport::from_real(scheme.lengths().to_vec(), vals),
        witness: witness.iter().map(|&i| coded.decode(sums.codes[i])).collect(),
        exact,
        guarantee: if exact { 1.0 } else { (PI / DIRECTIONS as f64).cos() },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRatio {
    pub block: Vec<Complex64>,
    pub ratio: f64,
    /// Weighted frequency of the block at unshifted positions.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub cutoff: usize,
    pub m: usize,
    pub ell: usize,
    pub eps: f64,
    /// Mass of blocks whose ratio is at most `eps`.
    pub good_mass: f64,
    /// Shifted-position mass of blocks never seen at unshifted positions.
    pub excluded_mass: f64,
    pub blocks: Vec<BlockRatio>,
}

/// Per-block ratios `|Σ_n w·u(n)·1[block at m+n = B]| / Σ_n w·1[block at n = B]`
/// at the largest cutoff.
pub fn conditional_cancellation(
    u: &SequenceSample,
    scheme: &AveragingScheme,
    m: usize,
    ell: usize,
    eps: f64,
) -> Result<ConditionalReport> {
    if !(eps >= 0.0) {
        return Err(Error::validation(format!("eps must be non-negative, got {eps}")));
    }
    let coded = Coded::new(u, ell, m + scheme.max_cutoff())?;
    let tail = AveragingScheme::new(scheme.mode, vec![scheme.max_cutoff()])?;
    let num = block_sums(&coded, &tail, m, |n| u.get(n))?;
    let den = block_sums(&coded, &tail, 0, |_| Complex64::new(1.0, 0.0))?;
    let shifted_mass = block_sums(&coded, &tail, m, |_| Complex64::new(1.0, 0.0))?;
    let den_map: HashMap<u64, f64> = den.codes.iter().zip(&den.sums[0]).map(|(&c, z)| (c, z.re)).collect();
    let num_map: HashMap<u64, Complex64> = num.codes.iter().zip(&num.sums[0]).map(|(&c, &z)| (c, z)).collect();
    let mut blocks = Vec::new();
    let mut good_mass = 0.0;
    for (&c, &mass) in den.codes.iter().zip(den.sums[0].iter().map(|z| z.re).collect::<Vec<_>>().iter()) {
        let ratio = num_map.get(&c).map_or(0.0, |z| z.norm()) / mass;
        if ratio <= eps {
            good_mass += mass;
        }
        blocks.push(BlockRatio { block: coded.decode(c), ratio, mass });
    }
    let excluded_mass = shifted_mass
        .codes
        .iter()
        .zip(&shifted_mass.sums[0])
        .filter(|(c, _)| !den_map.contains_key(c))
        .fold(0.0, |acc, (_, z)| acc + z.re);
    Ok(ConditionalReport { cutoff: scheme.max_cutoff(), m, ell, eps, good_mass, excluded_mass, blocks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMixingRow {
    pub m: usize,
    pub sup: f64,
    pub witness_size: usize,
    /// The statistic with `C` = all blocks.
    pub all_blocks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMixingProfile {
    pub ell: usize,
    pub cutoff: usize,
    pub rows: Vec<KMixingRow>,
    /// `(M, max_{m >= M} sup)` for every `M` in the grid.
    pub envelope: Vec<(usize, f64)>,
    pub guarantee: f64,
}

impl KMixingProfile {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "m,sup,witness_size")?;
        for r in &self.rows {
            writeln!(f, "{},{},{}", r.m, r.sup, r.witness_size)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Worst-case cancellation as a function of the shift `m`.
pub fn kmixing_scan(u: &SequenceSample, scheme: &AveragingScheme, ell: usize, m_grid: &[usize]) -> Result<KMixingProfile> {
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("shift grid must be non-empty and strictly increasing"));
    }
    let mut rows = Vec::with_capacity(m_grid.len());
    let mut guarantee: f64 = 1.0;
    for &m in m_grid {
        let wc = worst_case_cancellation(u, scheme, m, ell)?;
        let all = cancellation_stat(u, scheme, &BlockQuery { ell, m, blocks: BlockSet::All })?;
        guarantee = guarantee.min(wc.guarantee);
        rows.push(KMixingRow { m, sup: wc.report.tail.re, witness_size: wc.witness.len(), all_blocks: all.tail.re });
    }
    let envelope = (0..rows.len())
        .map(|i| (rows[i].m, rows[i..].iter().map(|r| r.sup).fold(0.0, f64::max)))
        .collect();
    Ok(KMixingProfile { ell, cutoff: scheme.max_cutoff(), rows, envelope, guarantee })
}
