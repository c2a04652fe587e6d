//! Sampler for a Cantor-type measure along a divisibility chain `q_1 | q_2 | …`.
//!
//! At level `n` every active grid interval `[j/q_n, (j+1)/q_n)` puts mass
//! `1 - p_n` on its `B` region (fractional part in `[0, p_n]`) and `p_n` on its
//! `A` region (fractional part in `[1/4, 3/4]`). Inside the chosen region two
//! level-`n+1` grid intervals are designated and one is picked uniformly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 20;

/// Which two children of a region are designated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChildRule {
    #[default]
    LeftmostTwo,
    /// First and last child fully inside the region.
    OuterTwo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorMeasureSpec {
    /// `q[n-1] = q_n`.
    q: Vec<u128>,
    /// `p[n-1] = p_n`.
    p: Vec<f64>,
    pub rule: ChildRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Whole,
    B,
    A,
}

impl CantorMeasureSpec {
    pub fn new(q: Vec<u128>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::validation(format!("{} moduli but {} probabilities", q.len(), p.len())));
        }
        if q.len() > DEFAULT_MAX_DEPTH {
            return Err(Error::validation(format!("depth {} exceeds the maximum {DEFAULT_MAX_DEPTH}", q.len())));
        }
        for (i, &pn) in p.iter().enumerate() {
            if !(pn > 0.0 && pn < 1.0) {
                return Err(Error::validation(format!("level {}: p must lie in (0,1), got {pn}", i + 1)));
            }
            if i > 0 && pn > p[i - 1] {
                return Err(Error::validation(format!("level {}: p must be non-increasing", i + 1)));
            }
        }
        let spec = CantorMeasureSpec { q, p, rule: ChildRule::default() };
        for level in 0..spec.q.len() {
            let prev = if level == 0 { 1 } else { spec.q[level - 1] };
            let next = spec.q[level];
            if next == 0 || next % prev != 0 {
                return Err(Error::validation(format!("level {}: q_{} = {next} is not a multiple of {prev}", level + 1, level + 1)));
            }
            let r = next / prev;
            if level > 0 {
                let need = (4.0 / spec.p[level - 1]).ceil() as u128;
                if r < need {
                    return Err(Error::validation(format!(
                        "level {}: q_{}/q_{} = {r} is below ceil(4/p_{}) = {need}",
                        level + 1,
                        level + 1,
                        level,
                        level
                    )));
                }
            }
            let regions: &[Region] = if level == 0 { &[Region::Whole] } else { &[Region::B, Region::A] };
            for &reg in regions {
                let pn = if level == 0 { 0.0 } else { spec.p[level - 1] };
                let (lo, hi) = children(reg, pn, r);
                if hi < lo + 1 {
                    return Err(Error::validation(format!(
                        "level {}: a {:?} region holds fewer than two level-{} intervals",
                        level,
                        reg,
                        level + 1
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// `q_1 = 4` and `q_{n+1} = max(4, ceil(4/p_n))·q_n`.
    pub fn minimal(p: Vec<f64>) -> Result<Self> {
        let mut q = Vec::with_capacity(p.len());
        let mut cur: u128 = 4;
        for (i, _) in p.iter().enumerate() {
            if i > 0 {
                let r = ((4.0 / p[i - 1]).ceil() as u128).max(4);
                cur = cur.checked_mul(r).ok_or_else(|| Error::Resource {
                    what: format!("q_{} overflows 128 bits", i + 1),
                    limit: u128::MAX,
                })?;
            }
            q.push(cur);
        }
        Self::new(q, p)
    }

    pub fn with_rule(mut self, rule: ChildRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn depth(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[u128] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    fn ratio(&self, level: usize) -> u128 {
        if level == 0 {
            self.q[0]
        } else {
            self.q[level] / self.q[level - 1]
        }
    }
}

/// Range `[lo, hi]` of child indices (of `r`) fully inside a region.
fn children(reg: Region, p: f64, r: u128) -> (u128, u128) {
    match reg {
        Region::Whole => (0, r.saturating_sub(1)),
        Region::B => {
            let mut k = (p * r as f64).floor() as u128;
            while k > 0 && k as f64 / r as f64 > p {
                k -= 1;
            }
            (0, k.saturating_sub(1).min(r - 1))
        }
        Region::A => ((r + 3) / 4, (3 * r / 4).saturating_sub(1)),
    }
}

fn region_bounds(reg: Region, p: f64) -> (f64, f64) {
    match reg {
        Region::Whole => (0.0, 1.0),
        Region::B => (0.0, p),
        Region::A => (0.25, 0.75),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSample {
    /// Bit `n-1` is set when the `A` branch was taken at level `n`.
    pub a_visits: u32,
    /// Final grid interval index `j` at the last level.
    pub cell: u128,
    /// Final admissible interval.
    pub lo: f64,
    pub hi: f64,
    /// `{q_n x}` for `n = 1..=depth`, where `x` is the interval midpoint.
    pub fracs: Vec<f64>,
}

impl CantorSample {
    pub fn point(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

fn sample_one(spec: &CantorMeasureSpec, depth: usize, rng: &mut ChaCha8Rng) -> CantorSample {
    if depth == 0 {
        return CantorSample { a_visits: 0, cell: 0, lo: 0.0, hi: 1.0, fracs: Vec::new() };
    }
    let mut region = Region::Whole;
    let mut cell: u128 = 0;
    let mut child = Vec::with_capacity(depth);
    let mut a_visits = 0u32;
    for level in 0..depth {
        let r = spec.ratio(level);
        let pn = if level == 0 { 0.0 } else { spec.p[level - 1] };
        let (lo, hi) = children(region, pn, r);
        let pick = match spec.rule {
            ChildRule::LeftmostTwo => [lo, lo + 1],
            ChildRule::OuterTwo => [lo, hi],
        }[rng.gen_range(0..2)];
        cell = cell * r + pick;
        child.push(pick);
        region = if rng.gen::<f64>() < spec.p[level] {
            a_visits |= 1 << level;
            Region::A
        } else {
            Region::B
        };
    }
    let (a, b) = region_bounds(region, spec.p[depth - 1]);
    let mut t = 0.5 * (a + b);
    let mut fracs = vec![0.0; depth];
    fracs[depth - 1] = t;
    for level in (1..depth).rev() {
        t = (child[level] as f64 + t) / spec.ratio(level) as f64;
        fracs[level - 1] = t;
    }
    let qd = spec.q[depth - 1] as f64;
    CantorSample { a_visits, cell, lo: (cell as f64 + a) / qd, hi: (cell as f64 + b) / qd, fracs }
}

/// `count` independent samples; sample `i` uses stream `i` of the seeded generator.
pub fn sample_cantor(spec: &CantorMeasureSpec, depth: usize, count: usize, seed: u64) -> Result<Vec<CantorSample>> {
    if depth > spec.depth() {
        return Err(Error::validation(format!("depth {depth} exceeds configured depth {}", spec.depth())));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_one(spec, depth, &mut rng)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterEstimate {
    pub level: usize,
    pub mean: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// `(1 - p_n)·cos(2πp_n) - p_n`; `1` at level 0.
    pub arc_bound: f64,
}

fn character_of(samples: &[CantorSample], level: usize, p: f64) -> CharacterEstimate {
    if level == 0 {
        return CharacterEstimate { level, mean: Complex64::new(1.0, 0.0), stderr_re: 0.0, stderr_im: 0.0, arc_bound: 1.0 };
    }
    let zs: Vec<Complex64> = samples.iter().map(|s| Complex64::from_polar(1.0, 2.0 * PI * s.fracs[level - 1])).collect();
    let n = zs.len() as f64;
    let mean = zs.iter().sum::<Complex64>() / n;
    let var_re = zs.iter().map(|z| (z.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let var_im = zs.iter().map(|z| (z.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    CharacterEstimate {
        level,
        mean,
        stderr_re: (var_re / n).sqrt(),
        stderr_im: (var_im / n).sqrt(),
        arc_bound: (1.0 - p) * (2.0 * PI * p).cos() - p,
    }
}

/// Monte Carlo estimate of `∫ e(q_n x) dσ(x)`. Level 0 is the trivial character.
pub fn estimate_character(spec: &CantorMeasureSpec, level: usize, count: usize, seed: u64) -> Result<CharacterEstimate> {
    if count == 0 {
        return Err(Error::validation("sample count must be positive"));
    }
    let samples = sample_cantor(spec, level, count, seed)?;
    Ok(character_of(&samples, level, if level == 0 { 0.0 } else { spec.p[level - 1] }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub p: f64,
    pub a_frequency: f64,
    pub a_stderr: f64,
    pub no_visit: f64,
    pub no_visit_expected: f64,
    pub no_visit_stderr: f64,
    pub character: CharacterEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub depth: usize,
    pub count: usize,
    pub seed: u64,
    pub levels: Vec<LevelStats>,
    pub mean_visits: f64,
    pub expected_visits: f64,
}

pub fn rigidity_report(spec: &CantorMeasureSpec, depth: usize, count: usize, seed: u64) -> Result<RigidityReport> {
    if count == 0 {
        return Err(Error::validation("sample count must be positive"));
    }
    let samples = sample_cantor(spec, depth, count, seed)?;
    let n = count as f64;
    let mut survive = 1.0;
    let levels = (1..=depth)
        .map(|level| {
            let p = spec.p[level - 1];
            survive *= 1.0 - p;
            let bit = 1u32 << (level - 1);
            let low = (bit << 1) - 1;
            let hits = samples.iter().filter(|s| s.a_visits & bit != 0).count() as f64;
            let none = samples.iter().filter(|s| s.a_visits & low == 0).count() as f64;
            LevelStats {
                level,
                p,
                a_frequency: hits / n,
                a_stderr: (p * (1.0 - p) / n).sqrt(),
                no_visit: none / n,
                no_visit_expected: survive,
                no_visit_stderr: (survive * (1.0 - survive) / n).sqrt(),
                character: character_of(&samples, level, p),
            }
        })
        .collect();
    Ok(RigidityReport {
        depth,
        count,
        seed,
        levels,
        mean_visits: samples.iter().map(|s| s.a_visits.count_ones() as f64).sum::<f64>() / n,
        expected_visits: spec.p[..depth].iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_zero_is_midpoint() {
        let spec = CantorMeasureSpec::minimal(vec![0.5, 0.4]).unwrap();
        let s = sample_cantor(&spec, 0, 3, 1).unwrap();
        assert!(s.iter().all(|x| x.point() == 0.5 && x.a_visits == 0));
    }

    #[test]
    fn growth_violation_names_level() {
        let err = CantorMeasureSpec::new(vec![4, 8], vec![0.5, 0.4]).unwrap_err().to_string();
        assert!(err.contains("level 2"), "{err}");
        let err = CantorMeasureSpec::new(vec![4, 30], vec![0.5, 0.4]).unwrap_err().to_string();
        assert!(err.contains("multiple"), "{err}");
        assert!(CantorMeasureSpec::new(vec![4, 40], vec![0.4, 0.5]).is_err());
    }

    #[test]
    fn fractions_are_consistent_with_intervals() {
        let spec = CantorMeasureSpec::minimal(vec![0.5, 1.0 / 3.0, 0.25, 0.2]).unwrap();
        for s in sample_cantor(&spec, 4, 200, 7).unwrap() {
            for (level, &t) in s.fracs.iter().enumerate() {
                let p = spec.p()[level];
                if s.a_visits >> level & 1 == 1 {
                    assert!((0.25..=0.75).contains(&t));
                } else {
                    assert!((0.0..=p).contains(&t));
                }
                let direct = (spec.q()[level] as f64 * s.point()).fract();
                assert!((direct - t).abs() < 1e-9);
            }
            assert!(s.lo < s.hi && s.hi <= 1.0);
        }
    }

    #[test]
    fn telescoping_no_visit() {
        let spec = CantorMeasureSpec::minimal(vec![0.5, 1.0 / 3.0, 0.25]).unwrap();
        let r = rigidity_report(&spec, 3, 20_000, 3).unwrap();
        let last = &r.levels[2];
        assert!((last.no_visit_expected - 0.25).abs() < 1e-15);
        assert!((last.no_visit - 0.25).abs() <= 3.0 * last.no_visit_stderr);
    }

    #[test]
    fn outer_rule_differs_but_keeps_masses() {
        let spec = CantorMeasureSpec::minimal(vec![0.3; 3]).unwrap().with_rule(ChildRule::OuterTwo);
        let r = rigidity_report(&spec, 3, 20_000, 11).unwrap();
        for l in &r.levels {
            assert!((l.a_frequency - l.p).abs() <= 4.0 * l.a_stderr);
            assert!(l.character.mean.re >= l.character.arc_bound - 3.0 * l.character.stderr_re);
        }
    }

    #[test]
    fn level_zero_character_is_one() {
        let spec = CantorMeasureSpec::minimal(vec![0.5]).unwrap();
        assert_eq!(estimate_character(&spec, 0, 10, 0).unwrap().mean, Complex64::new(1.0, 0.0));
    }
}
