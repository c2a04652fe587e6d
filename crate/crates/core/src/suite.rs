//! The acceptance battery behind the `suite` subcommand.
//!
//! [`run_suite`] returns a [`SuiteRun`]: a deterministic [`SuiteReport`]
//! (byte-identical across reruns and worker counts once serialized) plus
//! wall-clock [`Timing`]s, which are kept out of the report on purpose.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::averaging::{AveragingMode, AveragingScheme};
use crate::correlate::{appendix_a_report, autocorr_weighted, averaged_chowlak, short_interval_variance, wiener_atom};
use crate::coupling::{
    coupling_diagnostics, exact_correlation, monotone_violation, random_model, simulate_coupling, conditional_mean_residual,
    MarkovModel, Rational, TargetDist,
};
use crate::cylinders::{cancellation_stat, kmixing_scan, subset_sup, worst_case_cancellation, BlockQuery, BlockSet};
use crate::error::Result;
use crate::momo::{grid_size, momo_sup, BlockPartition, PartitionKind};
use crate::oracle;
use crate::rigidity::{rigidity_report, CantorMeasureSpec};
use crate::seqgen::{
    alternating, constant, dirichlet_twist, iid_signs, linear_phase, liouville, liouville_table, mobius, mobius_table,
    quadratic_phase, Character, SequenceSample,
};
use crate::uniformity::{raw_average, u1_norm, us_norm};

/// Problem sizes. `full()` is the acceptance scale; `quick()` divides the
/// large horizons by 100 for smoke runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub sieve_oracle_n: usize,
    pub sieve_timed_n: usize,
    pub big_n: usize,
    pub medium_n: usize,
    pub wiener_hs: Vec<usize>,
    pub coupling_n: usize,
    pub rigidity_count: usize,
    pub rigidity_depth: usize,
}

impl SuiteConfig {
    pub fn full() -> Self {
        SuiteConfig {
            seed: 20_240_601,
            sieve_oracle_n: 100_000,
            sieve_timed_n: 10_000_000,
            big_n: 1_000_000,
            medium_n: 100_000,
            wiener_hs: vec![100, 1000, 10_000],
            coupling_n: 1_000_000,
            rigidity_count: 100_000,
            rigidity_depth: 20,
        }
    }

    pub fn quick() -> Self {
        SuiteConfig {
            sieve_oracle_n: 10_000,
            sieve_timed_n: 100_000,
            big_n: 10_000,
            medium_n: 5_000,
            wiener_hs: vec![10, 100],
            coupling_n: 20_000,
            rigidity_count: 5_000,
            rigidity_depth: 10,
            ..Self::full()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub metrics: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub id: u32,
    pub what: String,
    pub seconds: f64,
    pub limit: Option<f64>,
}

impl Timing {
    pub fn within(&self) -> bool {
        self.limit.map_or(true, |l| self.seconds <= l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub timings: Vec<Timing>,
}

pub const CHECK_NAMES: [&str; 9] = [
    "sieve correctness",
    "oracle equivalence",
    "wiener equivalence",
    "uniformity norms",
    "cylinder cancellation",
    "momo",
    "coupling",
    "rigidity measure",
    "double vs multiple correlations",
];

/// Runs checks `1..=9` in order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteRun> {
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    for id in 1..=9 {
        let (c, t) = run_check(id, cfg)?;
        checks.push(c);
        timings.extend(t);
    }
    Ok(SuiteRun { report: SuiteReport { version: crate::VERSION.to_string(), config: cfg.clone(), checks }, timings })
}

pub fn run_check(id: u32, cfg: &SuiteConfig) -> Result<(Check, Vec<Timing>)> {
    let start = Instant::now();
    let (passed, metrics, mut timings) = match id {
        1 => sieve(cfg)?,
        2 => oracle_equivalence(cfg)?,
        3 => wiener(cfg)?,
        4 => uniformity(cfg)?,
        5 => cylinders(cfg)?,
        6 => momo(cfg)?,
        7 => coupling(cfg)?,
        8 => rigidity(cfg)?,
        9 => appendix(cfg)?,
        _ => return Err(crate::Error::validation(format!("no check {id}"))),
    };
    let limit = match id {
        3 => Some(120.0),
        5 | 7 => Some(60.0),
        _ => None,
    };
    timings.push(Timing { id, what: "total".into(), seconds: start.elapsed().as_secs_f64(), limit });
    let name = CHECK_NAMES[id as usize - 1].to_string();
    Ok((Check { id, name, passed, metrics }, timings))
}

type Outcome = (bool, Value, Vec<Timing>);

/// Constant, alternating, linear phase, Möbius, Liouville and seeded signs.
pub fn corpus(n: usize, seed: u64) -> Result<Vec<SequenceSample>> {
    Ok(vec![
        constant(n)?,
        alternating(n)?,
        linear_phase(n, 2f64.sqrt() - 1.0)?,
        mobius(n)?,
        liouville(n)?,
        iid_signs(n, seed)?,
    ])
}

fn rel_err(a: &[Complex64], b: &[Complex64], floor: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / y.norm().max(floor)).fold(0.0, f64::max)
}

fn sieve(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = cfg.sieve_oracle_n;
    let mu = mobius_table(n);
    let la = liouville_table(n);
    let bad_mu = (1..=n).filter(|&i| mu[i] != oracle::mobius(i as u64)).count();
    let bad_la = (1..=n).filter(|&i| la[i] != oracle::liouville(i as u64)).count();
    let mut timings = Vec::new();
    for (what, f) in [("mobius", mobius_table as fn(usize) -> Vec<i8>), ("liouville", liouville_table)] {
        let t = Instant::now();
        let v = f(cfg.sieve_timed_n);
        std::hint::black_box(&v);
        timings.push(Timing { id: 1, what: format!("{what}({})", cfg.sieve_timed_n), seconds: t.elapsed().as_secs_f64(), limit: Some(10.0) });
    }
    Ok((bad_mu == 0 && bad_la == 0, json!({"n": n, "mobius_mismatches": bad_mu, "liouville_mismatches": bad_la}), timings))
}

fn oracle_equivalence(_cfg: &SuiteConfig) -> Result<Outcome> {
    let n = 10_000;
    let tol = 1e-6;
    let floor = 1.0 / n as f64;
    let mu = mobius(n + 400)?;
    let la = liouville(n + 400)?;

    let mut autocorr_err: f64 = 0.0;
    for mode in [AveragingMode::Cesaro, AveragingMode::Logarithmic] {
        let fast = autocorr_weighted(&mu, n, 300, mode)?.values;
        let slow = oracle::autocorr(mu.values(), n, 300, mode);
        autocorr_err = autocorr_err.max(rel_err(&fast, &slow, floor));
    }

    let mut u2_err: f64 = 0.0;
    for (u, mode) in [(&mu, AveragingMode::Cesaro), (&la, AveragingMode::Logarithmic)] {
        let fast = raw_average(u.values(), n, mode, &[12, 12]);
        let slow = oracle::us_raw_direct(u.values(), n, mode, &[12, 12]);
        u2_err = u2_err.max(rel_err(&[fast], &[slow], floor));
    }

    let part = BlockPartition::new(PartitionKind::Power { c: 1.0, gamma: 1.5 }, n)?;
    let sup = momo_sup(&mu, &part, 16, Some(false))?;
    let mut momo_err: f64 = 0.0;
    for b in &sup.blocks {
        let x = &mu.values()[b.start - 1..b.start - 1 + b.len];
        let slow = oracle::dense_sup(x, grid_size(b.len, 16));
        momo_err = momo_err.max((b.grid_sup - slow).abs() / slow.max(1.0));
    }

    // real alphabet: sign splitting against exhaustive subsets
    let s = AveragingScheme::single(n);
    let wc = worst_case_cancellation(&la, &s, 5, 3)?;
    let sums = oracle::block_sums(la.values(), n, 5, 3);
    let z: Vec<Complex64> = sums.iter().map(|(_, v)| *v).collect();
    let exhaustive = oracle::subset_sup(&z);
    let (_, witness) = subset_sup(&z);
    let mut want: Vec<Vec<Complex64>> = witness.iter().map(|&i| sums[i].0.clone()).collect();
    let mut got = wc.witness.clone();
    let key = |b: &Vec<Complex64>| b.iter().map(|z| z.re).collect::<Vec<_>>();
    want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let real_ok = want == got && (wc.report.tail.re - exhaustive).abs() <= 1e-12;

    // complex alphabet: relaxation within its guarantee
    let twisted = dirichlet_twist(&mu, 5, &Character::PrimeIndex(1))?;
    let wcc = worst_case_cancellation(&twisted, &s, 2, 1)?;
    let zc: Vec<Complex64> = oracle::block_sums(twisted.values(), n, 2, 1).iter().map(|(_, v)| *v).collect();
    let exc = oracle::subset_sup(&zc);
    let complex_ok = wcc.report.tail.re <= exc + 1e-12 && wcc.report.tail.re >= wcc.guarantee * exc - 1e-12;

    let explicit = vec![vec![Complex64::new(1.0, 0.0); 2], vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]];
    let q = BlockQuery { ell: 2, m: 3, blocks: BlockSet::Explicit(explicit.clone()) };
    let cs = cancellation_stat(&la, &s, &q)?.tail.re;
    let cs_slow = oracle::cancellation(la.values(), n, 3, &explicit);
    let cancel_err = (cs - cs_slow).abs() / cs_slow.max(floor);

    let nk = 2000;
    let ck = averaged_chowlak(&mu, &[&mu, &mu], &AveragingScheme::single(nk), 30, 0, 0)?;
    let ck_slow = oracle::chowlak(mu.values(), &[mu.values(), mu.values()], nk, AveragingMode::Cesaro, 30);
    let chowla_err = (ck.report.tail.re - ck_slow).abs() / ck_slow.max(floor);

    let passed = [autocorr_err, u2_err, momo_err, cancel_err, chowla_err].iter().all(|&e| e <= tol) && real_ok && complex_ok;
    Ok((
        passed,
        json!({
            "n": n,
            "tolerance": tol,
            "autocorr_rel_err": autocorr_err,
            "u2_rel_err": u2_err,
            "momo_block_rel_err": momo_err,
            "cancellation_rel_err": cancel_err,
            "chowla_k2_rel_err": chowla_err,
            "worst_case_real_exact": real_ok,
            "worst_case_real_value": wc.report.tail.re,
            "worst_case_complex_within_guarantee": complex_ok,
            "worst_case_complex_value": wcc.report.tail.re,
            "worst_case_complex_exhaustive": exc,
        }),
        Vec::new(),
    ))
}

fn wiener(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = cfg.big_n;
    let h_max = *cfg.wiener_hs.iter().max().expect("non-empty sweep");
    let scheme = AveragingScheme::single(n);
    let threshold = 0.02;
    let mut rows = Vec::new();
    let mut agree = true;
    for u in corpus(n + h_max, cfg.seed)? {
        let si = short_interval_variance(&u, &scheme, &cfg.wiener_hs)?;
        let wa = wiener_atom(&u, &scheme, &cfg.wiener_hs)?;
        let si_last = si.last().expect("non-empty").report.tail.re;
        let wa_last = wa.last().expect("non-empty").report.tail.norm();
        let (a, b) = (si_last >= threshold, wa_last >= threshold);
        agree &= a == b;
        rows.push(json!({
            "sequence": u.label,
            "short_interval": si.iter().map(|e| e.report.tail.re).collect::<Vec<_>>(),
            "wiener_atom": wa.iter().map(|e| e.report.tail.norm()).collect::<Vec<_>>(),
            "short_interval_nonvanishing": a,
            "wiener_atom_nonvanishing": b,
        }));
    }
    Ok((agree, json!({"n": n, "hs": cfg.wiener_hs, "threshold": threshold, "sequences": rows}), Vec::new()))
}

fn uniformity(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = cfg.medium_n;
    let h1 = (n / 100).min(1000);
    let w2 = [256.min(n / 20), 256.min(n / 20)];
    let w3 = [32, 32, 32];
    let len = n + w2.iter().sum::<usize>() + h1;
    let s = AveragingScheme::single(n);
    let norms = |u: &SequenceSample| -> Result<[f64; 3]> {
        Ok([u1_norm(u, &s, h1)?.value, us_norm(u, &s, 2, &w2)?.value, us_norm(u, &s, 3, &w3)?.value])
    };
    let one = norms(&constant(len)?)?;
    let alt = norms(&alternating(len)?)?;
    let quad = norms(&quadratic_phase(len, 3f64.sqrt() - 1.0)?)?;
    let nb = cfg.big_n;
    let mu_w2 = [64, 64];
    let mu = mobius(nb + 1000 + 128)?;
    let sb = AveragingScheme::single(nb);
    let mu1 = u1_norm(&mu, &sb, 1000.min(nb / 10))?.value;
    let mu2 = us_norm(&mu, &sb, 2, &mu_w2)?.value;
    let checks = [
        ("constant", one.iter().all(|v| (v - 1.0).abs() <= 0.01)),
        ("alternating", alt[0] <= 0.02 && alt[1] >= 0.98),
        ("quadratic_phase", quad[1] <= 0.1 && quad[2] >= 0.9),
        ("mobius", mu1 <= 0.05 && mu2 <= 0.15),
    ];
    let passed = checks.iter().all(|c| c.1);
    Ok((
        passed,
        json!({
            "n": n,
            "windows": {"u1": h1, "u2": w2, "u3": w3, "mobius_u2": mu_w2},
            "constant": one,
            "alternating": alt,
            "quadratic_phase": quad,
            "mobius": {"n": nb, "u1": mu1, "u2": mu2},
            "passed": checks.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        }),
        Vec::new(),
    ))
}

fn cylinders(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = cfg.big_n;
    let ms: Vec<usize> = [0, 10, 100, 1000].into_iter().filter(|&m| m < n).collect();
    let len = n + ms.last().copied().unwrap_or(0) + 4;
    let s = AveragingScheme::single(n);
    let alt = alternating(len)?;
    let mut flat_dev: f64 = 0.0;
    for m in &ms {
        let q = BlockQuery { ell: 1, m: *m, blocks: BlockSet::Explicit(vec![vec![Complex64::new(1.0, 0.0)]]) };
        flat_dev = flat_dev.max((cancellation_stat(&alt, &s, &q)?.tail.re - 0.5).abs());
    }
    for ell in 1..=4 {
        for row in kmixing_scan(&alt, &s, ell, &ms)?.rows {
            flat_dev = flat_dev.max((row.sup - 0.5).abs());
        }
    }
    let flat = flat_dev <= 1.0 / n as f64;
    let iid = iid_signs(len, cfg.seed)?;
    let mut worst: f64 = 0.0;
    let mut worst_shifted: f64 = 0.0;
    let mut profiles = Vec::new();
    for ell in 1..=4 {
        let p = kmixing_scan(&iid, &s, ell, &ms)?;
        worst = p.rows.iter().map(|r| r.sup).fold(worst, f64::max);
        worst_shifted = p.rows.iter().filter(|r| r.m > 0).map(|r| r.sup).fold(worst_shifted, f64::max);
        profiles.push(json!({"ell": ell, "sup": p.rows.iter().map(|r| r.sup).collect::<Vec<_>>()}));
    }
    Ok((
        flat && worst <= 0.02,
        json!({
            "n": n,
            "shifts": ms,
            "alternating_max_deviation_from_half": flat_dev,
            "iid_max_sup": worst,
            "iid_max_sup_positive_shifts": worst_shifted,
            "iid_profiles": profiles,
        }),
        Vec::new(),
    ))
}

fn momo(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = cfg.big_n;
    let alpha = 2f64.sqrt() - 1.0;
    let part = BlockPartition::new(PartitionKind::Power { c: 1.0, gamma: 1.5 }, n)?;
    let res = momo_sup(&linear_phase(n, -alpha)?, &part, 64, None)?;
    let full = (n - 1) as f64 / n as f64;
    let resonance_ok = res.guarantee >= 0.95 && res.grid_value >= res.guarantee * full - 1e-9 && res.value <= full + 1e-9;
    let iid = iid_signs(n, cfg.seed)?;
    let noise = momo_sup(&iid, &part, 64, None)?;
    let cuts: Vec<usize> = (0..).map(|k| 1 + 1000 * k).take_while(|&b| b < n).collect();
    let long = BlockPartition::new(PartitionKind::Explicit { cuts }, n)?;
    let noise_long = momo_sup(&iid, &long, 64, None)?;
    Ok((
        resonance_ok && noise.value <= 0.2,
        json!({
            "n": n,
            "partition": "power(1,1.5)",
            "blocks": part.k_n(),
            "resonance": {"value": res.value, "grid_value": res.grid_value, "guarantee": res.guarantee, "ok": resonance_ok},
            "iid": {"value": noise.value, "grid_value": noise.grid_value, "threshold": 0.2},
            "iid_blocks_of_1000": {"value": noise_long.value, "blocks": long.k_n()},
        }),
        Vec::new(),
    ))
}

fn coupling(cfg: &SuiteConfig) -> Result<Outcome> {
    let one = Rational::from_integer(1);
    let half = Rational::new(1, 2);
    let mut exact_ok = true;
    let mut exact = Vec::new();
    for q in [Rational::new(1, 8), Rational::new(1, 4), Rational::new(7, 16)] {
        let m = MarkovModel::new(vec![-one, one], vec![vec![one - q, q], vec![q, one - q]])?;
        let b = TargetDist::new(vec![-one, one], vec![half, half])?;
        let v = exact_correlation(&m, &b);
        exact_ok &= v == q * 2;
        exact.push(json!({"q": q.to_string(), "value": v.to_string()}));
    }
    let m = MarkovModel::symmetric_flip(0.25)?;
    let b = TargetDist::uniform_signs();
    let paths = simulate_coupling(&m, &b, cfg.coupling_n, cfg.seed)?;
    let d = coupling_diagnostics(&paths, &b);
    let mc_ok = (d.mean_xy - 0.5).abs() <= 4.0 * d.stderr_xy;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut min_corr = f64::INFINITY;
    let mut max_residual: f64 = 0.0;
    let mut monotone_ok = monotone_violation(&m, &b, 1000, |v| v).is_none();
    for _ in 0..100 {
        let (rm, rb) = random_model(&mut rng);
        min_corr = min_corr.min(exact_correlation(&rm, &rb));
        max_residual = max_residual.max(conditional_mean_residual(&rm, &rb));
        monotone_ok &= monotone_violation(&rm, &rb, 1000, |v| v).is_none();
    }
    let passed = exact_ok && mc_ok && min_corr > 0.0 && monotone_ok && max_residual <= 1e-10;
    Ok((
        passed,
        json!({
            "exact": exact,
            "monte_carlo": {"n": cfg.coupling_n, "mean_xy": d.mean_xy, "stderr": d.stderr_xy, "ks_u": d.ks_u, "tv_y": d.tv_y},
            "random_models": 100,
            "min_exact_correlation": min_corr,
            "max_conditional_mean_residual": max_residual,
            "monotone_on_grid": monotone_ok,
        }),
        Vec::new(),
    ))
}

fn rigidity(cfg: &SuiteConfig) -> Result<Outcome> {
    let depth = cfg.rigidity_depth;
    let p: Vec<f64> = (1..=depth).map(|n| 1.0 / (n + 1) as f64).collect();
    let spec = CantorMeasureSpec::minimal(p)?;
    let r = rigidity_report(&spec, depth, cfg.rigidity_count, cfg.seed)?;
    let a_ok = r.levels.iter().all(|l| (l.a_frequency - l.p).abs() <= 3.0 * l.a_stderr);
    let arc_ok = r.levels.iter().all(|l| l.character.mean.re >= l.character.arc_bound - 3.0 * l.character.stderr_re);
    let nv_ok = r.levels.iter().all(|l| (l.no_visit - l.no_visit_expected).abs() <= 3.0 * l.no_visit_stderr);
    Ok((
        a_ok && arc_ok && nv_ok,
        json!({
            "depth": depth,
            "count": cfg.rigidity_count,
            "a_frequency_ok": a_ok,
            "arc_bound_ok": arc_ok,
            "no_visit_ok": nv_ok,
            "mean_visits": r.mean_visits,
            "expected_visits": r.expected_visits,
            "levels": r.levels.iter().map(|l| json!({
                "level": l.level,
                "p": l.p,
                "a_frequency": l.a_frequency,
                "no_visit": l.no_visit,
                "no_visit_expected": l.no_visit_expected,
                "character_re": l.character.mean.re,
                "arc_bound": l.character.arc_bound,
            })).collect::<Vec<_>>(),
        }),
        Vec::new(),
    ))
}

fn appendix(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = cfg.big_n;
    let (h, hp, k) = (200, 14, 2);
    let s = AveragingScheme::single(n);
    let mut rows = Vec::new();
    let mut all = true;
    for u in corpus(n + h + k, cfg.seed)? {
        let r = appendix_a_report(&u, &s, h, hp, k, 0, cfg.seed)?;
        all &= r.holds;
        rows.push(json!({"sequence": u.label, "a": r.a[0], "d": r.d[0], "bound": r.bound[0], "holds": r.holds}));
    }
    Ok((all, json!({"n": n, "h": h, "h_prime": hp, "k": k, "sequences": rows}), Vec::new()))
}
