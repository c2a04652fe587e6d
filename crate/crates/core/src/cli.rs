//! Command-line front end.
//!
//! Every subcommand writes one JSON report (to `--out` or stdout) wrapped in
//! an envelope carrying the statistic's tag. With `--out PATH` a run manifest
//! is written to `PATH.manifest.json`. Reports are deterministic; anything that
//! varies between runs (wall time, worker count) lives in the manifest.
//!
//! `corr` extends a sample that ends before `N + H` with zeros and records the
//! count as `zero_padded` in the manifest; `--no-pad` makes that an error.
//!
//! `--config FILE` reads a JSON object whose keys are long flag names (plus an
//! optional `"command"`); flags given on the command line take precedence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::averaging::{AveragingMode, AveragingScheme};
use crate::correlate::{
    appendix_a_report, autocorr_weighted, averaged_chowla2, averaged_chowlak, short_interval_variance, wiener_atom,
    EXACT_ENUMERATION_LIMIT,
};
use crate::coupling::{coupling_diagnostics, exact_correlation, simulate_coupling, MarkovModel, Rational, TargetDist};
use crate::cylinders::{
    block_frequencies, cancellation_stat, conditional_cancellation, kmixing_scan, worst_case_cancellation, BlockQuery,
    BlockSet,
};
use crate::error::{Error, Result};
use crate::momo::{momo_rotation, momo_sup, mrt_swapped, BlockPartition, PartitionKind, DEFAULT_OVERSAMPLE};
use crate::rigidity::{estimate_character, rigidity_report, CantorMeasureSpec, ChildRule};
use crate::seqgen::{self, Character, SequenceFormat, SequenceSample, DEFAULT_MEMORY_BUDGET};
use crate::suite::{run_suite, SuiteConfig};
use crate::uniformity::{u1_norm, us_norm};

pub const ENV_MEMORY_BUDGET: &str = "OLAB_MEMORY_BUDGET";
pub const ENV_WORKERS: &str = "OLAB_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "olab", version, about = "Finite-scale orthogonality statistics for arithmetic functions")]
pub struct Cli {
    /// Worker threads; defaults to $OLAB_WORKERS, else machine parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON file of flag values; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a sequence file.
    Gen(GenArgs),
    /// Correlation statistics.
    Corr(CorrArgs),
    /// Uniformity seminorms.
    Uniformity(UniformityArgs),
    /// Block statistics of finite-valued sequences.
    Cylinders(CylindersArgs),
    /// Block-wise exponential sum statistics.
    Momo(MomoArgs),
    /// Markov chain coupling.
    Coupling(CouplingArgs),
    /// Cantor measure sampler.
    Rigidity(RigidityArgs),
    /// Full acceptance battery.
    Suite(SuiteArgs),
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let t = s.trim().replace('_', "");
    if let Ok(n) = t.parse::<usize>() {
        return Ok(n);
    }
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as usize),
        _ => Err(format!("'{s}' is not a non-negative integer")),
    }
}

/// `p/q` or a decimal.
fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    match t.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| format!("bad number '{s}'"))?, b.trim().parse().map_err(|_| format!("bad number '{s}'"))?);
            Ok(a / b)
        }
        None => t.parse().map_err(|_| format!("bad number '{s}'")),
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::validation(format!("'{s}' is not an exact rational"));
    match t.split_once('/') {
        Some((a, b)) => {
            let (a, b): (i128, i128) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(a, b))
        }
        None => {
            if let Ok(i) = t.parse::<i128>() {
                return Ok(Ratio::from_integer(i));
            }
            // finite decimals are exact rationals
            let (int, frac) = t.split_once('.').ok_or_else(bad)?;
            let digits = frac.len() as u32;
            let den = 10i128.checked_pow(digits).ok_or_else(bad)?;
            let neg = int.starts_with('-');
            let whole: i128 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
            let f: i128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            let num = whole.abs() * den + f;
            Ok(Ratio::new(if neg { -num } else { num }, den))
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Cesaro,
    Log,
}

impl From<ModeArg> for AveragingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cesaro => AveragingMode::Cesaro,
            ModeArg::Log => AveragingMode::Logarithmic,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Averaging {
    /// cesaro or log.
    #[arg(long, value_enum, default_value = "cesaro")]
    pub mode: ModeArg,
    /// Comma-separated cutoffs N_1 < N_2 < …; `1e6` style accepted.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, value_parser = parse_count)]
    pub cutoffs: Vec<usize>,
}

impl Averaging {
    fn scheme(&self) -> Result<AveragingScheme> {
        if self.cutoffs.is_empty() {
            return Err(Error::validation("--cutoffs is required"));
        }
        AveragingScheme::new(self.mode.into(), self.cutoffs.clone())
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Input {
    /// Sequence file (binary, or CSV when the extension is .csv).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Reject values whose modulus exceeds this.
    #[arg(long)]
    pub bound: Option<f64>,
}

impl Input {
    fn load(&self) -> Result<SequenceSample> {
        seqgen::load_sequence(&self.input, SequenceFormat::from_path(&self.input), self.bound)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Output {
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long, value_parser = parse_count)]
    pub mobius: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub liouville: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub constant: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub alternating: Option<usize>,
    /// `e(nα)`, needs --alpha.
    #[arg(long, value_parser = parse_count)]
    pub linear_phase: Option<usize>,
    /// `e(n²α)`, needs --alpha.
    #[arg(long, value_parser = parse_count)]
    pub quadratic_phase: Option<usize>,
    /// Seeded uniform ±1, needs --seed.
    #[arg(long, value_parser = parse_count)]
    pub iid: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_parser = parse_number)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Twist by a Dirichlet character modulo this.
    #[arg(long)]
    pub twist_modulus: Option<u64>,
    /// principal, jacobi or index:K.
    #[arg(long, default_value = "principal")]
    pub character: String,
    /// Multiply by e(nα) after generation.
    #[arg(long, value_parser = parse_number)]
    pub modulate: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrStat {
    Autocorr,
    Chowla2,
    Chowlak,
    ShortInterval,
    Wiener,
    AppendixA,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct CorrArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum)]
    pub stat: CorrStat,
    /// Window or lag sweep H (comma-separated).
    #[arg(long = "H", value_delimiter = ',', action = ArgAction::Set, value_parser = parse_count)]
    pub h: Vec<usize>,
    #[arg(long = "H-prime", value_parser = parse_count)]
    pub h_prime: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Monte Carlo tuples when H^k is too large to enumerate.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub averaging: Averaging,
    /// Also write `h,abs_rho` (autocorr only).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Fail instead of extending a short sample with zeros past its end.
    #[arg(long)]
    pub no_pad: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct UniformityArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub degree: u32,
    /// H_1..H_s, innermost first.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, value_parser = parse_count, required = true)]
    pub windows: Vec<usize>,
    #[command(flatten)]
    pub averaging: Averaging,
    #[command(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CylStat {
    Frequencies,
    Cancellation,
    WorstCase,
    Conditional,
    Kmixing,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct CylindersArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum)]
    pub stat: CylStat,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[arg(long, default_value_t = 0, value_parser = parse_count)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, value_parser = parse_count)]
    pub m_grid: Vec<usize>,
    /// Explicit block set, e.g. `1,1;-1,1`. All observed blocks when absent.
    #[arg(long)]
    pub blocks: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[command(flatten)]
    pub averaging: Averaging,
    /// Decay profile `m,sup,witness_size` (kmixing only).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomoStat {
    Rotation,
    Sup,
    Mrt,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct MomoArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum)]
    pub stat: MomoStat,
    /// power:C,GAMMA | sqrt-log | explicit:1,10,100
    #[arg(long, default_value = "power:1,1.5")]
    pub partition: String,
    /// Horizon N; the sample length when absent.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_number)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: usize,
    /// Golden-section polish; automatic by block length when absent.
    #[arg(long)]
    pub refine: Option<bool>,
    /// Window length M (mrt).
    #[arg(long = "M", value_parser = parse_count)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-block table (sup only).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct CouplingArgs {
    /// Symmetric two-state chain on ±1 with this flip probability.
    #[arg(long)]
    pub flip: Option<String>,
    /// Increasing state values.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true)]
    pub states: Vec<String>,
    /// Rows separated by `;`, entries by `,`.
    #[arg(long)]
    pub matrix: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Target values.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "-1,1")]
    pub values: Vec<String>,
    /// Target probabilities.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "1/2,1/2")]
    pub probs: Vec<String>,
    /// Evaluate the correlation in exact rational arithmetic.
    #[arg(long)]
    pub rational: bool,
    /// Path length for simulation; exact correlation only when absent.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write X, V, U, Y as binary sequence files with this path prefix.
    #[arg(long)]
    pub paths_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    LeftmostTwo,
    OuterTwo,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct RigidityArgs {
    /// p_1, p_2, … (non-increasing, in (0,1)).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, value_parser = parse_number)]
    pub p: Vec<f64>,
    /// Use p_n = 1/(n+1) for n = 1..=D.
    #[arg(long)]
    pub harmonic: Option<usize>,
    /// Moduli q_1 | q_2 | …; the smallest admissible chain when absent.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub q: Vec<u128>,
    #[arg(long, value_enum, default_value = "leftmost-two")]
    pub rule: RuleArg,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 100_000, value_parser = parse_count)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimate a single character at this level instead of the full report.
    #[arg(long)]
    pub level: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct SuiteArgs {
    /// Small problem sizes.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

/// What a subcommand produced.
struct Produced {
    tag: &'static str,
    statistic: String,
    result: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    extra: Value,
}

impl Produced {
    fn new(tag: &'static str, statistic: impl Into<String>, result: impl Serialize) -> Result<Self> {
        Ok(Produced {
            tag,
            statistic: statistic.into(),
            result: serde_json::to_value(result)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: Value::Null,
        })
    }

    fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.to_path_buf());
        self
    }
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::validation(format!("{what} is a Monte Carlo operation and needs --seed")))
}

fn memory_budget() -> Result<usize> {
    match std::env::var(ENV_MEMORY_BUDGET) {
        Ok(v) => parse_count(&v).map_err(|e| Error::validation(format!("{ENV_MEMORY_BUDGET}: {e}"))),
        Err(_) => Ok(DEFAULT_MEMORY_BUDGET),
    }
}

fn parse_character(s: &str) -> Result<Character> {
    match s {
        "principal" => Ok(Character::Principal),
        "jacobi" => Ok(Character::Jacobi),
        _ => match s.strip_prefix("index:").map(str::parse::<u64>) {
            Some(Ok(k)) => Ok(Character::PrimeIndex(k)),
            _ => Err(Error::validation(format!("unknown character '{s}'; use principal, jacobi or index:K"))),
        },
    }
}

fn gen(a: &GenArgs) -> Result<Produced> {
    let budget = memory_budget()?;
    let s = &a.source;
    let alpha = || a.alpha.ok_or_else(|| Error::validation("phase sequences need --alpha"));
    let check = |n: usize| -> Result<usize> {
        if n.saturating_mul(16) > budget {
            return Err(Error::Resource { what: format!("N = {n} values"), limit: budget as u128 });
        }
        Ok(n)
    };
    let mut u = if let Some(n) = s.mobius {
        seqgen::mobius_with_budget(n, budget)?
    } else if let Some(n) = s.liouville {
        seqgen::liouville_with_budget(n, budget)?
    } else if let Some(n) = s.constant {
        seqgen::constant(check(n)?)?
    } else if let Some(n) = s.alternating {
        seqgen::alternating(check(n)?)?
    } else if let Some(n) = s.linear_phase {
        seqgen::linear_phase(check(n)?, alpha()?)?
    } else if let Some(n) = s.quadratic_phase {
        seqgen::quadratic_phase(check(n)?, alpha()?)?
    } else if let Some(n) = s.iid {
        seqgen::iid_signs(check(n)?, need_seed(a.seed, "--iid")?)?
    } else {
        return Err(Error::validation("no sequence source given"));
    };
    if let Some(q) = a.twist_modulus {
        u = seqgen::dirichlet_twist(&u, q, &parse_character(&a.character)?)?;
    }
    if let Some(alpha) = a.modulate {
        u = seqgen::modulate(&u, alpha);
    }
    seqgen::save_sequence(&u, &a.out, SequenceFormat::from_path(&a.out))?;
    Produced::new(
        "gen",
        "gen",
        json!({"label": u.label, "len": u.len(), "bound": u.bound(), "finite_alphabet": u.alphabet().map(|x| x.len())}),
    )
}

/// Extends `u` with zeros up to `need` values; returns the padded count.
fn zero_pad(u: SequenceSample, need: usize) -> Result<(SequenceSample, usize)> {
    if u.len() >= need {
        return Ok((u, 0));
    }
    let extra = need - u.len();
    let (bound, label) = (u.bound(), u.label.clone());
    let mut values = u.into_values();
    values.resize(need, Complex64::new(0.0, 0.0));
    Ok((SequenceSample::new(values, bound, None, label)?, extra))
}

fn corr(a: &CorrArgs) -> Result<Produced> {
    let scheme = a.averaging.scheme()?;
    if a.h.is_empty() {
        return Err(Error::validation("--H is required"));
    }
    let h = a.h[0];
    let h_max = a.h.iter().copied().max().unwrap_or(0);
    let mut u = a.input.load()?;
    let mut padded = 0;
    if !a.no_pad {
        let reach = h_max.saturating_mul(a.k.max(1)).saturating_add(a.h_prime.unwrap_or(0)).saturating_add(1);
        (u, padded) = zero_pad(u, scheme.max_cutoff().saturating_add(reach))?;
    }
    let p = match a.stat {
        CorrStat::Autocorr => {
            let n = scheme.max_cutoff();
            let prof = autocorr_weighted(&u, n, h, scheme.mode)?;
            let mut p = Produced::new("cl2", "autocorr", &prof)?;
            if let Some(c) = &a.csv {
                prof.write_csv(c)?;
                p.outputs.push(c.clone());
            }
            p
        }
        CorrStat::Chowla2 => Produced::new("avch1", "chowla2", averaged_chowla2(&u, &scheme, &a.h)?)?,
        CorrStat::Chowlak => {
            let exact = (h as u64).checked_pow(a.k as u32).is_some_and(|t| t <= EXACT_ENUMERATION_LIMIT);
            let seed = if exact { a.seed.unwrap_or(0) } else { need_seed(a.seed, "sampled chowlak")? };
            let vs: Vec<&SequenceSample> = (0..a.k).map(|_| &u).collect();
            Produced::new("avch2", "chowlak", averaged_chowlak(&u, &vs, &scheme, h, a.samples, seed)?)?
        }
        CorrStat::ShortInterval => Produced::new("ortmsvf", "short-interval", short_interval_variance(&u, &scheme, &a.h)?)?,
        CorrStat::Wiener => Produced::new("vcID", "wiener", wiener_atom(&u, &scheme, &a.h)?)?,
        CorrStat::AppendixA => {
            let hp = a.h_prime.ok_or_else(|| Error::validation("appendix-a needs --H-prime"))?;
            let exact = (h as u64).checked_pow(a.k as u32).is_some_and(|t| t <= EXACT_ENUMERATION_LIMIT);
            let seed = if exact { a.seed.unwrap_or(0) } else { need_seed(a.seed, "sampled appendix-a")? };
            Produced::new("teza", "appendix-a", appendix_a_report(&u, &scheme, h, hp, a.k, a.samples, seed)?)?
        }
    };
    let mut p = p.input(&a.input.input);
    p.extra = json!({"zero_padded": padded});
    Ok(p)
}

fn uniformity(a: &UniformityArgs) -> Result<Produced> {
    let u = a.input.load()?;
    let scheme = a.averaging.scheme()?;
    let p = match a.degree {
        1 => {
            if a.windows.len() != 1 {
                return Err(Error::validation("degree 1 takes one window"));
            }
            Produced::new("eq:1us", "u1", u1_norm(&u, &scheme, a.windows[0])?)?
        }
        s => Produced::new("hkg2", format!("u{s}"), us_norm(&u, &scheme, s, &a.windows)?)?,
    };
    Ok(p.input(&a.input.input))
}

fn parse_blocks(s: &str) -> Result<Vec<Vec<Complex64>>> {
    s.split(';')
        .map(|b| {
            b.split(',')
                .map(|x| Complex64::from_str(x.trim()).map_err(|_| Error::validation(format!("bad block entry '{x}'"))))
                .collect()
        })
        .collect()
}

fn cylinders(a: &CylindersArgs) -> Result<Produced> {
    let u = a.input.load()?;
    let scheme = a.averaging.scheme()?;
    let p = match a.stat {
        CylStat::Frequencies => {
            let f = block_frequencies(&u, scheme.max_cutoff(), a.ell)?;
            Produced::new("corCcond", "frequencies", f)?
        }
        CylStat::Cancellation => {
            let blocks = match &a.blocks {
                Some(s) => BlockSet::Explicit(parse_blocks(s)?),
                None => BlockSet::All,
            };
            let q = BlockQuery { ell: a.ell, m: a.m, blocks };
            Produced::new("corCcond", "cancellation", cancellation_stat(&u, &scheme, &q)?)?
        }
        CylStat::WorstCase => Produced::new("corCcond", "worst-case", worst_case_cancellation(&u, &scheme, a.m, a.ell)?)?,
        CylStat::Conditional => {
            Produced::new("corCcond", "conditional", conditional_cancellation(&u, &scheme, a.m, a.ell, a.eps)?)?
        }
        CylStat::Kmixing => {
            let grid = if a.m_grid.is_empty() { vec![a.m] } else { a.m_grid.clone() };
            let prof = kmixing_scan(&u, &scheme, a.ell, &grid)?;
            let mut p = Produced::new("corCcond", "kmixing", &prof)?;
            if let Some(c) = &a.csv {
                prof.write_csv(c)?;
                p.outputs.push(c.clone());
            }
            p
        }
    };
    Ok(p.input(&a.input.input))
}

fn parse_partition(s: &str) -> Result<PartitionKind> {
    let bad = || Error::validation(format!("bad partition '{s}'; use power:C,GAMMA, sqrt-log or explicit:1,10,…"));
    if s == "sqrt-log" {
        return Ok(PartitionKind::SqrtLog);
    }
    if let Some(rest) = s.strip_prefix("power:") {
        let (c, g) = rest.split_once(',').ok_or_else(bad)?;
        return Ok(PartitionKind::Power { c: parse_number(c).map_err(|_| bad())?, gamma: parse_number(g).map_err(|_| bad())? });
    }
    if let Some(rest) = s.strip_prefix("explicit:") {
        let cuts = rest.split(',').map(parse_count).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        return Ok(PartitionKind::Explicit { cuts });
    }
    Err(bad())
}

fn momo(a: &MomoArgs) -> Result<Produced> {
    let u = a.input.load()?;
    let n = a.n.unwrap_or(u.len());
    let p = match a.stat {
        MomoStat::Rotation => {
            let part = BlockPartition::new(parse_partition(&a.partition)?, n)?;
            let alpha = a.alpha.ok_or_else(|| Error::validation("rotation needs --alpha"))?;
            let v = momo_rotation(&u, &part, alpha)?;
            Produced::new("defmomobis", "rotation", json!({"n": n, "alpha": alpha, "blocks": part.k_n(), "value": v}))?
        }
        MomoStat::Sup => {
            let part = BlockPartition::new(parse_partition(&a.partition)?, n)?;
            let r = momo_sup(&u, &part, a.oversample, a.refine)?;
            let mut p = Produced::new("momo28", "sup", &r)?;
            if let Some(c) = &a.csv {
                r.write_csv(c)?;
                p.outputs.push(c.clone());
            }
            p
        }
        MomoStat::Mrt => {
            let m = a.window.ok_or_else(|| Error::validation("mrt needs --M"))?;
            let seed = need_seed(a.seed, "mrt")?;
            let n = a.n.unwrap_or(u.len().saturating_sub(m));
            Produced::new("momo28", "mrt", mrt_swapped(&u, n, m, a.samples, seed, a.oversample)?)?
        }
    };
    Ok(p.input(&a.input.input))
}

fn parse_matrix<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<Vec<T>>> {
    s.split(';').map(|row| row.split(',').map(|x| f(x.trim())).collect()).collect()
}

fn num(s: &str) -> Result<f64> {
    parse_number(s).map_err(Error::Validation)
}

fn coupling(a: &CouplingArgs) -> Result<Produced> {
    let (states, matrix) = match (&a.flip, &a.matrix) {
        (Some(q), None) => {
            let one_minus = |q: &str| -> String {
                match parse_rational(q) {
                    Ok(r) => (Rational::from_integer(1) - r).to_string(),
                    Err(_) => (1.0 - parse_number(q).unwrap_or(f64::NAN)).to_string(),
                }
            };
            let r = one_minus(q);
            (vec!["-1".to_string(), "1".to_string()], format!("{r},{q};{q},{r}"))
        }
        (None, Some(m)) => {
            if a.states.is_empty() {
                return Err(Error::validation("--matrix needs --states"));
            }
            (a.states.clone(), m.clone())
        }
        _ => return Err(Error::validation("give exactly one of --flip or --matrix")),
    };
    if a.rational {
        let m = MarkovModel::with_order(
            states.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
            a.order,
            parse_matrix(&matrix, parse_rational)?,
            None,
        )?;
        let b = TargetDist::new(
            a.values.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
            a.probs.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
        )?;
        let v = exact_correlation(&m, &b);
        return Produced::new("eq:positive_correlation", "exact-rational", json!({"exact_correlation": v.to_string()}));
    }
    let m = MarkovModel::with_order(
        states.iter().map(|s| num(s)).collect::<Result<_>>()?,
        a.order,
        parse_matrix(&matrix, num)?,
        None,
    )?;
    let b = TargetDist::new(a.values.iter().map(|s| num(s)).collect::<Result<_>>()?, a.probs.iter().map(|s| num(s)).collect::<Result<_>>()?)?;
    let exact = exact_correlation(&m, &b);
    let Some(n) = a.n else {
        return Produced::new("eq:positive_correlation", "exact", json!({"exact_correlation": exact}));
    };
    let seed = need_seed(a.seed, "coupling simulation")?;
    let paths = simulate_coupling(&m, &b, n, seed)?;
    let d = coupling_diagnostics(&paths, &b);
    let mut p = Produced::new(
        "eq:positive_correlation",
        "simulate",
        json!({"exact_correlation": exact, "zero_entropy_boundary": paths.zero_entropy_boundary, "diagnostics": d}),
    )?;
    if let Some(prefix) = &a.paths_out {
        for s in paths.to_samples()? {
            let name = s.label.split('(').next().unwrap_or("path").trim_start_matches("coupling-").to_string();
            let mut path = prefix.as_os_str().to_owned();
            path.push(format!("{name}.bin"));
            let path = PathBuf::from(path);
            seqgen::save_sequence(&s, &path, SequenceFormat::Binary)?;
            p.outputs.push(path);
        }
    }
    Ok(p)
}

fn rigidity(a: &RigidityArgs) -> Result<Produced> {
    let p: Vec<f64> = match a.harmonic {
        Some(d) => (1..=d).map(|n| 1.0 / (n + 1) as f64).collect(),
        None => a.p.clone(),
    };
    if p.is_empty() {
        return Err(Error::validation("give --p or --harmonic"));
    }
    let spec = if a.q.is_empty() { CantorMeasureSpec::minimal(p)? } else { CantorMeasureSpec::new(a.q.clone(), p)? };
    let spec = spec.with_rule(match a.rule {
        RuleArg::LeftmostTwo => ChildRule::LeftmostTwo,
        RuleArg::OuterTwo => ChildRule::OuterTwo,
    });
    let seed = need_seed(a.seed, "rigidity sampling")?;
    match a.level {
        Some(level) => Produced::new("kf", "character", estimate_character(&spec, level, a.count, seed)?),
        None => Produced::new("kf", "rigidity", rigidity_report(&spec, a.depth.unwrap_or(spec.depth()), a.count, seed)?),
    }
}

fn suite(a: &SuiteArgs) -> Result<Produced> {
    let mut cfg = if a.quick { SuiteConfig::quick() } else { SuiteConfig::full() };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let run = run_suite(&cfg)?;
    let mut p = Produced::new("suite", "suite", &run.report)?;
    p.extra = json!({"timings": run.timings});
    Ok(p)
}

fn sha256_file(p: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut f = std::fs::File::open(p)?;
    std::io::copy(&mut f, &mut h)?;
    Ok(hex::encode(h.finalize()))
}

fn out_path(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::Gen(a) => Some(&a.out),
        Command::Corr(a) => a.output.out.as_deref(),
        Command::Uniformity(a) => a.output.out.as_deref(),
        Command::Cylinders(a) => a.output.out.as_deref(),
        Command::Momo(a) => a.output.out.as_deref(),
        Command::Coupling(a) => a.output.out.as_deref(),
        Command::Rigidity(a) => a.output.out.as_deref(),
        Command::Suite(a) => a.output.out.as_deref(),
    }
}

fn execute(cli: &Cli, workers: usize) -> Result<()> {
    let start = Instant::now();
    let produced = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Corr(a) => corr(a),
        Command::Uniformity(a) => uniformity(a),
        Command::Cylinders(a) => cylinders(a),
        Command::Momo(a) => momo(a),
        Command::Coupling(a) => coupling(a),
        Command::Rigidity(a) => rigidity(a),
        Command::Suite(a) => suite(a),
    }?;
    let envelope = json!({
        "tag": produced.tag,
        "statistic": produced.statistic,
        "version": crate::VERSION,
        "result": produced.result,
    });
    let text = serde_json::to_string_pretty(&envelope)? + "\n";
    let manifest_base = match (&cli.command, out_path(&cli.command)) {
        (Command::Gen(_), Some(p)) => Some(p.to_path_buf()),
        (_, Some(p)) => {
            std::fs::write(p, &text)?;
            Some(p.to_path_buf())
        }
        (_, None) => {
            print!("{text}");
            None
        }
    };
    if let Some(base) = manifest_base {
        let inputs = produced
            .inputs
            .iter()
            .map(|p| Ok(json!({"path": p, "sha256": sha256_file(p)?})))
            .collect::<Result<Vec<_>>>()?;
        let mut outputs = vec![base.clone()];
        outputs.extend(produced.outputs.iter().cloned());
        let manifest = json!({
            "version": crate::VERSION,
            "command": &cli.command,
            "workers": workers,
            "inputs": inputs,
            "outputs": outputs,
            "wall_time_s": start.elapsed().as_secs_f64(),
            "extra": produced.extra,
        });
        let mut mpath = base.into_os_string();
        mpath.push(".manifest.json");
        std::fs::write(PathBuf::from(mpath), serde_json::to_string_pretty(&manifest)? + "\n")?;
    }
    Ok(())
}

const SUBCOMMANDS: [&str; 8] = ["gen", "corr", "uniformity", "cylinders", "momo", "coupling", "rigidity", "suite"];

/// Splices flags from `--config FILE` in right after the subcommand name (or
/// after the program name, together with the config's `"command"`), so
/// command-line occurrences come later and override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let cfg: Value = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let obj = cfg.as_object().ok_or_else(|| Error::validation(format!("config {path} must be a JSON object")))?;
    let mut tokens: Vec<OsString> = Vec::new();
    for (k, v) in obj {
        if k == "command" || k == "config" {
            continue;
        }
        let flag = format!("--{k}");
        match v {
            Value::Bool(true) => tokens.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => tokens.extend([flag.into(), s.into()]),
            Value::Number(n) => tokens.extend([flag.into(), n.to_string().into()]),
            Value::Array(xs) => {
                let joined = xs
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                tokens.push(format!("{flag}={joined}").into());
            }
            Value::Object(_) => return Err(Error::validation(format!("config key '{k}' cannot be an object"))),
        }
    }
    let mut out = args;
    match strs.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) {
        Some(i) => {
            let tail = out.split_off(i + 1);
            out.extend(tokens);
            out.extend(tail);
        }
        None => {
            let cmd = obj
                .get("command")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::validation("no subcommand on the command line or in the config"))?;
            let tail = out.split_off(1.min(out.len()));
            out.push(cmd.into());
            out.extend(tokens);
            out.extend(tail);
        }
    }
    Ok(out)
}

fn report_error(kind: &str, message: &str, code: i32) -> i32 {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message, "exit_code": code}}));
    code
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => return report_error(e.kind(), &e.to_string(), e.exit_code()),
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            return report_error("usage", e.to_string().trim(), 2);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return report_error("usage", e.to_string().trim(), 2),
    };
    let workers = match cli.workers.map(Ok).or_else(|| {
        std::env::var(ENV_WORKERS).ok().map(|v| v.parse::<usize>().map_err(|_| format!("{ENV_WORKERS} must be a positive integer")))
    }) {
        Some(Ok(0)) => return report_error("validation", "worker count must be positive", 2),
        Some(Ok(w)) => w,
        Some(Err(m)) => return report_error("validation", &m, 2),
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => return report_error("resource", &e.to_string(), 3),
    };
    match pool.install(|| execute(&cli, workers)) {
        Ok(()) => 0,
        Err(e) => report_error(e.kind(), &e.to_string(), e.exit_code()),
    }
}
