//! Positive-correlation coupling of a finite-valued Markov process with an
//! i.i.d. target process.
//!
//! Given the past, the conditional law of `X_n` splits `[0,1)` into ordered
//! intervals `I_j`. With `V_n` uniform, `U_n = left(I_j) + V_n·|I_j|` when
//! `X_n = x_j`; `U_n` is uniform and independent of the past. `Y_n` is the
//! target value whose interval `J_k` contains `U_n`.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqgen::SequenceSample;

/// Number field for model parameters: `f64` or exact `Ratio<i128>`.
pub trait Scalar: Num + Signed + PartialOrd + Clone + Debug + ToPrimitive {
    fn near(a: &Self, b: &Self, tol: f64) -> bool;
}

impl Scalar for f64 {
    fn near(a: &Self, b: &Self, tol: f64) -> bool {
        (a - b).abs() <= tol
    }
}

impl Scalar for Ratio<i128> {
    fn near(a: &Self, b: &Self, _tol: f64) -> bool {
        a == b
    }
}

pub type Rational = Ratio<i128>;

fn gt0<T: Scalar>(x: &T) -> bool {
    *x > T::zero()
}

fn lt0<T: Scalar>(x: &T) -> bool {
    *x < T::zero()
}

fn sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().fold(T::zero(), |a, b| a + b)
}

/// Solves `π P = π`, `Σ π = 1` by Gaussian elimination.
pub fn stationary<T: Scalar>(p: &[Vec<T>]) -> Result<Vec<T>> {
    let r = p.len();
    // rows of A = Pᵀ - I, last row replaced by ones
    let mut a: Vec<Vec<T>> = (0..r)
        .map(|i| {
            (0..=r)
                .map(|j| {
                    if i == r - 1 {
                        T::one()
                    } else if j == r {
                        T::zero()
                    } else if i == j {
                        p[j][i].clone() - T::one()
                    } else {
                        p[j][i].clone()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..r {
        let piv = (col..r)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if Scalar::near(&a[piv][col], &T::zero(), 1e-13) {
            return Err(Error::validation("stationary distribution is not unique; supply it explicitly"));
        }
        a.swap(col, piv);
        for row in 0..r {
            if row != col && !a[row][col].is_zero() {
                let f = a[row][col].clone() / a[col][col].clone();
                for j in col..=r {
                    let d = f.clone() * a[col][j].clone();
                    a[row][j] = a[row][j].clone() - d;
                }
            }
        }
    }
    Ok((0..r).map(|i| a[i][r].clone() / a[i][i].clone()).collect())
}

/// Finite-memory Markov model. Rows of `p` are indexed by the context of the
/// last `order` states, most recent last, encoded in base `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel<T = f64> {
    states: Vec<T>,
    order: usize,
    p: Vec<Vec<T>>,
    pi: Vec<T>,
}

impl<T: Scalar> MarkovModel<T> {
    pub fn new(states: Vec<T>, p: Vec<Vec<T>>) -> Result<Self> {
        Self::with_order(states, 1, p, None)
    }

    /// `pi` is the stationary law over contexts; computed when `None`.
    pub fn with_order(states: Vec<T>, order: usize, p: Vec<Vec<T>>, pi: Option<Vec<T>>) -> Result<Self> {
        let r = states.len();
        if r == 0 || order == 0 {
            return Err(Error::validation("need at least one state and order >= 1"));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("states must be strictly increasing"));
        }
        let contexts = r.checked_pow(order as u32).filter(|&c| c <= 4096).ok_or_else(|| Error::Resource {
            what: format!("{r}^{order} contexts"),
            limit: 4096,
        })?;
        if p.len() != contexts || p.iter().any(|row| row.len() != r) {
            return Err(Error::validation(format!("transition table must be {contexts}×{r}")));
        }
        for (i, row) in p.iter().enumerate() {
            if row.iter().any(|x| lt0(x)) || !Scalar::near(&sum(row.iter().cloned()), &T::one(), 1e-12) {
                return Err(Error::validation(format!("row {i} is not a probability vector")));
            }
        }
        let chain = context_chain(&p, r, order);
        let pi = match pi {
            Some(pi) => pi,
            None => stationary(&chain)?,
        };
        if pi.len() != contexts || pi.iter().any(|x| lt0(x)) {
            return Err(Error::validation("stationary law has wrong length or negative mass"));
        }
        for j in 0..contexts {
            let pj = sum((0..contexts).map(|i| pi[i].clone() * chain[i][j].clone()));
            if !Scalar::near(&pj, &pi[j], 1e-10) {
                return Err(Error::validation(format!("πP ≠ π at context {j}")));
            }
        }
        Ok(MarkovModel { states, order, p, pi })
    }

    pub fn states(&self) -> &[T] {
        &self.states
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.p
    }

    /// Stationary law over contexts.
    pub fn stationary(&self) -> &[T] {
        &self.pi
    }

    /// True when every row is a point mass, so `X` carries no randomness.
    pub fn is_zero_entropy(&self) -> bool {
        self.p.iter().all(|row| row.iter().filter(|x| !x.is_zero()).count() == 1)
    }

    fn next_context(&self, c: usize, j: usize) -> usize {
        let r = self.states.len();
        (c % r.pow(self.order as u32 - 1)) * r + j
    }
}

fn context_chain<T: Scalar>(p: &[Vec<T>], r: usize, order: usize) -> Vec<Vec<T>> {
    let n = p.len();
    let keep = r.pow(order as u32 - 1);
    let mut chain = vec![vec![T::zero(); n]; n];
    for (c, row) in p.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            chain[c][(c % keep) * r + j] = x.clone();
        }
    }
    chain
}

impl MarkovModel<f64> {
    /// Symmetric two-state chain on `{-1, +1}` with flip probability `q`.
    pub fn symmetric_flip(q: f64) -> Result<Self> {
        Self::new(vec![-1.0, 1.0], vec![vec![1.0 - q, q], vec![q, 1.0 - q]])
    }
}

/// Target distribution with values stored centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDist<T = f64> {
    values: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> TargetDist<T> {
    pub fn new(values: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if values.len() < 2 || values.len() != probs.len() {
            return Err(Error::validation("target needs at least two values with matching probabilities"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("target values must be strictly increasing"));
        }
        if probs.iter().any(|b| !gt0(b)) || !Scalar::near(&sum(probs.iter().cloned()), &T::one(), 1e-12) {
            return Err(Error::validation("target probabilities must be positive and sum to 1"));
        }
        let mean = sum(values.iter().zip(&probs).map(|(y, b)| y.clone() * b.clone()));
        let values = values.into_iter().map(|y| y - mean.clone()).collect();
        Ok(TargetDist { values, probs })
    }

    /// Centered values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// `(1/|I|) Σ_k y_k |I ∩ J_k|` for `I = [a, b)`, `a < b`.
    pub fn conditional_mean(&self, a: &T, b: &T) -> T {
        let mut left = T::zero();
        let mut acc = T::zero();
        let width = b.clone() - a.clone();
        for (y, beta) in self.values.iter().zip(&self.probs) {
            let right = left.clone() + beta.clone();
            let lo = if *a > left { a.clone() } else { left.clone() };
            let hi = if *b < right { b.clone() } else { right.clone() };
            if hi > lo {
                let mut overlap = hi - lo;
                let cap = if width < *beta { width.clone() } else { beta.clone() };
                if overlap > cap {
                    overlap = cap;
                }
                acc = acc + y.clone() * overlap;
            }
            left = right;
        }
        acc / width
    }

    /// Target value for `u ∈ [0,1)`.
    pub fn value_at(&self, u: &T) -> T {
        let mut right = T::zero();
        for (y, beta) in self.values.iter().zip(&self.probs) {
            right = right + beta.clone();
            if *u < right {
                return y.clone();
            }
        }
        self.values.last().unwrap().clone()
    }
}

impl TargetDist<f64> {
    pub fn uniform_signs() -> Self {
        TargetDist { values: vec![-1.0, 1.0], probs: vec![0.5, 0.5] }
    }
}

/// `Y` produced from conditioning context `ctx`, realized state `j` and `v ∈ [0,1)`.
pub fn coupled_output<T: Scalar>(model: &MarkovModel<T>, beta: &TargetDist<T>, ctx: usize, j: usize, v: &T) -> T {
    let row = &model.p[ctx];
    let left = sum(row[..j].iter().cloned());
    beta.value_at(&(left + v.clone() * row[j].clone()))
}

/// `E[X_0 Y_0] = Σ_c π_c Σ_j P_cj · x_j · E[Y | U ∈ I_j^{(c)}]`.
pub fn exact_correlation<T: Scalar>(model: &MarkovModel<T>, beta: &TargetDist<T>) -> T {
    let mut total = T::zero();
    for (c, row) in model.p.iter().enumerate() {
        let mut left = T::zero();
        let mut inner = T::zero();
        for (j, pj) in row.iter().enumerate() {
            let right = left.clone() + pj.clone();
            if gt0(pj) {
                inner = inner + pj.clone() * model.states[j].clone() * beta.conditional_mean(&left, &right);
            }
            left = right;
        }
        total = total + model.pi[c].clone() * inner;
    }
    total
}

/// `max_c |Σ_j P_cj · E[Y | U ∈ I_j^{(c)}]|`, zero when `U` is independent of the past.
pub fn conditional_mean_residual<T: Scalar>(model: &MarkovModel<T>, beta: &TargetDist<T>) -> f64 {
    model
        .p
        .iter()
        .map(|row| {
            let mut left = T::zero();
            let mut acc = T::zero();
            for pj in row {
                let right = left.clone() + pj.clone();
                if gt0(pj) {
                    acc = acc + pj.clone() * beta.conditional_mean(&left, &right);
                }
                left = right;
            }
            acc.abs().to_f64().unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// First `(context, v, j)` where `Y` decreases in the realized state `j`,
/// scanning `v = (i + 1/2)/grid` over every context.
pub fn monotone_violation<T: Scalar>(
    model: &MarkovModel<T>,
    beta: &TargetDist<T>,
    grid: usize,
    from_f64: impl Fn(f64) -> T,
) -> Option<(usize, f64, usize)> {
    for (c, row) in model.p.iter().enumerate() {
        let support: Vec<usize> = (0..row.len()).filter(|&j| gt0(&row[j])).collect();
        for i in 0..grid {
            let vf = (i as f64 + 0.5) / grid as f64;
            let v = from_f64(vf);
            let ys: Vec<T> = support.iter().map(|&j| coupled_output(model, beta, c, j, &v)).collect();
            if let Some(k) = ys.windows(2).position(|w| w[1] < w[0]) {
                return Some((c, vf, support[k + 1]));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPaths {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
    /// Set when the model has no randomness, where the correlation vanishes.
    pub zero_entropy_boundary: bool,
}

impl CouplingPaths {
    /// `[X, V, U, Y]` as samples for the sequence file formats.
    pub fn to_samples(&self) -> Result<Vec<SequenceSample>> {
        [("X", &self.x), ("V", &self.v), ("U", &self.u), ("Y", &self.y)]
            .into_iter()
            .map(|(name, xs)| SequenceSample::from_real(xs, format!("coupling-{name}({})", self.seed)))
            .collect()
    }
}

fn draw(cumulative: &[f64], w: f64) -> usize {
    cumulative.iter().position(|&c| w < c).unwrap_or(cumulative.len() - 1)
}

/// Simulates `n` steps of the stationary coupling.
pub fn simulate_coupling(model: &MarkovModel<f64>, beta: &TargetDist<f64>, n: usize, seed: u64) -> Result<CouplingPaths> {
    if n == 0 {
        return Err(Error::validation("path length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cum = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .scan(0.0, |s, &p| {
                *s += p;
                Some(*s)
            })
            .collect()
    };
    let rows: Vec<Vec<f64>> = model.p.iter().map(|r| cum(r)).collect();
    let mut ctx = draw(&cum(&model.pi), rng.gen::<f64>());
    let mut paths = CouplingPaths {
        x: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        seed,
        zero_entropy_boundary: model.is_zero_entropy(),
    };
    for _ in 0..n {
        let j = draw(&rows[ctx], rng.gen::<f64>());
        let v: f64 = rng.gen();
        let left = if j == 0 { 0.0 } else { rows[ctx][j - 1] };
        let u = (left + v * model.p[ctx][j]).min(1.0 - f64::EPSILON / 2.0);
        paths.x.push(model.states[j]);
        paths.v.push(v);
        paths.u.push(u);
        paths.y.push(beta.value_at(&u));
        ctx = model.next_context(ctx, j);
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDiagnostics {
    pub n: usize,
    pub ks_u: f64,
    pub tv_y: f64,
    pub autocorr_u: Vec<f64>,
    pub autocorr_y: Vec<f64>,
    pub mean_xy: f64,
    pub stderr_xy: f64,
}

pub const DIAGNOSTIC_LAGS: usize = 20;

fn autocorrelations(z: &[f64], lags: usize) -> Vec<f64> {
    let n = z.len() as f64;
    let m = z.iter().sum::<f64>() / n;
    let var: f64 = z.iter().map(|a| (a - m) * (a - m)).sum();
    (1..=lags)
        .map(|h| {
            if var == 0.0 || h >= z.len() {
                return 0.0;
            }
            z.iter().zip(&z[h..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / var
        })
        .collect()
}

/// Kolmogorov-Smirnov distance of the sample from the uniform law on `[0,1)`.
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

pub fn coupling_diagnostics(paths: &CouplingPaths, beta: &TargetDist<f64>) -> CouplingDiagnostics {
    let n = paths.y.len();
    let mut counts = vec![0usize; beta.values.len()];
    for y in &paths.y {
        let k = beta.values.iter().position(|v| v == y).expect("path value outside target");
        counts[k] += 1;
    }
    let tv_y = 0.5 * counts.iter().zip(&beta.probs).map(|(&c, b)| (c as f64 / n as f64 - b).abs()).sum::<f64>();
    let xy: Vec<f64> = paths.x.iter().zip(&paths.y).map(|(a, b)| a * b).collect();
    let mean_xy = xy.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xy.iter().map(|z| (z - mean_xy).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    CouplingDiagnostics {
        n,
        ks_u: ks_uniform(&paths.u),
        tv_y,
        autocorr_u: autocorrelations(&paths.u, DIAGNOSTIC_LAGS),
        autocorr_y: autocorrelations(&paths.y, DIAGNOSTIC_LAGS),
        mean_xy,
        stderr_xy: (var / n as f64).sqrt(),
    }
}

/// Random model with strictly positive rows, for positivity sweeps.
pub fn random_model(rng: &mut impl Rng) -> (MarkovModel<f64>, TargetDist<f64>) {
    let r = rng.gen_range(2..=5);
    let mut states: Vec<f64> = Vec::new();
    while states.len() < r {
        let x = rng.gen_range(-3.0..3.0);
        if states.iter().all(|&s: &f64| (s - x).abs() > 1e-3) {
            states.push(x);
        }
    }
    states.sort_by(f64::total_cmp);
    let p = (0..r)
        .map(|_| {
            let w: Vec<f64> = (0..r).map(|_| rng.gen_range(0.05..1.0)).collect();
            let t: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / t).collect();
            let head: f64 = row[..r - 1].iter().sum();
            row[r - 1] = 1.0 - head;
            row
        })
        .collect();
    let s = rng.gen_range(2..=5);
    let mut values: Vec<f64> = (0..s).map(|_| rng.gen_range(-2.0..2.0)).collect();
    values.sort_by(f64::total_cmp);
    for i in 1..s {
        if values[i] <= values[i - 1] {
            values[i] = values[i - 1] + 0.01;
        }
    }
    let w: Vec<f64> = (0..s).map(|_| rng.gen_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    let mut probs: Vec<f64> = w.iter().map(|x| x / t).collect();
    let head: f64 = probs[..s - 1].iter().sum();
    probs[s - 1] = 1.0 - head;
    (
        MarkovModel::new(states, p).expect("random rows are valid"),
        TargetDist::new(values, probs).expect("random target is valid"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn flip(qv: Rational) -> (MarkovModel<Rational>, TargetDist<Rational>) {
        let one = Rational::from_integer(1);
        let m = MarkovModel::new(vec![-one, one], vec![vec![one - qv, qv], vec![qv, one - qv]]).unwrap();
        let b = TargetDist::new(vec![-one, one], vec![q(1, 2), q(1, 2)]).unwrap();
        (m, b)
    }

    #[test]
    fn symmetric_chain_is_exactly_two_q() {
        for qv in [q(1, 8), q(1, 4), q(7, 16), q(1, 2)] {
            let (m, b) = flip(qv);
            assert_eq!(exact_correlation(&m, &b), qv * 2);
            assert_eq!(conditional_mean_residual(&m, &b), 0.0);
        }
    }

    #[test]
    fn float_path_agrees() {
        let m = MarkovModel::symmetric_flip(0.25).unwrap();
        let v = exact_correlation(&m, &TargetDist::uniform_signs());
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dirac_rows_give_zero() {
        let one = Rational::from_integer(1);
        let zero = Rational::from_integer(0);
        let m = MarkovModel::new(vec![-one, one], vec![vec![zero, one], vec![one, zero]]).unwrap();
        let b = TargetDist::new(vec![-one, one], vec![q(1, 3), q(2, 3)]).unwrap();
        assert!(m.is_zero_entropy());
        assert_eq!(exact_correlation(&m, &b), zero);
    }

    #[test]
    fn target_shift_is_absorbed() {
        let m = MarkovModel::symmetric_flip(0.3).unwrap();
        let a = TargetDist::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let b = TargetDist::new(vec![9.0, 10.5, 12.0], vec![0.2, 0.5, 0.3]).unwrap();
        assert!((exact_correlation(&m, &a) - exact_correlation(&m, &b)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(TargetDist::new(vec![1.0], vec![1.0]).is_err());
        assert!(TargetDist::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(MarkovModel::new(vec![1.0, 0.0], vec![vec![0.5, 0.5]; 2]).is_err());
        assert!(MarkovModel::new(vec![0.0, 1.0], vec![vec![0.5, 0.6]; 2]).is_err());
    }

    #[test]
    fn deterministic_state_decouples() {
        let m = MarkovModel::new(vec![2.0], vec![vec![1.0]]).unwrap();
        let b = TargetDist::uniform_signs();
        let p = simulate_coupling(&m, &b, 1000, 3).unwrap();
        assert_eq!(p.u, p.v);
        assert!(p.zero_entropy_boundary);
        assert_eq!(exact_correlation(&m, &b), 0.0);
    }

    #[test]
    fn simulation_is_seeded() {
        let m = MarkovModel::symmetric_flip(0.25).unwrap();
        let b = TargetDist::uniform_signs();
        assert_eq!(simulate_coupling(&m, &b, 500, 1).unwrap(), simulate_coupling(&m, &b, 500, 1).unwrap());
    }

    #[test]
    fn second_order_context() {
        // X_n = X_{n-2} flipped with probability q: rows by (x_{n-2}, x_{n-1})
        let qv = 0.2;
        let p = vec![vec![1.0 - qv, qv], vec![1.0 - qv, qv], vec![qv, 1.0 - qv], vec![qv, 1.0 - qv]];
        let m = MarkovModel::with_order(vec![-1.0, 1.0], 2, p, None).unwrap();
        let pi = m.stationary();
        assert!(pi.iter().all(|x| (x - 0.25).abs() < 1e-12));
        assert!((exact_correlation(&m, &TargetDist::uniform_signs()) - 2.0 * qv).abs() < 1e-12);
    }

    #[test]
    fn monotone_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (m, b) = random_model(&mut rng);
            assert_eq!(monotone_violation(&m, &b, 1000, |v| v), None);
            assert!(conditional_mean_residual(&m, &b) < 1e-10);
        }
    }
}
