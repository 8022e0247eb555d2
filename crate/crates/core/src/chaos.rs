//! Resampling variance decomposition for functions of independent coordinates.
//!
//! For `f(X_1, ..., X_n)` with `X'` and `X''` independent copies of `X`:
//!
//! * `B_i` is the covariance between a single-coordinate increment
//!   `f(X) - f(X^(j))` and the increment `f(X^A) - f(X^(A + j))`, where `A` is
//!   a uniform `(i-1)`-subset and `j` a uniform coordinate outside it
//!   (resampled coordinates take their value from `X'`);
//! * `B'_i` is the same with `j` uniform over all coordinates and the single
//!   coordinate replaced by `X''_j` in both factors, so `j` may sit inside `A`.
//!
//! `Var f = 1/2 sum_i B_i`, the `B_i` are nonincreasing and nonnegative, and
//! `B'_k <= 2 Var f / k * (n + 1) / n`.
//!
//! Exact mode enumerates finite supports; Monte Carlo mode samples
//! `(X, X', X'', sigma, j)` once per trial and reuses them for every `i`.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ensemble::{pair_count, pair_from_packed, EntrySpec, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng::{Purpose, SeedContext, StreamRng};
use crate::spectral::{self, Solver, SolverOptions};
use crate::stats;

/// Cap on the number of single-copy assignments tabulated by exact mode.
pub const TABLE_BUDGET: u128 = 10_000_000;
/// Cap on the number of hybrid evaluations in an exact decomposition.
pub const DECOMPOSITION_BUDGET: u128 = 100_000_000;

const EXACT_TOL: f64 = 1e-10;

pub type Sampler = Arc<dyn Fn(&mut StreamRng) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum CoordinateLaw {
    Finite { values: Vec<f64>, probs: Vec<f64> },
    Sampler(Sampler),
}

impl fmt::Debug for CoordinateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordinateLaw::Finite { values, probs } => f
                .debug_struct("Finite")
                .field("values", values)
                .field("probs", probs)
                .finish(),
            CoordinateLaw::Sampler(_) => f.write_str("Sampler(..)"),
        }
    }
}

impl CoordinateLaw {
    pub fn finite(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::Domain(format!(
                "finite law needs matching nonempty values/probs, got {} and {}",
                values.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("finite law has a non-finite value or negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(CoordinateLaw::Finite { values, probs })
    }

    /// Uniform on `{-1, +1}`.
    pub fn rademacher() -> Self {
        CoordinateLaw::Finite {
            values: vec![-1.0, 1.0],
            probs: vec![0.5, 0.5],
        }
    }

    pub fn sampler<F>(f: F) -> Self
    where
        F: Fn(&mut StreamRng) -> f64 + Send + Sync + 'static,
    {
        CoordinateLaw::Sampler(Arc::new(f))
    }

    pub fn gaussian() -> Self {
        CoordinateLaw::sampler(|rng| rng.sample(rand_distr::StandardNormal))
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            CoordinateLaw::Finite { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("nonempty support")
            }
            CoordinateLaw::Sampler(f) => f(rng),
        }
    }

    fn support_size(&self) -> Option<usize> {
        match self {
            CoordinateLaw::Finite { values, .. } => Some(values.len()),
            CoordinateLaw::Sampler(_) => None,
        }
    }
}

/// Independent coordinates `X_1, ..., X_n`.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    laws: Vec<CoordinateLaw>,
}

impl ProductSpace {
    pub fn new(laws: Vec<CoordinateLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::Domain("product space needs at least one coordinate".into()));
        }
        for law in &laws {
            if let CoordinateLaw::Finite { values, probs } = law {
                CoordinateLaw::finite(values.clone(), probs.clone())?;
            }
        }
        Ok(ProductSpace { laws })
    }

    pub fn iid(n: usize, law: CoordinateLaw) -> Result<Self> {
        ProductSpace::new(vec![law; n])
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[CoordinateLaw] {
        &self.laws
    }

    pub fn is_finite(&self) -> bool {
        self.laws.iter().all(|l| l.support_size().is_some())
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.laws.iter().map(|l| l.sample(rng)).collect()
    }
}

/// A deterministic real function of `arity` coordinates.
pub trait BlackBox: Sync {
    fn arity(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// Set when the evaluator must not be called from several threads.
    fn serial(&self) -> bool {
        false
    }
}

/// Wraps a closure as a [`BlackBox`].
pub struct FnBox<F> {
    arity: usize,
    f: F,
}

impl<F> FnBox<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(arity: usize, f: F) -> Self {
        FnBox { arity, f }
    }
}

impl<F> BlackBox for FnBox<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
}

/// A function of two-valued coordinates given by its value table; bit `c`
/// of the table index is set when coordinate `c` differs from `lo[c]`.
#[derive(Debug, Clone)]
pub struct BinaryTable {
    lo: Vec<f64>,
    values: Vec<f64>,
}

impl BinaryTable {
    pub fn new(lo: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() >= usize::BITS as usize || values.len() != 1 << lo.len() {
            return Err(Error::Domain(format!(
                "table of length {} does not match {} binary coordinates",
                values.len(),
                lo.len()
            )));
        }
        Ok(BinaryTable { lo, values })
    }
}

impl BlackBox for BinaryTable {
    fn arity(&self) -> usize {
        self.lo.len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.lo.len() {
            return Err(Error::Evaluator(format!("expected {} coordinates, got {}", self.lo.len(), x.len())));
        }
        let idx = x
            .iter()
            .zip(&self.lo)
            .enumerate()
            .map(|(c, (v, lo))| usize::from(v != lo) << c)
            .sum::<usize>();
        Ok(self.values[idx])
    }
}

/// Random test function number `seed`: `1 + seed % 4` coordinates with
/// random two-point laws and a random value table.
pub fn random_binary_instance(seed: u64) -> (BinaryTable, ProductSpace) {
    let mut rng = SeedContext::new(seed, "chaos-corpus", seed, Purpose::Coordinates).rng();
    let n = 1 + (seed as usize % 4);
    let mut laws = Vec::new();
    let mut lo = Vec::new();
    for _ in 0..n {
        let a: f64 = rng.random_range(-2.0..0.0);
        let b: f64 = rng.random_range(0.0..2.0);
        let p: f64 = rng.random_range(0.05..0.95);
        laws.push(CoordinateLaw::Finite {
            values: vec![a, b],
            probs: vec![p, 1.0 - p],
        });
        lo.push(a);
    }
    let scale = [1.0, 0.1, 10.0][(seed / 4) as usize % 3];
    let values = (0..1 << n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    (BinaryTable { lo, values }, ProductSpace { laws })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTerms {
    pub mode: Mode,
    /// The `i` (1-based) of each entry of `b` and `b_prime`.
    pub indices: Vec<usize>,
    pub b: Vec<f64>,
    pub b_prime: Option<Vec<f64>>,
    pub b_se: Option<Vec<f64>>,
    pub b_prime_se: Option<Vec<f64>>,
    /// Standard error of `b[l] - b[l + 1]` (paired within trials).
    pub b_step_se: Option<Vec<f64>>,
    pub variance: f64,
    pub variance_se: Option<f64>,
    /// Arity of the decomposed function.
    pub n: usize,
    pub trials: Option<usize>,
}

fn check_arity(f: &dyn BlackBox, space: &ProductSpace) -> Result<()> {
    if f.arity() != space.n() {
        return Err(Error::Domain(format!(
            "function arity {} does not match space dimension {}",
            f.arity(),
            space.n()
        )));
    }
    Ok(())
}

/// `f` tabulated over every assignment of a finite product space.
struct Table {
    values: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
    strides: Vec<usize>,
    f: Vec<f64>,
}

impl Table {
    fn build(f: &dyn BlackBox, space: &ProductSpace) -> Result<Table> {
        check_arity(f, space)?;
        let mut values = Vec::with_capacity(space.n());
        let mut probs = Vec::with_capacity(space.n());
        for law in space.laws() {
            match law {
                CoordinateLaw::Finite { values: v, probs: p } => {
                    values.push(v.clone());
                    probs.push(p.clone());
                }
                CoordinateLaw::Sampler(_) => {
                    return Err(Error::Mode("exact enumeration needs finite-support coordinates".into()))
                }
            }
        }
        let size = values.iter().map(|v| v.len() as u128).product::<u128>();
        if size > TABLE_BUDGET {
            return Err(Error::Size {
                needed: size,
                budget: TABLE_BUDGET,
            });
        }
        let mut strides = Vec::with_capacity(values.len());
        let mut s = 1usize;
        for v in &values {
            strides.push(s);
            s *= v.len();
        }
        let mut x = vec![0.0; values.len()];
        let mut table = Vec::with_capacity(s);
        for idx in 0..s {
            for (c, v) in values.iter().enumerate() {
                x[c] = v[(idx / strides[c]) % v.len()];
            }
            table.push(f.eval(&x)?);
        }
        Ok(Table {
            values,
            probs,
            strides,
            f: table,
        })
    }

    fn n(&self) -> usize {
        self.values.len()
    }

    fn size(&self) -> usize {
        self.f.len()
    }

    fn digit(&self, idx: usize, c: usize) -> usize {
        (idx / self.strides[c]) % self.values[c].len()
    }

    fn weight(&self, idx: usize) -> f64 {
        (0..self.n()).map(|c| self.probs[c][self.digit(idx, c)]).product()
    }

    /// Index of the assignment taking coordinate `c` from `copies[pick(c)]`.
    fn hybrid(&self, copies: &[usize], pick: impl Fn(usize) -> usize) -> usize {
        (0..self.n())
            .map(|c| self.digit(copies[pick(c)], c) * self.strides[c])
            .sum()
    }

    fn mean_and_variance(&self) -> (f64, f64) {
        let weights: Vec<f64> = (0..self.size()).map(|i| self.weight(i)).collect();
        let mean: f64 = weights.iter().zip(&self.f).map(|(w, v)| w * v).sum();
        let var = weights.iter().zip(&self.f).map(|(w, v)| w * (v - mean).powi(2)).sum();
        (mean, var)
    }
}

/// `Var f(X)` by full enumeration.
pub fn variance_exact(f: &dyn BlackBox, space: &ProductSpace) -> Result<f64> {
    Ok(Table::build(f, space)?.mean_and_variance().1)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Exact `B_i` and `B'_i` for `i = 1..=n` in subset form.
pub fn decomposition_exact(f: &dyn BlackBox, space: &ProductSpace) -> Result<DecompositionTerms> {
    check_arity(f, space)?;
    let n = space.n();
    if !space.is_finite() {
        return Err(Error::Mode("exact decomposition needs finite-support coordinates".into()));
    }
    let cube: u128 = space
        .laws()
        .iter()
        .map(|l| (l.support_size().unwrap_or(0) as u128).pow(3))
        .product();
    let needed = if n >= 64 {
        u128::MAX
    } else {
        ((1u128 << n) - 1) * n as u128 * cube
    };
    if needed > DECOMPOSITION_BUDGET {
        return Err(Error::Size {
            needed,
            budget: DECOMPOSITION_BUDGET,
        });
    }
    let table = Table::build(f, space)?;
    let (_, variance) = table.mean_and_variance();
    let size = table.size();
    let full = (1usize << n) - 1;

    let mut sum_b = vec![0.0; n];
    let mut sum_bp = vec![0.0; n];
    let mut copies = [0usize; 3];
    // Enumerate (X, X', X'') as three independent table indices.
    for i0 in 0..size {
        let w0 = table.weight(i0);
        for i1 in 0..size {
            let w1 = w0 * table.weight(i1);
            for i2 in 0..size {
                let w = w1 * table.weight(i2);
                if w == 0.0 {
                    continue;
                }
                copies[0] = i0;
                copies[1] = i1;
                copies[2] = i2;
                let fx = table.f[i0];
                for a in 0..full {
                    let size_a = a.count_ones() as usize;
                    let from_a = |c: usize| usize::from(a >> c & 1 == 1);
                    let fa = table.f[table.hybrid(&copies, from_a)];
                    for j in 0..n {
                        let single2 = table.f[table.hybrid(&copies, |c| if c == j { 2 } else { 0 })];
                        let a_j2 = table.f[table.hybrid(&copies, |c| if c == j { 2 } else { from_a(c) })];
                        sum_bp[size_a] += w * (fx - single2) * (fa - a_j2);
                        if a >> j & 1 == 0 {
                            let single1 = table.f[table.hybrid(&copies, |c| usize::from(c == j))];
                            let a_j1 = table.f[table.hybrid(&copies, |c| usize::from(c == j || a >> c & 1 == 1))];
                            sum_b[size_a] += w * (fx - single1) * (fa - a_j1);
                        }
                    }
                }
            }
        }
    }
    let b = (0..n)
        .map(|s| sum_b[s] / (binomial(n, s) * (n - s) as f64))
        .collect();
    let b_prime = (0..n).map(|s| sum_bp[s] / (binomial(n, s) * n as f64)).collect();
    Ok(DecompositionTerms {
        mode: Mode::Exact,
        indices: (1..=n).collect(),
        b,
        b_prime: Some(b_prime),
        b_se: None,
        b_prime_se: None,
        b_step_se: None,
        variance,
        variance_se: None,
        n,
        trials: None,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn pair_budget(space: &ProductSpace, factor: u128) -> Result<()> {
    let square: u128 = space
        .laws()
        .iter()
        .map(|l| (l.support_size().unwrap_or(0) as u128).pow(2))
        .product();
    let needed = square.saturating_mul(factor);
    if needed > DECOMPOSITION_BUDGET {
        return Err(Error::Size {
            needed,
            budget: DECOMPOSITION_BUDGET,
        });
    }
    Ok(())
}

/// `B_i` averaged explicitly over all `n!` orders (the definition, used as an
/// oracle for the subset form).
pub fn decomposition_permutation_form(f: &dyn BlackBox, space: &ProductSpace) -> Result<Vec<f64>> {
    check_arity(f, space)?;
    let n = space.n();
    if !space.is_finite() {
        return Err(Error::Mode("permutation form needs finite-support coordinates".into()));
    }
    let perms: u128 = (1..=n as u128).product();
    pair_budget(space, perms * n as u128)?;
    let table = Table::build(f, space)?;
    let size = table.size();
    let mut sums = vec![0.0; n];
    let mut sigma: Vec<usize> = (0..n).collect();
    loop {
        for i0 in 0..size {
            for i1 in 0..size {
                let w = table.weight(i0) * table.weight(i1);
                let copies = [i0, i1];
                let fx = table.f[i0];
                let mut mask = vec![false; n];
                for (i, &s) in sigma.iter().enumerate() {
                    let single = table.f[table.hybrid(&copies, |c| usize::from(c == s))];
                    let before = table.f[table.hybrid(&copies, |c| usize::from(mask[c]))];
                    mask[s] = true;
                    let after = table.f[table.hybrid(&copies, |c| usize::from(mask[c]))];
                    sums[i] += w * (fx - single) * (before - after);
                }
            }
        }
        if !next_permutation(&mut sigma) {
            break;
        }
    }
    Ok(sums.into_iter().map(|s| s / perms as f64).collect())
}

/// For a fixed order `sigma` and 1-based `i`:
/// `E[(f(X) - f(X^(sigma(i)))) (f(X^(sigma[i-1] + J)) - f(X^(sigma[i] + J)))]`
/// with `J = {extra}` or empty.
pub fn fixed_order_term(
    f: &dyn BlackBox,
    space: &ProductSpace,
    sigma: &[usize],
    i: usize,
    extra: Option<usize>,
) -> Result<f64> {
    check_arity(f, space)?;
    let n = space.n();
    let mut seen = vec![false; n];
    if sigma.len() != n || sigma.iter().any(|&s| s >= n || std::mem::replace(&mut seen[s], true)) {
        return Err(Error::Domain("sigma must be a permutation of 0..n".into()));
    }
    if i == 0 || i > n {
        return Err(Error::Domain(format!("i = {i} outside 1..={n}")));
    }
    if let Some(j) = extra {
        if j >= n || sigma[..i].contains(&j) {
            return Err(Error::Domain(format!("extra coordinate {j} must lie outside sigma[..{i}]")));
        }
    }
    pair_budget(space, 4)?;
    let table = Table::build(f, space)?;
    let size = table.size();
    let mut before = vec![false; n];
    for &s in &sigma[..i - 1] {
        before[s] = true;
    }
    if let Some(j) = extra {
        before[j] = true;
    }
    let mut after = before.clone();
    after[sigma[i - 1]] = true;
    let mut total = 0.0;
    for i0 in 0..size {
        for i1 in 0..size {
            let w = table.weight(i0) * table.weight(i1);
            let copies = [i0, i1];
            let single = table.f[table.hybrid(&copies, |c| usize::from(c == sigma[i - 1]))];
            let fb = table.f[table.hybrid(&copies, |c| usize::from(before[c]))];
            let fa = table.f[table.hybrid(&copies, |c| usize::from(after[c]))];
            total += w * (table.f[i0] - single) * (fb - fa);
        }
    }
    Ok(total)
}

struct TrialSample {
    b: Vec<f64>,
    bp: Vec<f64>,
    half_sq: f64,
}

fn mc_trial(
    f: &dyn BlackBox,
    space: &ProductSpace,
    i_list: &[usize],
    seed: &SeedContext,
) -> Result<TrialSample> {
    let n = space.n();
    let mut rng = seed.with_purpose(Purpose::Coordinates).rng();
    let x = space.sample(&mut rng);
    let x1 = space.sample(&mut rng);
    let x2 = space.sample(&mut rng);
    let mut prng = seed.with_purpose(Purpose::Permutation).rng();
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(&mut prng);
    let j = prng.random_range(0..n);

    let fx = f.eval(&x)?;
    let half_sq = 0.5 * (fx - f.eval(&x1)?).powi(2);
    let mut y = x.clone();
    y[j] = x2[j];
    let f_single2 = f.eval(&y)?;

    let mut b = Vec::with_capacity(i_list.len());
    let mut bp = Vec::with_capacity(i_list.len());
    for &i in i_list {
        let mut ya = x.clone();
        for &c in &sigma[..i - 1] {
            ya[c] = x1[c];
        }
        let fa = f.eval(&ya)?;
        let s = sigma[i - 1];
        let mut y1 = x.clone();
        y1[s] = x1[s];
        let f_single1 = f.eval(&y1)?;
        let mut yb = ya.clone();
        yb[s] = x1[s];
        let fb = f.eval(&yb)?;
        b.push((fx - f_single1) * (fa - fb));
        let mut yj = ya;
        yj[j] = x2[j];
        bp.push((fx - f_single2) * (fa - f.eval(&yj)?));
    }
    Ok(TrialSample { b, bp, half_sq })
}

/// Monte Carlo estimates of `B_i` and `B'_i` for `i` in `i_list` (1-based).
///
/// Each trial draws `X, X', X''`, one uniform order and one uniform `j`, and
/// shares them across all requested `i`. The variance estimate is the mean of
/// `(f(X) - f(X'))^2 / 2`.
pub fn decomposition_mc(
    f: &dyn BlackBox,
    space: &ProductSpace,
    i_list: &[usize],
    trials: usize,
    seed: &SeedContext,
) -> Result<DecompositionTerms> {
    check_arity(f, space)?;
    let n = space.n();
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if let Some(&bad) = i_list.iter().find(|&&i| i == 0 || i > n) {
        return Err(Error::Domain(format!("index i = {bad} outside 1..={n}")));
    }
    let run = |t: usize| mc_trial(f, space, i_list, &seed.with_trial(t as u64));
    let samples: Vec<TrialSample> = if f.serial() {
        (0..trials).map(run).collect::<Result<_>>()?
    } else {
        parallel::try_map_indexed(trials, run)?
    };

    let m = i_list.len();
    let column = |l: usize, prime: bool| -> Vec<f64> {
        samples
            .iter()
            .map(|s| if prime { s.bp[l] } else { s.b[l] })
            .collect()
    };
    let mut b = Vec::with_capacity(m);
    let mut b_se = Vec::with_capacity(m);
    let mut b_prime = Vec::with_capacity(m);
    let mut b_prime_se = Vec::with_capacity(m);
    for l in 0..m {
        let s = stats::summarize(&column(l, false));
        b.push(s.mean);
        b_se.push(s.stderr);
        let s = stats::summarize(&column(l, true));
        b_prime.push(s.mean);
        b_prime_se.push(s.stderr);
    }
    let b_step_se = (0..m.saturating_sub(1))
        .map(|l| {
            let d: Vec<f64> = samples.iter().map(|s| s.b[l] - s.b[l + 1]).collect();
            stats::summarize(&d).stderr
        })
        .collect();
    let var = stats::summarize(&samples.iter().map(|s| s.half_sq).collect::<Vec<_>>());
    Ok(DecompositionTerms {
        mode: Mode::MonteCarlo,
        indices: i_list.to_vec(),
        b,
        b_prime: Some(b_prime),
        b_se: Some(b_se),
        b_prime_se: Some(b_prime_se),
        b_step_se: Some(b_step_se),
        variance: var.mean,
        variance_se: Some(var.stderr),
        n,
        trials: Some(trials),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `|Var - 1/2 sum B_i|` is zero (exact mode with every `i`).
    Identity,
    /// `B_i >= B_(i+1)` for consecutive requested indices.
    Monotone,
    /// `B_n >= 0`.
    Nonnegative,
    /// `B_k <= 2 Var / k`.
    Chatterjee,
    /// `B'_k <= 2 Var / k * (n + 1) / n`.
    Prime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub kind: BoundKind,
    pub i: usize,
    /// The side that should be smaller.
    pub lhs: f64,
    pub rhs: f64,
    /// Allowed excess: `1e-10` in exact mode, 4 standard errors otherwise.
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub mode: Mode,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

/// Evaluates monotonicity, nonnegativity and both `1/k` bounds against `var`
/// without failing. Exact mode allows `1e-10`; Monte Carlo mode allows 4
/// standard errors (the variance SE is taken from `terms.variance_se`).
pub fn bound_checks(terms: &DecompositionTerms, var: f64) -> BoundsReport {
    let exact = terms.mode == Mode::Exact;
    let z = 4.0;
    let se = |v: &Option<Vec<f64>>, l: usize| v.as_ref().map_or(0.0, |s| s[l]);
    let var_se = if exact { 0.0 } else { terms.variance_se.unwrap_or(0.0) };
    let n = terms.n as f64;
    let mut checks = Vec::new();
    let mut push = |kind, i, lhs: f64, rhs: f64, spread: f64| {
        let slack = if exact { EXACT_TOL } else { z * spread };
        checks.push(BoundCheck {
            kind,
            i,
            lhs,
            rhs,
            slack,
            holds: lhs <= rhs + slack,
        });
    };

    if exact && terms.indices.len() == terms.n && terms.indices.iter().enumerate().all(|(l, &i)| i == l + 1) {
        let half: f64 = 0.5 * terms.b.iter().sum::<f64>();
        push(BoundKind::Identity, 0, (var - half).abs(), 0.0, 0.0);
    }
    for l in 0..terms.indices.len() {
        let i = terms.indices[l];
        if l + 1 < terms.indices.len() {
            let spread = terms.b_step_se.as_ref().map_or(0.0, |s| s[l]);
            push(BoundKind::Monotone, i, terms.b[l + 1], terms.b[l], spread);
        }
        if i == terms.n {
            push(BoundKind::Nonnegative, i, 0.0, terms.b[l], se(&terms.b_se, l));
        }
        let k = i as f64;
        let bound = 2.0 * var / k;
        let spread = (se(&terms.b_se, l).powi(2) + (2.0 * var_se / k).powi(2)).sqrt();
        push(BoundKind::Chatterjee, i, terms.b[l], bound, spread);
        if let Some(bp) = &terms.b_prime {
            let factor = (n + 1.0) / n;
            let spread = (se(&terms.b_prime_se, l).powi(2) + (2.0 * var_se / k * factor).powi(2)).sqrt();
            push(BoundKind::Prime, i, bp[l], bound * factor, spread);
        }
    }
    BoundsReport {
        mode: terms.mode,
        checks,
    }
}

/// [`bound_checks`], with any exact-mode violation turned into an invariant
/// error.
pub fn check_bounds(terms: &DecompositionTerms, var: f64) -> Result<BoundsReport> {
    let report = bound_checks(terms, var);
    if terms.mode == Mode::Exact {
        if let Some(bad) = report.failures().next() {
            return Err(Error::Invariant(format!(
                "{:?} bound fails at i = {}: {:.6e} > {:.6e}",
                bad.kind, bad.i, bad.lhs, bad.rhs
            )));
        }
    }
    Ok(report)
}

/// The top eigenvalue as a function of the `N(N+1)/2` upper-triangle entries
/// (row-major, diagonal included).
#[derive(Debug, Clone)]
pub struct EigenvalueAdapter {
    dim: usize,
    opts: SolverOptions,
}

impl EigenvalueAdapter {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix dimension must be at least 1".into()));
        }
        Ok(EigenvalueAdapter {
            dim,
            opts: SolverOptions::default().with_solver(Solver::Dense),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinate laws matching a Wigner matrix with entry laws `spec`.
    pub fn space(&self, spec: &EntrySpec) -> Result<ProductSpace> {
        spec.validate()?;
        let n = self.dim;
        let laws = (0..pair_count(n))
            .map(|t| {
                let (i, j) = pair_from_packed(n, t);
                let spec = *spec;
                CoordinateLaw::sampler(move |rng| spec.sample_entry(i, j, rng))
            })
            .collect();
        ProductSpace::new(laws)
    }
}

impl BlackBox for EigenvalueAdapter {
    fn arity(&self) -> usize {
        pair_count(self.dim)
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        let m = SymmetricMatrix::from_upper(self.dim, x.to_vec())?;
        spectral::top_eigenvalue(&m, &self.opts)
    }
}

/// The top-eigenvalue function and its coordinate space.
pub fn eigenvalue_adapter(n: usize, spec: &EntrySpec) -> Result<(EigenvalueAdapter, ProductSpace)> {
    let adapter = EigenvalueAdapter::new(n)?;
    let space = adapter.space(spec)?;
    Ok((adapter, space))
}

#[cfg(test)]
mod tests;
