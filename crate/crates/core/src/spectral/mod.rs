//! Top eigenpairs, edge spectrum, and sign-aligned eigenvector comparisons.
//!
//! Two solvers are available: a dense full eigendecomposition (the oracle
//! path, which also exposes the whole spectrum) and Lanczos with full
//! reorthogonalization. [`Solver::Auto`] picks by dimension.

mod lanczos;
mod tridiag;

use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::rng::{Purpose, SeedContext};

/// Default residual tolerance, relative to `max(1, |lambda|)`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `Solver::Auto` uses the dense path up to this dimension.
pub const AUTO_DENSE_LIMIT: usize = 64;

/// Gap below which the top eigenvector is treated as undefined.
pub fn degeneracy_threshold(n: usize) -> f64 {
    1e-8 * (n as f64).sqrt()
}

/// Lanczos step cap, `50 * ceil(sqrt(N))`.
pub fn lanczos_step_cap(n: usize) -> usize {
    50 * (n as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Auto => "auto",
            Solver::Dense => "dense",
            Solver::Lanczos => "lanczos",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Solver::Auto, Solver::Dense, Solver::Lanczos]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config("solver", format!("expected auto, dense or lanczos, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub solver: Solver,
    /// Overrides [`lanczos_step_cap`].
    pub max_steps: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            solver: Solver::Auto,
            max_steps: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..SolverOptions::default()
        }
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    fn use_dense(&self, n: usize) -> bool {
        match self.solver {
            Solver::Dense => true,
            Solver::Lanczos => n == 1,
            Solver::Auto => n <= AUTO_DENSE_LIMIT,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Domain(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Top eigenvalue with its unit eigenvector in canonical sign.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||X v - value v||_2`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
}

impl EdgeSpectrum {
    fn new(lambda1: f64, lambda2: f64) -> Self {
        let (lambda1, lambda2) = if lambda1 >= lambda2 {
            (lambda1, lambda2)
        } else {
            (lambda2, lambda1)
        };
        EdgeSpectrum {
            lambda1,
            lambda2,
            gap: lambda1 - lambda2,
        }
    }

    pub fn is_degenerate(&self, n: usize) -> bool {
        self.gap < degeneracy_threshold(n)
    }
}

/// Flips `v` so its largest-magnitude coordinate (lowest index on ties) is
/// positive.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual_of(x: &SymmetricMatrix, value: f64, v: &[f64]) -> f64 {
    let mut y = vec![0.0; v.len()];
    x.matvec(v, &mut y);
    y.iter()
        .zip(v)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Full spectrum from the dense path, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `p` is the unit eigenvector of `values[p]`.
    pub vectors: Vec<f64>,
    pub dim: usize,
}

impl DenseSpectrum {
    pub fn vector(&self, p: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.vectors[i * self.dim + p]).collect()
    }

    #[inline]
    pub fn component(&self, p: usize, i: usize) -> f64 {
        self.vectors[i * self.dim + p]
    }
}

pub fn dense_spectrum(x: &SymmetricMatrix) -> DenseSpectrum {
    let n = x.dim();
    let eig = x.to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&p| eig.eigenvalues[p]).collect();
    let mut vectors = vec![0.0; n * n];
    for (newp, &p) in order.iter().enumerate() {
        let mut col: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, p)]).collect();
        canonicalize_sign(&mut col);
        for i in 0..n {
            vectors[i * n + newp] = col[i];
        }
    }
    DenseSpectrum { values, vectors, dim: n }
}

/// All eigenvalues, descending, without eigenvectors.
pub fn dense_eigenvalues(x: &SymmetricMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = x.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

fn max_abs(x: &SymmetricMatrix) -> f64 {
    x.upper().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn default_start(n: usize) -> Vec<f64> {
    let mut rng = SeedContext::new(0x1a2c_05, "lanczos-start", n as u64, Purpose::Start).rng();
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Top eigenpair together with an edge-spectrum estimate.
///
/// On the dense path `lambda2` is exact; on the Lanczos path it is the
/// second Ritz value at convergence of the top pair.
pub fn top_pair_and_gap(
    x: &SymmetricMatrix,
    opts: &SolverOptions,
    start: Option<&[f64]>,
) -> Result<(EigenPair, EdgeSpectrum)> {
    opts.validate()?;
    let n = x.dim();
    if n == 1 {
        let value = x.get(0, 0);
        return Ok((
            EigenPair {
                value,
                vector: vec![1.0],
                residual: 0.0,
            },
            EdgeSpectrum {
                lambda1: value,
                lambda2: f64::NEG_INFINITY,
                gap: f64::INFINITY,
            },
        ));
    }
    if opts.use_dense(n) {
        let spec = dense_spectrum(x);
        let vector = spec.vector(0);
        let value = spec.values[0];
        let residual = residual_of(x, value, &vector);
        let bound = opts.tol * value.abs().max(1.0);
        if residual > bound {
            return Err(Error::Convergence { steps: 0, residual });
        }
        return Ok((
            EigenPair { value, vector, residual },
            EdgeSpectrum::new(spec.values[0], spec.values[1]),
        ));
    }
    let owned;
    let start = match start {
        Some(s) if s.len() == n => s,
        Some(s) => {
            return Err(Error::Domain(format!(
                "start vector has length {}, expected {n}",
                s.len()
            )))
        }
        None => {
            owned = default_start(n);
            &owned
        }
    };
    let cap = opts.max_steps.unwrap_or_else(|| lanczos_step_cap(n));
    let out = lanczos::lanczos_top(|v, out| x.matvec(v, out), max_abs(x), n, start, 1, opts.tol, cap)?;
    if out.exhausted {
        // The Krylov space closed early, so multiplicities may be hidden.
        return top_pair_and_gap(x, &opts.with_solver(Solver::Dense), None);
    }
    let mut vector = out.vector;
    canonicalize_sign(&mut vector);
    let lambda2 = out.values.get(1).copied().unwrap_or(f64::NEG_INFINITY);
    Ok((
        EigenPair {
            value: out.rayleigh,
            vector,
            residual: out.residual,
        },
        EdgeSpectrum::new(out.rayleigh, lambda2.min(out.rayleigh)),
    ))
}

pub fn top_eigenpair_with(x: &SymmetricMatrix, opts: &SolverOptions) -> Result<EigenPair> {
    top_pair_and_gap(x, opts, None).map(|(p, _)| p)
}

/// Top eigenpair with residual at most `tol * max(1, |lambda|)`.
pub fn top_eigenpair(x: &SymmetricMatrix, tol: f64) -> Result<EigenPair> {
    top_eigenpair_with(x, &SolverOptions::with_tol(tol))
}

/// Top eigenvalue only.
pub fn top_eigenvalue(x: &SymmetricMatrix, opts: &SolverOptions) -> Result<f64> {
    opts.validate()?;
    let n = x.dim();
    if n == 1 {
        return Ok(x.get(0, 0));
    }
    if opts.use_dense(n) {
        return Ok(dense_eigenvalues(x)[0]);
    }
    let cap = opts.max_steps.unwrap_or_else(|| lanczos_step_cap(n));
    let out = lanczos::lanczos_top(|v, out| x.matvec(v, out), max_abs(x), n, &default_start(n), 1, opts.tol, cap)?;
    if out.exhausted {
        return Ok(dense_eigenvalues(x)[0]);
    }
    Ok(out.rayleigh)
}

/// The two largest eigenvalues, both to the solver tolerance.
pub fn top_two_eigenvalues(x: &SymmetricMatrix, tol: f64) -> Result<EdgeSpectrum> {
    top_two_eigenvalues_with(x, &SolverOptions::with_tol(tol))
}

pub fn top_two_eigenvalues_with(x: &SymmetricMatrix, opts: &SolverOptions) -> Result<EdgeSpectrum> {
    opts.validate()?;
    let n = x.dim();
    if n == 1 {
        return Err(Error::Domain("a 1x1 matrix has a single eigenvalue".into()));
    }
    if opts.use_dense(n) {
        let e = dense_eigenvalues(x);
        return Ok(EdgeSpectrum::new(e[0], e[1]));
    }
    let cap = opts.max_steps.unwrap_or_else(|| lanczos_step_cap(n));
    let out = lanczos::lanczos_top(|v, out| x.matvec(v, out), max_abs(x), n, &default_start(n), 2, opts.tol, cap)?;
    if out.exhausted {
        let e = dense_eigenvalues(x);
        return Ok(EdgeSpectrum::new(e[0], e[1]));
    }
    Ok(EdgeSpectrum::new(out.rayleigh, out.values[1]))
}

fn check_len(v: &[f64], w: &[f64]) -> Result<()> {
    if v.len() != w.len() {
        return Err(Error::Domain(format!(
            "vector lengths differ: {} vs {}",
            v.len(),
            w.len()
        )));
    }
    Ok(())
}

fn inner(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Sign `s` minimizing `||v - s w||`; `+1` when `<v, w> = 0`.
pub fn align_sign(v: &[f64], w: &[f64]) -> Result<f64> {
    check_len(v, w)?;
    Ok(if inner(v, w) >= 0.0 { 1.0 } else { -1.0 })
}

/// `|<v, w>|`.
pub fn overlap(v: &[f64], w: &[f64]) -> Result<f64> {
    check_len(v, w)?;
    Ok(inner(v, w).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceStats {
    /// `min_s ||v - s w||_2`.
    pub l2_aligned: f64,
    /// `sqrt(N) * min_s ||v - s w||_inf`.
    pub sup_aligned_scaled: f64,
    /// `sqrt(N) * ||v||_inf`.
    pub sup_norm_v: f64,
}

pub fn distance_stats(v: &[f64], w: &[f64]) -> Result<DistanceStats> {
    check_len(v, w)?;
    let sqrt_n = (v.len() as f64).sqrt();
    let (mut l2p, mut l2m, mut supp, mut supm, mut supv) = (0.0, 0.0, 0.0f64, 0.0f64, 0.0f64);
    for (a, b) in v.iter().zip(w) {
        let p = a - b;
        let m = a + b;
        l2p += p * p;
        l2m += m * m;
        supp = supp.max(p.abs());
        supm = supm.max(m.abs());
        supv = supv.max(a.abs());
    }
    Ok(DistanceStats {
        l2_aligned: l2p.min(l2m).sqrt(),
        sup_aligned_scaled: sqrt_n * supp.min(supm),
        sup_norm_v: sqrt_n * supv,
    })
}
