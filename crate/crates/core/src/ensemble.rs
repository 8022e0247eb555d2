//! Wigner ensembles and the k-entry resampling coupling.
//!
//! Matrices are real symmetric and stored by their upper triangle, so every
//! matrix the crate produces is symmetric by construction. Indices are
//! zero-based throughout the API.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::SeedContext;

/// Unit-variance, mean-zero laws for the off-diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryLaw {
    Rademacher,
    Gaussian,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformScaled,
    /// Laplace law with scale `1/sqrt(2)`.
    SymmetrizedExponential,
}

impl EntryLaw {
    pub const ALL: [EntryLaw; 4] = [
        EntryLaw::Rademacher,
        EntryLaw::Gaussian,
        EntryLaw::UniformScaled,
        EntryLaw::SymmetrizedExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::UniformScaled => "uniform_scaled",
            EntryLaw::SymmetrizedExponential => "symmetrized_exponential",
        }
    }

    /// One draw with mean 0 and variance 1.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::Gaussian => StandardNormal.sample(rng),
            EntryLaw::UniformScaled => {
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * 3f64.sqrt()
            }
            EntryLaw::SymmetrizedExponential => {
                // Laplace(b) has variance 2 b^2; b = 1/sqrt(2).
                let e: f64 = rand_distr::Exp1.sample(rng);
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * e * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    /// Fourth moment of the standardized law.
    pub fn fourth_moment(self) -> f64 {
        match self {
            EntryLaw::Rademacher => 1.0,
            EntryLaw::Gaussian => 3.0,
            EntryLaw::UniformScaled => 9.0 / 5.0,
            EntryLaw::SymmetrizedExponential => 6.0,
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntryLaw::ALL
            .into_iter()
            .find(|law| law.name() == s)
            .ok_or_else(|| Error::config("offdiag_dist", format!("unsupported distribution `{s}`")))
    }
}

/// Entry laws of a Wigner matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntrySpec {
    pub offdiag: EntryLaw,
    /// Standard deviation of the diagonal entries.
    pub diag_sigma0: f64,
    /// Tail exponent of the sub-exponential hypothesis; recorded, not used.
    pub tail_delta: f64,
}

impl Default for EntrySpec {
    fn default() -> Self {
        EntrySpec {
            offdiag: EntryLaw::Gaussian,
            diag_sigma0: std::f64::consts::SQRT_2,
            tail_delta: 0.5,
        }
    }
}

impl EntrySpec {
    pub fn new(offdiag: EntryLaw, diag_sigma0: f64) -> Result<Self> {
        let spec = EntrySpec {
            offdiag,
            diag_sigma0,
            ..EntrySpec::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diag_sigma0.is_finite() && self.diag_sigma0 >= 0.0) {
            return Err(Error::config("diag_sigma0", "must be finite and nonnegative"));
        }
        if !(self.tail_delta.is_finite() && self.tail_delta > 0.0) {
            return Err(Error::config("tail_delta", "must be finite and positive"));
        }
        Ok(())
    }

    pub fn sample_entry<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> f64 {
        let x = self.offdiag.sample(rng);
        if i == j {
            self.diag_sigma0 * x
        } else {
            x
        }
    }

    pub fn variance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag_sigma0 * self.diag_sigma0
        } else {
            1.0
        }
    }
}

/// Number of upper-triangle positions (diagonal included) of an `n x n` matrix.
pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Row-major position of `(i, j)`, `i <= j`, in the packed upper triangle.
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Inverse of [`packed_index`].
pub fn pair_from_packed(n: usize, t: usize) -> (usize, usize) {
    debug_assert!(t < pair_count(n));
    // Row i starts at s(i) = i*n - i*(i-1)/2; solve s(i) <= t approximately
    // and fix up the rounding.
    let nf = n as f64;
    let b = 2.0 * nf + 1.0;
    let disc = (b * b - 8.0 * t as f64).max(0.0);
    let mut i = (((b - disc.sqrt()) / 2.0).floor() as usize).min(n - 1);
    let start = |i: usize| i * n - i * i.saturating_sub(1) / 2;
    while i > 0 && start(i) > t {
        i -= 1;
    }
    while i + 1 < n && start(i + 1) <= t {
        i += 1;
    }
    (i, i + (t - start(i)))
}

/// Dense real symmetric matrix stored by its row-major upper triangle.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricMatrix")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix dimension must be at least 1".into()));
        }
        Ok(SymmetricMatrix {
            dim,
            upper: vec![0.0; pair_count(dim)],
        })
    }

    pub fn from_upper(dim: usize, upper: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix dimension must be at least 1".into()));
        }
        if upper.len() != pair_count(dim) {
            return Err(Error::Domain(format!(
                "upper triangle of a {dim}x{dim} matrix has {} entries, got {}",
                pair_count(dim),
                upper.len()
            )));
        }
        Ok(SymmetricMatrix { dim, upper })
    }

    /// Builds from a square row-major array, reading only the upper triangle.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = SymmetricMatrix::zeros(n)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Domain(format!("row {i} has length {}, expected {n}", row.len())));
            }
            for j in i..n {
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = SymmetricMatrix::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * i.saturating_sub(1) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.slot(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.upper[s] = value;
    }

    /// Full row-major `n x n` copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        let mut t = 0;
        for i in 0..n {
            for j in i..n {
                let x = self.upper[t];
                out[i * n + j] = x;
                out[j * n + i] = x;
                t += 1;
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim;
        nalgebra::DMatrix::from_row_slice(n, n, &self.to_dense())
    }

    /// Copy with the diagonal set to zero.
    pub fn without_diagonal(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.set(i, i, 0.0);
        }
        m
    }

    /// `<x, X x>`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut t = 0;
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.upper[t] * x[i] * x[i];
            t += 1;
            let mut row = 0.0;
            for j in (i + 1)..n {
                row += self.upper[t] * x[j];
                t += 1;
            }
            acc += 2.0 * x[i] * row;
        }
        acc
    }

    /// `y = X x`, reading the packed triangle once.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim;
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut t = 0;
        for i in 0..n {
            let row = &self.upper[t..t + n - i];
            let xi = x[i];
            let tail = &row[1..];
            y[i] += row[0] * xi + crate::linalg::dot(tail, &x[i + 1..]);
            crate::linalg::axpy(xi, tail, &mut y[i + 1..]);
            t += n - i;
        }
    }

    /// Number of upper-triangle positions where the two matrices differ.
    pub fn hamming_distance(&self, other: &SymmetricMatrix) -> usize {
        self.upper
            .iter()
            .zip(&other.upper)
            .filter(|(a, b)| a.to_bits() != b.to_bits())
            .count()
    }

    fn check_same_dim(&self, other_dim: usize) -> Result<()> {
        if self.dim != other_dim {
            return Err(Error::Domain(format!(
                "dimension mismatch: {} vs {other_dim}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Draws a Wigner matrix: independent upper-triangle entries, row-major.
pub fn sample_wigner(n: usize, spec: &EntrySpec, seed: &SeedContext) -> Result<SymmetricMatrix> {
    spec.validate()?;
    let mut m = SymmetricMatrix::zeros(n)?;
    let mut rng = seed.rng();
    let mut t = 0;
    for i in 0..n {
        for j in i..n {
            m.upper[t] = spec.sample_entry(i, j, &mut rng);
            t += 1;
        }
    }
    Ok(m)
}

/// An ordered list of distinct upper-triangle positions `(i, j)`, `i <= j`.
///
/// Sampling order is kept: prefixes of a sampled set are themselves uniform
/// samples of the smaller size, which is what the nested sweeps rely on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPairSet {
    dim: usize,
    pairs: Vec<(usize, usize)>,
}

impl IndexPairSet {
    pub fn new(dim: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.len() > pair_count(dim) {
            return Err(Error::Domain(format!(
                "{} pairs exceed the {} positions of a {dim}x{dim} matrix",
                pairs.len(),
                pair_count(dim)
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            if !(i <= j && j < dim) {
                return Err(Error::Domain(format!("pair ({i}, {j}) is not an upper-triangle position")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Domain(format!("pair ({i}, {j}) repeated")));
            }
        }
        Ok(IndexPairSet { dim, pairs })
    }

    pub fn empty(dim: usize) -> Self {
        IndexPairSet { dim, pairs: Vec::new() }
    }

    /// All positions in row-major order.
    pub fn full(dim: usize) -> Self {
        let pairs = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
        IndexPairSet { dim, pairs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The first `k` pairs.
    pub fn prefix(&self, k: usize) -> Result<IndexPairSet> {
        if k > self.pairs.len() {
            return Err(Error::Domain(format!(
                "prefix of length {k} from a set of {}",
                self.pairs.len()
            )));
        }
        Ok(IndexPairSet {
            dim: self.dim,
            pairs: self.pairs[..k].to_vec(),
        })
    }
}

/// `k` positions drawn uniformly without replacement (partial Fisher-Yates on
/// the packed upper-triangle index).
pub fn sample_pair_set(n: usize, k: usize, seed: &SeedContext) -> Result<IndexPairSet> {
    let total = pair_count(n);
    if k > total {
        return Err(Error::Domain(format!(
            "k = {k} exceeds N(N+1)/2 = {total} for N = {n}"
        )));
    }
    let mut rng = seed.rng();
    let mut pairs = Vec::with_capacity(k);
    // Implicit identity permutation; only displaced slots are stored.
    let mut displaced: HashMap<usize, usize> = HashMap::with_capacity(k.min(1 << 20));
    for t in 0..k {
        let r = rng.random_range(t..total);
        let at_r = *displaced.get(&r).unwrap_or(&r);
        let at_t = *displaced.get(&t).unwrap_or(&t);
        displaced.insert(r, at_t);
        pairs.push(pair_from_packed(n, at_r));
    }
    Ok(IndexPairSet { dim: n, pairs })
}

/// Replaces the entries at `pairs` (and their mirrors) by fresh draws.
///
/// Draws are taken in the order of `pairs` from one stream, so resampling a
/// prefix of a set with the same seed reproduces the prefix's new values.
pub fn apply_resample(
    x: &SymmetricMatrix,
    pairs: &IndexPairSet,
    spec: &EntrySpec,
    seed: &SeedContext,
) -> Result<SymmetricMatrix> {
    x.check_same_dim(pairs.dim())?;
    let mut out = x.clone();
    let mut rng = seed.rng();
    for &(i, j) in pairs.pairs() {
        out.set(i, j, spec.sample_entry(i, j, &mut rng));
    }
    Ok(out)
}

/// Resamples the single entry `(i, j)` and its mirror.
pub fn resample_single(
    x: &SymmetricMatrix,
    i: usize,
    j: usize,
    spec: &EntrySpec,
    seed: &SeedContext,
) -> Result<SymmetricMatrix> {
    let n = x.dim();
    if i >= n || j >= n {
        return Err(Error::Domain(format!("entry ({i}, {j}) out of range for N = {n}")));
    }
    let mut rng = seed.rng();
    let mut out = x.clone();
    out.set(i, j, spec.sample_entry(i, j, &mut rng));
    Ok(out)
}

/// Replaces entry `(i, j)` with a given value.
pub fn with_entry(x: &SymmetricMatrix, i: usize, j: usize, value: f64) -> Result<SymmetricMatrix> {
    let n = x.dim();
    if i >= n || j >= n {
        return Err(Error::Domain(format!("entry ({i}, {j}) out of range for N = {n}")));
    }
    let mut out = x.clone();
    out.set(i, j, value);
    Ok(out)
}
