//! Resolvent entries `R(z) = (X - z I)^{-1}` near the spectral edge.
//!
//! Entries come either from a cached eigendecomposition,
//! `R_ij = sum_p (v_p)_i (v_p)_j / (lambda_p - z)`, or from complex LU solves
//! of `(X - z I) r = e_j`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::ensemble::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::spectral::{self, DenseSpectrum, EigenPair};

pub type C64 = Complex<f64>;

/// Largest dimension for which [`ResolventPath::Auto`] diagonalizes.
pub const SPECTRAL_PATH_LIMIT: usize = 2048;

/// `z = energy + i eta` with `eta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub energy: f64,
    pub eta: f64,
}

impl SpectralPoint {
    pub fn new(energy: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite() && energy.is_finite()) {
            return Err(Error::Domain(format!(
                "spectral point needs finite energy and eta > 0, got ({energy}, {eta})"
            )));
        }
        Ok(SpectralPoint { energy, eta })
    }

    pub fn z(&self) -> C64 {
        C64::new(self.energy, self.eta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventBlock {
    pub point: SpectralPoint,
    pub indices: Vec<(usize, usize)>,
    pub values: Vec<C64>,
}

impl ResolventBlock {
    pub fn get(&self, i: usize, j: usize) -> Option<C64> {
        self.indices
            .iter()
            .position(|&p| p == (i, j))
            .map(|t| self.values[t])
    }
}

/// `L = (ln N)^(ln ln N)`, defined for `N >= 2`.
pub fn scale_l(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("L needs N >= 2".into()));
    }
    let ln = (n as f64).ln();
    Ok(ln.powf(ln.ln()))
}

/// The off-diagonal local-law scale
/// `L^c (|E - 2 sqrt N| + eta)^(1/4) N^(-7/8) eta^(-1/2) + L^c N^(-2) eta^(-1)`
/// for a caller-chosen exponent `c`. Diagnostic only.
pub fn local_law_delta(n: usize, point: SpectralPoint, c: f64) -> Result<f64> {
    let lc = scale_l(n)?.powf(c);
    let nf = n as f64;
    let edge = (point.energy - 2.0 * nf.sqrt()).abs() + point.eta;
    Ok(lc * edge.powf(0.25) * nf.powf(-7.0 / 8.0) / point.eta.sqrt() + lc / (nf * nf * point.eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolventPath {
    /// Eigendecomposition up to [`SPECTRAL_PATH_LIMIT`], linear solves above.
    #[default]
    Auto,
    Spectral,
    Solve,
}

fn check_indices(n: usize, indices: &[(usize, usize)]) -> Result<()> {
    if let Some(&(i, j)) = indices.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::Domain(format!("index ({i}, {j}) out of range for N = {n}")));
    }
    Ok(())
}

/// Resolvent of one matrix through its full eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpectralResolvent {
    spectrum: DenseSpectrum,
}

impl SpectralResolvent {
    pub fn new(x: &SymmetricMatrix) -> Self {
        SpectralResolvent {
            spectrum: spectral::dense_spectrum(x),
        }
    }

    pub fn from_spectrum(spectrum: DenseSpectrum) -> Self {
        SpectralResolvent { spectrum }
    }

    pub fn spectrum(&self) -> &DenseSpectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim
    }

    /// `lambda_1 - lambda_2` (infinite for N = 1).
    pub fn gap(&self) -> f64 {
        match self.spectrum.values.as_slice() {
            [a, b, ..] => a - b,
            _ => f64::INFINITY,
        }
    }

    pub fn entry(&self, i: usize, j: usize, point: SpectralPoint) -> C64 {
        let n = self.dim();
        let row_i = &self.spectrum.vectors[i * n..(i + 1) * n];
        let row_j = &self.spectrum.vectors[j * n..(j + 1) * n];
        let (e, eta) = (point.energy, point.eta);
        let mut acc = C64::new(0.0, 0.0);
        for ((lam, a), b) in self.spectrum.values.iter().zip(row_i).zip(row_j) {
            // 1 / (lam - E - i eta) = (lam - E + i eta) / ((lam - E)^2 + eta^2)
            let d = lam - e;
            let w = a * b / (d * d + eta * eta);
            acc.re += w * d;
            acc.im += w * eta;
        }
        acc
    }

    /// `Im R_ii(z)` for every `i`.
    pub fn im_diagonal(&self, point: SpectralPoint) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entry(i, i, point).im).collect()
    }

    /// `sum_p eta / ((lambda_p - E)^2 + eta^2)`, which equals `Im tr R(z)`.
    pub fn im_trace(&self, point: SpectralPoint) -> f64 {
        let eta = point.eta;
        self.spectrum
            .values
            .iter()
            .map(|lam| eta / ((lam - point.energy).powi(2) + eta * eta))
            .sum()
    }

    pub fn entries(&self, point: SpectralPoint, indices: &[(usize, usize)]) -> Result<ResolventBlock> {
        check_indices(self.dim(), indices)?;
        Ok(ResolventBlock {
            point,
            indices: indices.to_vec(),
            values: indices.iter().map(|&(i, j)| self.entry(i, j, point)).collect(),
        })
    }
}

fn shifted(x: &SymmetricMatrix, point: SpectralPoint) -> DMatrix<C64> {
    let n = x.dim();
    let z = point.z();
    DMatrix::from_fn(n, n, |i, j| {
        let v = C64::new(x.get(i, j), 0.0);
        if i == j {
            v - z
        } else {
            v
        }
    })
}

/// Columns `cols` of `R(z)` by one complex LU factorization.
pub fn solve_columns(x: &SymmetricMatrix, point: SpectralPoint, cols: &[usize]) -> Result<Vec<Vec<C64>>> {
    let n = x.dim();
    if let Some(&j) = cols.iter().find(|&&j| j >= n) {
        return Err(Error::Domain(format!("column {j} out of range for N = {n}")));
    }
    let lu = shifted(x, point).lu();
    cols.iter()
        .map(|&j| {
            let mut e = DVector::<C64>::zeros(n);
            e[j] = C64::new(1.0, 0.0);
            lu.solve(&e)
                .map(|r| r.iter().copied().collect())
                .ok_or_else(|| Error::Internal(format!("singular shifted matrix at z = {:?}", point.z())))
        })
        .collect()
}

/// Column `j` of `R(z)` by the requested path.
pub fn resolvent_column(x: &SymmetricMatrix, point: SpectralPoint, j: usize, path: ResolventPath) -> Result<Vec<C64>> {
    let n = x.dim();
    if j >= n {
        return Err(Error::Domain(format!("column {j} out of range for N = {n}")));
    }
    if use_spectral(n, path) {
        let r = SpectralResolvent::new(x);
        Ok((0..n).map(|i| r.entry(i, j, point)).collect())
    } else {
        Ok(solve_columns(x, point, &[j])?.remove(0))
    }
}

/// `max_i |((X - z I) r)_i - delta_ij|` for a computed column `r` of `R(z)`.
pub fn column_residual(x: &SymmetricMatrix, point: SpectralPoint, j: usize, column: &[C64]) -> f64 {
    let n = x.dim();
    let z = point.z();
    (0..n)
        .map(|i| {
            let mut acc = -z * column[i];
            for (k, r) in column.iter().enumerate() {
                acc += x.get(i, k) * r;
            }
            if i == j {
                acc -= C64::new(1.0, 0.0);
            }
            acc.norm()
        })
        .fold(0.0, f64::max)
}

fn use_spectral(n: usize, path: ResolventPath) -> bool {
    match path {
        ResolventPath::Auto => n <= SPECTRAL_PATH_LIMIT,
        ResolventPath::Spectral => true,
        ResolventPath::Solve => false,
    }
}

pub fn resolvent_entries(x: &SymmetricMatrix, point: SpectralPoint, indices: &[(usize, usize)]) -> Result<ResolventBlock> {
    resolvent_entries_with(x, point, indices, ResolventPath::Auto)
}

pub fn resolvent_entries_with(
    x: &SymmetricMatrix,
    point: SpectralPoint,
    indices: &[(usize, usize)],
    path: ResolventPath,
) -> Result<ResolventBlock> {
    let n = x.dim();
    check_indices(n, indices)?;
    if use_spectral(n, path) {
        return SpectralResolvent::new(x).entries(point, indices);
    }
    let mut cols: Vec<usize> = indices.iter().map(|&(_, j)| j).collect();
    cols.sort_unstable();
    cols.dedup();
    let solved = solve_columns(x, point, &cols)?;
    let values = indices
        .iter()
        .map(|&(i, j)| {
            let c = cols.binary_search(&j).expect("column was solved");
            solved[c][i]
        })
        .collect();
    Ok(ResolventBlock {
        point,
        indices: indices.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationReport {
    /// Which eigenvalue (1 = largest).
    pub k_index: usize,
    pub lambda_k: f64,
    /// The coordinate maximizing `Im R_ii`.
    pub witness: usize,
    /// `N / eta * Im R_ii` at the witness.
    pub lhs: f64,
    /// `1/2 * max(eta, |lambda_k - E|)^(-2)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `max_i N eta^{-1} Im R_ii(E + i eta) >= 1/2 max(eta, |lambda_k - E|)^{-2}`.
pub fn edge_localization_check(
    res: &SpectralResolvent,
    k_index: usize,
    energy: f64,
    eta: f64,
) -> Result<LocalizationReport> {
    let n = res.dim();
    if k_index == 0 || k_index > n.min(2) {
        return Err(Error::Domain(format!("k_index must be 1 or 2 (and at most N), got {k_index}")));
    }
    let point = SpectralPoint::new(energy, eta)?;
    let lambda_k = res.spectrum().values[k_index - 1];
    let im = res.im_diagonal(point);
    let (witness, best) = im
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let lhs = n as f64 / eta * best;
    let rhs = 0.5 * eta.max((lambda_k - energy).abs()).powi(-2);
    Ok(LocalizationReport {
        k_index,
        lambda_k,
        witness,
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

/// `max_(i,j) |N eta Im R(lambda + i eta)_ij - N v_i v_j|` over `indices`.
pub fn eigvec_from_resolvent(
    res: &SpectralResolvent,
    pair: &EigenPair,
    eta: f64,
    indices: &[(usize, usize)],
) -> Result<f64> {
    let n = res.dim();
    if pair.vector.len() != n {
        return Err(Error::Domain(format!(
            "eigenvector has length {}, matrix has dimension {n}",
            pair.vector.len()
        )));
    }
    let threshold = spectral::degeneracy_threshold(n);
    if res.gap() < threshold {
        return Err(Error::Degenerate {
            gap: res.gap(),
            threshold,
        });
    }
    let point = SpectralPoint::new(pair.value, eta)?;
    let block = res.entries(point, indices)?;
    let nf = n as f64;
    Ok(block
        .indices
        .iter()
        .zip(&block.values)
        .map(|(&(i, j), r)| (nf * eta * r.im - nf * pair.vector[i] * pair.vector[j]).abs())
        .fold(0.0, f64::max))
}

/// `max_(i,j) N eta |R_k(z)_ij - R(z)_ij|` over `indices`.
pub fn resample_resolvent_diff(
    x: &SymmetricMatrix,
    x_k: &SymmetricMatrix,
    point: SpectralPoint,
    indices: &[(usize, usize)],
) -> Result<f64> {
    if x.dim() != x_k.dim() {
        return Err(Error::Domain(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            x_k.dim()
        )));
    }
    if x == x_k {
        check_indices(x.dim(), indices)?;
        return Ok(0.0);
    }
    let a = resolvent_entries(x, point, indices)?;
    let b = resolvent_entries(x_k, point, indices)?;
    let scale = x.dim() as f64 * point.eta;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| scale * (q - p).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDiagonalReport {
    pub point: SpectralPoint,
    /// `4 N eta max_i |R0_ii - R_ii|`, with `R0` the resolvent of `X` with its
    /// diagonal set to zero.
    pub scaled_max: f64,
    pub within_bound: bool,
}

/// Compares diagonal resolvent entries of `X` and of `X` with zero diagonal at
/// `eta = N^(-1/4)`.
pub fn diagonal_zeroing_report(x: &SymmetricMatrix, energy: f64) -> Result<ZeroDiagonalReport> {
    let n = x.dim();
    let point = SpectralPoint::new(energy, (n as f64).powf(-0.25))?;
    let r = SpectralResolvent::new(x);
    let r0 = SpectralResolvent::new(&x.without_diagonal());
    let worst = (0..n)
        .map(|i| (r0.entry(i, i, point) - r.entry(i, i, point)).norm())
        .fold(0.0, f64::max);
    let scaled_max = 4.0 * n as f64 * point.eta * worst;
    Ok(ZeroDiagonalReport {
        point,
        scaled_max,
        within_bound: scaled_max <= 1.0,
    })
}
