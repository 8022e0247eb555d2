//! Lanczos iteration with full reorthogonalization for the top of the
//! spectrum of a dense symmetric matrix.

use super::tridiag;
use crate::linalg::{axpy, dot};
use crate::error::{Error, Result};

pub(crate) struct LanczosOutcome {
    /// Top two Ritz values (fewer if the space is one-dimensional), descending.
    pub values: Vec<f64>,
    /// Unit Ritz vector of the top value (not sign-canonicalized).
    pub vector: Vec<f64>,
    /// Rayleigh quotient of `vector`.
    pub rayleigh: f64,
    /// `||A y - rayleigh y||`.
    pub residual: f64,
    /// True when the Krylov space became invariant before reaching the full
    /// dimension, so the start vector may have missed part of the spectrum.
    pub exhausted: bool,
}

/// Runs Lanczos on the symmetric operator `apply` (`y = A x`) of size `n`
/// from `start`.
///
/// Stops when the top `want` Ritz pairs have residual at most
/// `tol * max(1, |theta|)` and the explicit residual of the top Ritz vector
/// confirms it, or fails after `max_steps`.
pub(crate) fn lanczos_top<F>(
    apply: F,
    a_scale: f64,
    n: usize,
    start: &[f64],
    want: usize,
    tol: f64,
    max_steps: usize,
) -> Result<LanczosOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let cap = max_steps.min(n).max(1);
    let mut basis: Vec<f64> = Vec::with_capacity((cap + 1) * n);
    let norm0 = dot(start, start).sqrt();
    if !(norm0 > 0.0 && norm0.is_finite()) {
        return Err(Error::Internal("Lanczos start vector is zero".into()));
    }
    basis.extend(start.iter().map(|v| v / norm0));

    let mut alpha: Vec<f64> = Vec::with_capacity(cap);
    let mut beta: Vec<f64> = Vec::with_capacity(cap);
    let mut w = vec![0.0; n];
    let mut ay = vec![0.0; n];
    let mut best_residual = f64::INFINITY;
    let a_norm_est = a_scale * (n as f64).sqrt();

    for j in 0..cap {
        let (prev, rest) = basis.split_at(j * n);
        let q = &rest[..n];
        apply(q, &mut w);
        let aj = dot(q, &w);
        axpy(-aj, q, &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &prev[(j - 1) * n..j * n], &mut w);
        }
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for i in 0..=j {
                let qi = &basis[i * n..(i + 1) * n];
                let c = dot(qi, &w);
                axpy(-c, qi, &mut w);
            }
        }
        alpha.push(aj);
        let bj = dot(&w, &w).sqrt();
        let m = j + 1;
        let invariant = bj <= 1e-13 * a_norm_est.max(aj.abs()).max(f64::MIN_POSITIVE);

        let last = m == cap;
        let check = invariant || last || (m >= want && (m < 20 || m % 2 == 0));
        if check {
            let thetas: Vec<f64> = (1..=m.min(2)).map(|r| tridiag::kth_largest(&alpha, &beta, r)).collect();
            let mut top_s = Vec::new();
            let mut ritz_ok = m >= want;
            for (r, &theta) in thetas.iter().enumerate().take(want) {
                let s = tridiag::eigenvector(&alpha, &beta, theta);
                let est = if invariant { 0.0 } else { bj * s[m - 1].abs() };
                if est > tol * theta.abs().max(1.0) {
                    ritz_ok = false;
                }
                if r == 0 {
                    top_s = s;
                }
            }
            if top_s.is_empty() {
                top_s = tridiag::eigenvector(&alpha, &beta, thetas[0]);
            }
            if ritz_ok || last {
                let mut y = vec![0.0; n];
                for (i, &c) in top_s.iter().enumerate() {
                    axpy(c, &basis[i * n..(i + 1) * n], &mut y);
                }
                let ny = dot(&y, &y).sqrt();
                y.iter_mut().for_each(|v| *v /= ny);
                apply(&y, &mut ay);
                let rayleigh = dot(&y, &ay);
                axpy(-rayleigh, &y, &mut ay);
                let residual = dot(&ay, &ay).sqrt();
                best_residual = best_residual.min(residual);
                let exhausted = invariant && m < n;
                if (ritz_ok && residual <= tol * rayleigh.abs().max(1.0)) || exhausted {
                    return Ok(LanczosOutcome {
                        values: thetas,
                        vector: y,
                        rayleigh,
                        residual,
                        exhausted,
                    });
                }
            }
        }
        if invariant {
            // Exact invariant subspace but the explicit check failed; nothing
            // more can be extracted from this Krylov space.
            break;
        }
        beta.push(bj);
        basis.extend(w.iter().map(|v| v / bj));
    }
    Err(Error::Convergence {
        steps: alpha.len(),
        residual: best_residual,
    })
}
