//! Small symmetric tridiagonal eigenproblems (the Lanczos projection).
//!
//! `diag` has length m and `off` length m - 1.

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub(crate) fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = a - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let m = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < m { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `rank`-th largest eigenvalue (`rank` = 1 is the top one) by bisection.
pub(crate) fn kth_largest(diag: &[f64], off: &[f64], rank: usize) -> f64 {
    let m = diag.len();
    debug_assert!(rank >= 1 && rank <= m);
    let (mut lo, mut hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    // Want the value t where count_below crosses m - rank + 1.
    let target = m - rank;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Unit eigenvector for the eigenvalue `theta` by inverse iteration with a
/// pivoted tridiagonal LU.
pub(crate) fn eigenvector(diag: &[f64], off: &[f64], theta: f64) -> Vec<f64> {
    let m = diag.len();
    if m == 1 {
        return vec![1.0];
    }
    let scale = diag
        .iter()
        .chain(off)
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;

    let mut d: Vec<f64> = diag.iter().map(|a| a - theta).collect();
    let mut dl = off.to_vec();
    let mut du = off.to_vec();
    let mut du2 = vec![0.0; m.saturating_sub(2)];
    let mut swapped = vec![false; m - 1];
    for i in 0..m - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            swapped[i] = true;
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < m {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
        }
    }
    for v in d.iter_mut() {
        if v.abs() < tiny {
            *v = if *v < 0.0 { -tiny } else { tiny };
        }
    }

    let solve = |b: &mut [f64]| {
        for i in 0..m - 1 {
            if swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= dl[i] * b[i];
        }
        b[m - 1] /= d[m - 1];
        b[m - 2] = (b[m - 2] - du[m - 2] * b[m - 1]) / d[m - 2];
        for i in (0..m.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
    };

    // Fixed, dense starting vector so the result is a function of the input.
    let mut y: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).fract()).collect();
    for _ in 0..3 {
        solve(&mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        y.iter_mut().for_each(|v| *v /= norm);
    }
    y
}
