//! Exact and Monte Carlo checks of the variance decomposition, and
//! resolvent identities on sampled matrices.

use super::{ResultRow, SweepConfig};
use crate::chaos::{
    check_bounds, decomposition_exact, decomposition_mc, decomposition_permutation_form, eigenvalue_adapter,
    random_binary_instance, BoundKind, BoundsReport, CoordinateLaw, DecompositionTerms, FnBox, ProductSpace,
};
use crate::ensemble::{apply_resample, pair_count, sample_pair_set, sample_wigner, IndexPairSet};
use crate::error::Result;
use crate::parallel;
use crate::resolvent::{
    diagonal_zeroing_report, edge_localization_check, eigvec_from_resolvent, resample_resolvent_diff,
    resolvent_entries_with, ResolventPath, SpectralPoint, SpectralResolvent, ZeroDiagonalReport,
};
use crate::rng::{Purpose, SeedContext};
use crate::spectral::{degeneracy_threshold, EigenPair};

/// Functions in the exact-mode corpus.
pub const CORPUS_SIZE: usize = 120;

/// Instances per dimension that also get the costlier resolvent checks.
const DETAILED_INSTANCES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosCheckReport {
    pub corpus: usize,
    /// `max |Var - 1/2 sum B_i|` over the corpus.
    pub max_identity_residual: f64,
    /// Bound checks that failed, over the corpus (exact slack `1e-10`).
    pub bound_failures: usize,
    pub bound_checks: usize,
    /// `max |B_i(permutation form) - B_i(subset form)|` over 3-coordinate
    /// corpus members.
    pub max_permutation_diff: f64,
    /// `max_i |B_i - 2/3|` for `f = X_1` on three Rademacher coordinates.
    pub first_coordinate_dev: f64,
    /// `max_i |B_i - 2|` for a sum of four unit-variance coordinates.
    pub additive_dev: f64,
    /// Monte Carlo decomposition of the top eigenvalue.
    pub adapter: AdapterCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterCheck {
    pub dim: usize,
    pub terms: DecompositionTerms,
    pub bounds: BoundsReport,
}

impl ChaosCheckReport {
    pub fn rows(&self) -> Vec<ResultRow> {
        let c = self.corpus;
        let mut rows = vec![
            ResultRow::new("chaos-check", 0, 0, "identity.max_residual", self.max_identity_residual, 0.0, c),
            ResultRow::new("chaos-check", 0, 0, "bounds.failures", self.bound_failures as f64, 0.0, c),
            ResultRow::new("chaos-check", 0, 0, "bounds.checked", self.bound_checks as f64, 0.0, c),
            ResultRow::new("chaos-check", 0, 0, "permutation.max_diff", self.max_permutation_diff, 0.0, c),
            ResultRow::new("chaos-check", 0, 0, "anchor.first_coordinate_dev", self.first_coordinate_dev, 0.0, 1),
            ResultRow::new("chaos-check", 0, 0, "anchor.additive_dev", self.additive_dev, 0.0, 1),
        ];
        let a = &self.adapter;
        let t = a.terms.trials.unwrap_or(0);
        rows.push(ResultRow::new(
            "chaos-check",
            a.dim,
            0,
            "adapter.variance",
            a.terms.variance,
            a.terms.variance_se.unwrap_or(0.0),
            t,
        ));
        for (l, &i) in a.terms.indices.iter().enumerate() {
            let se = a.terms.b_se.as_ref().map_or(0.0, |s| s[l]);
            rows.push(ResultRow::new("chaos-check", a.dim, i, "adapter.b", a.terms.b[l], se, t));
            if let Some(bp) = &a.terms.b_prime {
                let se = a.terms.b_prime_se.as_ref().map_or(0.0, |s| s[l]);
                rows.push(ResultRow::new("chaos-check", a.dim, i, "adapter.b_prime", bp[l], se, t));
            }
        }
        for chk in a.bounds.checks.iter().filter(|c| c.kind == BoundKind::Prime) {
            rows.push(ResultRow::new("chaos-check", a.dim, chk.i, "adapter.prime_bound", chk.rhs, 0.0, t));
        }
        rows
    }
}

/// Adapter indices: `1`, a quarter, half and all of the coordinates.
fn adapter_indices(n: usize) -> Vec<usize> {
    let mut v = vec![1, (n / 4).max(1), (n / 2).max(1), n];
    v.sort_unstable();
    v.dedup();
    v
}

/// Exact-mode corpus checks plus a Monte Carlo decomposition of the top
/// eigenvalue at dimension `adapter_dim` with `cfg.trials` trials.
pub fn chaos_check(cfg: &SweepConfig, adapter_dim: usize) -> Result<ChaosCheckReport> {
    let mut max_identity_residual = 0.0f64;
    let mut bound_failures = 0;
    let mut checked = 0;
    let mut max_permutation_diff = 0.0f64;
    for seed in 0..CORPUS_SIZE as u64 {
        let (f, space) = random_binary_instance(cfg.seed.wrapping_mul(1_000_003).wrapping_add(seed));
        let t = decomposition_exact(&f, &space)?;
        let half: f64 = 0.5 * t.b.iter().sum::<f64>();
        max_identity_residual = max_identity_residual.max((t.variance - half).abs());
        let report = crate::chaos::bound_checks(&t, t.variance);
        checked += report.checks.len();
        bound_failures += report.failures().count();
        if space.n() == 3 {
            let perm = decomposition_permutation_form(&f, &space)?;
            for (a, b) in perm.iter().zip(&t.b) {
                max_permutation_diff = max_permutation_diff.max((a - b).abs());
            }
        }
    }

    let rad = ProductSpace::iid(3, CoordinateLaw::rademacher())?;
    let first = decomposition_exact(&FnBox::new(3, |x: &[f64]| x[0]), &rad)?;
    let first_coordinate_dev = first.b.iter().map(|b| (b - 2.0 / 3.0).abs()).fold(0.0, f64::max);
    let law = CoordinateLaw::finite(vec![-2.0, 0.5], vec![0.2, 0.8])?;
    let add_space = ProductSpace::iid(4, law)?;
    let add = decomposition_exact(&FnBox::new(4, |x: &[f64]| x.iter().sum()), &add_space)?;
    let additive_dev = add.b.iter().map(|b| (b - 2.0).abs()).fold(0.0, f64::max);

    let (adapter, space) = eigenvalue_adapter(adapter_dim, &cfg.entry)?;
    let seed = SeedContext::new(cfg.seed, "chaos-adapter", 0, Purpose::Coordinates).with_sub(adapter_dim as u64);
    let terms = decomposition_mc(&adapter, &space, &adapter_indices(space.n()), cfg.trials, &seed)?;
    let bounds = check_bounds(&terms, terms.variance)?;

    Ok(ChaosCheckReport {
        corpus: CORPUS_SIZE,
        max_identity_residual,
        bound_failures,
        bound_checks: checked,
        max_permutation_diff,
        first_coordinate_dev,
        additive_dev,
        adapter: AdapterCheck {
            dim: adapter_dim,
            terms,
            bounds,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventCheckReport {
    pub n: usize,
    pub instances: usize,
    /// Instances skipped for a degenerate top gap.
    pub excluded: usize,
    pub localization_checked: usize,
    pub localization_holds: usize,
    /// `max |N eta Im R_ij - N v_i v_j| / (N ||v||_inf^2)` at `eta = gap / 10`,
    /// per non-degenerate instance.
    pub reconstruction_rel: Vec<f64>,
    /// Largest relative difference between the spectral and linear-solve
    /// paths.
    pub max_path_rel_diff: f64,
    pub zero_diagonal: Vec<ZeroDiagonalReport>,
    /// `max N eta |R^[k]_ij - R_ij|` for `k = 1`.
    pub resample_diff_one: Vec<f64>,
    /// The same for a fully resampled matrix.
    pub resample_diff_full: Vec<f64>,
}

/// Reconstruction passes when the relative deviation is at most this.
pub const RECONSTRUCTION_TOL: f64 = 0.05;

impl ResolventCheckReport {
    pub fn reconstruction_fraction(&self) -> f64 {
        if self.reconstruction_rel.is_empty() {
            return 0.0;
        }
        let ok = self.reconstruction_rel.iter().filter(|&&r| r <= RECONSTRUCTION_TOL).count();
        ok as f64 / self.reconstruction_rel.len() as f64
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let n = self.n;
        let t = self.instances - self.excluded;
        let mut rows = vec![
            ResultRow::new("resolvent-check", n, 0, "localization.checked", self.localization_checked as f64, 0.0, t),
            ResultRow::new("resolvent-check", n, 0, "localization.holds", self.localization_holds as f64, 0.0, t),
            ResultRow::new("resolvent-check", n, 0, "reconstruction.fraction_within", self.reconstruction_fraction(), 0.0, t),
            ResultRow::new("resolvent-check", n, 0, "paths.max_rel_diff", self.max_path_rel_diff, 0.0, t),
        ];
        for r in &mut rows {
            r.excluded = self.excluded;
        }
        let mut push = |name: &str, xs: &[f64], k: usize| {
            if !xs.is_empty() {
                let s = crate::stats::summarize(xs);
                rows.push(ResultRow::from_summary("resolvent-check", n, k, name, &s));
            }
        };
        push("reconstruction.rel_dev", &self.reconstruction_rel, 0);
        let zd: Vec<f64> = self.zero_diagonal.iter().map(|z| z.scaled_max).collect();
        push("zero_diagonal.scaled_max", &zd, 0);
        push("resample_diff", &self.resample_diff_one, 1);
        push("resample_diff", &self.resample_diff_full, pair_count(n));
        rows
    }
}

struct Instance {
    degenerate: bool,
    checked: usize,
    holds: usize,
    reconstruction: Option<f64>,
    path_diff: f64,
    zero: Option<ZeroDiagonalReport>,
    diffs: Option<(f64, f64)>,
}

fn resolvent_instance(cfg: &SweepConfig, n: usize, t: usize) -> Result<Instance> {
    let x = sample_wigner(n, &cfg.entry, &cfg.stream("resolvent", n, t, Purpose::Matrix))?;
    let res = SpectralResolvent::new(&x);
    let mut inst = Instance {
        degenerate: res.gap() < degeneracy_threshold(n),
        checked: 0,
        holds: 0,
        reconstruction: None,
        path_diff: 0.0,
        zero: None,
        diffs: None,
    };
    if inst.degenerate || n < 2 {
        return Ok(inst);
    }
    let spec = res.spectrum();
    let eta = res.gap() / 10.0;
    let edge = 2.0 * (n as f64).sqrt();
    for k_index in 1..=2 {
        for energy in [edge, spec.values[k_index - 1]] {
            let r = edge_localization_check(&res, k_index, energy, eta)?;
            inst.checked += 1;
            inst.holds += usize::from(r.holds);
        }
    }

    let pair = EigenPair {
        value: spec.values[0],
        vector: spec.vector(0),
        residual: 0.0,
    };
    let (top, vmax) = pair
        .vector
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    // Every diagonal entry and every entry in the row of the largest component.
    let indices: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, i), (i, top)]).collect();
    let dev = eigvec_from_resolvent(&res, &pair, eta, &indices)?;
    inst.reconstruction = Some(dev / (n as f64 * vmax * vmax));

    if t < DETAILED_INSTANCES {
        let point = SpectralPoint::new(pair.value, eta)?;
        let probe: Vec<(usize, usize)> = (0..n).map(|i| (i, top)).chain((0..n).map(|i| (i, 0))).collect();
        let a = res.entries(point, &probe)?;
        let b = resolvent_entries_with(&x, point, &probe, ResolventPath::Solve)?;
        let scale = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        inst.path_diff = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(p, q)| (p - q).norm() / scale)
            .fold(0.0, f64::max);

        inst.zero = Some(diagonal_zeroing_report(&x, edge)?);

        let order = sample_pair_set(n, 1, &cfg.stream("resolvent", n, t, Purpose::PairSet))?;
        let x1 = apply_resample(&x, &order, &cfg.entry, &cfg.stream("resolvent", n, t, Purpose::Resample))?;
        let xf = apply_resample(
            &x,
            &IndexPairSet::full(n),
            &cfg.entry,
            &cfg.stream("resolvent", n, t, Purpose::Resample),
        )?;
        let point = SpectralPoint::new(edge, (n as f64).powf(-0.25))?;
        let diag: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        inst.diffs = Some((
            resample_resolvent_diff(&x, &x1, point, &diag)?,
            resample_resolvent_diff(&x, &xf, point, &diag)?,
        ));
    }
    Ok(inst)
}

/// Resolvent checks on `cfg.trials_for(N)` matrices per dimension.
pub fn resolvent_check(cfg: &SweepConfig) -> Result<Vec<ResolventCheckReport>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let instances = cfg.trials_for(n);
        let all = parallel::try_map_indexed(instances, |t| resolvent_instance(cfg, n, t))?;
        out.push(ResolventCheckReport {
            n,
            instances,
            excluded: all.iter().filter(|i| i.degenerate).count(),
            localization_checked: all.iter().map(|i| i.checked).sum(),
            localization_holds: all.iter().map(|i| i.holds).sum(),
            reconstruction_rel: all.iter().filter_map(|i| i.reconstruction).collect(),
            max_path_rel_diff: all.iter().map(|i| i.path_diff).fold(0.0, f64::max),
            zero_diagonal: all.iter().filter_map(|i| i.zero).collect(),
            resample_diff_one: all.iter().filter_map(|i| i.diffs.map(|d| d.0)).collect(),
            resample_diff_full: all.iter().filter_map(|i| i.diffs.map(|d| d.1)).collect(),
        });
    }
    Ok(out)
}
