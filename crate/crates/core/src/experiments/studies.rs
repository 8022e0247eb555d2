//! Edge statistics, eigenvalue variance scaling, drift and single-entry flips.

use rand::Rng;

use super::{summary_rows, ResultRow, SweepConfig};
use crate::ensemble::{pair_count, resample_single, sample_pair_set, sample_wigner, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng::{Purpose, SeedContext};
use crate::spectral::{distance_stats, top_pair_and_gap, EigenPair, SolverOptions};
use crate::stats;

/// Sampled flips per matrix in the single-flip study.
pub const FLIPS_PER_MATRIX: usize = 10;

/// Edge quantities of one sampled matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSample {
    pub lambda: f64,
    pub lambda2: f64,
    pub gap: f64,
    /// `sqrt(N) * ||v||_inf`.
    pub sup_norm_scaled: f64,
    pub degenerate: bool,
}

/// `trials` independent matrices of dimension `n`.
pub fn edge_samples(cfg: &SweepConfig, n: usize, trials: usize) -> Result<Vec<EdgeSample>> {
    let opts = cfg.solver_options();
    parallel::try_map_indexed(trials, |t| {
        let x = sample_wigner(n, &cfg.entry, &cfg.stream("edge", n, t, Purpose::Matrix))?;
        let (pair, edge) = top_pair_and_gap(&x, &opts, None)?;
        let sup = pair.vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(EdgeSample {
            lambda: pair.value,
            lambda2: edge.lambda2,
            gap: edge.gap,
            sup_norm_scaled: (n as f64).sqrt() * sup,
            degenerate: edge.is_degenerate(n),
        })
    })
}

/// Sup-norm rows: the scaled sup norm and the fraction of trials with
/// `sqrt(N) ||v||_inf <= 4 ln N`.
pub fn delocalization_rows(n: usize, samples: &[EdgeSample]) -> Vec<ResultRow> {
    let ok: Vec<&EdgeSample> = samples.iter().filter(|s| !s.degenerate).collect();
    let excluded = samples.len() - ok.len();
    let sup: Vec<f64> = ok.iter().map(|s| s.sup_norm_scaled).collect();
    let mut rows = summary_rows("sample", n, 0, "sup_norm_scaled", &sup, excluded);
    let bound = 4.0 * (n as f64).ln();
    let hits: Vec<f64> = sup.iter().map(|&s| f64::from(u8::from(s <= bound))).collect();
    rows.push(
        ResultRow::from_summary("sample", n, 0, "deloc.fraction_within_4lnN", &stats::summarize(&hits))
            .with_excluded(excluded),
    );
    rows
}

/// Top eigenvalue, scaled gap `N^(1/6) (lambda_1 - lambda_2)` and sup norms.
pub fn sample_study(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let samples = edge_samples(cfg, n, cfg.trials_for(n))?;
        let lambdas: Vec<f64> = samples.iter().map(|s| s.lambda).collect();
        rows.extend(summary_rows("sample", n, 0, "lambda", &lambdas, 0));
        if n > 1 {
            let gaps: Vec<f64> = samples.iter().map(|s| s.gap * (n as f64).powf(1.0 / 6.0)).collect();
            rows.extend(summary_rows("sample", n, 0, "gap_scaled", &gaps, 0));
        }
        rows.extend(delocalization_rows(n, &samples));
    }
    Ok(rows)
}

/// Per-dimension `Var(lambda)` and its log-log fit.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScaling {
    pub ns: Vec<usize>,
    pub trials: Vec<usize>,
    pub variances: Vec<f64>,
    pub variance_se: Vec<f64>,
    /// OLS slope of `ln Var` on `ln N` (needs two distinct dimensions).
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Bootstrap standard deviation of the slope.
    pub slope_se: Option<f64>,
    /// 2.5% and 97.5% bootstrap quantiles of the slope.
    pub slope_ci: Option<(f64, f64)>,
}

impl VarianceScaling {
    /// `Var(N_b) / Var(N_a)` with its delta-method SE, if both are present.
    pub fn ratio(&self, a: usize, b: usize) -> Option<(f64, f64)> {
        let ia = self.ns.iter().position(|&n| n == a)?;
        let ib = self.ns.iter().position(|&n| n == b)?;
        let r = self.variances[ib] / self.variances[ia];
        let rel = (self.variance_se[ia] / self.variances[ia]).hypot(self.variance_se[ib] / self.variances[ib]);
        Some((r, r * rel))
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for (c, &n) in self.ns.iter().enumerate() {
            let t = self.trials[c];
            rows.push(ResultRow::new("var-lambda", n, 0, "var_lambda", self.variances[c], self.variance_se[c], t));
            let s = (n as f64).powf(1.0 / 3.0);
            rows.push(ResultRow::new(
                "var-lambda",
                n,
                0,
                "var_lambda.times_N_third",
                self.variances[c] * s,
                self.variance_se[c] * s,
                t,
            ));
            if let Some(next) = self.ns.get(c + 1) {
                if let Some((r, se)) = self.ratio(n, *next) {
                    rows.push(ResultRow::new("var-lambda", n, 0, "var_ratio_next", r, se, t.min(self.trials[c + 1])));
                }
            }
        }
        let total: usize = self.trials.iter().sum();
        if let (Some(slope), Some(intercept)) = (self.slope, self.intercept) {
            let se = self.slope_se.unwrap_or(0.0);
            rows.push(ResultRow::new("var-lambda", 0, 0, "slope", slope, se, total));
            rows.push(ResultRow::new("var-lambda", 0, 0, "intercept", intercept, 0.0, total));
            if let Some((lo, hi)) = self.slope_ci {
                rows.push(ResultRow::new("var-lambda", 0, 0, "slope.ci_lo", lo, 0.0, total));
                rows.push(ResultRow::new("var-lambda", 0, 0, "slope.ci_hi", hi, 0.0, total));
            }
        }
        rows
    }
}

fn fit(ns: &[usize], vars: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = vars.iter().map(|v| v.ln()).collect();
    stats::ols(&xs, &ys)
}

/// Variances and slope from eigenvalue samples grouped by dimension. The
/// bootstrap resamples each dimension's sample independently.
pub fn variance_scaling_from(samples: &[(usize, Vec<f64>)], reps: usize, seed: u64) -> Result<VarianceScaling> {
    if samples.iter().any(|(_, l)| l.len() < 2) {
        return Err(Error::Domain("variance needs at least 2 samples per dimension".into()));
    }
    let ns: Vec<usize> = samples.iter().map(|(n, _)| *n).collect();
    let variances: Vec<f64> = samples.iter().map(|(_, l)| stats::variance(l)).collect();
    let variance_se = samples.iter().map(|(_, l)| stats::variance_stderr(l)).collect();
    let trials = samples.iter().map(|(_, l)| l.len()).collect();
    let mut distinct = ns.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut out = VarianceScaling {
        ns,
        trials,
        variances,
        variance_se,
        slope: None,
        intercept: None,
        slope_se: None,
        slope_ci: None,
    };
    if distinct.len() < 2 || out.variances.iter().any(|v| *v <= 0.0) {
        return Ok(out);
    }
    let (slope, intercept) = fit(&out.ns, &out.variances);
    out.slope = Some(slope);
    out.intercept = Some(intercept);
    if reps > 0 {
        let slopes: Vec<f64> = parallel::map_indexed(reps, |r| {
            let mut rng = SeedContext::new(seed, "var-bootstrap", r as u64, Purpose::Bootstrap).rng();
            let vars: Vec<f64> = samples
                .iter()
                .map(|(_, l)| {
                    let re: Vec<f64> = (0..l.len()).map(|_| l[rng.random_range(0..l.len())]).collect();
                    stats::variance(&re)
                })
                .collect();
            fit(&out.ns, &vars).0
        });
        let s = stats::summarize(&slopes);
        out.slope_se = Some(if reps > 1 { s.std } else { 0.0 });
        out.slope_ci = Some((stats::quantile(&slopes, 0.025), stats::quantile(&slopes, 0.975)));
    }
    Ok(out)
}

/// `Var(lambda)` for every dimension in `cfg.n_list`, `cfg.trials` each.
pub fn lambda_variance_scaling(cfg: &SweepConfig) -> Result<VarianceScaling> {
    cfg.validate()?;
    let samples = cfg
        .n_list
        .iter()
        .map(|&n| Ok((n, edge_samples(cfg, n, cfg.trials)?.iter().map(|s| s.lambda).collect())))
        .collect::<Result<Vec<_>>>()?;
    variance_scaling_from(&samples, cfg.bootstrap_reps, cfg.seed)
}

/// `lambda^[k] - lambda` over nested resample sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub n: usize,
    pub ks: Vec<usize>,
    /// `drifts[c][t]` for grid point `c` and trial `t`.
    pub drifts: Vec<Vec<f64>>,
    /// `(first-order term, |drift - term|)` per trial at `k = 1`, when the
    /// grid contains 1.
    pub first_order: Vec<(f64, f64)>,
    reps: usize,
    seed: u64,
}

impl DriftReport {
    fn column(&self, k: usize) -> Option<&[f64]> {
        self.ks.iter().position(|&x| x == k).map(|c| self.drifts[c].as_slice())
    }

    /// `std(drift at k_hi) / std(drift at k_lo)` with a paired bootstrap SE.
    pub fn std_ratio(&self, k_lo: usize, k_hi: usize) -> Option<(f64, f64)> {
        let lo = self.column(k_lo)?;
        let hi = self.column(k_hi)?;
        let ratio = |a: &[f64], b: &[f64]| stats::summarize(b).std / stats::summarize(a).std;
        let r = ratio(lo, hi);
        let pairs: Vec<(f64, f64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
        let seed = SeedContext::new(self.seed, "drift-bootstrap", (k_lo as u64) << 32 | k_hi as u64, Purpose::Bootstrap)
            .with_sub(self.n as u64);
        let boot = stats::bootstrap(&pairs, self.reps.max(2), &seed, |p| {
            let (a, b): (Vec<f64>, Vec<f64>) = p.iter().copied().unzip();
            ratio(&a, &b)
        });
        Some((r, stats::summarize(&boot).std))
    }

    pub fn first_order_medians(&self) -> Option<(f64, f64)> {
        if self.first_order.is_empty() {
            return None;
        }
        let term: Vec<f64> = self.first_order.iter().map(|p| p.0.abs()).collect();
        let resid: Vec<f64> = self.first_order.iter().map(|p| p.1).collect();
        Some((stats::median(&term), stats::median(&resid)))
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        let n = self.n;
        for (c, &k) in self.ks.iter().enumerate() {
            let d = &self.drifts[c];
            let s = stats::summarize(d);
            let t = d.len();
            rows.push(ResultRow::from_summary("drift", n, k, "drift", &s));
            // SE of a sample std under normality.
            let std_se = s.std / (2.0 * (t as f64 - 1.0)).sqrt();
            rows.push(ResultRow::new("drift", n, k, "drift.std", s.std, std_se, t));
            if k > 0 {
                let shape = n as f64 / (k as f64).sqrt();
                rows.push(ResultRow::new("drift", n, k, "drift.std_times_N_over_sqrtk", s.std * shape, std_se * shape, t));
            }
            if k > 0 && self.ks.contains(&(4 * k)) {
                if let Some((r, se)) = self.std_ratio(k, 4 * k) {
                    rows.push(ResultRow::new("drift", n, k, "drift.std_ratio_4k", r, se, t));
                }
            }
        }
        if !self.first_order.is_empty() {
            let t = self.first_order.len();
            let term: Vec<f64> = self.first_order.iter().map(|p| p.0.abs()).collect();
            let resid: Vec<f64> = self.first_order.iter().map(|p| p.1).collect();
            for (name, xs) in [("first_order.term_abs", &term), ("first_order.residual", &resid)] {
                rows.push(ResultRow::new(
                    "drift",
                    n,
                    1,
                    &format!("{name}.median"),
                    stats::median(xs),
                    stats::quantile_stderr(xs, 0.5),
                    t,
                ));
            }
        }
        rows
    }
}

/// Eigenvalue drift at dimension `n` over the resample counts `ks`, using
/// `cfg.trials_for(n)` trials.
pub fn lambda_drift_study(cfg: &SweepConfig, n: usize, ks: &[usize]) -> Result<DriftReport> {
    cfg.validate()?;
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let kmax = ks.last().copied().unwrap_or(0);
    let opts = cfg.solver_options();
    let per_trial = parallel::try_map_indexed(cfg.trials_for(n), |t| {
        let x = sample_wigner(n, &cfg.entry, &cfg.stream("drift", n, t, Purpose::Matrix))?;
        let (pair, _) = top_pair_and_gap(&x, &opts, None)?;
        let order = sample_pair_set(n, kmax, &cfg.stream("drift", n, t, Purpose::PairSet))?;
        let mut rng = cfg.stream("drift", n, t, Purpose::Resample).rng();
        let mut xk = x.clone();
        let mut done = 0;
        let mut drifts = Vec::with_capacity(ks.len());
        let mut first = None;
        for &k in &ks {
            for &(i, j) in &order.pairs()[done..k] {
                xk.set(i, j, cfg.entry.sample_entry(i, j, &mut rng));
            }
            done = k;
            if k == 0 {
                drifts.push(0.0);
                continue;
            }
            let (pk, _) = top_pair_and_gap(&xk, &opts, Some(&pair.vector))?;
            let d = pk.value - pair.value;
            drifts.push(d);
            if k == 1 {
                let (i, j) = order.pairs()[0];
                let mult = if i == j { 1.0 } else { 2.0 };
                let term = mult * pair.vector[i] * pair.vector[j] * (xk.get(i, j) - x.get(i, j));
                first = Some((term, (d - term).abs()));
            }
        }
        Ok::<_, Error>((drifts, first))
    })?;
    let drifts = (0..ks.len()).map(|c| per_trial.iter().map(|(d, _)| d[c]).collect()).collect();
    let first_order = per_trial.iter().filter_map(|(_, f)| *f).collect();
    Ok(DriftReport {
        n,
        ks,
        drifts,
        first_order,
        reps: cfg.bootstrap_reps,
        seed: cfg.seed,
    })
}

/// `sqrt(N) min_s ||v - s u||_inf` where `u` is the top eigenvector after
/// setting entry `(i, j)` to `value`; `None` if the flipped matrix has a
/// degenerate top gap.
pub fn single_flip_distance(
    x: &SymmetricMatrix,
    pair: &EigenPair,
    flipped: &SymmetricMatrix,
    opts: &SolverOptions,
) -> Result<Option<f64>> {
    if flipped.dim() != x.dim() || x.hamming_distance(flipped) > 1 {
        return Err(Error::Domain("flipped matrix must differ from X in at most one entry".into()));
    }
    if flipped == x {
        return Ok(Some(0.0));
    }
    let (u, edge) = top_pair_and_gap(flipped, opts, Some(&pair.vector))?;
    if edge.is_degenerate(x.dim()) {
        return Ok(None);
    }
    Ok(Some(distance_stats(&pair.vector, &u.vector)?.sup_aligned_scaled))
}

/// Single-entry flip distances at one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipReport {
    pub n: usize,
    pub distances: Vec<f64>,
    pub excluded: usize,
}

impl FlipReport {
    pub fn median(&self) -> f64 {
        stats::median(&self.distances)
    }

    pub fn q95(&self) -> f64 {
        stats::quantile(&self.distances, 0.95)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        summary_rows("single-flip", self.n, 1, "flip_sup_scaled", &self.distances, self.excluded)
    }
}

/// `cfg.pair_samples` random flips per dimension, [`FLIPS_PER_MATRIX`] per
/// sampled matrix.
pub fn single_flip_study(cfg: &SweepConfig) -> Result<Vec<FlipReport>> {
    cfg.validate()?;
    let opts = cfg.solver_options();
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let per = FLIPS_PER_MATRIX.min(pair_count(n));
        let matrices = cfg.pair_samples.div_ceil(per);
        let per_matrix = parallel::try_map_indexed(matrices, |m| {
            let x = sample_wigner(n, &cfg.entry, &cfg.stream("single-flip", n, m, Purpose::Matrix))?;
            let (pair, edge) = top_pair_and_gap(&x, &opts, None)?;
            let count = per.min(cfg.pair_samples - m * per);
            if edge.is_degenerate(n) {
                return Ok(vec![None; count]);
            }
            let pairs = sample_pair_set(n, count, &cfg.stream("single-flip", n, m, Purpose::PairSet))?;
            pairs
                .pairs()
                .iter()
                .enumerate()
                .map(|(p, &(i, j))| {
                    let seed = cfg.stream("single-flip", n, m * per + p, Purpose::SingleFlip);
                    let flipped = resample_single(&x, i, j, &cfg.entry, &seed)?;
                    single_flip_distance(&x, &pair, &flipped, &opts)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let all: Vec<Option<f64>> = per_matrix.into_iter().flatten().collect();
        let distances: Vec<f64> = all.iter().flatten().copied().collect();
        out.push(FlipReport {
            n,
            excluded: all.len() - distances.len(),
            distances,
        });
    }
    Ok(out)
}
