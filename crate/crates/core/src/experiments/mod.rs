//! Monte Carlo drivers: resampling sweeps, edge statistics, drift and
//! single-flip studies, and the result rows they emit.
//!
//! Every trial draws from streams keyed by `(seed, experiment, trial, N)`, and
//! trials are reduced in index order, so tables do not depend on the number
//! of worker threads.

mod checks;
mod studies;
mod sweep;

pub use checks::{chaos_check, resolvent_check, ChaosCheckReport, ResolventCheckReport};
pub use studies::{
    delocalization_rows, edge_samples, lambda_drift_study, lambda_variance_scaling, sample_study,
    single_flip_distance, single_flip_study, variance_scaling_from, DriftReport, EdgeSample, FlipReport,
    VarianceScaling,
};
pub use sweep::{
    alignment_rows, alignment_sweep, collapse_from, collapse_report, key_inequality_from, key_inequality_probe,
    overlap_rows, overlap_sweep, sweep_trials, CellRecord, CollapseReport, KeyCell, SweepOutcome, TrialRecord,
};

use std::fmt;
use std::str::FromStr;

use crate::ensemble::{pair_count, EntrySpec};
use crate::error::{Error, Result};
use crate::rng::{Purpose, SeedContext};
use crate::spectral::{Solver, SolverOptions};
use crate::stats::{self, Summary};

/// A resample count: absolute, a multiple of `N^(5/3)`, or every entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KSpec {
    Absolute(usize),
    Multiplier(f64),
    Full,
}

impl KSpec {
    /// The count for dimension `n`. Multipliers round to the nearest integer
    /// and are clamped to `N(N+1)/2`; an absolute count above it is an error.
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let total = pair_count(n);
        match *self {
            KSpec::Absolute(k) if k > total => Err(Error::config(
                format!("k_grid (N = {n}, k = {k})"),
                format!("k exceeds N(N+1)/2 = {total}"),
            )),
            KSpec::Absolute(k) => Ok(k),
            KSpec::Multiplier(m) => Ok(((m * threshold_scale(n)).round() as usize).min(total)),
            KSpec::Full => Ok(total),
        }
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSpec::Absolute(k) => write!(f, "{k}"),
            KSpec::Multiplier(m) => write!(f, "{m}m"),
            KSpec::Full => f.write_str("full"),
        }
    }
}

impl FromStr for KSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::config("k_grid", format!("cannot parse {s:?}; expected an integer, `<x>m` or `full`"));
        if s == "full" {
            return Ok(KSpec::Full);
        }
        if let Some(m) = s.strip_suffix('m') {
            let m: f64 = m.trim().parse().map_err(|_| bad())?;
            if !(m.is_finite() && m >= 0.0) {
                return Err(bad());
            }
            return Ok(KSpec::Multiplier(m));
        }
        s.parse().map(KSpec::Absolute).map_err(|_| bad())
    }
}

/// `N^(5/3)`.
pub fn threshold_scale(n: usize) -> f64 {
    (n as f64).powf(5.0 / 3.0)
}

/// `k / N^(5/3)`.
pub fn multiplier_of(n: usize, k: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / threshold_scale(n)
    }
}

/// Sweep statistics that `statistics` can select.
pub const SWEEP_STATISTICS: [&str; 4] = ["overlap", "overlap_sq", "l2_aligned", "sup_aligned_scaled"];

pub fn default_k_grid() -> Vec<KSpec> {
    let mut grid: Vec<KSpec> = [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0]
        .into_iter()
        .map(KSpec::Multiplier)
        .collect();
    grid.push(KSpec::Full);
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub k_grid: Vec<KSpec>,
    /// Trials per cell for `N <= 512`.
    pub trials: usize,
    /// Trials per cell for `N > 512` (never more than `trials`).
    pub trials_large: usize,
    pub entry: EntrySpec,
    pub seed: u64,
    /// Selected entries of [`SWEEP_STATISTICS`].
    pub statistics: Vec<String>,
    pub eig_tol: f64,
    pub solver: Solver,
    /// Sampled pairs per `N` in the single-flip study.
    pub pair_samples: usize,
    pub bootstrap_reps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_list: vec![256, 512],
            k_grid: default_k_grid(),
            trials: 400,
            trials_large: 100,
            entry: EntrySpec::default(),
            seed: 1,
            statistics: SWEEP_STATISTICS.iter().map(|s| s.to_string()).collect(),
            eig_tol: crate::spectral::DEFAULT_TOL,
            solver: Solver::Auto,
            pair_samples: 200,
            bootstrap_reps: 1000,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::config("N_list", "must not be empty"));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n == 0) {
            return Err(Error::config("N_list", format!("dimensions must be positive, got {n}")));
        }
        if self.k_grid.is_empty() {
            return Err(Error::config("k_grid", "must not be empty"));
        }
        if self.trials < 2 || self.trials_large < 2 {
            return Err(Error::config("trials", "must be at least 2"));
        }
        if !(self.eig_tol > 0.0 && self.eig_tol.is_finite()) {
            return Err(Error::config("eig_tol", "must be positive"));
        }
        if self.pair_samples == 0 {
            return Err(Error::config("pair_samples", "must be at least 1"));
        }
        if self.bootstrap_reps == 0 {
            return Err(Error::config("bootstrap_reps", "must be at least 1"));
        }
        for s in &self.statistics {
            if !SWEEP_STATISTICS.contains(&s.as_str()) {
                return Err(Error::config("statistics", format!("unknown statistic {s:?}")));
            }
        }
        self.entry.validate()?;
        for &n in &self.n_list {
            for k in &self.k_grid {
                k.resolve(n)?;
            }
        }
        Ok(())
    }

    pub fn trials_for(&self, n: usize) -> usize {
        if n > 512 {
            self.trials_large.min(self.trials)
        } else {
            self.trials
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions::with_tol(self.eig_tol).with_solver(self.solver)
    }

    /// Distinct resample counts for `n`, ascending.
    pub fn resolved_grid(&self, n: usize) -> Result<Vec<usize>> {
        let mut ks = self
            .k_grid
            .iter()
            .map(|k| k.resolve(n))
            .collect::<Result<Vec<_>>>()?;
        ks.sort_unstable();
        ks.dedup();
        Ok(ks)
    }

    pub(crate) fn keeps(&self, statistic: &str) -> bool {
        let base = statistic.split('.').next().unwrap_or(statistic);
        !SWEEP_STATISTICS.contains(&base) || self.statistics.iter().any(|s| s == base)
    }

    pub(crate) fn stream(&self, experiment: &'static str, n: usize, trial: usize, purpose: Purpose) -> SeedContext {
        SeedContext::new(self.seed, experiment, trial as u64, purpose).with_sub(n as u64)
    }
}

/// One statistic for one `(N, k)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// Matrix dimension; 0 for rows that pool several dimensions.
    pub n: usize,
    pub k: usize,
    /// `k / N^(5/3)` (0 when `N` is 0).
    pub multiplier: f64,
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    /// Trials that entered the statistic.
    pub trials: usize,
    /// Trials excluded for a degenerate top gap.
    pub excluded: usize,
}

impl ResultRow {
    pub fn new(experiment: &str, n: usize, k: usize, statistic: &str, mean: f64, stderr: f64, trials: usize) -> Self {
        ResultRow {
            experiment: experiment.to_string(),
            n,
            k,
            multiplier: multiplier_of(n, k),
            statistic: statistic.to_string(),
            mean,
            stderr,
            trials,
            excluded: 0,
        }
    }

    pub fn from_summary(experiment: &str, n: usize, k: usize, statistic: &str, s: &Summary) -> Self {
        ResultRow::new(experiment, n, k, statistic, s.mean, s.stderr, s.n)
    }

    pub fn with_excluded(mut self, excluded: usize) -> Self {
        self.excluded = excluded;
        self
    }

    /// At most 1% of the cell's trials were excluded.
    pub fn is_valid(&self) -> bool {
        self.excluded * 100 <= self.trials + self.excluded
    }
}

/// Mean row plus median and 5%/95% quantile rows for `xs`.
pub(crate) fn summary_rows(
    experiment: &str,
    n: usize,
    k: usize,
    statistic: &str,
    xs: &[f64],
    excluded: usize,
) -> Vec<ResultRow> {
    let s = stats::summarize(xs);
    let mut rows = vec![ResultRow::from_summary(experiment, n, k, statistic, &s).with_excluded(excluded)];
    if xs.is_empty() {
        return rows;
    }
    for (tag, p) in [("median", 0.5), ("q05", 0.05), ("q95", 0.95)] {
        rows.push(
            ResultRow::new(
                experiment,
                n,
                k,
                &format!("{statistic}.{tag}"),
                stats::quantile(xs, p),
                stats::quantile_stderr(xs, p),
                xs.len(),
            )
            .with_excluded(excluded),
        );
    }
    rows
}
