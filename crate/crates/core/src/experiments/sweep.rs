//! Nested resampling sweeps over a k-grid.

use super::{summary_rows, KSpec, ResultRow, SweepConfig};
use crate::ensemble::{apply_resample, pair_count, sample_pair_set, sample_wigner};
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng::Purpose;
use crate::spectral::{distance_stats, overlap, top_pair_and_gap};
use crate::stats;

const STREAM: &str = "sweep";

/// Comparison of `v` with the top eigenvector of `X^[k]` in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRecord {
    pub overlap: f64,
    pub l2_aligned: f64,
    pub sup_aligned_scaled: f64,
    pub lambda_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub lambda: f64,
    pub gap: f64,
    /// One entry per grid point; `None` when `X` or `X^[k]` has a degenerate
    /// top gap.
    pub cells: Vec<Option<CellRecord>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub n: usize,
    /// Ascending distinct resample counts.
    pub ks: Vec<usize>,
    pub trials: Vec<TrialRecord>,
}

impl SweepOutcome {
    /// Valid values of `pick` at grid index `c`, and the excluded count.
    pub fn column(&self, c: usize, pick: impl Fn(&CellRecord) -> f64) -> (Vec<f64>, usize) {
        let vals: Vec<f64> = self.trials.iter().filter_map(|t| t.cells[c].as_ref().map(&pick)).collect();
        let excluded = self.trials.len() - vals.len();
        (vals, excluded)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.lambda).collect()
    }

    pub fn index_of(&self, k: usize) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }
}

fn sweep_trial(cfg: &SweepConfig, n: usize, ks: &[usize], t: usize) -> Result<TrialRecord> {
    let opts = cfg.solver_options();
    let x = sample_wigner(n, &cfg.entry, &cfg.stream(STREAM, n, t, Purpose::Matrix))?;
    let (pair, edge) = top_pair_and_gap(&x, &opts, None)?;
    let mut record = TrialRecord {
        lambda: pair.value,
        gap: edge.gap,
        cells: vec![None; ks.len()],
    };
    if edge.is_degenerate(n) {
        return Ok(record);
    }
    let kmax = ks.last().copied().unwrap_or(0);
    // One random order of positions; every grid point resamples a prefix of
    // it, with the same replacement values, so S_k1 is inside S_k2.
    let order = sample_pair_set(n, kmax, &cfg.stream(STREAM, n, t, Purpose::PairSet))?;
    let replaced = apply_resample(&x, &order, &cfg.entry, &cfg.stream(STREAM, n, t, Purpose::Resample))?;

    let mut xk = x.clone();
    let mut done = 0;
    let mut start = pair.vector.clone();
    for (c, &k) in ks.iter().enumerate() {
        let before = xk.clone();
        for &(i, j) in &order.pairs()[done..k] {
            xk.set(i, j, replaced.get(i, j));
        }
        if xk.hamming_distance(&before) > k - done {
            return Err(Error::Invariant(format!("resample sets not nested at k = {k}")));
        }
        done = k;
        if k == 0 {
            record.cells[c] = Some(CellRecord {
                overlap: 1.0,
                l2_aligned: 0.0,
                sup_aligned_scaled: 0.0,
                lambda_k: pair.value,
            });
            continue;
        }
        let (pk, ek) = top_pair_and_gap(&xk, &opts, Some(&start))?;
        if ek.is_degenerate(n) {
            continue;
        }
        let d = distance_stats(&pair.vector, &pk.vector)?;
        record.cells[c] = Some(CellRecord {
            overlap: overlap(&pair.vector, &pk.vector)?,
            l2_aligned: d.l2_aligned,
            sup_aligned_scaled: d.sup_aligned_scaled,
            lambda_k: pk.value,
        });
        start = pk.vector;
    }
    Ok(record)
}

/// Runs `cfg.trials_for(n)` trials of the nested sweep at dimension `n`.
pub fn sweep_trials(cfg: &SweepConfig, n: usize) -> Result<SweepOutcome> {
    cfg.validate()?;
    let ks = cfg.resolved_grid(n)?;
    let trials = parallel::try_map_indexed(cfg.trials_for(n), |t| sweep_trial(cfg, n, &ks, t))?;
    Ok(SweepOutcome { n, ks, trials })
}

pub fn overlap_rows(cfg: &SweepConfig, out: &SweepOutcome) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (c, &k) in out.ks.iter().enumerate() {
        let (ov, excluded) = out.column(c, |r| r.overlap);
        rows.extend(summary_rows("overlap-sweep", out.n, k, "overlap", &ov, excluded));
        let sq: Vec<f64> = ov.iter().map(|o| o * o).collect();
        rows.push(
            ResultRow::from_summary("overlap-sweep", out.n, k, "overlap_sq", &stats::summarize(&sq)).with_excluded(excluded),
        );
    }
    rows.retain(|r| cfg.keeps(&r.statistic));
    rows
}

pub fn alignment_rows(cfg: &SweepConfig, out: &SweepOutcome) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (c, &k) in out.ks.iter().enumerate() {
        let (l2, excluded) = out.column(c, |r| r.l2_aligned);
        rows.extend(summary_rows("alignment-sweep", out.n, k, "l2_aligned", &l2, excluded));
        let (sup, _) = out.column(c, |r| r.sup_aligned_scaled);
        rows.extend(summary_rows("alignment-sweep", out.n, k, "sup_aligned_scaled", &sup, excluded));
        // Running maximum over the nested grid up to k.
        let prefix: Vec<(f64, f64)> = out
            .trials
            .iter()
            .filter_map(|t| {
                t.cells[..=c].iter().try_fold((0.0f64, 0.0f64), |(a, b), cell| {
                    cell.as_ref().map(|r| (a.max(r.l2_aligned), b.max(r.sup_aligned_scaled)))
                })
            })
            .collect();
        let ex = out.trials.len() - prefix.len();
        let l2max: Vec<f64> = prefix.iter().map(|p| p.0).collect();
        let supmax: Vec<f64> = prefix.iter().map(|p| p.1).collect();
        rows.push(
            ResultRow::from_summary("alignment-sweep", out.n, k, "l2_aligned.max_prefix", &stats::summarize(&l2max))
                .with_excluded(ex),
        );
        rows.push(
            ResultRow::from_summary(
                "alignment-sweep",
                out.n,
                k,
                "sup_aligned_scaled.max_prefix",
                &stats::summarize(&supmax),
            )
            .with_excluded(ex),
        );
    }
    rows.retain(|r| cfg.keeps(&r.statistic));
    rows
}

/// Mean `|<v, v^[k]>|` (and its square) per `(N, k)`.
pub fn overlap_sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        rows.extend(overlap_rows(cfg, &sweep_trials(cfg, n)?));
    }
    Ok(rows)
}

/// Sign-aligned l2 and scaled sup distances per `(N, k)`.
pub fn alignment_sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        rows.extend(alignment_rows(cfg, &sweep_trials(cfg, n)?));
    }
    Ok(rows)
}

/// Both sides of `(E|<v, v^[k]>|)^2 <= 2 N^2 Var(lambda) / k * (n + 1) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyCell {
    pub n: usize,
    pub k: usize,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub holds: bool,
}

impl KeyCell {
    pub fn combined_se(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_se)
    }
}

/// Key-inequality cells for every `k > 0` of a sweep; `Var(lambda)` is
/// estimated from the same trials.
pub fn key_inequality_from(out: &SweepOutcome) -> Vec<KeyCell> {
    let lambdas = out.lambdas();
    let var = stats::variance(&lambdas);
    let var_se = stats::variance_stderr(&lambdas);
    let nf = out.n as f64;
    let npairs = pair_count(out.n) as f64;
    out.ks
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(c, &k)| {
            let (ov, _) = out.column(c, |r| r.overlap);
            let s = stats::summarize(&ov);
            let factor = 2.0 * nf * nf * (npairs + 1.0) / npairs / k as f64;
            let mut cell = KeyCell {
                n: out.n,
                k,
                lhs: s.mean * s.mean,
                lhs_se: 2.0 * s.mean * s.stderr,
                rhs: factor * var,
                rhs_se: factor * var_se,
                holds: false,
            };
            cell.holds = cell.lhs <= cell.rhs + 4.0 * cell.combined_se();
            cell
        })
        .collect()
}

pub fn key_rows(cells: &[KeyCell]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for c in cells {
        let trials = 0;
        rows.push(ResultRow::new("key-inequality", c.n, c.k, "key.lhs", c.lhs, c.lhs_se, trials));
        rows.push(ResultRow::new("key-inequality", c.n, c.k, "key.rhs", c.rhs, c.rhs_se, trials));
        let ratio = c.lhs / c.rhs;
        let ratio_se = ratio * ((c.lhs_se / c.lhs).powi(2) + (c.rhs_se / c.rhs).powi(2)).sqrt();
        rows.push(ResultRow::new("key-inequality", c.n, c.k, "key.ratio", ratio, ratio_se, trials));
    }
    rows
}

/// Runs the sweep for every `N` and evaluates the key inequality per cell.
pub fn key_inequality_probe(cfg: &SweepConfig) -> Result<(Vec<KeyCell>, Vec<ResultRow>)> {
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let out = sweep_trials(cfg, n)?;
        let trials = out.trials.len();
        let found = key_inequality_from(&out);
        rows.extend(key_rows(&found).into_iter().map(|mut r| {
            r.trials = trials;
            r
        }));
        cells.extend(found);
    }
    Ok((cells, rows))
}

/// Mean overlap at matched multipliers `m = k / N^(5/3)` across dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport {
    pub multipliers: Vec<f64>,
    pub ns: Vec<usize>,
    /// `means[m][n]`, indexed like `multipliers` and `ns`.
    pub means: Vec<Vec<f64>>,
    pub stderrs: Vec<Vec<f64>>,
    /// `max - min` of the means over dimensions, per multiplier.
    pub spreads: Vec<f64>,
}

pub fn collapse_from(outcomes: &[SweepOutcome], multipliers: &[f64]) -> Result<CollapseReport> {
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    let mut spreads = Vec::new();
    for &m in multipliers {
        let mut row_m = Vec::new();
        let mut row_se = Vec::new();
        for out in outcomes {
            let k = KSpec::Multiplier(m).resolve(out.n)?;
            let c = out
                .index_of(k)
                .ok_or_else(|| Error::Domain(format!("k = {k} (m = {m}) not in the sweep grid for N = {}", out.n)))?;
            let s = stats::summarize(&out.column(c, |r| r.overlap).0);
            row_m.push(s.mean);
            row_se.push(s.stderr);
        }
        let hi = row_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = row_m.iter().copied().fold(f64::INFINITY, f64::min);
        spreads.push(hi - lo);
        means.push(row_m);
        stderrs.push(row_se);
    }
    Ok(CollapseReport {
        multipliers: multipliers.to_vec(),
        ns: outcomes.iter().map(|o| o.n).collect(),
        means,
        stderrs,
        spreads,
    })
}

pub fn collapse_rows(outcomes: &[SweepOutcome], report: &CollapseReport) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (a, &m) in report.multipliers.iter().enumerate() {
        for (b, out) in outcomes.iter().enumerate() {
            let k = KSpec::Multiplier(m).resolve(out.n).unwrap_or(0);
            let c = out.index_of(k).unwrap_or(0);
            let (vals, excluded) = out.column(c, |r| r.overlap);
            rows.push(
                ResultRow::new("collapse", out.n, k, "overlap", report.means[a][b], report.stderrs[a][b], vals.len())
                    .with_excluded(excluded),
            );
        }
        let mut spread = ResultRow::new("collapse", 0, 0, "collapse.spread", report.spreads[a], 0.0, outcomes.len());
        spread.multiplier = m;
        rows.push(spread);
    }
    rows
}

/// Sweeps every `N` over the multiplier grid and compares the curves.
pub fn collapse_report(cfg: &SweepConfig, multipliers: &[f64]) -> Result<(CollapseReport, Vec<ResultRow>)> {
    let mut local = cfg.clone();
    local.k_grid = multipliers.iter().map(|&m| KSpec::Multiplier(m)).collect();
    let outcomes = cfg
        .n_list
        .iter()
        .map(|&n| sweep_trials(&local, n))
        .collect::<Result<Vec<_>>>()?;
    let report = collapse_from(&outcomes, multipliers)?;
    let rows = collapse_rows(&outcomes, &report);
    Ok((report, rows))
}
