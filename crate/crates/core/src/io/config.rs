//! Flat `key = value` configuration with `[a, b, c]` lists and `#` comments.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{KSpec, SweepConfig};

/// Accepted keys, in the order [`emit_config`] writes them.
pub const CONFIG_KEYS: [&str; 13] = [
    "N_list",
    "k_grid",
    "trials",
    "trials_large",
    "seed",
    "offdiag_dist",
    "diag_sigma0",
    "tail_delta",
    "statistics",
    "eig_tol",
    "solver",
    "pair_samples",
    "bootstrap_reps",
];

fn list_items<'a>(raw: &'a str, ctx: &str) -> Result<Vec<&'a str>> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::config(ctx, format!("expected a list `[a, b, ...]`, got `{raw}`")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(str::trim).collect())
}

fn scalar<T: FromStr>(raw: &str, ctx: &str, what: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::config(ctx, format!("expected {what}, got `{raw}`")))
}

fn list<T: FromStr>(raw: &str, ctx: &str, what: &str) -> Result<Vec<T>> {
    list_items(raw, ctx)?.into_iter().map(|s| scalar(s, ctx, what)).collect()
}

/// Re-tags a parse error with the line it came from.
fn at_line(e: Error, ctx: &str) -> Error {
    match e {
        Error::Config { message, .. } => Error::config(ctx, message),
        other => other,
    }
}

/// Parses and validates configuration text. Missing keys take their
/// defaults; unknown or repeated keys are errors.
pub fn parse_config_str(text: &str) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {lineno}"), format!("expected `key = value`, got `{line}`")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let ctx = format!("line {lineno}, key `{key}`");
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::config(ctx, "unknown key"));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::config(ctx, "key given twice"));
        }
        match key {
            "N_list" => cfg.n_list = list(raw, &ctx, "a list of dimensions")?,
            "k_grid" => {
                cfg.k_grid = list_items(raw, &ctx)?
                    .into_iter()
                    .map(|s| s.parse::<KSpec>().map_err(|e| at_line(e, &ctx)))
                    .collect::<Result<_>>()?
            }
            "trials" => cfg.trials = scalar(raw, &ctx, "an integer")?,
            "trials_large" => cfg.trials_large = scalar(raw, &ctx, "an integer")?,
            "seed" => cfg.seed = scalar(raw, &ctx, "an unsigned integer")?,
            "offdiag_dist" => cfg.entry.offdiag = raw.parse().map_err(|e| at_line(e, &ctx))?,
            "diag_sigma0" => cfg.entry.diag_sigma0 = scalar(raw, &ctx, "a number")?,
            "tail_delta" => cfg.entry.tail_delta = scalar(raw, &ctx, "a number")?,
            "statistics" => cfg.statistics = list(raw, &ctx, "a list of statistic names")?,
            "eig_tol" => cfg.eig_tol = scalar(raw, &ctx, "a number")?,
            "solver" => cfg.solver = raw.parse().map_err(|e| at_line(e, &ctx))?,
            "pair_samples" => cfg.pair_samples = scalar(raw, &ctx, "an integer")?,
            "bootstrap_reps" => cfg.bootstrap_reps = scalar(raw, &ctx, "an integer")?,
            _ => unreachable!("key list and match arms differ"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config { context, message } => Error::config(format!("{}: {context}", path.display()), message),
        other => other,
    })
}

fn join<T: ToString>(xs: &[T]) -> String {
    let parts: Vec<String> = xs.iter().map(T::to_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Every key with its value; `parse_config_str(&emit_config(c)) == c`.
pub fn emit_config(cfg: &SweepConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("N_list", join(&cfg.n_list));
    put("k_grid", join(&cfg.k_grid));
    put("trials", cfg.trials.to_string());
    put("trials_large", cfg.trials_large.to_string());
    put("seed", cfg.seed.to_string());
    put("offdiag_dist", cfg.entry.offdiag.name().to_string());
    put("diag_sigma0", format!("{:?}", cfg.entry.diag_sigma0));
    put("tail_delta", format!("{:?}", cfg.entry.tail_delta));
    put("statistics", join(&cfg.statistics));
    put("eig_tol", format!("{:?}", cfg.eig_tol));
    put("solver", cfg.solver.name().to_string());
    put("pair_samples", cfg.pair_samples.to_string());
    put("bootstrap_reps", cfg.bootstrap_reps.to_string());
    out
}
