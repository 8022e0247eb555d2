//! Result CSVs and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ResultRow;

pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "N",
    "k",
    "multiplier",
    "statistic",
    "mean",
    "stderr",
    "trials",
    "excluded",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

/// The table as CSV bytes, header first.
pub fn write_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.n.to_string(),
            r.k.to_string(),
            float(r.multiplier),
            r.statistic.clone(),
            float(r.mean),
            float(r.stderr),
            r.trials.to_string(),
            r.excluded.to_string(),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::config("csv header", format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (idx, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = idx + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let bad = |c: usize| Error::config(format!("csv line {line}, column {}", CSV_HEADER[c]), format!("cannot parse `{}`", field(c)));
        let int = |c: usize| field(c).parse::<usize>().map_err(|_| bad(c));
        let num = |c: usize| field(c).parse::<f64>().map_err(|_| bad(c));
        rows.push(ResultRow {
            experiment: field(0).to_string(),
            n: int(1)?,
            k: int(2)?,
            multiplier: num(3)?,
            statistic: field(4).to_string(),
            mean: num(5)?,
            stderr: num(6)?,
            trials: int(7)?,
            excluded: int(8)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellExclusion {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// The full configuration in config-file syntax.
    pub config: String,
    pub threads: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub excluded: Vec<CellExclusion>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: String, threads: usize, started_unix: u64) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            threads,
            started_unix,
            finished_unix: started_unix,
            excluded: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// One entry per `(experiment, N, k)` with a nonzero exclusion count.
    pub fn record_exclusions(&mut self, rows: &[ResultRow]) {
        for r in rows.iter().filter(|r| r.excluded > 0) {
            let cell = (r.experiment.as_str(), r.n, r.k);
            if !self.excluded.iter().any(|c| (c.experiment.as_str(), c.n, c.k) == cell) {
                self.excluded.push(CellExclusion {
                    experiment: r.experiment.clone(),
                    n: r.n,
                    k: r.k,
                    excluded: r.excluded,
                });
            }
        }
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Writes `<stem>.csv` and then `manifest.json` into `out_dir`, each
/// atomically. Returns the CSV path.
pub fn write_results(rows: &[ResultRow], manifest: &mut RunManifest, out_dir: &Path, stem: &str) -> Result<PathBuf> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write_atomic(&csv_path, &write_csv(rows))?;
    manifest.record_exclusions(rows);
    let name = csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if !manifest.outputs.contains(&name) {
        manifest.outputs.push(name);
    }
    manifest.finished_unix = unix_now();
    let json = serde_json::to_vec_pretty(manifest).map_err(|e| Error::Internal(format!("manifest: {e}")))?;
    write_atomic(&out_dir.join("manifest.json"), &json)?;
    Ok(csv_path)
}
