use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wigner_chaos::experiments::{self, KSpec, ResultRow, SweepConfig};
use wigner_chaos::io::{self, PlotKind, RunManifest};
use wigner_chaos::{parallel, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "wigner-chaos", version, about = "Resampling experiments on the top eigenvector of Wigner matrices")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `trials` (and caps `trials_large`).
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Top eigenvalue, scaled gap and sup norm of sampled matrices.
    Sample,
    /// Mean overlap between top eigenvectors of X and X^[k].
    OverlapSweep,
    /// Sign-aligned l2 and scaled sup distances between the eigenvectors.
    AlignmentSweep,
    /// Variance of the top eigenvalue per N and its log-log slope.
    VarLambda,
    /// Drift of the top eigenvalue under k resampled entries.
    Drift {
        /// Resample counts.
        #[arg(long, value_delimiter = ',', default_value = "0,1,4,16,64")]
        ks: Vec<usize>,
    },
    /// Eigenvector change after resampling one entry.
    SingleFlip,
    /// Exact and Monte Carlo checks of the resampling variance decomposition.
    ChaosCheck {
        /// Matrix dimension for the eigenvalue decomposition.
        #[arg(long, default_value_t = 6)]
        adapter_dim: usize,
    },
    /// Resolvent localization, reconstruction and path agreement.
    ResolventCheck,
    /// Mean overlap at matched k / N^(5/3) across dimensions.
    Collapse {
        /// Multipliers (default: the multipliers of `k_grid`).
        #[arg(long, value_delimiter = ',')]
        multipliers: Vec<f64>,
    },
    /// Both sides of the overlap/variance inequality per (N, k).
    KeyInequality,
    /// Renders a result CSV as SVG.
    Plot {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::OverlapSweep => "overlap-sweep",
            Command::AlignmentSweep => "alignment-sweep",
            Command::VarLambda => "var-lambda",
            Command::Drift { .. } => "drift",
            Command::SingleFlip => "single-flip",
            Command::ChaosCheck { .. } => "chaos-check",
            Command::ResolventCheck => "resolvent-check",
            Command::Collapse { .. } => "collapse",
            Command::KeyInequality => "key-inequality",
            Command::Plot { .. } => "plot",
        }
    }
}

fn load_config(cli: &Cli) -> Result<SweepConfig> {
    let mut cfg = match &cli.config {
        Some(p) => io::parse_config(p)?,
        None => SweepConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
        cfg.trials_large = cfg.trials_large.min(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Rows for the command, plus an error to report after the rows are saved.
fn run(cmd: &Command, cfg: &SweepConfig) -> Result<(Vec<ResultRow>, Option<Error>)> {
    let mut deferred = None;
    let rows = match cmd {
        Command::Sample => experiments::sample_study(cfg)?,
        Command::OverlapSweep => experiments::overlap_sweep(cfg)?,
        Command::AlignmentSweep => experiments::alignment_sweep(cfg)?,
        Command::VarLambda => experiments::lambda_variance_scaling(cfg)?.rows(),
        Command::Drift { ks } => {
            let mut rows = Vec::new();
            for &n in &cfg.n_list {
                rows.extend(experiments::lambda_drift_study(cfg, n, ks)?.rows());
            }
            rows
        }
        Command::SingleFlip => experiments::single_flip_study(cfg)?.iter().flat_map(|r| r.rows()).collect(),
        Command::ChaosCheck { adapter_dim } => {
            let report = experiments::chaos_check(cfg, *adapter_dim)?;
            if report.bound_failures > 0 || report.max_identity_residual > 1e-10 {
                deferred = Some(Error::Invariant(format!(
                    "{} bound failures, identity residual {:.3e}",
                    report.bound_failures, report.max_identity_residual
                )));
            }
            report.rows()
        }
        Command::ResolventCheck => experiments::resolvent_check(cfg)?.iter().flat_map(|r| r.rows()).collect(),
        Command::Collapse { multipliers } => {
            let ms: Vec<f64> = if multipliers.is_empty() {
                cfg.k_grid
                    .iter()
                    .filter_map(|k| match k {
                        KSpec::Multiplier(m) => Some(*m),
                        _ => None,
                    })
                    .collect()
            } else {
                multipliers.clone()
            };
            experiments::collapse_report(cfg, &ms)?.1
        }
        Command::KeyInequality => {
            let (cells, rows) = experiments::key_inequality_probe(cfg)?;
            if let Some(c) = cells.iter().find(|c| !c.holds) {
                deferred = Some(Error::Invariant(format!(
                    "key inequality fails at N = {}, k = {}: {:.6e} > {:.6e}",
                    c.n, c.k, c.lhs, c.rhs
                )));
            }
            rows
        }
        Command::Plot { .. } => unreachable!("handled before any experiment runs"),
    };
    Ok((rows, deferred))
}

fn plot_for(cmd: &Command) -> Option<PlotKind> {
    match cmd {
        Command::OverlapSweep => Some(PlotKind::Overlap),
        Command::VarLambda => Some(PlotKind::Variance),
        Command::Collapse { .. } => Some(PlotKind::Collapse),
        _ => None,
    }
}

fn plot_name(kind: PlotKind) -> &'static str {
    match kind {
        PlotKind::Overlap => "overlap.svg",
        PlotKind::Variance => "variance.svg",
        PlotKind::Collapse => "collapse.svg",
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Command::Plot { kind, input, output } = &cli.command {
        let kind: PlotKind = kind.parse()?;
        let rows = io::read_csv(input)?;
        io::emit_plot(&rows, kind, output)?;
        eprintln!("wrote {}", output.display());
        return Ok(());
    }
    let cfg = load_config(cli)?;
    let started = io::unix_now();
    let (rows, deferred) = parallel::with_threads(cli.threads, || run(&cli.command, &cfg))??;
    let name = cli.command.name();
    let threads = parallel::with_threads(cli.threads, parallel::current_threads)?;
    let mut manifest = RunManifest::new(name, cfg.seed, io::emit_config(&cfg), threads, started);
    let out: &Path = &cli.out_dir;
    if let Some(kind) = plot_for(&cli.command) {
        let svg = out.join(plot_name(kind));
        io::emit_plot(&rows, kind, &svg)?;
        manifest.outputs.push(plot_name(kind).to_string());
    }
    let csv = io::write_results(&rows, &mut manifest, out, name)?;
    eprintln!("wrote {} ({} rows)", csv.display(), rows.len());
    match deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
