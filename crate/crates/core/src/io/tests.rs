use super::*;
use crate::error::Error;
use crate::experiments::{KSpec, ResultRow, SweepConfig};
use proptest::prelude::*;

fn row(experiment: &str, n: usize, k: usize, stat: &str, mean: f64, se: f64) -> ResultRow {
    ResultRow::new(experiment, n, k, stat, mean, se, 40).with_excluded(1)
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = parse_config_str("N_list = [256]\ntrials = 10\nseed = 1\n").unwrap();
    let expect = SweepConfig {
        n_list: vec![256],
        trials: 10,
        seed: 1,
        ..SweepConfig::default()
    };
    assert_eq!(cfg, expect);
    let text = emit_config(&cfg);
    for key in CONFIG_KEYS {
        assert!(text.contains(&format!("{key} = ")), "{key}");
    }
}

#[test]
fn defaults_round_trip() {
    let d = SweepConfig::default();
    assert_eq!(parse_config_str(&emit_config(&d)).unwrap(), d);
    let mut odd = d.clone();
    odd.entry.diag_sigma0 = 0.1 + 0.2;
    odd.eig_tol = 3.3e-11;
    odd.k_grid = vec![KSpec::Absolute(3), KSpec::Multiplier(1.0 / 3.0), KSpec::Full];
    odd.statistics = vec!["overlap".into()];
    odd.solver = crate::spectral::Solver::Lanczos;
    odd.entry.offdiag = crate::ensemble::EntryLaw::Rademacher;
    assert_eq!(parse_config_str(&emit_config(&odd)).unwrap(), odd);
}

#[test]
fn config_errors_carry_context() {
    let err = |text: &str| match parse_config_str(text) {
        Err(Error::Config { context, message }) => format!("{context}: {message}"),
        other => panic!("expected config error, got {other:?}"),
    };
    let e = err("N_list = [4]\nk_grid = [0, 11]\n");
    assert!(e.contains("N = 4") && e.contains("k = 11"), "{e}");
    let e = err("trials = 3\nbogus = 1\n");
    assert!(e.contains("line 2") && e.contains("bogus") && e.contains("unknown"), "{e}");
    let e = err("trials = ten\n");
    assert!(e.contains("line 1") && e.contains("trials"), "{e}");
    let e = err("N_list = 256\n");
    assert!(e.contains("list"), "{e}");
    let e = err("seed = 1\nseed = 2\n");
    assert!(e.contains("twice"), "{e}");
    let e = err("just words\n");
    assert!(e.contains("line 1"), "{e}");
    let e = err("solver = magic\n");
    assert!(e.contains("line 1"), "{e}");
    let e = err("k_grid = [2x]\n");
    assert!(e.contains("line 1, key `k_grid`"), "{e}");
}

#[test]
fn comments_and_blank_lines() {
    let cfg = parse_config_str("# a run\n\nN_list = [8, 16] # two sizes\ntrials=5\n").unwrap();
    assert_eq!(cfg.n_list, vec![8, 16]);
    assert_eq!(cfg.trials, 5);
}

#[test]
fn config_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    assert!(matches!(parse_config(&missing), Err(Error::Io { .. })));
    let p = dir.path().join("run.cfg");
    std::fs::write(&p, "N_list = [8]\nwat = 2\n").unwrap();
    let e = parse_config(&p).unwrap_err().to_string();
    assert!(e.contains("run.cfg") && e.contains("line 2"), "{e}");
}

#[test]
fn csv_shapes() {
    let empty = String::from_utf8(write_csv(&[])).unwrap();
    assert_eq!(empty, "experiment,N,k,multiplier,statistic,mean,stderr,trials,excluded\n");
    let rows = vec![
        row("overlap-sweep", 256, 0, "overlap", 1.0, 0.0),
        row("overlap-sweep", 256, 100, "overlap", 0.1 + 0.2, 1.0 / 3.0),
        row("var-lambda", 0, 0, "slope", -0.33, 0.02),
    ];
    let text = String::from_utf8(write_csv(&rows)).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("3.0000000000000004e-1"), "{text}");
    assert_eq!(parse_csv(&text).unwrap(), rows);
}

#[test]
fn csv_rejects_bad_input() {
    assert!(parse_csv("a,b\n").is_err());
    let bad = "experiment,N,k,multiplier,statistic,mean,stderr,trials,excluded\nx,notanumber,0,0,s,1,0,1,0\n";
    let e = parse_csv(bad).unwrap_err().to_string();
    assert!(e.contains("line 2") && e.contains("N"), "{e}");
}

#[test]
fn results_and_manifest_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![row("overlap-sweep", 8, 3, "overlap", 0.5, 0.01)];
    let cfg = SweepConfig::default();
    let mut m = RunManifest::new("overlap-sweep", cfg.seed, emit_config(&cfg), 1, 0);
    let path = write_results(&rows, &mut m, dir.path(), "overlap-sweep").unwrap();
    assert_eq!(read_csv(&path).unwrap(), rows);
    let json = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let back: RunManifest = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.outputs, vec!["overlap-sweep.csv".to_string()]);
    assert_eq!(back.excluded.len(), 1);
    assert_eq!(parse_config_str(&back.config).unwrap(), cfg);
    // No temporary files are left behind.
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}

#[test]
fn unwritable_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let mut m = RunManifest::new("x", 1, String::new(), 1, 0);
    assert!(matches!(write_results(&[], &mut m, &file.join("sub"), "r"), Err(Error::Io { .. })));
}

#[test]
fn plot_kinds() {
    assert!(matches!("pie".parse::<PlotKind>(), Err(Error::Config { .. })));
    let one = vec![row("overlap-sweep", 64, 10, "overlap", 0.7, 0.01)];
    let svg = render_plot(&one, PlotKind::Overlap).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("class=\"marker\"").count(), 1);

    let var = vec![
        row("var-lambda", 128, 0, "var_lambda", 0.2, 0.01),
        row("var-lambda", 256, 0, "var_lambda", 0.16, 0.01),
        row("var-lambda", 0, 0, "slope", -0.3, 0.01),
    ];
    let svg = render_plot(&var, PlotKind::Variance).unwrap();
    assert!(svg.contains("class=\"guide\"") && svg.contains("slope -1/3"));
    assert_eq!(svg.matches("class=\"marker\"").count(), 2);

    let empty = render_plot(&[], PlotKind::Collapse).unwrap();
    assert!(empty.contains("no data"));
}

#[test]
fn plot_is_deterministic() {
    let rows: Vec<ResultRow> = (1..6)
        .flat_map(|i| [64usize, 128].map(|n| row("overlap-sweep", n, i * 40, "overlap", 1.0 / i as f64, 0.02)))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    emit_plot(&rows, PlotKind::Overlap, &a).unwrap();
    emit_plot(&rows, PlotKind::Overlap, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let mut rev = rows.clone();
    rev.reverse();
    assert_eq!(render_plot(&rev, PlotKind::Overlap).unwrap(), render_plot(&rows, PlotKind::Overlap).unwrap());
}

proptest! {
    #[test]
    fn csv_round_trips_exactly(
        vals in proptest::collection::vec((any::<f64>().prop_filter("finite", |x| x.is_finite()), 0usize..5000, 0usize..100_000), 0..20)
    ) {
        let rows: Vec<ResultRow> = vals
            .iter()
            .map(|&(x, n, k)| ResultRow::new("e", n, k, "s.median", x, x.abs() / 3.0, n + 2).with_excluded(k % 3))
            .collect();
        let text = String::from_utf8(write_csv(&rows)).unwrap();
        prop_assert_eq!(parse_csv(&text).unwrap(), rows);
    }

    #[test]
    fn config_round_trips(
        ns in proptest::collection::vec(1usize..2000, 1..5),
        trials in 2usize..5000,
        seed in any::<u64>(),
        sigma in 0.0f64..10.0,
        tol in 1e-14f64..1e-3,
    ) {
        let cfg = SweepConfig {
            n_list: ns,
            k_grid: vec![KSpec::Multiplier(0.0), KSpec::Absolute(1), KSpec::Full],
            trials,
            trials_large: trials,
            seed,
            eig_tol: tol,
            entry: crate::ensemble::EntrySpec { diag_sigma0: sigma, ..Default::default() },
            ..SweepConfig::default()
        };
        prop_assert_eq!(parse_config_str(&emit_config(&cfg)).unwrap(), cfg);
    }
}
