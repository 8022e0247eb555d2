//! Acceptance criteria, one PASS/FAIL line each. Tolerances are pinned here.
//!
//! Runs as a plain binary (`harness = false`) so the lines always reach
//! stdout; the process fails if any criterion fails.

use std::time::Instant;

use wigner_chaos::chaos::{
    bound_checks, decomposition_exact, decomposition_permutation_form, random_binary_instance, CoordinateLaw, FnBox,
    ProductSpace,
};
use wigner_chaos::experiments::{
    collapse_from, edge_samples, key_inequality_from, lambda_drift_study, overlap_rows, resolvent_check,
    single_flip_study, sweep_trials, variance_scaling_from, EdgeSample, KSpec, SweepConfig, SweepOutcome,
};
use wigner_chaos::io::{render_plot, write_csv, PlotKind};
use wigner_chaos::parallel;

const EXACT_TOL: f64 = 1e-10;
const CORPUS: u64 = 120;
const SLOPE_RANGE: (f64, f64) = (-0.50, -0.15);
const VAR_TRIALS: usize = 800;
const DELOC_TRIALS: usize = 500;
const MONOTONE_SE: f64 = 2.0;
const ENDPOINT_SE: f64 = 4.0;
const COLLAPSE_SPREAD: f64 = 0.15;
const COLLAPSE_MULTIPLIERS: [f64; 3] = [0.05, 0.25, 1.0];
const DELOC_FRACTION: f64 = 0.99;
const FLIP_PAIRS: usize = 200;
const DRIFT_RATIO_SE: f64 = 4.0;
const RESOLVENT_INSTANCES: usize = 100;
const RECONSTRUCTION_FRACTION: f64 = 0.95;
const PATH_TOL: f64 = 1e-8;

struct Tally {
    failed: Vec<usize>,
}

impl Tally {
    fn report(&mut self, id: usize, name: &str, pass: bool, detail: String, started: Instant) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {id:>2} {name}: {detail} ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
        if !pass {
            self.failed.push(id);
        }
    }
}

fn base() -> SweepConfig {
    SweepConfig::default()
}

fn corpus_checks(t: &mut Tally) {
    let start = Instant::now();
    let mut identity = 0.0f64;
    let mut monotone_ok = true;
    let mut bounds_ok = true;
    let mut worst_bound = f64::NEG_INFINITY;
    for seed in 0..CORPUS {
        let (f, space) = random_binary_instance(seed);
        let terms = decomposition_exact(&f, &space).unwrap();
        identity = identity.max((terms.variance - 0.5 * terms.b.iter().sum::<f64>()).abs());
        let b = &terms.b;
        monotone_ok &= b.windows(2).all(|w| w[0] >= w[1] - EXACT_TOL) && *b.last().unwrap() >= -EXACT_TOL;
        let report = bound_checks(&terms, terms.variance);
        for c in &report.checks {
            worst_bound = worst_bound.max(c.lhs - c.rhs);
        }
        bounds_ok &= report.all_hold();
    }
    t.report(
        1,
        "variance identity on corpus",
        identity <= EXACT_TOL,
        format!("{CORPUS} functions, max |Var - sum B/2| = {identity:.2e}"),
        start,
    );
    t.report(
        2,
        "monotone chain and 1/k bounds",
        monotone_ok && bounds_ok,
        format!("{CORPUS} functions, largest lhs - rhs over all checks = {worst_bound:.2e}"),
        start,
    );

    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in (0..CORPUS).filter(|s| s % 4 == 2) {
        let (f, space) = random_binary_instance(seed);
        assert_eq!(space.n(), 3);
        let subset = decomposition_exact(&f, &space).unwrap().b;
        let perm = decomposition_permutation_form(&f, &space).unwrap();
        for (a, b) in perm.iter().zip(&subset) {
            worst = worst.max((a - b).abs());
        }
        count += 1;
    }
    t.report(
        3,
        "permutation form equals subset form (n = 3)",
        worst <= EXACT_TOL,
        format!("{count} functions, max diff = {worst:.2e}"),
        start,
    );

    let start = Instant::now();
    let rad = ProductSpace::iid(3, CoordinateLaw::rademacher()).unwrap();
    let first = decomposition_exact(&FnBox::new(3, |x: &[f64]| x[0]), &rad).unwrap();
    let d1 = first.b.iter().map(|b| (b - 2.0 / 3.0).abs()).fold(0.0, f64::max);
    let law = CoordinateLaw::finite(vec![-2.0, 0.5], vec![0.2, 0.8]).unwrap();
    let mut d2 = 0.0f64;
    for n in 1..=4 {
        let space = ProductSpace::iid(n, law.clone()).unwrap();
        let add = decomposition_exact(&FnBox::new(n, |x: &[f64]| x.iter().sum()), &space).unwrap();
        d2 = d2.max(add.b.iter().map(|b| (b - 2.0).abs()).fold(0.0, f64::max));
    }
    t.report(
        4,
        "analytic anchors",
        d1 <= EXACT_TOL && d2 <= EXACT_TOL,
        format!("f = X1: max |B_i - 2/3| = {d1:.2e}; additive: max |B_i - 2| = {d2:.2e}"),
        start,
    );
}

fn variance_and_delocalization(t: &mut Tally) {
    let start = Instant::now();
    let cfg = base();
    let ns = [128usize, 256, 512, 1024];
    let samples: Vec<(usize, Vec<EdgeSample>)> =
        ns.iter().map(|&n| (n, edge_samples(&cfg, n, VAR_TRIALS).unwrap())).collect();
    let lambdas: Vec<(usize, Vec<f64>)> =
        samples.iter().map(|(n, s)| (*n, s.iter().map(|e| e.lambda).collect())).collect();
    let v = variance_scaling_from(&lambdas, cfg.bootstrap_reps, cfg.seed).unwrap();
    let slope = v.slope.unwrap();
    let (lo, hi) = v.slope_ci.unwrap();
    let vars: Vec<String> = v.variances.iter().map(|x| format!("{x:.4}")).collect();
    t.report(
        5,
        "Var(lambda) log-log slope",
        (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope),
        format!(
            "slope = {slope:.3} (bootstrap 95% [{lo:.3}, {hi:.3}]), Var = [{}] at N = {ns:?}, {VAR_TRIALS} trials",
            vars.join(", ")
        ),
        start,
    );

    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, s) in samples.iter().filter(|(n, _)| *n == 256 || *n == 1024) {
        let bound = 4.0 * (*n as f64).ln();
        let first = &s[..DELOC_TRIALS];
        let within = first.iter().filter(|e| e.sup_norm_scaled <= bound).count();
        let frac = within as f64 / DELOC_TRIALS as f64;
        let worst = first.iter().map(|e| e.sup_norm_scaled).fold(0.0, f64::max);
        ok &= frac >= DELOC_FRACTION;
        parts.push(format!("N = {n}: {within}/{DELOC_TRIALS} within {bound:.1} (max {worst:.2})"));
    }
    t.report(9, "delocalization", ok, parts.join("; "), start);
}

fn sweeps(t: &mut Tally) {
    let cfg = base();
    let start = Instant::now();
    let outs: Vec<SweepOutcome> = [256usize, 512, 1024].iter().map(|&n| sweep_trials(&cfg, n).unwrap()).collect();
    println!("       shared sweeps at N = 256, 512, 1024 ({:.1}s)", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    let zero_ok = outs
        .iter()
        .all(|o| o.trials.iter().all(|tr| tr.cells[0].is_none_or(|c| c.overlap == 1.0)) && o.ks[0] == 0);
    ok &= zero_ok;
    parts.push(format!("k = 0 overlap identically 1: {zero_ok}"));
    let rows256 = overlap_rows(&cfg, &outs[0]);
    let full256 = rows256
        .iter()
        .find(|r| r.statistic == "overlap" && r.k == outs[0].ks[outs[0].ks.len() - 1])
        .unwrap();
    let floor = (2.0 / (std::f64::consts::PI * 256.0)).sqrt();
    let full_ok = (full256.mean - floor).abs() <= ENDPOINT_SE * full256.stderr;
    ok &= full_ok;
    parts.push(format!(
        "full resample N = 256: {:.4} +- {:.4} vs {floor:.4}",
        full256.mean, full256.stderr
    ));
    let rows512 = overlap_rows(&cfg, &outs[1]);
    let means: Vec<(usize, f64, f64)> = rows512
        .iter()
        .filter(|r| r.statistic == "overlap")
        .map(|r| (r.k, r.mean, r.stderr))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for w in means.windows(2) {
        let se = w[0].2.hypot(w[1].2);
        let excess = if se > 0.0 { (w[1].1 - w[0].1) / se } else { w[1].1 - w[0].1 };
        worst = worst.max(excess);
    }
    let mono_ok = worst <= MONOTONE_SE;
    ok &= mono_ok;
    parts.push(format!(
        "N = 512 largest increase between grid points = {worst:.2} SE over {} points",
        means.len()
    ));
    t.report(6, "overlap endpoints and monotonicity", ok, parts.join("; "), start);

    let start = Instant::now();
    let report = collapse_from(&outs, &COLLAPSE_MULTIPLIERS).unwrap();
    let spreads: Vec<String> = report
        .multipliers
        .iter()
        .zip(&report.spreads)
        .zip(&report.means)
        .map(|((m, s), means)| {
            let ms: Vec<String> = means.iter().map(|x| format!("{x:.3}")).collect();
            format!("m = {m}: spread {s:.3} [{}]", ms.join(", "))
        })
        .collect();
    t.report(
        7,
        "threshold collapse across N",
        report.spreads.iter().all(|&s| s <= COLLAPSE_SPREAD),
        spreads.join("; "),
        start,
    );

    let start = Instant::now();
    let cells = key_inequality_from(&outs[1]);
    let worst = cells
        .iter()
        .map(|c| (c.lhs - c.rhs) / c.combined_se().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let tightest = cells
        .iter()
        .map(|c| c.lhs / c.rhs)
        .fold(0.0, f64::max);
    t.report(
        8,
        "key inequality at N = 512",
        cells.iter().all(|c| c.holds),
        format!(
            "{} cells, largest LHS/RHS = {tightest:.3}, largest (LHS - RHS)/SE = {worst:.2}",
            cells.len()
        ),
        start,
    );
}

fn flips(t: &mut Tally) {
    let start = Instant::now();
    let cfg = SweepConfig {
        n_list: vec![256, 512, 1024],
        pair_samples: FLIP_PAIRS,
        ..base()
    };
    let reports = single_flip_study(&cfg).unwrap();
    let medians: Vec<f64> = reports.iter().map(|r| r.median()).collect();
    let dec = medians.windows(2).all(|w| w[1] < w[0]);
    let desc: Vec<String> = reports
        .iter()
        .map(|r| format!("N = {}: median {:.4}, q95 {:.4}, excluded {}", r.n, r.median(), r.q95(), r.excluded))
        .collect();
    t.report(10, "single-flip stability", dec, desc.join("; "), start);
}

fn drift(t: &mut Tally) {
    let start = Instant::now();
    let cfg = base();
    let d = lambda_drift_study(&cfg, 512, &[0, 1, 16, 64]).unwrap();
    let (term, resid) = d.first_order_medians().unwrap();
    let (ratio, se) = d.std_ratio(16, 64).unwrap();
    let zero_ok = d.drifts[0].iter().all(|&x| x == 0.0);
    let pass = zero_ok && resid < term && (ratio - 2.0).abs() <= DRIFT_RATIO_SE * se;
    t.report(
        11,
        "first-order drift and sqrt(k) scaling",
        pass,
        format!(
            "median |residual| {resid:.3e} vs median |term| {term:.3e}; std ratio k = 64/16 = {ratio:.3} +- {se:.3}"
        ),
        start,
    );
}

fn resolvent(t: &mut Tally) {
    let start = Instant::now();
    let cfg = SweepConfig {
        n_list: vec![512],
        trials: RESOLVENT_INSTANCES,
        trials_large: RESOLVENT_INSTANCES,
        ..base()
    };
    let r = &resolvent_check(&cfg).unwrap()[0];
    let usable = r.instances - r.excluded;
    let frac = r.reconstruction_fraction();
    let pass = usable == RESOLVENT_INSTANCES
        && r.localization_holds == r.localization_checked
        && frac >= RECONSTRUCTION_FRACTION
        && r.max_path_rel_diff <= PATH_TOL;
    t.report(
        12,
        "resolvent identities at N = 512",
        pass,
        format!(
            "{usable}/{} non-degenerate; localization {}/{}; reconstruction within 0.05 N|v|^2 in {:.1}%; path diff {:.2e}",
            r.instances,
            r.localization_holds,
            r.localization_checked,
            100.0 * frac,
            r.max_path_rel_diff
        ),
        start,
    );
}

fn determinism(t: &mut Tally) {
    let start = Instant::now();
    let cfg = SweepConfig {
        n_list: vec![40, 64],
        k_grid: vec![KSpec::Multiplier(0.0), KSpec::Multiplier(0.1), KSpec::Multiplier(1.0), KSpec::Full],
        trials: 24,
        trials_large: 24,
        ..base()
    };
    let render = || {
        let rows: Vec<_> = cfg
            .n_list
            .iter()
            .flat_map(|&n| overlap_rows(&cfg, &sweep_trials(&cfg, n).unwrap()))
            .collect();
        (write_csv(&rows), render_plot(&rows, PlotKind::Overlap).unwrap().into_bytes())
    };
    let reference = render();
    let mut same = true;
    for threads in [1, 2, 4] {
        let again = parallel::with_threads(Some(threads), render).unwrap();
        same &= again == reference;
    }
    same &= render() == reference;
    t.report(
        13,
        "byte-identical CSV and SVG across reruns and thread counts",
        same,
        format!("{} CSV bytes, {} SVG bytes, threads 1/2/4 and default", reference.0.len(), reference.1.len()),
        start,
    );
}

fn main() {
    // `cargo test` passes harness flags; a filter that is not ours skips the run.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let total = Instant::now();
    let mut t = Tally { failed: Vec::new() };
    corpus_checks(&mut t);
    variance_and_delocalization(&mut t);
    sweeps(&mut t);
    flips(&mut t);
    drift(&mut t);
    resolvent(&mut t);
    determinism(&mut t);
    println!(
        "acceptance: {} of 13 passed in {:.1}s",
        13 - t.failed.len(),
        total.elapsed().as_secs_f64()
    );
    if !t.failed.is_empty() {
        println!("failed: {:?}", t.failed);
        std::process::exit(1);
    }
}
