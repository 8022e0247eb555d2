use super::*;
use crate::ensemble::sample_wigner;

fn rademacher(n: usize) -> ProductSpace {
    ProductSpace::iid(n, CoordinateLaw::rademacher()).unwrap()
}

fn random_instance(seed: u64) -> (BinaryTable, ProductSpace) {
    random_binary_instance(seed)
}

fn finite_parts(space: &ProductSpace) -> Vec<(Vec<f64>, Vec<f64>)> {
    space
        .laws()
        .iter()
        .map(|l| match l {
            CoordinateLaw::Finite { values, probs } => (values.clone(), probs.clone()),
            CoordinateLaw::Sampler(_) => unreachable!(),
        })
        .collect()
}

/// Every weighted assignment of `copies` independent copies, as explicit
/// vectors.
fn all_copies(space: &ProductSpace, copies: usize) -> Vec<(f64, Vec<Vec<f64>>)> {
    let parts = finite_parts(space);
    let n = parts.len();
    let mut out = vec![(1.0, vec![Vec::new(); copies])];
    for (values, probs) in &parts {
        let mut next = Vec::new();
        for (w, xs) in &out {
            let mut stack = vec![(*w, xs.clone())];
            for copy in 0..copies {
                let mut grown = Vec::new();
                for (w2, xs2) in &stack {
                    for (v, p) in values.iter().zip(probs) {
                        let mut xs3 = xs2.clone();
                        xs3[copy].push(*v);
                        grown.push((w2 * p, xs3));
                    }
                }
                stack = grown;
            }
            next.extend(stack);
        }
        out = next;
    }
    assert!(out.iter().all(|(_, xs)| xs.iter().all(|x| x.len() == n)));
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// `B_i` and `B'_i` straight from their definitions: average over every
/// order, every `j`, and every assignment of `(X, X', X'')`.
fn naive_terms(f: &dyn BlackBox, space: &ProductSpace) -> (Vec<f64>, Vec<f64>) {
    let n = space.n();
    let perms = permutations(n);
    let ev = |x: &[f64]| f.eval(x).unwrap();
    let mut b = vec![0.0; n];
    let mut bp = vec![0.0; n];
    for (w, xs) in all_copies(space, 3) {
        let (x, x1, x2) = (&xs[0], &xs[1], &xs[2]);
        for sigma in &perms {
            for i in 1..=n {
                let mut xa = x.clone();
                for &c in &sigma[..i - 1] {
                    xa[c] = x1[c];
                }
                let s = sigma[i - 1];
                let mut xs1 = x.clone();
                xs1[s] = x1[s];
                let mut xb = xa.clone();
                xb[s] = x1[s];
                b[i - 1] += w * (ev(x) - ev(&xs1)) * (ev(&xa) - ev(&xb)) / perms.len() as f64;
                for j in 0..n {
                    let mut xj = x.clone();
                    xj[j] = x2[j];
                    let mut xaj = xa.clone();
                    xaj[j] = x2[j];
                    bp[i - 1] += w * (ev(x) - ev(&xj)) * (ev(&xa) - ev(&xaj)) / (perms.len() * n) as f64;
                }
            }
        }
    }
    (b, bp)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn variance_examples() {
    let space = rademacher(3);
    let constant = FnBox::new(3, |_: &[f64]| 4.5);
    assert!(close(variance_exact(&constant, &space).unwrap(), 0.0, 1e-15));
    let first = FnBox::new(3, |x: &[f64]| x[0]);
    assert!(close(variance_exact(&first, &space).unwrap(), 1.0, 1e-15));
    let majority = FnBox::new(3, |x: &[f64]| x.iter().sum::<f64>().signum());
    assert!(close(variance_exact(&majority, &space).unwrap(), 1.0, 1e-15));
}

#[test]
fn first_coordinate_terms() {
    let f = FnBox::new(3, |x: &[f64]| x[0]);
    let t = decomposition_exact(&f, &rademacher(3)).unwrap();
    for b in &t.b {
        assert!(close(*b, 2.0 / 3.0, 1e-12), "{:?}", t.b);
    }
    assert!(close(0.5 * t.b.iter().sum::<f64>(), 1.0, 1e-12));
    check_bounds(&t, t.variance).unwrap();
}

#[test]
fn additive_terms() {
    // Asymmetric unit-variance law: -2 w.p. 0.2, 1/2 w.p. 0.8.
    let law = CoordinateLaw::finite(vec![-2.0, 0.5], vec![0.2, 0.8]).unwrap();
    for n in 1..=4 {
        let space = ProductSpace::iid(n, law.clone()).unwrap();
        let f = FnBox::new(n, |x: &[f64]| x.iter().sum());
        let t = decomposition_exact(&f, &space).unwrap();
        assert!(t.b.iter().all(|b| close(*b, 2.0, 1e-12)), "{:?}", t.b);
        assert!(close(t.variance, n as f64, 1e-12));
        // Tight at k = n.
        let r = check_bounds(&t, t.variance).unwrap();
        let last = r
            .checks
            .iter()
            .find(|c| c.kind == BoundKind::Chatterjee && c.i == n)
            .unwrap();
        assert!(close(last.lhs, last.rhs, 1e-12));
    }
}

#[test]
fn product_of_two() {
    let f = FnBox::new(2, |x: &[f64]| x[0] * x[1]);
    let t = decomposition_exact(&f, &rademacher(2)).unwrap();
    assert!(close(t.b[0], 2.0, 1e-12) && close(t.b[1], 0.0, 1e-12), "{:?}", t.b);
    assert!(close(0.5 * (t.b[0] + t.b[1]), 1.0, 1e-12));
}

#[test]
fn subset_form_matches_definition() {
    for seed in 0..24 {
        let (f, space) = random_instance(seed);
        let t = decomposition_exact(&f, &space).unwrap();
        let (b, bp) = naive_terms(&f, &space);
        let bp_fast = t.b_prime.as_ref().unwrap();
        for i in 0..space.n() {
            assert!(close(t.b[i], b[i], 1e-10), "seed {seed} B_{}: {} vs {}", i + 1, t.b[i], b[i]);
            assert!(close(bp_fast[i], bp[i], 1e-10), "seed {seed} B'_{}", i + 1);
        }
    }
}

#[test]
fn permutation_form_matches_subset_form() {
    for seed in (2..60).step_by(4) {
        let (f, space) = random_instance(seed);
        assert_eq!(space.n(), 3);
        let t = decomposition_exact(&f, &space).unwrap();
        let p = decomposition_permutation_form(&f, &space).unwrap();
        for i in 0..3 {
            assert!(close(t.b[i], p[i], 1e-10), "seed {seed}");
        }
    }
}

#[test]
fn corpus_identity_and_bounds() {
    for seed in 0..120 {
        let (f, space) = random_instance(seed);
        let t = decomposition_exact(&f, &space).unwrap();
        let var = variance_exact(&f, &space).unwrap();
        assert!(close(var, t.variance, 1e-12));
        let report = check_bounds(&t, var).unwrap();
        assert!(report.all_hold());
        assert!(report.checks.iter().any(|c| c.kind == BoundKind::Identity));
    }
}

#[test]
fn fixed_order_chain() {
    // For each order, i and j outside sigma[..i]: A_i >= A_i with j added >= 0.
    for seed in [3u64, 7, 11, 15, 19] {
        let (f, space) = random_instance(seed);
        let n = space.n();
        for sigma in permutations(n) {
            for i in 1..n {
                let a = fixed_order_term(&f, &space, &sigma, i, None).unwrap();
                for &j in &sigma[i..] {
                    let aj = fixed_order_term(&f, &space, &sigma, i, Some(j)).unwrap();
                    assert!(a >= aj - 1e-10, "seed {seed} sigma {sigma:?} i {i} j {j}: {a} < {aj}");
                    assert!(aj >= -1e-10);
                }
            }
        }
    }
}

#[test]
fn fixed_order_rejects_bad_input() {
    let (f, space) = random_instance(3);
    assert!(fixed_order_term(&f, &space, &[0, 0, 1, 2], 1, None).is_err());
    assert!(fixed_order_term(&f, &space, &[0, 1, 2, 3], 2, Some(1)).is_err());
    assert!(fixed_order_term(&f, &space, &[0, 1, 2, 3], 5, None).is_err());
}

#[test]
fn exact_mode_errors() {
    let gauss = ProductSpace::iid(2, CoordinateLaw::gaussian()).unwrap();
    let f = FnBox::new(2, |x: &[f64]| x[0]);
    assert!(matches!(variance_exact(&f, &gauss), Err(Error::Mode(_))));
    assert!(matches!(decomposition_exact(&f, &gauss), Err(Error::Mode(_))));

    let big = FnBox::new(7, |x: &[f64]| x[0]);
    assert!(matches!(decomposition_exact(&big, &rademacher(7)), Err(Error::Size { .. })));
    let huge = FnBox::new(24, |x: &[f64]| x[0]);
    assert!(matches!(variance_exact(&huge, &rademacher(24)), Err(Error::Size { .. })));

    assert!(matches!(decomposition_exact(&f, &rademacher(3)), Err(Error::Domain(_))));
    assert!(CoordinateLaw::finite(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
    assert!(ProductSpace::new(Vec::new()).is_err());
}

#[test]
fn exact_violation_is_invariant_error() {
    let f = FnBox::new(3, |x: &[f64]| x[0]);
    let mut t = decomposition_exact(&f, &rademacher(3)).unwrap();
    t.b[2] += 0.1;
    assert!(matches!(check_bounds(&t, t.variance), Err(Error::Invariant(_))));
}

fn within(est: f64, se: f64, target: f64, z: f64) -> bool {
    (est - target).abs() <= z * se
}

#[test]
fn mc_additive_gaussian() {
    let n = 10;
    let space = ProductSpace::iid(n, CoordinateLaw::gaussian()).unwrap();
    let f = FnBox::new(n, |x: &[f64]| x.iter().sum());
    let i_list: Vec<usize> = (1..=n).collect();
    let seed = SeedContext::new(11, "chaos-test", 0, Purpose::Coordinates);
    let t = decomposition_mc(&f, &space, &i_list, 100_000, &seed).unwrap();
    let se = t.b_se.as_ref().unwrap();
    for (l, b) in t.b.iter().enumerate() {
        assert!(within(*b, se[l], 2.0, 4.0), "B_{} = {b} +- {}", l + 1, se[l]);
    }
    let report = check_bounds(&t, t.variance).unwrap();
    assert!(report.all_hold(), "{:?}", report.failures().collect::<Vec<_>>());
}

#[test]
fn mc_first_coordinate() {
    let space = ProductSpace::iid(3, CoordinateLaw::gaussian()).unwrap();
    let f = FnBox::new(3, |x: &[f64]| x[0]);
    let seed = SeedContext::new(12, "chaos-test", 0, Purpose::Coordinates);
    let t = decomposition_mc(&f, &space, &[1, 2, 3], 40_000, &seed).unwrap();
    let se = t.b_se.unwrap();
    for l in 0..3 {
        assert!(within(t.b[l], se[l], 2.0 / 3.0, 4.0), "{:?}", t.b);
    }
}

#[test]
fn mc_matches_exact_for_max() {
    let space = rademacher(4);
    let f = FnBox::new(4, |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let exact = decomposition_exact(&f, &space).unwrap();
    let seed = SeedContext::new(13, "chaos-test", 0, Purpose::Coordinates);
    let mc = decomposition_mc(&f, &space, &[1, 2, 3, 4], 60_000, &seed).unwrap();
    let (se, sep) = (mc.b_se.as_ref().unwrap(), mc.b_prime_se.as_ref().unwrap());
    let (ep, mp) = (exact.b_prime.as_ref().unwrap(), mc.b_prime.as_ref().unwrap());
    for l in 0..4 {
        assert!(within(mc.b[l], se[l], exact.b[l], 4.0), "B_{}: {} vs {}", l + 1, mc.b[l], exact.b[l]);
        assert!(within(mp[l], sep[l], ep[l], 4.0), "B'_{}: {} vs {}", l + 1, mp[l], ep[l]);
    }
    assert!(within(mc.variance, mc.variance_se.unwrap(), exact.variance, 4.0));
}

#[test]
fn mc_is_deterministic_and_validates() {
    let space = rademacher(3);
    let f = FnBox::new(3, |x: &[f64]| x[0] * x[1] + x[2]);
    let seed = SeedContext::new(14, "chaos-test", 0, Purpose::Coordinates);
    let a = decomposition_mc(&f, &space, &[1, 3], 500, &seed).unwrap();
    let b = decomposition_mc(&f, &space, &[1, 3], 500, &seed).unwrap();
    assert_eq!(a, b);
    assert!(decomposition_mc(&f, &space, &[0], 10, &seed).is_err());
    assert!(decomposition_mc(&f, &space, &[4], 10, &seed).is_err());
    assert!(decomposition_mc(&f, &space, &[1], 0, &seed).is_err());
}

#[test]
fn adapter_scalar_case() {
    let spec = EntrySpec::new(crate::ensemble::EntryLaw::Gaussian, 1.3).unwrap();
    let (f, space) = eigenvalue_adapter(1, &spec).unwrap();
    let seed = SeedContext::new(15, "chaos-test", 0, Purpose::Coordinates);
    let t = decomposition_mc(&f, &space, &[1], 20_000, &seed).unwrap();
    let target = 2.0 * 1.3 * 1.3;
    let se = t.b_prime_se.as_ref().unwrap()[0];
    assert!(within(t.b_prime.as_ref().unwrap()[0], se, target, 4.0));
}

#[test]
fn adapter_matches_definitional_b_prime_one() {
    // B'_1 = E[(lambda - mu)^2], mu the top eigenvalue after redrawing one
    // uniformly chosen entry.
    let spec = EntrySpec::default();
    let (f, space) = eigenvalue_adapter(2, &spec).unwrap();
    let trials = 20_000;
    let seed = SeedContext::new(16, "chaos-test", 0, Purpose::Coordinates);
    let t = decomposition_mc(&f, &space, &[1], trials, &seed).unwrap();

    let oracle: Vec<f64> = (0..trials as u64)
        .map(|tr| {
            let ctx = SeedContext::new(17, "chaos-oracle", tr, Purpose::Matrix);
            let x = sample_wigner(2, &spec, &ctx).unwrap();
            let mut rng = ctx.with_purpose(Purpose::SingleFlip).rng();
            let (i, j) = pair_from_packed(2, rng.random_range(0..3));
            let y = crate::ensemble::with_entry(&x, i, j, spec.sample_entry(i, j, &mut rng)).unwrap();
            let lam = spectral::dense_eigenvalues(&x)[0];
            let mu = spectral::dense_eigenvalues(&y)[0];
            (lam - mu).powi(2)
        })
        .collect();
    let o = stats::summarize(&oracle);
    let est = t.b_prime.as_ref().unwrap()[0];
    let se = t.b_prime_se.as_ref().unwrap()[0];
    let combined = (se * se + o.stderr * o.stderr).sqrt();
    assert!(within(est, combined, o.mean, 4.0), "{est} vs {} (se {combined})", o.mean);
}

#[test]
fn adapter_prime_bound_n16() {
    let (f, space) = eigenvalue_adapter(16, &EntrySpec::default()).unwrap();
    let seed = SeedContext::new(18, "chaos-test", 0, Purpose::Coordinates);
    let t = decomposition_mc(&f, &space, &[1, 8, 64], 2_000, &seed).unwrap();
    let report = check_bounds(&t, t.variance).unwrap();
    for c in report.checks.iter().filter(|c| c.kind == BoundKind::Prime) {
        assert!(c.holds, "{c:?}");
    }
}
