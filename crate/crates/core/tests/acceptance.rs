//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Oracles are coded here independently of the library
//! paths they check.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pmfix::control::{integral_compose, ControlPair};
use pmfix::engine::{iterate, verify_contraction_grid, IterateOptions, IterationStatus, MapQuartet};
use pmfix::hausdorff::{check_hausdorff_props, h_p, random_subsets, FiniteSet};
use pmfix::ifs::{
    check_family, compute_mt, hutchinson, iterate_attractor, AffineMap, AttractorOptions, AttractorStatus, Family,
    FamilyDistance, IfsMap, IfsSystem,
};
use pmfix::integral::{
    check_conditions, solve, standard_probes, GridFunction, IntegralProblem, SolveOptions, SolveStatus,
};
use pmfix::metric::{check_axioms, ps, BuiltinMetric, DomainDescriptor, PartialMetric};
use pmfix::scenario::{self, DomainSpec};
use pmfix::Point;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn axiom_suite() -> Verdict {
    let metrics = [
        BuiltinMetric::Max,
        BuiltinMetric::Interval,
        BuiltinMetric::mixed(2.0).unwrap(),
        BuiltinMetric::SupPair,
    ];
    let (reports, elapsed) = timed(|| {
        metrics
            .iter()
            .map(|m| {
                let dom = DomainSpec::default_for(m).build().unwrap();
                check_axioms(m, &dom, 10_000, 42).unwrap()
            })
            .collect::<Vec<_>>()
    });
    let dirty: Vec<_> = reports
        .iter()
        .filter(|r| !r.is_clean())
        .map(|r| r.metric.clone())
        .collect();
    verdict(
        dirty.is_empty() && elapsed < Duration::from_secs(5),
        format!("4 x 10^4 triples, dirty metrics {dirty:?}, {elapsed:.2?}"),
    )
}

fn example_reproduction() -> Verdict {
    let m = BuiltinMetric::mixed(2.0).unwrap();
    let q = MapQuartet::example22(2.0).unwrap();
    let cp = ControlPair::example22();
    let dom = DomainDescriptor::real_interval(0.0, 2.0, 2001).unwrap();
    let report = verify_contraction_grid(&m, &q, &cp, &dom).unwrap();
    let opts = IterateOptions::default();
    let mut worst = Duration::ZERO;
    let mut bad = Vec::new();
    for i in 0..10 {
        let x0 = Point::scalar(0.2 * i as f64 + 0.05);
        let (trace, elapsed) = timed(|| iterate(&m, &q, &cp, &x0, &opts, Some(&dom)).unwrap());
        worst = worst.max(elapsed);
        let zero = Point::scalar(0.0);
        let ok = trace.status == IterationStatus::Converged
            && trace.limit.as_ref().is_some_and(|z| ps(&m, z, &zero) <= 1e-10)
            && trace.self_distance == Some(0.0);
        if !ok {
            bad.push(x0.x());
        }
    }
    verdict(
        report.n_violations == 0 && bad.is_empty() && worst < Duration::from_secs(1),
        format!(
            "{} comparable pairs, {} violations, failing seeds {bad:?}, slowest run {worst:.2?}",
            report.n_checked, report.n_violations
        ),
    )
}

fn inconsistency_probe() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario::parse_scenario(scenario::bundled("example22_k09.json").unwrap()).unwrap();
    let outcome = scenario::run(&s, dir.path(), None).unwrap();
    let m = BuiltinMetric::mixed(0.9).unwrap();
    let q = MapQuartet::example22(0.9).unwrap();
    let dom = DomainDescriptor::real_interval(0.0, 0.9, 901).unwrap();
    let report = verify_contraction_grid(&m, &q, &ControlPair::example22(), &dom).unwrap();
    verdict(
        report.n_violations >= 1 && outcome.exit_code() == 2,
        format!(
            "{} violating pairs, exit code {}",
            report.n_violations,
            outcome.exit_code()
        ),
    )
}

fn hausdorff_suite() -> Verdict {
    let dom = DomainDescriptor::real_interval(0.0, 2.0, 201).unwrap();
    let sets = random_subsets(&dom, 20, 50, 2024);
    let sizes_ok = sets.iter().all(|s| (1..=50).contains(&s.len()));
    let (totals, elapsed) = timed(|| {
        [BuiltinMetric::Max, BuiltinMetric::mixed(2.0).unwrap()]
            .iter()
            .map(|m| check_hausdorff_props(m, &sets).unwrap().violations.total())
            .collect::<Vec<_>>()
    });
    verdict(
        sizes_ok && totals.iter().all(|&t| t == 0) && elapsed < Duration::from_secs(10),
        format!("violations per metric {totals:?}, {elapsed:.2?}"),
    )
}

fn ifs_decay() -> Verdict {
    let sys = IfsSystem::sierpinski();
    let opts = AttractorOptions {
        tol: 1e-4,
        ..Default::default()
    };
    let origin = FiniteSet::singleton(&Point::planar(0.0, 0.0));
    let run = iterate_attractor(&sys, &origin, &opts).unwrap();
    let steps = &run.hp_steps;
    let decay = steps.windows(2).skip(1).all(|w| w[1] <= 0.5 * w[0] + 1e-10);
    let t_final = hutchinson(&sys, run.attractor(), opts.merge_radius()).unwrap();
    let fixed_gap = h_p(sys.metric(), run.attractor(), &t_final).unwrap();
    drop(t_final);
    let other = iterate_attractor(&sys, &FiniteSet::singleton(&Point::planar(1.0, 0.0)), &opts).unwrap();
    let seed_gap = h_p(sys.metric(), run.attractor(), other.attractor()).unwrap();
    verdict(
        run.status == AttractorStatus::Converged
            && run.iterations() <= 20
            && decay
            && fixed_gap <= 2e-4
            && seed_gap <= 1e-3,
        format!(
            "{} iterations, |A| = {}, H(A, TA) = {fixed_gap:.3e}, seed gap {seed_gap:.3e}",
            run.iterations(),
            run.attractor().len()
        ),
    )
}

/// Seven-term scalar distance for a single map, written out directly.
fn scalar_mp(m: &dyn PartialMetric, f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], y: &[f64]) -> f64 {
    let fx = f(x);
    let fy = f(y);
    let ffx = f(&fx);
    let terms = [
        m.distance(x, y),
        m.distance(x, &fx),
        m.distance(y, &fy),
        m.distance(&ffx, y),
        m.distance(&ffx, &fx),
        m.distance(&ffx, &fy),
        (m.distance(x, &fy) + m.distance(y, &fx)) / 2.0,
    ];
    let mut best = f64::NEG_INFINITY;
    for t in terms {
        best = best.max(t);
    }
    best
}

fn singleton_reduction() -> Verdict {
    let matrix = vec![vec![0.4, -0.25], vec![0.15, 0.35]];
    let offset = vec![0.3, -0.2];
    let sys = IfsSystem::new(
        "affine",
        vec![IfsMap::Affine(AffineMap::new(matrix.clone(), offset.clone()).unwrap())],
        Arc::new(BuiltinMetric::Euclidean),
        ControlPair::linear(0.5).unwrap(),
        Family::PsiPhi,
    )
    .unwrap();
    let f = |x: &[f64]| -> Vec<f64> {
        (0..2)
            .map(|i| matrix[i].iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + offset[i])
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..100 {
        let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let y = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let a = FiniteSet::from_flat(2, x.to_vec()).unwrap();
        let b = FiniteSet::from_flat(2, y.to_vec()).unwrap();
        let mt = compute_mt(&sys, &a, &b).unwrap();
        if mt.to_bits() != scalar_mp(sys.metric(), &f, &x, &y).to_bits() {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("100 singleton pairs, {mismatches} bitwise mismatches"),
    )
}

fn line_system(scale: f64, family: Family) -> IfsSystem {
    IfsSystem::new(
        "line",
        vec![IfsMap::Affine(AffineMap::scaled(scale, vec![0.0]))],
        Arc::new(BuiltinMetric::Euclidean),
        ControlPair::linear(0.5).unwrap(),
        family,
    )
    .unwrap()
}

fn family_predicates() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs: Vec<(Point, Point)> = (0..10_000)
        .map(|_| {
            (
                Point::scalar(rng.gen_range(0.0..=1.0)),
                Point::scalar(rng.gen_range(0.0..=1.0)),
            )
        })
        .collect();
    let plain = check_family(
        &line_system(0.5, Family::Plain { k: 0.6 }),
        &pairs,
        FamilyDistance::Induced,
    )
    .unwrap();
    let exp = check_family(
        &line_system(0.5, Family::ExpF { tau: 2f64.ln() / 2.0 }),
        &pairs,
        FamilyDistance::Induced,
    )
    .unwrap();
    let sqrt: Vec<usize> = [0.1, 1.0, 10.0]
        .iter()
        .map(|&tau| {
            check_family(
                &line_system(1.0, Family::SqrtF { tau }),
                &pairs,
                FamilyDistance::Induced,
            )
            .unwrap()
            .n_violations
        })
        .collect();
    verdict(
        plain.is_clean() && exp.is_clean() && sqrt.iter().all(|&v| v >= 1),
        format!(
            "plain {} / exp-F {} violations, identity sqrt-F violations {sqrt:?}",
            plain.n_violations, exp.n_violations
        ),
    )
}

fn integral_equation() -> Verdict {
    let prob = IntegralProblem::saturated(0.2, 201).unwrap();
    let conditions = check_conditions(&prob, &standard_probes(201).unwrap()).unwrap();
    let x0 = GridFunction::constant(201, 1.0).unwrap();
    let (result, elapsed) = timed(|| solve(&prob, &x0, &SolveOptions::default()).unwrap());
    verdict(
        result.status == SolveStatus::Converged
            && result.solution.sup() <= 1e-8
            && result.cycles <= 14
            && result.residual_sup <= 1e-10
            && conditions.is_clean()
            && elapsed < Duration::from_secs(1),
        format!(
            "{} cycles, sup |u| = {:.3e}, residual {:.3e}, condition violations {}/{}/{}, {elapsed:.2?}",
            result.cycles,
            result.solution.sup(),
            result.residual_sup,
            conditions.pointwise_bound_violations,
            conditions.integral_bound_violations,
            conditions.doubling_violations
        ),
    )
}

fn compose_oracle() -> Verdict {
    let cp = integral_compose(&ControlPair::linear(0.5).unwrap(), |t| 2.0 * t, 64, 2.0).unwrap();
    let worst = (0..100)
        .map(|i| 2.0 * i as f64 / 99.0)
        .map(|x| (cp.psi(x) - x * x).abs())
        .fold(0.0, f64::max);
    verdict(worst <= 1e-8, format!("max |Psi(x) - x^2| = {worst:.3e} on 100 points"))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Verdict {
    let trees: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            for (name, text) in scenario::BUNDLED {
                let s = scenario::parse_scenario(text).unwrap();
                let stem = name.trim_end_matches(".json");
                scenario::run(&s, &dir.path().join(stem), None).unwrap();
            }
            read_tree(dir.path())
        })
        .collect();
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    verdict(
        trees[0] == trees[1] && !trees[0].is_empty(),
        format!("{} files, {bytes} bytes per run", trees[0].len()),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("axiom suite", axiom_suite),
        ("four-map worked example", example_reproduction),
        ("k = 0.9 inconsistency probe", inconsistency_probe),
        ("partial Hausdorff properties", hausdorff_suite),
        ("IFS geometric decay", ifs_decay),
        ("singleton reduction", singleton_reduction),
        ("contraction-family predicates", family_predicates),
        ("integral equation", integral_equation),
        ("integral-compose oracle", compose_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
