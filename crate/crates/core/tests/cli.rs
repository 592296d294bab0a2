use std::path::Path;
use std::process::{Command, Output};

use pmfix::engine::ContractionReport;
use pmfix::hausdorff::{FiniteSet, HausdorffReport};
use pmfix::metric::AxiomReport;
use pmfix::scenario::{FixedPointSummary, IfsSummary, IntegralSummary};

fn pmfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmfix"))
        .args(args)
        .env("PMFIX_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn run_bundled(name: &str, out: &Path) -> Output {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    pmfix(&["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn list_names_the_bundled_components() {
    let out = pmfix(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["mixed_metric", "max_metric", "sierpinski", "example22.json"] {
        assert!(text.contains(name), "{name} missing from listing");
    }
    assert!(text
        .lines()
        .any(|l| l.contains("mixed_metric") && l.contains("worked example")));
}

#[test]
fn example_scenario_converges_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_bundled("example22.json", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let trace = std::fs::read_to_string(dir.path().join("trace_00.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    assert_eq!(last.split(',').nth(2), Some("0"));

    let report: ContractionReport = read_json(&dir.path().join("contraction.json"));
    assert_eq!(report.n_violations, 0);
    assert!(report.n_checked > 0);

    let summary: FixedPointSummary = read_json(&dir.path().join("fixed_point.json"));
    assert_eq!(summary.runs.len(), 10);
    assert!(summary.uniqueness.unwrap().unique());
    assert!(summary.runs.iter().all(|r| r.self_distance == Some(0.0)));
}

#[test]
fn inconsistent_constant_exits_with_violation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_bundled("example22_k09.json", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report: ContractionReport = read_json(&dir.path().join("contraction.json"));
    assert!(report.n_violations > 0);
    let rows = std::fs::read_to_string(dir.path().join("violations.csv")).unwrap();
    assert!(rows.lines().count() > 1);
}

#[test]
fn sierpinski_scenario_writes_image_and_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_bundled("sierpinski.json", dir.path());
    assert_eq!(out.status.code(), Some(0));

    let ppm = std::fs::read(dir.path().join("attractor.ppm")).unwrap();
    let header = b"P6\n512 512\n255\n";
    assert!(ppm.starts_with(header));
    assert_eq!(ppm.len(), header.len() + 512 * 512 * 3);

    let summary: IfsSummary = read_json(&dir.path().join("ifs.json"));
    for w in summary.hp_steps.windows(2).skip(1) {
        assert!(w[1] <= 0.5 * w[0] + 1e-10);
    }
    let cloud = FiniteSet::load_csv(&dir.path().join("attractor.csv")).unwrap();
    assert_eq!(cloud.len(), *summary.sizes.last().unwrap());
    assert_eq!(cloud.dim(), 2);
}

#[test]
fn remaining_reports_reparse() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["axioms.json", "hausdorff.json", "integral.json"] {
        let sub = dir.path().join(name);
        assert_eq!(run_bundled(name, &sub).status.code(), Some(0), "{name}");
    }
    let axioms: Vec<AxiomReport> = read_json(&dir.path().join("axioms.json/report.json"));
    assert_eq!(axioms.len(), 4);
    let hausdorff: Vec<HausdorffReport> = read_json(&dir.path().join("hausdorff.json/report.json"));
    assert!(hausdorff.iter().all(HausdorffReport::is_clean));
    let integral: IntegralSummary = read_json(&dir.path().join("integral.json/integral.json"));
    assert!(integral.residual_sup <= 1e-10);
    let solution = std::fs::read_to_string(dir.path().join("integral.json/solution.csv")).unwrap();
    assert_eq!(solution.lines().next(), Some("t,u,residual"));
    assert_eq!(solution.lines().count(), 202);
}

#[test]
fn seed_controls_random_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/hausdorff.json");
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = pmfix(&[
            "run",
            scenario.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(out_dir.join("sets.csv")).unwrap()
    };
    let a = run("7", "a");
    let b = run("7", "b");
    let c = run("8", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = pmfix(&["run", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(pmfix(&["run", garbled.to_str().unwrap()]).status.code(), Some(1));

    let wrong = dir.path().join("wrong.json");
    std::fs::write(
        &wrong,
        r#"{"command": "ifs", "payload": {"system": {"kind": "builtin", "name": "sierpinski"}}}"#,
    )
    .unwrap();
    let out = pmfix(&[
        "run",
        wrong.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn schema_command() {
    let out = pmfix(&["schema", "integral"]);
    assert!(out.status.success());
    let schema: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(schema["properties"]["kernel"].is_object());
    assert_eq!(pmfix(&["schema", "bogus"]).status.code(), Some(1));
}
