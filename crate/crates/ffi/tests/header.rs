use std::path::Path;
use std::process::Command;

const EXPORTS: [&str; 11] = [
    "pmfix_last_error",
    "pmfix_string_free",
    "pmfix_metric_new",
    "pmfix_metric_free",
    "pmfix_metric_distance",
    "pmfix_metric_induced",
    "pmfix_point_set_new",
    "pmfix_point_set_free",
    "pmfix_point_set_len",
    "pmfix_hausdorff",
    "pmfix_example_iterate",
];

fn header() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pmfix.h");
    std::fs::read_to_string(path).expect("build script writes the header")
}

#[test]
fn header_declares_every_export() {
    let text = header();
    for name in EXPORTS.iter().chain(&["pmfix_run_scenario_json"]) {
        assert!(text.contains(&format!("{name}(")), "{name} missing");
    }
    assert!(text.contains("typedef struct PmfixMetric PmfixMetric;"));
    assert!(text.contains("PMFIX_STATUS_VIOLATION = 1"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    std::fs::write(
        &src,
        "#include \"pmfix.h\"\nint main(void) { PmfixMetric *m = 0; double d; \
         return pmfix_metric_distance(m, 0, 0, 1, &d) == PMFIX_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<String, ()> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().map(|_| cc).map_err(|_| ())
}
