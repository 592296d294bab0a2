use std::ffi::{CStr, CString};
use std::ptr;

use pmfix_ffi::*;

fn last_error() -> Option<String> {
    let p = pmfix_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn metric(name: &str, param: Option<f64>) -> *mut PmfixMetric {
    let name = CString::new(name).unwrap();
    let param_ptr = param.as_ref().map_or(ptr::null(), |p| p as *const f64);
    let mut out = ptr::null_mut();
    let status = unsafe { pmfix_metric_new(name.as_ptr(), param_ptr, &mut out) };
    assert_eq!(status, PmfixStatus::Ok, "{:?}", last_error());
    out
}

fn point_set(coords: &[f64], dim: usize) -> *mut PmfixPointSet {
    let mut out = ptr::null_mut();
    let status = unsafe { pmfix_point_set_new(coords.as_ptr(), coords.len() / dim, dim, &mut out) };
    assert_eq!(status, PmfixStatus::Ok, "{:?}", last_error());
    out
}

#[test]
fn max_metric_distances() {
    let m = metric("max_metric", None);
    let (x, y) = ([0.3], [0.7]);
    let mut d = f64::NAN;
    unsafe {
        assert_eq!(
            pmfix_metric_distance(m, x.as_ptr(), y.as_ptr(), 1, &mut d),
            PmfixStatus::Ok
        );
        assert_eq!(d, 0.7);
        assert_eq!(
            pmfix_metric_induced(m, x.as_ptr(), y.as_ptr(), 1, &mut d),
            PmfixStatus::Ok
        );
        assert!((d - 0.4).abs() < 1e-15);
        pmfix_metric_free(m);
    }
    assert!(last_error().is_none());
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let bogus = CString::new("no-such-metric").unwrap();
    assert_eq!(
        unsafe { pmfix_metric_new(bogus.as_ptr(), ptr::null(), &mut out) },
        PmfixStatus::InvalidArgument
    );
    assert!(out.is_null());
    assert!(last_error().unwrap().contains("no-such-metric"));

    assert_eq!(
        unsafe { pmfix_metric_new(ptr::null(), ptr::null(), &mut out) },
        PmfixStatus::NullPointer
    );

    let m = metric("max_metric", None);
    let (x, y) = ([-1.0], [0.5]);
    let mut d = 0.0;
    assert_eq!(
        unsafe { pmfix_metric_distance(m, x.as_ptr(), y.as_ptr(), 1, &mut d) },
        PmfixStatus::Domain
    );
    assert_eq!(
        unsafe { pmfix_metric_distance(m, y.as_ptr(), y.as_ptr(), 1, ptr::null_mut()) },
        PmfixStatus::NullPointer
    );
    let nan = [f64::NAN];
    assert_ne!(
        unsafe { pmfix_metric_distance(m, nan.as_ptr(), y.as_ptr(), 1, &mut d) },
        PmfixStatus::Ok
    );
    unsafe { pmfix_metric_free(m) };

    let mut set = ptr::null_mut();
    assert_eq!(
        unsafe { pmfix_point_set_new(ptr::null(), 0, 1, &mut set) },
        PmfixStatus::EmptySet
    );
}

#[test]
fn hausdorff_between_sets() {
    let m = metric("euclidean", None);
    let a = point_set(&[0.0, 1.0, 1.0], 1);
    let b = point_set(&[0.0, 2.0], 1);
    assert_eq!(unsafe { pmfix_point_set_len(a) }, 2);
    let mut h = f64::NAN;
    let mut h_rev = f64::NAN;
    unsafe {
        assert_eq!(pmfix_hausdorff(m, a, b, &mut h), PmfixStatus::Ok);
        assert_eq!(pmfix_hausdorff(m, b, a, &mut h_rev), PmfixStatus::Ok);
    }
    assert_eq!(h, 1.0);
    assert_eq!(h, h_rev);
    let planar = point_set(&[0.0, 0.0], 2);
    assert_eq!(unsafe { pmfix_hausdorff(m, a, planar, &mut h) }, PmfixStatus::Dimension);
    unsafe {
        pmfix_point_set_free(a);
        pmfix_point_set_free(b);
        pmfix_point_set_free(planar);
        pmfix_metric_free(m);
        pmfix_point_set_free(ptr::null_mut());
        pmfix_metric_free(ptr::null_mut());
    }
}

#[test]
fn worked_example_converges_to_zero() {
    let mut r = PmfixIterateResult::default();
    assert_eq!(
        unsafe { pmfix_example_iterate(2.0, 1.7, 1e-10, 10_000, &mut r) },
        PmfixStatus::Ok
    );
    assert_eq!(r.limit, 0.0);
    assert_eq!(r.self_distance, 0.0);
    assert!(r.steps > 0);
    assert_eq!(
        unsafe { pmfix_example_iterate(2.0, 1.7, 0.0, 10, &mut r) },
        PmfixStatus::InvalidArgument
    );
}

fn run_scenario(json: &str, dir: &std::path::Path) -> (PmfixStatus, Option<String>) {
    let json = CString::new(json).unwrap();
    let dir = CString::new(dir.to_str().unwrap()).unwrap();
    let mut summary = ptr::null_mut();
    let status = unsafe { pmfix_run_scenario_json(json.as_ptr(), dir.as_ptr(), ptr::null(), &mut summary) };
    let text = (!summary.is_null()).then(|| {
        let s = unsafe { CStr::from_ptr(summary) }.to_string_lossy().into_owned();
        unsafe { pmfix_string_free(summary) };
        s
    });
    (status, text)
}

#[test]
fn scenarios_run_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/scenarios/");
    let clean = std::fs::read_to_string(format!("{root}integral.json")).unwrap();
    let (status, summary) = run_scenario(&clean, &dir.path().join("integral"));
    assert_eq!(status, PmfixStatus::Ok, "{:?}", last_error());
    assert!(summary.unwrap().starts_with("integral"));
    assert!(dir.path().join("integral/solution.csv").exists());

    let violating = std::fs::read_to_string(format!("{root}example22_k09.json")).unwrap();
    let (status, summary) = run_scenario(&violating, &dir.path().join("k09"));
    assert_eq!(status, PmfixStatus::Violation);
    assert!(summary.is_some());

    let (status, summary) = run_scenario("{ not json", &dir.path().join("bad"));
    assert_eq!(status, PmfixStatus::Parse);
    assert!(summary.is_none());
    assert!(last_error().is_some());
}
