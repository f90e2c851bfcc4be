use std::ffi::{CStr, CString};
use std::ptr;

use carlson_core::measure::parse_point_mass_json;
use carlson_core::{build_point_mass_lambda, AtomicLineMeasure, BuildOptions};
use carlson_ffi::*;

const POLY: &str = r#"{"basis_dim": 2, "terms": [{"n": 1, "re": 1.0, "im": 0.0}, {"n": 2, "re": 1.0, "im": 0.0}, {"n": 6, "re": 0.0, "im": -0.5}]}"#;
const MU: &str = r#"{"dim": 2, "atoms": [{"theta": [0.5, 1.0], "c": 0.25}, {"theta": [3.0, 5.5], "c": 0.75}]}"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(carlson_last_error()) }.to_str().unwrap().to_owned()
}

fn poly() -> *mut CarlsonDirichlet {
    let mut out = ptr::null_mut();
    let status = unsafe { carlson_dirichlet_from_json(cstr(POLY).as_ptr(), &mut out) };
    assert_eq!(status, CarlsonStatus::Ok, "{}", last_error());
    out
}

fn mu() -> *mut CarlsonPointMass {
    let mut out = ptr::null_mut();
    let status = unsafe { carlson_point_mass_from_json(cstr(MU).as_ptr(), &mut out) };
    assert_eq!(status, CarlsonStatus::Ok, "{}", last_error());
    out
}

#[test]
fn evaluates_at_the_origin() {
    let f = poly();
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { carlson_dirichlet_eval(f, 0.0, 0.0, &mut re, &mut im) }, CarlsonStatus::Ok);
    // f(0) = 1 + 1 - 0.5i
    assert_eq!((re, im), (2.0, -0.5));
    let mut limit = 0.0;
    assert_eq!(unsafe { carlson_dirichlet_limit(f, 0.0, &mut limit) }, CarlsonStatus::Ok);
    assert_eq!(limit, 2.25);
    unsafe { carlson_dirichlet_free(f) };
}

#[test]
fn lebesgue_mean_approaches_limit() {
    let f = poly();
    let (mut mean, mut limit) = (0.0, 0.0);
    unsafe {
        assert_eq!(carlson_lebesgue_mean(f, 0.0, 1e7, &mut mean), CarlsonStatus::Ok);
        carlson_dirichlet_limit(f, 0.0, &mut limit);
        carlson_dirichlet_free(f);
    }
    assert!((mean - limit).abs() < 1e-5, "{mean} vs {limit}");
}

#[test]
fn parse_errors_set_status_and_message() {
    let mut out = ptr::null_mut();
    let status = unsafe { carlson_dirichlet_from_json(cstr("{not json").as_ptr(), &mut out) };
    assert_eq!(status, CarlsonStatus::Invalid);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let bad = r#"{"dim": 1, "atoms": [{"theta": [0.0], "c": 0.9}]}"#;
    let mut mu = ptr::null_mut();
    assert_ne!(unsafe { carlson_point_mass_from_json(cstr(bad).as_ptr(), &mut mu) }, CarlsonStatus::Ok);
    assert!(mu.is_null());
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { carlson_dirichlet_from_json(ptr::null(), &mut out) }, CarlsonStatus::NullPointer);
    assert_eq!(unsafe { carlson_dirichlet_from_json(cstr(POLY).as_ptr(), ptr::null_mut()) }, CarlsonStatus::NullPointer);
    let mut x = 0.0;
    assert_eq!(unsafe { carlson_lebesgue_mean(ptr::null(), 0.0, 1.0, &mut x) }, CarlsonStatus::NullPointer);
    assert!(last_error().contains("null"));
    unsafe {
        carlson_dirichlet_free(ptr::null_mut());
        carlson_point_mass_free(ptr::null_mut());
        carlson_measure_free(ptr::null_mut());
    }
}

#[test]
fn kronecker_solution_meets_tolerance() {
    let targets = [1.0, 2.0];
    let (mut t, mut residuals) = (0.0, [f64::NAN; 2]);
    let status = unsafe { carlson_kronecker_solve(targets.as_ptr(), 2, 0.1, 0.0, 100_000_000, &mut t, residuals.as_mut_ptr()) };
    assert_eq!(status, CarlsonStatus::Ok, "{}", last_error());
    for (j, p) in [2.0f64, 3.0].iter().enumerate() {
        let angle = (-t * p.ln()).rem_euclid(std::f64::consts::TAU);
        let d = (angle - targets[j]).abs();
        let d = d.min(std::f64::consts::TAU - d);
        assert!(d < 0.1, "prime {p}: {d}");
        assert!((d - residuals[j]).abs() < 1e-9);
    }
}

#[test]
fn kronecker_budget_and_domain_errors() {
    let targets = [1.0, 2.0, 3.0];
    let mut t = 0.0;
    let status = unsafe { carlson_kronecker_solve(targets.as_ptr(), 3, 0.001, 0.0, 10, &mut t, ptr::null_mut()) };
    assert_eq!(status, CarlsonStatus::Budget);
    let status = unsafe { carlson_kronecker_solve(targets.as_ptr(), 1, 4.0, 0.0, 10, &mut t, ptr::null_mut()) };
    assert_eq!(status, CarlsonStatus::Invalid);
}

#[test]
fn build_matches_core_and_survives_save_load() {
    let m = mu();
    let mut lambda = ptr::null_mut();
    assert_eq!(unsafe { carlson_measure_build(m, 3, 0, 0, &mut lambda) }, CarlsonStatus::Ok, "{}", last_error());

    let core_mu = parse_point_mass_json(MU).unwrap();
    let expected = build_point_mass_lambda(&core_mu, 3, &BuildOptions::default()).unwrap();
    let (mut len, mut mass) = (0usize, 0.0);
    unsafe {
        carlson_measure_len(lambda, &mut len);
        carlson_measure_total_mass(lambda, &mut mass);
    }
    assert_eq!(len, expected.len());
    assert_eq!(mass, expected.total_mass());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("atoms.jsonl");
    let cpath = cstr(path.to_str().unwrap());
    assert_eq!(unsafe { carlson_measure_save(lambda, cpath.as_ptr()) }, CarlsonStatus::Ok);
    let on_disk = std::fs::read(&path).unwrap();
    assert_eq!(on_disk, expected.to_bytes());
    assert_eq!(AtomicLineMeasure::load(on_disk.as_slice()).unwrap(), expected);

    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { carlson_measure_load(cpath.as_ptr(), &mut loaded) }, CarlsonStatus::Ok);
    let f = poly();
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(carlson_time_mean(f, lambda, f64::INFINITY, &mut a), CarlsonStatus::Ok);
        assert_eq!(carlson_time_mean(f, loaded, f64::INFINITY, &mut b), CarlsonStatus::Ok);
        assert_eq!(carlson_time_mean(f, loaded, -1.0, &mut b), CarlsonStatus::EmptyMeasure);
        carlson_measure_free(lambda);
        carlson_measure_free(loaded);
        carlson_point_mass_free(m);
        carlson_dirichlet_free(f);
    }
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn missing_atom_file_is_an_io_error() {
    let mut out = ptr::null_mut();
    let status = unsafe { carlson_measure_load(cstr("/nonexistent/atoms.jsonl").as_ptr(), &mut out) };
    assert_eq!(status, CarlsonStatus::Io);
    assert!(out.is_null());
}

#[test]
fn errors_are_per_thread() {
    let mut out = ptr::null_mut();
    unsafe { carlson_dirichlet_from_json(cstr("[]").as_ptr(), &mut out) };
    assert!(!last_error().is_empty());
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_empty());
}
