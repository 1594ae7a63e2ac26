use std::ffi::{CStr, CString};
use std::ptr;

use min_energy_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(me_last_error()) }.to_string_lossy().into_owned()
}

fn spectral(lambdas: &[f64], b: &[f64]) -> *mut MeProblem {
    let mut p = ptr::null_mut();
    let s = unsafe { me_problem_new_spectral(lambdas.len(), lambdas.as_ptr(), b.as_ptr(), &mut p) };
    assert_eq!(s, MeStatus::Ok);
    p
}

#[test]
fn scalar_values_and_gramians() {
    let p = spectral(&[-1.0], &[1.0]);
    let (mut n, mut m) = (0, 0);
    assert_eq!(unsafe { me_problem_dims(p, &mut n, &mut m) }, MeStatus::Ok);
    assert_eq!((n, m), (1, 1));

    let mut q = [0.0];
    assert_eq!(unsafe { me_gramian_finite(p, 1.0, q.as_mut_ptr()) }, MeStatus::Ok);
    assert!((q[0] - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-12);
    assert_eq!(unsafe { me_gramian_infinite(p, q.as_mut_ptr()) }, MeStatus::Ok);
    assert!((q[0] - 0.5).abs() < 1e-15);

    let x = [1.0];
    let mut v = 0.0;
    assert_eq!(unsafe { me_value_infinite(p, x.as_ptr(), &mut v) }, MeStatus::Ok);
    assert!((v - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { me_value_finite(p, 1.0, x.as_ptr(), &mut v) }, MeStatus::Ok);
    assert!((v - 1.0 / (1.0 - (-2.0f64).exp())).abs() < 1e-10);

    let mut z = [0.0];
    assert_eq!(
        unsafe { me_value_auxiliary(p, 1.0, 1.0, x.as_ptr(), &mut v, z.as_mut_ptr()) },
        MeStatus::Ok
    );
    assert!((v - 1.0).abs() < 1e-9);
    assert!((z[0] - (-1.0f64).exp()).abs() < 1e-9);

    let (mut rx, mut rh) = (1.0, 1.0);
    assert_eq!(unsafe { me_verify_canonical(p, &mut rx, &mut rh) }, MeStatus::Ok);
    assert!(rx <= 1e-9 && rh <= 1e-9);
    unsafe { me_problem_free(p) };
}

#[test]
fn dense_and_json_constructors_agree() {
    let a = [-1.0, 0.0, 0.0, -2.0];
    let b = [1.0, 0.0, 0.0, 1.0];
    let mut dense = ptr::null_mut();
    assert_eq!(
        unsafe { me_problem_new_dense(2, 2, a.as_ptr(), b.as_ptr(), &mut dense) },
        MeStatus::Ok
    );
    let doc = CString::new(r#"{"type":"spectral","lambdas":[-1.0,-2.0],"b_diag":[1.0,1.0]}"#).unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { me_problem_from_json(doc.as_ptr(), &mut json) }, MeStatus::Ok);
    let (mut q1, mut q2) = ([0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(me_gramian_infinite(dense, q1.as_mut_ptr()), MeStatus::Ok);
        assert_eq!(me_gramian_infinite(json, q2.as_mut_ptr()), MeStatus::Ok);
        me_problem_free(dense);
        me_problem_free(json);
    }
    for (x, y) in q1.iter().zip(&q2) {
        assert!((x - y).abs() < 1e-15);
    }
    assert!((q1[0] - 0.5).abs() < 1e-15 && (q1[3] - 0.25).abs() < 1e-15);
}

#[test]
fn error_codes_and_messages() {
    let mut p = ptr::null_mut();
    let doc = CString::new("{oops").unwrap();
    assert_eq!(unsafe { me_problem_from_json(doc.as_ptr(), &mut p) }, MeStatus::Parse);
    assert!(!last_error().is_empty());

    let a = [0.5];
    let b = [1.0];
    assert_eq!(
        unsafe { me_problem_new_dense(1, 1, a.as_ptr(), b.as_ptr(), &mut p) },
        MeStatus::Precondition
    );
    assert!(last_error().contains("stable"), "{}", last_error());

    assert_eq!(unsafe { me_problem_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()) }, MeStatus::NullPointer);

    let q = spectral(&[-1.0, -2.0], &[1.0, 0.0]);
    let x = [0.0, 1.0];
    let mut v = 0.0;
    assert_eq!(unsafe { me_value_infinite(q, x.as_ptr(), &mut v) }, MeStatus::Unreachable);
    assert_eq!(unsafe { me_value_finite(q, 1.0, x.as_ptr(), &mut v) }, MeStatus::Unreachable);
    let mut g = [0.0; 4];
    assert_eq!(unsafe { me_gramian_finite(q, -1.0, g.as_mut_ptr()) }, MeStatus::BadParameter);
    unsafe { me_problem_free(q) };

    let doc = CString::new(r#"{"type":"landau","n_modes":2,"rho_minus":1.5,"rho_plus":0.5}"#).unwrap();
    assert_eq!(unsafe { me_problem_from_json(doc.as_ptr(), &mut p) }, MeStatus::Domain);
    unsafe { me_problem_free(ptr::null_mut()) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(me_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
