//! C ABI over `min-energy`.
//!
//! Models live behind the opaque [`MeProblem`] handle. Every fallible call
//! returns a [`MeStatus`]; on failure a description is available from
//! [`me_last_error`] on the same thread. Matrices cross the boundary as
//! row-major `double` arrays whose sizes follow from [`me_problem_dims`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use min_energy::cli::error_exit_code;
use min_energy::energy::{value_auxiliary, value_finite, value_infinite, AuxiliaryCost};
use min_energy::gramian::{gramian_finite, gramian_infinite, h_space, Gramian, GramianMethod};
use min_energy::operators::ingest::ModelDocument;
use min_energy::operators::{make_dense_model, make_spectral_model};
use min_energy::riccati::verify_canonical_solutions;
use min_energy::{ControlProblem, Error, Matrix, Vector};

/// Opaque model handle.
pub struct MeProblem {
    inner: ControlProblem,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    BadParameter = 3,
    Precondition = 4,
    Unreachable = 5,
    Domain = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MeStatus {
    match error_exit_code(e) {
        2 => MeStatus::Parse,
        4 => MeStatus::Precondition,
        5 => MeStatus::Unreachable,
        6 => MeStatus::Domain,
        _ => MeStatus::BadParameter,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MeStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            MeStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            MeStatus::Panic
        }
    }
}

unsafe fn problem<'a>(p: *const MeProblem) -> Result<&'a ControlProblem, Fail> {
    p.as_ref().map(|p| &p.inner).ok_or(Fail::Null("problem"))
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or(Fail::Null(what))
}

unsafe fn store(p: ControlProblem, dst: *mut *mut MeProblem) {
    *dst = Box::into_raw(Box::new(MeProblem { inner: p }));
}

unsafe fn write_matrix(m: &Matrix, dst: *mut f64) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(Fail::Null("output matrix"));
    }
    let (r, c) = m.shape();
    let dst = std::slice::from_raw_parts_mut(dst, r * c);
    for i in 0..r {
        for j in 0..c {
            dst[i * c + j] = m[(i, j)];
        }
    }
    Ok(())
}

/// Builds a model from a JSON document (see the CLI `--model` format).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_problem_from_json(json: *const c_char, out: *mut *mut MeProblem) -> MeStatus {
    guard(|| {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Error::Parse("document is not UTF-8".into()))?;
        store(ModelDocument::from_json(text)?.build()?, out);
        Ok(())
    })
}

/// Builds a model from row-major `A` (`n×n`) and `B` (`n×m`).
///
/// # Safety
/// `a` must hold `n*n` doubles, `b` `n*m` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_problem_new_dense(
    n: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    out: *mut *mut MeProblem,
) -> MeStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let a = Matrix::from_row_slice(n, n, slice(a, n * n, "a")?);
        let b = Matrix::from_row_slice(n, m, slice(b, n * m, "b")?);
        store(make_dense_model(a, b)?, out);
        Ok(())
    })
}

/// Builds the diagonal model `A = diag(lambdas)`, `BB* = diag(b_diag)`.
///
/// # Safety
/// `lambdas` and `b_diag` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_problem_new_spectral(
    n: usize,
    lambdas: *const f64,
    b_diag: *const f64,
    out: *mut *mut MeProblem,
) -> MeStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let l = slice(lambdas, n, "lambdas")?;
        let b = slice(b_diag, n, "b_diag")?;
        store(make_spectral_model(l, b)?, out);
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `p` must come from one of the constructors and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn me_problem_free(p: *mut MeProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// State dimension `n` and control dimension `m`.
///
/// # Safety
/// `p` must be a live handle; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_problem_dims(p: *const MeProblem, n: *mut usize, m: *mut usize) -> MeStatus {
    guard(|| {
        let p = problem(p)?;
        *out(n, "n")? = p.n();
        *out(m, "m")? = p.m();
        Ok(())
    })
}

unsafe fn gramian_to(g: min_energy::Result<Gramian>, dst: *mut f64) -> Result<(), Fail> {
    write_matrix(&g?.matrix, dst)
}

/// Writes `Q_∞` (`n×n`, row-major) into `q`.
///
/// # Safety
/// `p` must be a live handle; `q` must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn me_gramian_infinite(p: *const MeProblem, q: *mut f64) -> MeStatus {
    guard(|| gramian_to(gramian_infinite(problem(p)?), q))
}

/// Writes `Q_t` (`n×n`, row-major) into `q`.
///
/// # Safety
/// `p` must be a live handle; `q` must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn me_gramian_finite(p: *const MeProblem, t: f64, q: *mut f64) -> MeStatus {
    guard(|| gramian_to(gramian_finite(problem(p)?, t, GramianMethod::Quadrature), q))
}

unsafe fn target(p: &ControlProblem, x: *const f64) -> Result<Vector, Fail> {
    Ok(Vector::from_column_slice(slice(x, p.n(), "x")?))
}

/// Minimum energy `V(t, x)` to reach `x` in time `t`.
///
/// # Safety
/// `p` must be a live handle; `x` must hold `n` doubles; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_value_finite(p: *const MeProblem, t: f64, x: *const f64, value: *mut f64) -> MeStatus {
    guard(|| {
        let p = problem(p)?;
        *out(value, "value")? = value_finite(p, t, &target(p, x)?)?;
        Ok(())
    })
}

/// Minimum energy `V_∞(x)` to reach `x` from the infinite past.
///
/// # Safety
/// `p` must be a live handle; `x` must hold `n` doubles; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_value_infinite(p: *const MeProblem, x: *const f64, value: *mut f64) -> MeStatus {
    guard(|| {
        let p = problem(p)?;
        *out(value, "value")? = value_infinite(p, &target(p, x)?)?;
        Ok(())
    })
}

/// Value with penalized free initial state `z`, penalty `½·n_scale·‖z‖²_H`,
/// and its minimizer (`n` doubles, may be null when not wanted).
///
/// # Safety
/// `p` must be a live handle; `x` must hold `n` doubles; `value` must be
/// writable; `argmin_z`, when non-null, must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn me_value_auxiliary(
    p: *const MeProblem,
    t: f64,
    n_scale: f64,
    x: *const f64,
    value: *mut f64,
    argmin_z: *mut f64,
) -> MeStatus {
    guard(|| {
        let p = problem(p)?;
        if !(n_scale >= 0.0 && n_scale.is_finite()) {
            return Err(Error::OutOfRange(format!("n_scale = {n_scale}")).into());
        }
        let h = h_space(p)?;
        let cost = AuxiliaryCost::new(&h, Matrix::identity(p.n(), p.n()) * n_scale)?;
        let v = value_auxiliary(p, &cost, t, &target(p, x)?)?;
        *out(value, "value")? = v.value;
        if !argmin_z.is_null() {
            std::slice::from_raw_parts_mut(argmin_z, p.n()).copy_from_slice(&v.argmin_z);
        }
        Ok(())
    })
}

/// Riccati residuals of the canonical solutions `R = Q_∞^{-1}` (ambient form)
/// and `P = I` (reachable-space form).
///
/// # Safety
/// `p` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn me_verify_canonical(
    p: *const MeProblem,
    x_form_residual: *mut f64,
    h_form_residual: *mut f64,
) -> MeStatus {
    guard(|| {
        let (x, h) = verify_canonical_solutions(problem(p)?)?;
        *out(x_form_residual, "x_form_residual")? = x.residual_norm;
        *out(h_form_residual, "h_form_residual")? = h.residual_norm;
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn me_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, NUL-terminated, static.
#[no_mangle]
pub extern "C" fn me_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}
