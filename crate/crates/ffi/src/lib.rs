//! C ABI over `carlson-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json`,
//! `carlson_measure_build` or `carlson_measure_load` and released with the
//! matching `*_free`. Every fallible call returns a [`CarlsonStatus`]; on
//! failure `carlson_last_error` describes what went wrong on the calling
//! thread. Outputs are written through caller-provided pointers only on
//! success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use carlson_core::ergodic::atomic_time_mean;
use carlson_core::harness::write_atomic;
use carlson_core::kronecker::solve;
use carlson_core::measure::parse_point_mass_json;
use carlson_core::poly::parse_dirichlet_json;
use carlson_core::{
    build_point_mass_lambda, eval_dirichlet, lebesgue_line_mean, AtomicLineMeasure, BuildOptions,
    DirichletPolynomial, Error, Growth, KroneckerProblem, PrimeBasis, TorusPointMassMeasure,
};

/// Result code of every fallible call. `Ok` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarlsonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Invalid = 3,
    Dimension = 4,
    Overflow = 5,
    Domain = 6,
    Budget = 7,
    Construction = 8,
    Capacity = 9,
    Representation = 10,
    EmptyMeasure = 11,
    Plan = 12,
    ImaginaryResidue = 13,
    Parse = 14,
    Io = 15,
    Panic = 16,
}

impl From<&Error> for CarlsonStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => Self::Dimension,
            Error::Overflow(_) => Self::Overflow,
            Error::Domain(_) => Self::Domain,
            Error::Invalid(_) | Error::Json(_) => Self::Invalid,
            Error::Budget { .. } => Self::Budget,
            Error::Construction { .. } => Self::Construction,
            Error::Capacity { .. } => Self::Capacity,
            Error::Representation(_) => Self::Representation,
            Error::EmptyMeasure(_) => Self::EmptyMeasure,
            Error::Plan(_) => Self::Plan,
            Error::ImaginaryResidue { .. } => Self::ImaginaryResidue,
            Error::Parse { .. } => Self::Parse,
            Error::Io(_) => Self::Io,
        }
    }
}

/// A Dirichlet polynomial `Σ a_n n^{-s}`.
pub struct CarlsonDirichlet(DirichletPolynomial);

/// A finite point-mass probability measure on the torus.
pub struct CarlsonPointMass(TorusPointMassMeasure);

/// A finite atomic measure on the half line.
pub struct CarlsonLineMeasure(AtomicLineMeasure);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

struct Failure(CarlsonStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CarlsonStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, turning errors and panics into a status and last-error text.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CarlsonStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            CarlsonStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            CarlsonStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| Failure(CarlsonStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `carlson_*` call on the same
/// thread.
#[no_mangle]
pub extern "C" fn carlson_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses `{"basis_dim": d, "terms": [{"n": .., "re": .., "im": ..}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_dirichlet_from_json(
    json: *const c_char,
    out: *mut *mut CarlsonDirichlet,
) -> CarlsonStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let poly = parse_dirichlet_json(text)?;
        write_out(out, Box::into_raw(Box::new(CarlsonDirichlet(poly))), "out")
    })
}

/// # Safety
/// `poly` must be null or a handle from `carlson_dirichlet_from_json` that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn carlson_dirichlet_free(poly: *mut CarlsonDirichlet) {
    if !poly.is_null() {
        drop(Box::from_raw(poly));
    }
}

/// Evaluates `f(σ + it)`.
///
/// # Safety
/// `poly` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn carlson_dirichlet_eval(
    poly: *const CarlsonDirichlet,
    sigma: f64,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> CarlsonStatus {
    guard(|| {
        let poly = deref(poly, "poly")?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let z = eval_dirichlet(&poly.0, sigma, t);
        write_out(re, z.re, "re")?;
        write_out(im, z.im, "im")
    })
}

/// `Σ |a_n|² n^{-2σ}`.
///
/// # Safety
/// `poly` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_dirichlet_limit(
    poly: *const CarlsonDirichlet,
    sigma: f64,
    out: *mut f64,
) -> CarlsonStatus {
    guard(|| {
        let poly = deref(poly, "poly")?;
        write_out(out, poly.0.carlson_limit(sigma), "out")
    })
}

/// `(1/T) ∫_0^T |f(σ + it)|² dt`, in closed form.
///
/// # Safety
/// `poly` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_lebesgue_mean(
    poly: *const CarlsonDirichlet,
    sigma: f64,
    t_max: f64,
    out: *mut f64,
) -> CarlsonStatus {
    guard(|| {
        let poly = deref(poly, "poly")?;
        let mean = lebesgue_line_mean(&poly.0, sigma, t_max)?;
        write_out(out, mean, "out")
    })
}

/// Finds `t ≥ t_min` with `(-t log p_j) mod 2π` within `eps` of
/// `targets[j]` for the first `n_targets` primes.
///
/// On success `t_out` holds the refined time and `residuals_out` (length
/// `n_targets`) its circle distances to the targets.
///
/// # Safety
/// `targets` must point to `n_targets` doubles; `t_out` must be valid;
/// `residuals_out` must be null or point to `n_targets` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn carlson_kronecker_solve(
    targets: *const f64,
    n_targets: usize,
    eps: f64,
    t_min: f64,
    budget: u64,
    t_out: *mut f64,
    residuals_out: *mut f64,
) -> CarlsonStatus {
    guard(|| {
        if targets.is_null() {
            return Err(null("targets"));
        }
        if t_out.is_null() {
            return Err(null("t_out"));
        }
        let angles = std::slice::from_raw_parts(targets, n_targets).to_vec();
        let basis = PrimeBasis::new(n_targets.max(1))?;
        let problem = KroneckerProblem::new(basis, angles, eps, t_min)?;
        let solution = solve(&problem, budget)?;
        if !residuals_out.is_null() {
            std::slice::from_raw_parts_mut(residuals_out, n_targets).copy_from_slice(&solution.residuals);
        }
        write_out(t_out, solution.t, "t_out")
    })
}

/// Parses `{"dim": d, "atoms": [{"theta": [..], "c": ..}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_point_mass_from_json(
    json: *const c_char,
    out: *mut *mut CarlsonPointMass,
) -> CarlsonStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mu = parse_point_mass_json(text)?;
        write_out(out, Box::into_raw(Box::new(CarlsonPointMass(mu))), "out")
    })
}

/// # Safety
/// `mu` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn carlson_point_mass_free(mu: *mut CarlsonPointMass) {
    if !mu.is_null() {
        drop(Box::from_raw(mu));
    }
}

/// Builds the atomic line measure for `mu` with `levels` levels.
/// `growth_const == 0` selects the default `2^k` schedule, any other value a
/// constant factor. `budget == 0` keeps the default solver budget.
///
/// # Safety
/// `mu` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_measure_build(
    mu: *const CarlsonPointMass,
    levels: u32,
    growth_const: u64,
    budget: u64,
    out: *mut *mut CarlsonLineMeasure,
) -> CarlsonStatus {
    guard(|| {
        let mu = deref(mu, "mu")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut options = BuildOptions {
            growth: match growth_const {
                0 => Growth::PowerOfTwo,
                c => Growth::Constant(c),
            },
            ..BuildOptions::default()
        };
        if budget > 0 {
            options.budget = budget;
        }
        let lambda = build_point_mass_lambda(&mu.0, levels, &options)?;
        write_out(out, Box::into_raw(Box::new(CarlsonLineMeasure(lambda))), "out")
    })
}

/// Reads an atom file written by `carlson_measure_save` or the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_measure_load(
    path: *const c_char,
    out: *mut *mut CarlsonLineMeasure,
) -> CarlsonStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let file = File::open(path).map_err(Error::from)?;
        let lambda = AtomicLineMeasure::load(BufReader::new(file))?;
        write_out(out, Box::into_raw(Box::new(CarlsonLineMeasure(lambda))), "out")
    })
}

/// Writes the atom file atomically: either the complete file appears at
/// `path` or the previous contents are left alone.
///
/// # Safety
/// `lambda` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn carlson_measure_save(
    lambda: *const CarlsonLineMeasure,
    path: *const c_char,
) -> CarlsonStatus {
    guard(|| {
        let lambda = deref(lambda, "lambda")?;
        let path = read_str(path, "path")?;
        write_atomic(Path::new(path), |w| lambda.0.save(w))?;
        Ok(())
    })
}

/// Number of atoms.
///
/// # Safety
/// `lambda` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_measure_len(lambda: *const CarlsonLineMeasure, out: *mut usize) -> CarlsonStatus {
    guard(|| {
        let lambda = deref(lambda, "lambda")?;
        write_out(out, lambda.0.len(), "out")
    })
}

/// Total mass `λ[0, ∞)`.
///
/// # Safety
/// `lambda` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_measure_total_mass(
    lambda: *const CarlsonLineMeasure,
    out: *mut f64,
) -> CarlsonStatus {
    guard(|| {
        let lambda = deref(lambda, "lambda")?;
        write_out(out, lambda.0.total_mass(), "out")
    })
}

/// # Safety
/// `lambda` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn carlson_measure_free(lambda: *mut CarlsonLineMeasure) {
    if !lambda.is_null() {
        drop(Box::from_raw(lambda));
    }
}

/// `(Σ_{t_i ≤ T} w_i |f(it_i)|²) / λ[0, T]`. Pass `INFINITY` for the whole
/// measure.
///
/// # Safety
/// `poly` and `lambda` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carlson_time_mean(
    poly: *const CarlsonDirichlet,
    lambda: *const CarlsonLineMeasure,
    t_max: f64,
    out: *mut f64,
) -> CarlsonStatus {
    guard(|| {
        let poly = deref(poly, "poly")?;
        let lambda = deref(lambda, "lambda")?;
        let mean = atomic_time_mean(&poly.0, &lambda.0, t_max)?;
        write_out(out, mean, "out")
    })
}
