//! C ABI over `mdsat`.
//!
//! Formulas are opaque handles owned by the caller and released with
//! [`mdsat_formula_free`]. Every fallible call returns an [`MdsatStatus`];
//! on failure [`mdsat_last_error`] describes the problem. Strings handed
//! out by the library must be released with [`mdsat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mdsat::cli::spectral_entries;
use mdsat::experiment::{parse_theta_grid, ThetaSpec};
use mdsat::formula::{generate, parse_dimacs, Assignment, Formula, GeneratorKind};
use mdsat::phf::{density_algorithm, verify_phf};
use mdsat::solver::{self, MuSource, PlanKind, PrepMode, ReadoutMode, Schedule, SolveConfig};
use mdsat::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Opaque formula handle.
pub struct MdsatFormula {
    inner: Formula,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdsatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidParameter = 4,
    CapExceeded = 5,
    Unsatisfiable = 6,
    RestartsExhausted = 7,
    Io = 8,
    Internal = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> MdsatStatus {
    match e {
        Error::Parse { .. }
        | Error::Tautology { .. }
        | Error::LiteralOutOfRange { .. }
        | Error::ClauseCountMismatch { .. }
        | Error::ClauseTooWide { .. }
        | Error::Json(_) => MdsatStatus::Parse,
        Error::CapExceeded { .. } => MdsatStatus::CapExceeded,
        Error::Unsatisfiable => MdsatStatus::Unsatisfiable,
        Error::RestartsExhausted { .. } => MdsatStatus::RestartsExhausted,
        Error::Io(_) => MdsatStatus::Io,
        Error::Internal(_) => MdsatStatus::Internal,
        _ => MdsatStatus::InvalidParameter,
    }
}

struct Failure(MdsatStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MdsatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MdsatStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mdsat");
            MdsatStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(MdsatStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(MdsatStatus::InvalidUtf8, e.to_string()))
}

unsafe fn formula_arg<'a>(f: *const MdsatFormula) -> Result<&'a Formula, Failure> {
    f.as_ref().map(|h| &h.inner).ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure(MdsatStatus::Internal, e.to_string()))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MdsatStatus::InvalidParameter, msg.into())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn mdsat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mdsat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mdsat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses DIMACS CNF text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_parse_dimacs(text: *const c_char, out: *mut *mut MdsatFormula) -> MdsatStatus {
    guard(|| {
        let f = parse_dimacs(str_arg(text)?)?;
        write_out(out, Box::into_raw(Box::new(MdsatFormula { inner: f })))
    })
}

/// Generates an instance. `kind` is `random_ksat`, `planted_unique`,
/// `unate` or `unate_unique`.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_generate(
    kind: *const c_char,
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
    out: *mut *mut MdsatFormula,
) -> MdsatStatus {
    guard(|| {
        let kind: GeneratorKind = str_arg(kind)?.parse()?;
        let f = generate(kind, n, m, k, seed)?;
        write_out(out, Box::into_raw(Box::new(MdsatFormula { inner: f })))
    })
}

/// # Safety
/// `f` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_free(f: *mut MdsatFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Variable count, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_num_vars(f: *const MdsatFormula) -> usize {
    f.as_ref().map_or(0, |h| h.inner.num_vars())
}

/// Clause count, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_num_clauses(f: *const MdsatFormula) -> usize {
    f.as_ref().map_or(0, |h| h.inner.num_clauses())
}

/// DIMACS text of the formula.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_to_dimacs(f: *const MdsatFormula, out: *mut *mut c_char) -> MdsatStatus {
    guard(|| {
        let text = formula_arg(f)?.to_dimacs();
        write_out(out, to_c_string(text)?)
    })
}

/// Evaluates a `0`/`1` assignment string, `x1` first.
///
/// # Safety
/// `f` must be a live handle, `assignment` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_evaluate(
    f: *const MdsatFormula,
    assignment: *const c_char,
    out: *mut bool,
) -> MdsatStatus {
    guard(|| {
        let a: Assignment = str_arg(assignment)?.parse()?;
        write_out(out, formula_arg(f)?.evaluate(&a)?)
    })
}

/// Exact solution count by enumeration.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_formula_count_solutions(f: *const MdsatFormula, out: *mut u64) -> MdsatStatus {
    guard(|| write_out(out, formula_arg(f)?.count_solutions()? as u64))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolveOptions {
    theta: Option<String>,
    delta: Option<f64>,
    readout: Option<String>,
    mode: Option<String>,
    plan: Option<String>,
    mu: Option<String>,
    max_restarts: Option<u64>,
    budget: Option<u64>,
    cubic_cycles: Option<usize>,
}

fn solve_config(f: &Formula, opts: &SolveOptions, seed: u64) -> Result<SolveConfig, Failure> {
    let spec: ThetaSpec = opts.theta.as_deref().unwrap_or("frac:1").parse()?;
    let theta = spec.resolve(f.num_vars())?;
    let mut cfg = SolveConfig::new(theta, opts.delta.unwrap_or(0.1));
    if let Some(c) = opts.cubic_cycles {
        cfg.prep.schedule = Schedule::Cubic { theta_init: theta, cycles: c };
    }
    if let Some(r) = &opts.readout {
        cfg.readout = r.parse::<ReadoutMode>()?;
    }
    if let Some(m) = &opts.mode {
        cfg.prep.mode = m.parse::<PrepMode>()?;
    }
    if let Some(p) = &opts.plan {
        cfg.prep.plan = p.parse::<PlanKind>()?;
    }
    if let Some(mu) = &opts.mu {
        cfg.prep.mu_source = mu.parse::<MuSource>()?;
    }
    cfg.prep.max_restarts = opts.max_restarts;
    cfg.budget = opts.budget;
    cfg.seed = seed;
    Ok(cfg)
}

/// Runs the solver and returns the JSON run report.
///
/// `options_json` may be null or an object with any of `theta` (radians,
/// `"frac:x"` or `"unate"`, as a string), `delta`, `readout`, `mode`,
/// `plan`, `mu`, `max_restarts`, `budget`, `cubic_cycles`.
///
/// # Safety
/// `f` must be a live handle, `options_json` null or a NUL-terminated
/// string, and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_solve(
    f: *const MdsatFormula,
    options_json: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
) -> MdsatStatus {
    guard(|| {
        let f = formula_arg(f)?;
        let opts: SolveOptions = if options_json.is_null() {
            SolveOptions::default()
        } else {
            serde_json::from_str(str_arg(options_json)?).map_err(|e| Failure(MdsatStatus::Parse, e.to_string()))?
        };
        let cfg = solve_config(f, &opts, seed)?;
        let report = solver::solve(f, &cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
        write_out(out_json, to_c_string(report.to_json()?)?)
    })
}

/// Spectral diagnostics as a JSON array, one entry per grid angle.
///
/// # Safety
/// `f` must be a live handle, `thetas` a NUL-terminated comma-separated
/// grid and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdsat_spectral(
    f: *const MdsatFormula,
    thetas: *const c_char,
    uniform_gap: bool,
    out_json: *mut *mut c_char,
) -> MdsatStatus {
    guard(|| {
        let f = formula_arg(f)?;
        let grid = parse_theta_grid(str_arg(thetas)?)?;
        let entries = spectral_entries(f, &grid, uniform_gap);
        let json = serde_json::to_string(&entries).map_err(|e| invalid(e.to_string()))?;
        write_out(out_json, to_c_string(json)?)
    })
}

/// Builds an `(n, k)` perfect hash family. The rows are returned as text,
/// one row per line; `out_verified` reports exhaustive verification.
///
/// # Safety
/// `out_text` and `out_verified` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mdsat_phf(
    n: usize,
    k: usize,
    out_text: *mut *mut c_char,
    out_verified: *mut bool,
) -> MdsatStatus {
    guard(|| {
        if out_text.is_null() || out_verified.is_null() {
            return Err(null());
        }
        let fam = density_algorithm(n, k)?;
        write_out(out_verified, verify_phf(&fam))?;
        write_out(out_text, to_c_string(fam.to_text())?)
    })
}
