//! C ABI for `curvest`.
//!
//! Every function returns a [`CurvestStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be copied
//! with [`curvest_last_error`]. Handles are opaque and released with their
//! `_free` function. Panics are caught and reported as
//! [`CurvestStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use nalgebra::{DMatrix, DVector};

use curvest::cone::{gamma_margin, in_gamma_k};
use curvest::geometry::{curvatures_euclidean, curvatures_minkowski, GraphJet};
use curvest::report::{sort_rows, write_csv};
use curvest::solver::io::ProblemFile;
use curvest::solver::{solve_continuation, sphere_solve, GridProblem, RadialRhs, SolveOptions, SolverState};
use curvest::sweep::{self, SweepConfig, SweepOutput};
use curvest::symfunc::sigma;
use curvest::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvestStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotInCone = 3,
    Numerical = 4,
    NotConverged = 5,
    NoRoot = 6,
    Io = 7,
    Panic = 8,
}

/// Geometry of the ambient space.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvestSignature {
    Euclidean = 0,
    Minkowski = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> CurvestStatus {
    match err {
        Error::InvalidInput(_) | Error::Json(_) | Error::NotSpacelike { .. } | Error::NonUnitNormal { .. } => {
            CurvestStatus::InvalidInput
        }
        Error::NotInCone { .. } | Error::NonPositiveRhs { .. } => CurvestStatus::NotInCone,
        Error::LineSearchFailure { .. } | Error::SingularJacobian { .. } | Error::NotConverged { .. } => {
            CurvestStatus::NotConverged
        }
        Error::NoRoot { .. } => CurvestStatus::NoRoot,
        Error::Io(_) | Error::Csv(_) => CurvestStatus::Io,
        _ => CurvestStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Runs `f`, records any error and maps it to a status.
fn guard(f: impl FnOnce() -> Outcome) -> CurvestStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CurvestStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CurvestStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CurvestStatus::Panic
        }
    }
}

/// Reads `len` values from `ptr`; a null pointer is allowed for `len == 0`.
unsafe fn input<'a>(ptr: *const f64, len: usize, what: &'static str) -> Outcome<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, what: &'static str) -> Outcome<&'a mut T> {
    ptr.as_mut().ok_or(Failure::Null(what))
}

unsafe fn text<'a>(ptr: *const c_char, what: &'static str) -> Outcome<&'a str> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure::Lib(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn curvest_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `sigma_k` of `kappa[0..n]`.
///
/// # Safety
/// `kappa` must point to `n` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn curvest_sigma(kappa: *const f64, n: usize, k: i64, out: *mut f64) -> CurvestStatus {
    guard(|| {
        let kappa = input(kappa, n, "kappa")?;
        *output(out, "out")? = sigma(k, kappa);
        Ok(())
    })
}

/// Whether `kappa` lies in the open cone `Gamma_k` (1 or 0), and its
/// scale-free margin `min_m sigma_m / |kappa|^m` over `m <= k`.
///
/// # Safety
/// `kappa` must point to `n` doubles; `inside` and `margin` must be writable.
#[no_mangle]
pub unsafe extern "C" fn curvest_gamma_margin(
    kappa: *const f64,
    n: usize,
    k: usize,
    inside: *mut i32,
    margin: *mut f64,
) -> CurvestStatus {
    guard(|| {
        let kappa = input(kappa, n, "kappa")?;
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k = {k}, n = {n}")).into());
        }
        *output(inside, "inside")? = i32::from(in_gamma_k(kappa, k));
        *output(margin, "margin")? = gamma_margin(kappa, k);
        Ok(())
    })
}

/// Principal curvatures (descending) of the graph of `u` with gradient
/// `du[0..n]` and row-major Hessian `d2u[0..n*n]`, written to `kappa_out[0..n]`.
///
/// # Safety
/// `du`, `d2u` and `kappa_out` must hold `n`, `n*n` and `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn curvest_curvatures(
    du: *const f64,
    d2u: *const f64,
    n: usize,
    signature: CurvestSignature,
    kappa_out: *mut f64,
) -> CurvestStatus {
    guard(|| {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()).into());
        }
        let du = input(du, n, "du")?;
        let d2u = input(d2u, n * n, "d2u")?;
        if kappa_out.is_null() {
            return Err(Failure::Null("kappa_out"));
        }
        let jet = GraphJet::from_derivatives(DVector::from_column_slice(du), DMatrix::from_row_slice(n, n, d2u))?;
        let data = match signature {
            CurvestSignature::Euclidean => curvatures_euclidean(&jet)?,
            CurvestSignature::Minkowski => curvatures_minkowski(&jet)?,
        };
        slice::from_raw_parts_mut(kappa_out, n).copy_from_slice(data.kappa.values());
        Ok(())
    })
}

/// Radius of the sphere solving `sigma_k(1/r, ..., 1/r) = coef * r^exponent`
/// on `[r1, r2]`; `degenerate` is set to 1 when every radius solves it.
///
/// # Safety
/// `r_out` and `degenerate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn curvest_sphere_solve(
    coef: f64,
    exponent: f64,
    r1: f64,
    r2: f64,
    n: usize,
    k: usize,
    r_out: *mut f64,
    degenerate: *mut i32,
) -> CurvestStatus {
    guard(|| {
        let s = sphere_solve(&RadialRhs::Power { coef, exponent }, r1, r2, n, k)?;
        *output(r_out, "r_out")? = s.r;
        *output(degenerate, "degenerate")? = i32::from(s.degenerate);
        Ok(())
    })
}

/// Rows and thresholds of a finished sweep.
pub struct CurvestSweep {
    output: SweepOutput,
}

fn run_sweep(name: &str, cfg: &SweepConfig) -> curvest::Result<SweepOutput> {
    match name {
        "identities" => sweep::identities(cfg),
        "prop21" => sweep::prop21(cfg),
        "determinants" => sweep::determinants(cfg),
        "schur" => sweep::schur(cfg),
        "ratio" => sweep::ratio_bound(cfg),
        "guan" => sweep::guan(cfg),
        "divided_difference" => sweep::divided_difference(cfg),
        "combination" => sweep::combination(cfg),
        "lemmas" => sweep::lemmas(cfg),
        "counterexample" => sweep::counterexample(cfg),
        "curvature" => sweep::curvature_sweep(cfg, curvest::geometry::Signature::Minkowski),
        other => Err(Error::InvalidInput(format!("unknown sweep `{other}`"))),
    }
}

/// Runs the sweep `name` (identities, prop21, determinants, schur, ratio,
/// guan, divided_difference, combination, lemmas, counterexample, curvature)
/// with default parameters over `dims[0..ndims]`.
///
/// # Safety
/// `name` must be a NUL-terminated string, `dims` must hold `ndims` values
/// and `out` must be writable. Free the handle with [`curvest_sweep_free`].
#[no_mangle]
pub unsafe extern "C" fn curvest_sweep_run(
    name: *const c_char,
    seed: u64,
    samples: usize,
    dims: *const usize,
    ndims: usize,
    out: *mut *mut CurvestSweep,
) -> CurvestStatus {
    guard(|| {
        let name = text(name, "name")?;
        if dims.is_null() || ndims == 0 {
            return Err(Failure::Null("dims"));
        }
        let out = output(out, "out")?;
        if seed == 0 || samples == 0 {
            return Err(Error::InvalidInput("seed and samples must be positive".into()).into());
        }
        let cfg = SweepConfig::new(seed, samples, slice::from_raw_parts(dims, ndims));
        let mut output = run_sweep(name, &cfg)?;
        sort_rows(&mut output.rows);
        *out = Box::into_raw(Box::new(CurvestSweep { output }));
        Ok(())
    })
}

/// Number of rows and of failed checks.
///
/// # Safety
/// `sweep` must come from [`curvest_sweep_run`]; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn curvest_sweep_counts(
    sweep: *const CurvestSweep,
    rows: *mut usize,
    violations: *mut usize,
) -> CurvestStatus {
    guard(|| {
        let s = sweep.as_ref().ok_or(Failure::Null("sweep"))?;
        *output(rows, "rows")? = s.output.rows.len();
        *output(violations, "violations")? = s.output.violations();
        Ok(())
    })
}

/// Writes the rows as CSV to `path`.
///
/// # Safety
/// `sweep` must come from [`curvest_sweep_run`] and `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn curvest_sweep_write_csv(sweep: *const CurvestSweep, path: *const c_char) -> CurvestStatus {
    guard(|| {
        let s = sweep.as_ref().ok_or(Failure::Null("sweep"))?;
        let path = text(path, "path")?;
        write_csv(&s.output.rows, File::create(path).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Releases a sweep handle; null is ignored.
///
/// # Safety
/// `sweep` must be null or come from [`curvest_sweep_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn curvest_sweep_free(sweep: *mut CurvestSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// A grid problem and, after [`curvest_solver_solve`], its solution.
pub struct CurvestSolver {
    problem: GridProblem,
    state: Option<SolverState>,
}

/// Builds a solver from a JSON problem description.
///
/// # Safety
/// `problem_json` must be a NUL-terminated string and `out` writable. Free
/// the handle with [`curvest_solver_free`].
#[no_mangle]
pub unsafe extern "C" fn curvest_solver_new(
    problem_json: *const c_char,
    out: *mut *mut CurvestSolver,
) -> CurvestStatus {
    guard(|| {
        let json = text(problem_json, "problem_json")?;
        let out = output(out, "out")?;
        let problem = ProblemFile::from_json(json)?.into_problem()?;
        *out = Box::into_raw(Box::new(CurvestSolver { problem, state: None }));
        Ok(())
    })
}

/// Number of grid nodes (boundary included).
///
/// # Safety
/// `solver` must come from [`curvest_solver_new`]; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn curvest_solver_len(solver: *const CurvestSolver, len: *mut usize) -> CurvestStatus {
    guard(|| {
        let s = solver.as_ref().ok_or(Failure::Null("solver"))?;
        *output(len, "len")? = s.problem.grid.len();
        Ok(())
    })
}

/// Solves by continuation with `t_steps` steps (0 picks the default) and
/// writes the final residual norm.
///
/// # Safety
/// `solver` must come from [`curvest_solver_new`]; `residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn curvest_solver_solve(
    solver: *mut CurvestSolver,
    t_steps: usize,
    tol: f64,
    residual: *mut f64,
) -> CurvestStatus {
    guard(|| {
        let s = solver.as_mut().ok_or(Failure::Null("solver"))?;
        let residual = output(residual, "residual")?;
        let mut opts = SolveOptions::default();
        if t_steps > 0 {
            opts.t_steps = t_steps;
        }
        if tol > 0.0 {
            opts.tol = tol;
        }
        let outcome = solve_continuation(&s.problem, &opts)?;
        *residual = outcome.state.residual_norm;
        s.state = Some(outcome.state);
        Ok(())
    })
}

/// Copies the solution (row-major, axis 0 slowest) and the node coordinates
/// (`len * n` values, may be null) into caller buffers of `len` nodes.
///
/// # Safety
/// `solver` must come from [`curvest_solver_new`]; `values` must hold `len`
/// doubles and `points`, if not null, `len * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn curvest_solver_values(
    solver: *const CurvestSolver,
    values: *mut f64,
    points: *mut f64,
    len: usize,
) -> CurvestStatus {
    guard(|| {
        let s = solver.as_ref().ok_or(Failure::Null("solver"))?;
        let state = s.state.as_ref().ok_or_else(|| Error::InvalidInput("solver has not run".into()))?;
        let grid = &s.problem.grid;
        if len != grid.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} nodes, grid has {}", grid.len())).into());
        }
        if values.is_null() {
            return Err(Failure::Null("values"));
        }
        slice::from_raw_parts_mut(values, len).copy_from_slice(&state.u);
        if !points.is_null() {
            let n = grid.ndim();
            let pts = slice::from_raw_parts_mut(points, len * n);
            for i in 0..len {
                pts[i * n..(i + 1) * n].copy_from_slice(grid.point(i).as_slice());
            }
        }
        Ok(())
    })
}

/// Releases a solver handle; null is ignored.
///
/// # Safety
/// `solver` must be null or come from [`curvest_solver_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn curvest_solver_free(solver: *mut CurvestSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}
