//! Residual, Jacobian, damped Newton and the continuation driver.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GridProblem, LogEntry, SolveOptions, SolverState, CONE_GUARD};
use crate::cone::gamma_margin;
use crate::error::{Error, Result};
use crate::geometry::{shape_matrix, Signature, SPACELIKE_TOL};
use crate::linalg::jacobi_eigen;
use crate::symfunc::{sigma, sigma_matrix_grad};

/// Position on the path `f_t = t f + (1 - t) f0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Homotopy {
    pub t: f64,
    /// `f0` per interior node (in `Grid::interior` order); `None` means the
    /// target equation (`t` is then ignored).
    pub f0: Option<Vec<f64>>,
}

impl Homotopy {
    pub fn target() -> Self {
        Self { t: 1.0, f0: None }
    }

    fn weights(&self, r: usize) -> (f64, f64) {
        match &self.f0 {
            Some(f0) => (self.t, (1.0 - self.t) * f0[r]),
            None => (1.0, 0.0),
        }
    }
}

/// Operator value and cone margin at a node.
fn node_operator(hess: &DMatrix<f64>, p: &DVector<f64>, signature: Signature, k: usize) -> Result<(f64, f64)> {
    let m = match signature {
        Signature::Euclidean => hess.clone(),
        Signature::Minkowski => shape_matrix(p, hess, signature)?.matrix,
    };
    let lam = jacobi_eigen(&m)?.values;
    Ok((sigma(k as i64, lam.as_slice()), gamma_margin(lam.as_slice(), k)))
}

/// Residuals and admissibility of a grid function.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Per interior node, in `Grid::interior` order.
    pub residual: Vec<f64>,
    pub norm: f64,
    pub min_margin: f64,
    pub cone_ok: bool,
}

/// Residual `F(u) - f_t` at every interior node plus the cone diagnostics.
pub fn evaluate(problem: &GridProblem, u: &[f64], hom: &Homotopy) -> Result<Evaluation> {
    let grid = &problem.grid;
    let interior = grid.interior();
    let rows: Vec<(f64, f64)> = interior
        .par_iter()
        .enumerate()
        .map(|(r, &flat)| {
            let (p, hess) = grid.derivatives(u, flat);
            let (value, margin) = node_operator(&hess, &p, problem.signature, problem.cone_k)?;
            let x = grid.point(flat);
            let f = problem.rhs.eval(x.as_slice(), u[flat], &p, problem.signature)?.f;
            let (wt, w0) = hom.weights(r);
            Ok((value - wt * f - w0, margin))
        })
        .collect::<Result<_>>()?;
    let residual: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let norm = residual.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min_margin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(Evaluation { residual, norm, min_margin, cone_ok: min_margin > CONE_GUARD && norm.is_finite() })
}

/// Residual of the target equation for `state.u`.
pub fn assemble_residual(state: &SolverState, problem: &GridProblem) -> Result<Vec<f64>> {
    Ok(evaluate(problem, &state.u, &Homotopy::target())?.residual)
}

/// Residual at a point of the continuation path.
pub fn assemble_residual_at(problem: &GridProblem, u: &[f64], hom: &Homotopy) -> Result<Vec<f64>> {
    Ok(evaluate(problem, u, hom)?.residual)
}

/// Sparse Jacobian in triplet form; rows and columns are interior nodes.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub size: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Jacobian {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for &(r, c, val) in &self.entries {
            out[r] += val * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for &(r, c, val) in &self.entries {
            m[(r, c)] += val;
        }
        m
    }

    /// Solves `J x = b` by sparse LU.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.size, self.size, &triplets).ok()?;
        let lu = a.sp_lu().ok()?;
        let mut rhs = Mat::<f64>::from_fn(self.size, 1, |i, _| b[i]);
        lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.size).map(|i| rhs[(i, 0)]).collect();
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Derivative of the node operator with respect to the Hessian entries
/// (a symmetric matrix `G` with `dF = sum G_ab dH_ab`) and the gradient.
fn operator_derivatives(
    hess: &DMatrix<f64>,
    p: &DVector<f64>,
    signature: Signature,
    k: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = p.len();
    match signature {
        Signature::Euclidean => Ok((sigma_matrix_grad(k as i64, hess)?.1, DVector::zeros(n))),
        Signature::Minkowski => {
            let s = shape_matrix(p, hess, signature)?;
            let (_, f) = sigma_matrix_grad(k as i64, &s.matrix)?;
            let g = s.l_inv.transpose() * f * &s.l_inv / s.w;
            let mut dp = DVector::zeros(n);
            let step = 1e-6;
            for a in 0..n {
                let mut pp = p.clone();
                pp[a] += step;
                let up = node_operator(hess, &pp, signature, k)?.0;
                pp[a] -= 2.0 * step;
                let dn = node_operator(hess, &pp, signature, k)?.0;
                dp[a] = (up - dn) / (2.0 * step);
            }
            Ok((g, dp))
        }
    }
}

fn push(row: &mut Vec<(usize, f64)>, node: usize, v: f64) {
    match row.iter_mut().find(|e| e.0 == node) {
        Some(e) => e.1 += v,
        None => row.push((node, v)),
    }
}

/// Jacobian of [`assemble_residual_at`] with respect to the interior values.
pub fn assemble_jacobian(problem: &GridProblem, u: &[f64], hom: &Homotopy) -> Result<Jacobian> {
    let grid = &problem.grid;
    let n = grid.ndim();
    let interior = grid.interior();
    let mut column = vec![usize::MAX; grid.len()];
    for (c, &f) in interior.iter().enumerate() {
        column[f] = c;
    }
    let rows: Vec<Vec<(usize, usize, f64)>> = interior
        .par_iter()
        .enumerate()
        .map(|(r, &flat)| {
            let (p, hess) = grid.derivatives(u, flat);
            let (g, dp) = operator_derivatives(&hess, &p, problem.signature, problem.cone_k)?;
            let x = grid.point(flat);
            let rhs = problem.rhs.eval(x.as_slice(), u[flat], &p, problem.signature)?;
            let (wt, _) = hom.weights(r);
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(1 + 2 * n * n);
            for a in 0..n {
                for b in a..n {
                    let weight = if a == b { g[(a, a)] } else { g[(a, b)] + g[(b, a)] };
                    for (node, w) in grid.hessian_stencil(flat, a, b) {
                        push(&mut row, node, weight * w);
                    }
                }
                let wp = dp[a] - wt * rhs.f_p[a];
                if wp != 0.0 {
                    for (node, w) in grid.gradient_stencil(flat, a) {
                        push(&mut row, node, wp * w);
                    }
                }
            }
            push(&mut row, flat, -wt * rhs.f_u);
            Ok(row
                .into_iter()
                .filter(|&(node, _)| column[node] != usize::MAX)
                .map(|(node, v)| (r, column[node], v))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(Jacobian { size: interior.len(), entries: rows.into_iter().flatten().collect() })
}

const MAX_HALVINGS_LINE_SEARCH: i32 = 20;

fn describe(state: &SolverState, ev: &Evaluation, t: f64) -> SolverState {
    SolverState {
        residual_norm: ev.norm,
        cone_ok: ev.cone_ok,
        min_margin: ev.min_margin,
        continuation_t: t,
        ..state.clone()
    }
}

/// One damped Newton step on the path point `hom`: solve `J d = -r`, then
/// take the largest `lambda in {1, 1/2, ..., 2^-20}` whose update stays in
/// the cone (and spacelike in Minkowski mode) and lowers the residual, or
/// already meets `tol`.
pub fn newton_step_homotopy(
    state: &SolverState,
    problem: &GridProblem,
    hom: &Homotopy,
    tol: f64,
) -> Result<SolverState> {
    let ev = evaluate(problem, &state.u, hom)?;
    let t = hom.t;
    let iteration = state.newton_iter;
    let jac = assemble_jacobian(problem, &state.u, hom)?;
    let rhs: Vec<f64> = ev.residual.iter().map(|v| -v).collect();
    let delta = jac.solve(&rhs).ok_or(Error::SingularJacobian { t, iteration })?;
    let interior = problem.grid.interior();
    for j in 0..=MAX_HALVINGS_LINE_SEARCH {
        let lambda = 0.5f64.powi(j);
        let mut u = state.u.clone();
        for (c, &f) in interior.iter().enumerate() {
            u[f] += lambda * delta[c];
        }
        let Ok(trial) = evaluate(problem, &u, hom) else { continue };
        if trial.cone_ok && (trial.norm < ev.norm || trial.norm <= tol) {
            let next = SolverState { u, newton_iter: iteration + 1, damping: lambda, ..state.clone() };
            return Ok(describe(&next, &trial, t));
        }
    }
    Err(Error::LineSearchFailure { t, iteration, residual: ev.norm })
}

/// [`newton_step_homotopy`] on the target equation with the default tolerance.
pub fn newton_step(state: &SolverState, problem: &GridProblem) -> Result<SolverState> {
    newton_step_homotopy(state, problem, &Homotopy::target(), super::TOL_NEWTON)
}

/// Newton iteration at a fixed path point until `residual <= tol`.
pub fn newton_solve(
    state: &SolverState,
    problem: &GridProblem,
    hom: &Homotopy,
    tol: f64,
    max_iter: usize,
    log: &mut Vec<LogEntry>,
) -> Result<SolverState> {
    let ev = match evaluate(problem, &state.u, hom) {
        Ok(ev) => ev,
        Err(Error::NotSpacelike { .. }) => {
            return Err(Error::LineSearchFailure { t: hom.t, iteration: 0, residual: f64::INFINITY })
        }
        Err(e) => return Err(e),
    };
    let mut cur = describe(&SolverState { newton_iter: 0, damping: 1.0, ..state.clone() }, &ev, hom.t);
    if !cur.cone_ok {
        return Err(Error::LineSearchFailure { t: hom.t, iteration: 0, residual: cur.residual_norm });
    }
    log.push(LogEntry {
        t: hom.t,
        iteration: 0,
        residual: cur.residual_norm,
        damping: 1.0,
        min_margin: cur.min_margin,
    });
    while cur.residual_norm > tol {
        if cur.newton_iter >= max_iter {
            return Err(Error::NotConverged { t: hom.t, iterations: cur.newton_iter, residual: cur.residual_norm });
        }
        cur = newton_step_homotopy(&cur, problem, hom, tol)?;
        log.push(LogEntry {
            t: hom.t,
            iteration: cur.newton_iter,
            residual: cur.residual_norm,
            damping: cur.damping,
            min_margin: cur.min_margin,
        });
    }
    Ok(cur)
}

/// Starting point of the continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    /// Seed values at every node.
    pub u0: Vec<f64>,
    /// Coefficients `(c, b, Q)` of `c + b.x + x^T Q x / 2`.
    pub constant: f64,
    pub linear: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// Multiple of `|x|^2/2` added to reach the cone (0 when not needed).
    pub alpha: f64,
}

/// Least-squares quadratic fit to the boundary data, shifted by
/// `alpha |x|^2 / 2` when its Hessian is not safely inside the cone.
pub fn seed(problem: &GridProblem) -> Result<Seed> {
    let grid = &problem.grid;
    let n = grid.ndim();
    let phi = problem.boundary_values()?;
    let boundary = grid.boundary();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let ncoef = 1 + n + pairs.len();
    let mut design = DMatrix::zeros(boundary.len(), ncoef);
    let mut target = DVector::zeros(boundary.len());
    for (r, &f) in boundary.iter().enumerate() {
        let x = grid.point(f);
        design[(r, 0)] = 1.0;
        for a in 0..n {
            design[(r, 1 + a)] = x[a];
        }
        for (j, &(a, b)) in pairs.iter().enumerate() {
            design[(r, 1 + n + j)] = if a == b { 0.5 * x[a] * x[a] } else { x[a] * x[b] };
        }
        target[r] = phi[f];
    }
    let coef = design
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::InvalidInput(format!("seed fit failed: {e}")))?;
    let mut q = DMatrix::zeros(n, n);
    for (j, &(a, b)) in pairs.iter().enumerate() {
        q[(a, b)] = coef[1 + n + j];
        q[(b, a)] = coef[1 + n + j];
    }
    let lam = jacobi_eigen(&q)?;
    let admissible = match problem.signature {
        Signature::Euclidean => gamma_margin(lam.values.as_slice(), problem.cone_k) > 1e-3,
        Signature::Minkowski => lam.min() > 1e-3,
    };
    let alpha = if admissible { 0.0 } else { (1.0 - lam.min()).max(0.0) };
    let b = DVector::from_iterator(n, (0..n).map(|a| coef[1 + a]));
    let qa = &q + alpha * DMatrix::identity(n, n);
    let u0: Vec<f64> = (0..grid.len())
        .map(|f| {
            let x = grid.point(f);
            coef[0] + b.dot(&x) + 0.5 * (x.transpose() * &qa * &x)[(0, 0)]
        })
        .collect();
    Ok(Seed {
        u0,
        constant: coef[0],
        linear: b.iter().copied().collect(),
        hessian: (0..n).map(|a| (0..n).map(|c| qa[(a, c)]).collect()).collect(),
        alpha,
    })
}

/// Result of [`solve_continuation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub state: SolverState,
    pub log: Vec<LogEntry>,
    pub seed_alpha: f64,
    /// Path points that were accepted.
    pub t_values: Vec<f64>,
}

/// Continuation from the seed `u0` to the target problem: the right side
/// moves along `t f + (1 - t) F(u0)` and the boundary data along
/// `(1 - t) u0 + t phi`. Failing path steps are halved up to
/// `opts.max_halvings` times.
pub fn solve_continuation(problem: &GridProblem, opts: &SolveOptions) -> Result<SolveOutcome> {
    if opts.t_steps == 0 {
        return Err(Error::InvalidInput("t_steps must be at least 1".into()));
    }
    let grid = &problem.grid;
    let s = seed(problem)?;
    let phi = problem.boundary_values()?;
    let boundary = grid.boundary();
    let interior = grid.interior();

    if problem.signature == Signature::Minkowski {
        for &f in &interior {
            let (p, _) = grid.derivatives(&s.u0, f);
            if p.norm() > 1.0 - SPACELIKE_TOL {
                return Err(Error::NotSpacelike { norm: p.norm() });
            }
        }
    }
    let seed_hom = Homotopy { t: 0.0, f0: Some(vec![0.0; interior.len()]) };
    // F(u0) itself: with f0 = 0 and t = 0 the residual is the operator value.
    let f0 = evaluate(problem, &s.u0, &seed_hom)?;
    if !f0.cone_ok {
        return Err(Error::InvalidInput("seed is not admissible".into()));
    }
    for &f in &interior {
        let x = grid.point(f);
        let (p, _) = grid.derivatives(&s.u0, f);
        let v = problem.rhs.eval(x.as_slice(), s.u0[f], &p, problem.signature)?.f;
        if !(v > 0.0) {
            return Err(Error::NonPositiveRhs { value: v, x: x.iter().copied().collect() });
        }
    }
    let f0 = f0.residual;

    let mut log = Vec::new();
    let mut t_values = vec![0.0];
    let mut state = SolverState { continuation_t: 0.0, ..SolverState::from_values(s.u0.clone()) };
    let mut t = 0.0;
    let mut dt = 1.0 / opts.t_steps as f64;
    let mut halvings = 0;
    let mut last = None;
    while t < 1.0 {
        let t_next = if t + dt > 1.0 - 1e-14 { 1.0 } else { t + dt };
        let mut trial = state.clone();
        for &f in &boundary {
            trial.u[f] = (1.0 - t_next) * s.u0[f] + t_next * phi[f];
        }
        let hom = Homotopy { t: t_next, f0: Some(f0.clone()) };
        match newton_solve(&trial, problem, &hom, opts.tol, opts.max_iter, &mut log) {
            Ok(next) => {
                state = next;
                t = t_next;
                t_values.push(t);
                last = Some(());
            }
            Err(
                e @ (Error::LineSearchFailure { .. } | Error::SingularJacobian { .. } | Error::NotConverged { .. }),
            ) => {
                if halvings >= opts.max_halvings {
                    return Err(e);
                }
                halvings += 1;
                dt *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    debug_assert!(last.is_some());
    // The last accepted state solves the t = 1 problem, which is the target.
    let target = evaluate(problem, &state.u, &Homotopy::target())?;
    state.residual_norm = target.norm;
    state.continuation_t = 1.0;
    Ok(SolveOutcome { state, log, seed_alpha: s.alpha, t_values })
}
