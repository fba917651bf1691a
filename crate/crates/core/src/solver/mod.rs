//! Finite-difference Newton continuation for `sigma_{n-1}[D^2 u] = f(x, u, Du)`
//! on boxes (Hessian or Minkowski-curvature form) and the radial sphere
//! problem.

pub mod grid;
pub mod io;
pub mod newton;
pub mod rhs;
pub mod sphere;

use serde::{Deserialize, Serialize};

pub use grid::Grid;
pub use newton::{
    assemble_jacobian, assemble_residual, assemble_residual_at, evaluate, newton_solve, newton_step,
    newton_step_homotopy, seed, solve_continuation, Evaluation, Homotopy, Jacobian, Seed, SolveOutcome,
};
pub use rhs::{manufactured_exact, BoundaryPreset, BoundarySpec, RadialRhs, RhsSpec};
pub use sphere::{sphere_barrier_check, sphere_solve, BarrierReport, SphereSolution};

use crate::error::{Error, Result};
use crate::geometry::Signature;

/// Default residual tolerance of the Newton loop (max norm).
pub const TOL_NEWTON: f64 = 1e-10;

/// Cone guard: every interior node needs `gamma_margin > CONE_GUARD`.
pub const CONE_GUARD: f64 = 1e-12;

/// A Dirichlet problem on a box.
#[derive(Debug, Clone)]
pub struct GridProblem {
    pub grid: Grid,
    pub signature: Signature,
    pub rhs: RhsSpec,
    pub boundary: BoundarySpec,
    /// Cone order, `n - 1`.
    pub cone_k: usize,
}

impl GridProblem {
    pub fn new(
        bounds: &[[f64; 2]],
        h: &[f64],
        signature: Signature,
        rhs: RhsSpec,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        let n = bounds.len();
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidInput(format!("dimension {n} is not supported (use 2 or 3)")));
        }
        let grid = Grid::new(bounds, h)?;
        boundary.compile()?;
        Ok(Self { grid, signature, rhs, boundary, cone_k: n - 1 })
    }

    /// Unit box `[0, 1]^n` with `cells` intervals per axis.
    pub fn unit_box(
        n: usize,
        cells: usize,
        signature: Signature,
        rhs: RhsSpec,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        Self::new(&vec![[0.0, 1.0]; n], &vec![1.0 / cells as f64; n], signature, rhs, boundary)
    }

    pub fn n(&self) -> usize {
        self.grid.ndim()
    }

    /// Dirichlet data sampled at every node (interior values included).
    pub fn boundary_values(&self) -> Result<Vec<f64>> {
        let b = self.boundary.compile()?;
        (0..self.grid.len()).map(|f| b.eval(self.grid.point(f).as_slice())).collect()
    }
}

/// Newton iterate on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    /// Values at every node, boundary included (flattened, axis 0 slowest).
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iter: usize,
    pub continuation_t: f64,
    pub damping: f64,
    pub cone_ok: bool,
    /// Smallest cone margin over the interior nodes.
    pub min_margin: f64,
}

impl SolverState {
    /// Wraps node values; the diagnostics are filled in by the solver.
    pub fn from_values(u: Vec<f64>) -> Self {
        Self {
            u,
            residual_norm: f64::INFINITY,
            newton_iter: 0,
            continuation_t: 1.0,
            damping: 1.0,
            cone_ok: false,
            min_margin: f64::NAN,
        }
    }
}

/// Knobs of [`solve_continuation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub t_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// How many times a failing continuation step may be halved.
    pub max_halvings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { t_steps: 4, tol: TOL_NEWTON, max_iter: 50, max_halvings: 12 }
    }
}

/// One Newton iteration in the convergence log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: f64,
    pub iteration: usize,
    #[serde(with = "crate::report::json_float")]
    pub residual: f64,
    pub damping: f64,
    #[serde(with = "crate::report::json_float")]
    pub min_margin: f64,
}
