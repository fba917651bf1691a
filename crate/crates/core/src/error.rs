use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("degenerate spectrum: eigenvalue gap {gap:e} is below {tol:e}")]
    DegenerateSpectrum { gap: f64, tol: f64 },

    #[error("vector is not in the Garding cone Gamma_{k}")]
    NotInCone { k: usize },

    #[error("cone sampler exhausted after {attempts} rejected draws")]
    SamplerExhausted { attempts: usize },

    #[error("gradient is not spacelike: |Du| = {norm}")]
    NotSpacelike { norm: f64 },

    #[error("normal is not a unit vector: |nu| = {norm}")]
    NonUnitNormal { norm: f64 },

    #[error("curvature entry {value} exceeds the exponential range guard")]
    OutOfRange { value: f64 },

    #[error("line search stalled at t = {t}, Newton iteration {iteration} (residual {residual:e})")]
    LineSearchFailure { t: f64, iteration: usize, residual: f64 },

    #[error("singular Jacobian at t = {t}, Newton iteration {iteration}")]
    SingularJacobian { t: f64, iteration: usize },

    #[error("Newton did not converge at t = {t}: residual {residual:e} after {iterations} iterations")]
    NotConverged { t: f64, iterations: usize, residual: f64 },

    #[error("right-hand side is not positive: f = {value} at x = {x:?}")]
    NonPositiveRhs { value: f64, x: Vec<f64> },

    #[error("no root of r^k f(r) - C(n,k) on [{r1}, {r2}]")]
    NoRoot { r1: f64, r2: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
