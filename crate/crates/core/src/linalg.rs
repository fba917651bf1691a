//! Dense symmetric linear algebra helpers.
//!
//! The eigensolver is a cyclic Jacobi iteration. Each off-diagonal pair is
//! rotated until it is negligible relative to the geometric mean of the two
//! diagonal entries it couples, which keeps small eigenvalues accurate even
//! when one diagonal entry is many orders of magnitude larger than the rest
//! (the situation produced by the `K g g^T` term in the key-inequality forms).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Relative threshold below which an off-diagonal entry is treated as zero.
const PAIR_TOL: f64 = 1e-16;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues sorted in descending order.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Eigenvector belonging to the smallest eigenvalue.
    pub fn min_vector(&self) -> DVector<f64> {
        let last = self.values.len() - 1;
        self.vectors.column(last).into_owned()
    }
}

/// Cyclic Jacobi eigen-decomposition of the symmetric part of `a`.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidInput(format!("eigensolver needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = DMatrix::<f64>::identity(n, n);

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                if apq.abs() <= PAIR_TOL * (app.abs() * aqq.abs()).sqrt() {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                rotate(&mut m, &mut v, p, q);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(jacobi_eigen(a)?.values.iter().copied().collect())
}

fn rotate(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let n = m.nrows();
    let apq = m[(p, q)];
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t =
        if theta.abs() > 1e150 { 0.5 / theta } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r != p && r != q {
            let g = m[(r, p)];
            let h = m[(r, q)];
            let rp = g - s * (h + g * tau);
            let rq = h + s * (g - h * tau);
            m[(r, p)] = rp;
            m[(p, r)] = rp;
            m[(r, q)] = rq;
            m[(q, r)] = rq;
        }
    }
    for r in 0..n {
        let g = v[(r, p)];
        let h = v[(r, q)];
        v[(r, p)] = g - s * (h + g * tau);
        v[(r, q)] = h + s * (g - h * tau);
    }
}

/// Orthogonal Householder reflector `Q` whose first column is `g / |g|`.
///
/// Returns the identity when `g` vanishes.
pub fn householder_to_first_axis(g: &DVector<f64>) -> DMatrix<f64> {
    let n = g.len();
    let norm = g.norm();
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    // Reflect e1 onto g/|g|: H = I - 2 w w^T with w = (e1 - g/|g|) normalized.
    let mut w = -g / norm;
    w[0] += 1.0;
    let wn = w.norm();
    if wn < 1e-300 {
        return DMatrix::identity(n, n);
    }
    w /= wn;
    DMatrix::identity(n, n) - 2.0 * &w * w.transpose()
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Asymmetry `max |m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
