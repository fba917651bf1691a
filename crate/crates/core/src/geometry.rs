//! Principal curvatures of graphs `x -> (x, u(x))` in Euclidean space and
//! in Minkowski space.
//!
//! Orientation: Euclidean graphs use the upward normal, spacelike Minkowski
//! graphs the future-directed normal, so convex `u` has positive curvatures
//! in both signatures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, jacobi_eigen};
use crate::symfunc::CurvatureVector;

/// Gradients with `|Du| > 1 - SPACELIKE_TOL` are rejected in Minkowski mode.
pub const SPACELIKE_TOL: f64 = 1e-8;

/// Ambient signature of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    Euclidean,
    Minkowski,
}

/// Value, gradient and Hessian of `u` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphJet {
    pub point: DVector<f64>,
    pub u: f64,
    pub du: DVector<f64>,
    pub d2u: DMatrix<f64>,
}

impl GraphJet {
    pub fn new(point: DVector<f64>, u: f64, du: DVector<f64>, d2u: DMatrix<f64>) -> Result<Self> {
        let n = du.len();
        if d2u.nrows() != n || d2u.ncols() != n || point.len() != n {
            return Err(Error::InvalidInput("jet dimensions disagree".into()));
        }
        let scale = d2u.abs().max().max(1.0);
        if asymmetry(&d2u) > 1e-12 * scale {
            return Err(Error::InvalidInput("Hessian is not symmetric".into()));
        }
        Ok(Self { point, u, du, d2u })
    }

    /// Jet with only the derivatives that enter the curvatures.
    pub fn from_derivatives(du: DVector<f64>, d2u: DMatrix<f64>) -> Result<Self> {
        let n = du.len();
        Self::new(DVector::zeros(n), 0.0, du, d2u)
    }
}

/// Sorted principal curvatures and the signature they were computed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureData {
    pub kappa: CurvatureVector,
    pub signature: Signature,
}

/// `1 - |du|`.
pub fn spacelike_margin(du: &DVector<f64>) -> f64 {
    1.0 - du.norm()
}

/// Symmetric matrix `L^{-1} h L^{-T}` with `g = L L^T`, whose eigenvalues are
/// the principal curvatures. Also returns `L^{-1}` and the factor `w` so that
/// `h = d2u / w`.
pub fn shape_matrix(du: &DVector<f64>, d2u: &DMatrix<f64>, signature: Signature) -> Result<ShapeMatrix> {
    let n = du.len();
    let p2 = du.norm_squared();
    let (g, w) = match signature {
        Signature::Euclidean => (DMatrix::identity(n, n) + du * du.transpose(), (1.0 + p2).sqrt()),
        Signature::Minkowski => {
            let norm = p2.sqrt();
            if norm > 1.0 - SPACELIKE_TOL {
                return Err(Error::NotSpacelike { norm });
            }
            (DMatrix::identity(n, n) - du * du.transpose(), (1.0 - p2).sqrt())
        }
    };
    let chol = g.cholesky().ok_or_else(|| Error::InvalidInput("metric is not positive definite".into()))?;
    let l_inv = chol.l().try_inverse().ok_or_else(|| Error::InvalidInput("metric factor is singular".into()))?;
    let mut c = &l_inv * d2u * l_inv.transpose() / w;
    for r in 0..n {
        for s in (r + 1)..n {
            let v = 0.5 * (c[(r, s)] + c[(s, r)]);
            c[(r, s)] = v;
            c[(s, r)] = v;
        }
    }
    Ok(ShapeMatrix { matrix: c, l_inv, w })
}

/// Output of [`shape_matrix`].
#[derive(Debug, Clone)]
pub struct ShapeMatrix {
    pub matrix: DMatrix<f64>,
    pub l_inv: DMatrix<f64>,
    pub w: f64,
}

fn curvatures(jet: &GraphJet, signature: Signature) -> Result<CurvatureData> {
    let s = shape_matrix(&jet.du, &jet.d2u, signature)?;
    let eig = jacobi_eigen(&s.matrix)?;
    Ok(CurvatureData { kappa: CurvatureVector::sorted(eig.values.iter().copied().collect())?, signature })
}

/// Curvatures of a spacelike graph in Minkowski space: eigenvalues of
/// `g^{-1} h` with `g = I - Du Du^T`, `h = D^2u / sqrt(1 - |Du|^2)`.
pub fn curvatures_minkowski(jet: &GraphJet) -> Result<CurvatureData> {
    curvatures(jet, Signature::Minkowski)
}

/// Curvatures of a Euclidean graph: eigenvalues of `g^{-1} h` with
/// `g = I + Du Du^T`, `h = D^2u / sqrt(1 + |Du|^2)`.
pub fn curvatures_euclidean(jet: &GraphJet) -> Result<CurvatureData> {
    curvatures(jet, Signature::Euclidean)
}

/// `<X, nu>` for a unit normal `nu`.
pub fn support_function(position: &DVector<f64>, normal: &DVector<f64>) -> Result<f64> {
    if position.len() != normal.len() {
        return Err(Error::InvalidInput("position and normal differ in length".into()));
    }
    let norm = normal.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitNormal { norm });
    }
    Ok(position.dot(normal))
}

/// Jet of the hyperboloid `u = sqrt(1 + |x|^2)` (all Minkowski curvatures 1).
pub fn hyperboloid_jet(x: &DVector<f64>) -> GraphJet {
    let n = x.len();
    let r = (1.0 + x.norm_squared()).sqrt();
    let du = x / r;
    let d2u = (DMatrix::identity(n, n) - &du * du.transpose()) / r;
    GraphJet { point: x.clone(), u: r, du, d2u }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_gradient_returns_hessian_spectrum() {
        let d2u = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 0.5]));
        let jet = GraphJet::from_derivatives(DVector::zeros(3), d2u).unwrap();
        for sig in [Signature::Euclidean, Signature::Minkowski] {
            let c = curvatures(&jet, sig).unwrap();
            assert_eq!(c.kappa.values(), &[2.0, 0.5, -1.0]);
        }
    }

    #[test]
    fn hyperboloid_is_umbilic() {
        let jet = hyperboloid_jet(&DVector::from_vec(vec![0.3, -1.2, 2.0]));
        let c = curvatures_minkowski(&jet).unwrap();
        for k in c.kappa.values() {
            assert_relative_eq!(*k, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_cap_in_euclidean_space() {
        // u = -sqrt(1 - |x|^2) is the lower unit hemisphere, convex.
        let x: DVector<f64> = DVector::from_vec(vec![0.2, -0.4]);
        let r = (1.0 - x.norm_squared()).sqrt();
        let du = &x / r;
        let d2u = (DMatrix::identity(2, 2) + &du * du.transpose()) / r;
        let c = curvatures_euclidean(&GraphJet::from_derivatives(du, d2u).unwrap()).unwrap();
        for k in c.kappa.values() {
            assert_relative_eq!(*k, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn paraboloid_vertex() {
        let c = curvatures_euclidean(&GraphJet::from_derivatives(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap())
            .unwrap();
        assert_eq!(c.kappa.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn timelike_gradient_rejected() {
        let jet = GraphJet::from_derivatives(DVector::from_vec(vec![0.6, 0.8]), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(curvatures_minkowski(&jet), Err(Error::NotSpacelike { .. })));
    }

    #[test]
    fn support_and_margin() {
        let x = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let nu = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(support_function(&x, &nu).unwrap(), 1.0);
        assert!(support_function(&x, &(2.0 * &nu)).is_err());
        assert_eq!(spacelike_margin(&DVector::zeros(2)), 1.0);
        assert_relative_eq!(spacelike_margin(&DVector::from_vec(vec![0.9, 0.0])), 0.1, epsilon = 1e-15);
        assert!(spacelike_margin(&DVector::from_vec(vec![0.6, 0.8])).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let d2u = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GraphJet::from_derivatives(DVector::zeros(2), d2u).is_err());
    }
}
