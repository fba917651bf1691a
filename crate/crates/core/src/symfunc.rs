//! Elementary symmetric functions and their derivatives.
//!
//! Orders are signed (`i64`) so that formulas such as `sigma(n - 4, ..)` stay
//! total for small `n`: `sigma_0 = 1` and `sigma_m = 0` for `m < 0` or `m`
//! larger than the number of variables.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

/// A finite vector of eigenvalues or principal curvatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVector {
    values: Vec<f64>,
    sorted: bool,
}

impl CurvatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("curvature vector is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite curvature entry {v}")));
        }
        Ok(Self { values, sorted: false })
    }

    /// Builds the vector and sorts it in descending order.
    pub fn sorted(mut values: Vec<f64>) -> Result<Self> {
        sort_descending(&mut values);
        let mut out = Self::new(values)?;
        out.sorted = true;
        Ok(out)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for CurvatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub fn sort_descending(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}

/// All elementary symmetric polynomials `e_0..=e_n` of `kappa`, read off the
/// coefficients of `prod_i (1 + kappa_i x)`.
pub fn sigma_all(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (j, &k) in kappa.iter().enumerate() {
        for m in (1..=j + 1).rev() {
            e[m] += k * e[m - 1];
        }
    }
    e
}

/// `sigma_m(kappa)`.
pub fn sigma(m: i64, kappa: &[f64]) -> f64 {
    if m < 0 || m as usize > kappa.len() {
        return 0.0;
    }
    if m == 0 {
        return 1.0;
    }
    let m = m as usize;
    // Only the first m+1 coefficients are needed.
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for (j, &k) in kappa.iter().enumerate() {
        let top = (j + 1).min(m);
        for r in (1..=top).rev() {
            e[r] += k * e[r - 1];
        }
    }
    e[m]
}

/// `sigma_m(kappa | excl)`: `sigma_m` of `kappa` with the listed indices removed.
///
/// Repeated indices in `excl` count once.
pub fn sigma_excl(m: i64, kappa: &[f64], excl: &[usize]) -> f64 {
    let sub: Vec<f64> = kappa.iter().enumerate().filter(|(j, _)| !excl.contains(j)).map(|(_, &v)| v).collect();
    sigma(m, &sub)
}

/// Gradient of `sigma_k`: component `p` is `sigma_{k-1}(kappa|p)`.
pub fn sigma_grad(k: i64, kappa: &[f64]) -> DVector<f64> {
    DVector::from_iterator(kappa.len(), (0..kappa.len()).map(|p| sigma_excl(k - 1, kappa, &[p])))
}

/// Hessian of `sigma_k` in the variables `kappa`: zero diagonal and
/// `sigma_{k-2}(kappa|pq)` off the diagonal.
pub fn sigma_hess(k: i64, kappa: &[f64]) -> DMatrix<f64> {
    let n = kappa.len();
    let mut h = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in (p + 1)..n {
            let v = sigma_excl(k - 2, kappa, &[p, q]);
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    h
}

/// `sigma_k` of the eigenvalues of a symmetric matrix.
pub fn sigma_matrix(k: i64, a: &DMatrix<f64>) -> Result<f64> {
    let eig = jacobi_eigen(a)?;
    Ok(sigma(k, eig.values.as_slice()))
}

/// Value and matrix gradient `d sigma_k(A) / dA` of a symmetric matrix.
///
/// The gradient is `Q diag(sigma_{k-1}(lambda|p)) Q^T`; it is well defined
/// for repeated eigenvalues because equal eigenvalues share equal weights.
pub fn sigma_matrix_grad(k: i64, a: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let eig = jacobi_eigen(a)?;
    let lam = eig.values.as_slice();
    let w = sigma_grad(k, lam);
    let q = &eig.vectors;
    let g = q * DMatrix::from_diagonal(&w) * q.transpose();
    Ok((sigma(k, lam), g))
}

/// Contraction of the second derivative of `sigma_k` at a diagonal matrix
/// `diag(kappa)` against the symmetric matrices `h[l]`, summed over `l`:
/// `sum_l sum_{p != q} sigma_{k-2}(kappa|pq) (h_pp h_qq - h_pq^2)`.
pub fn sigma_second_contraction(k: i64, kappa: &[f64], h: &[DMatrix<f64>]) -> f64 {
    let n = kappa.len();
    let s = sigma_hess(k, kappa);
    let mut total = 0.0;
    for hl in h {
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    total += s[(p, q)] * (hl[(p, p)] * hl[(q, q)] - hl[(p, q)] * hl[(p, q)]);
                }
            }
        }
    }
    total
}

/// Second derivative of `s -> sigma_k(A + sH)` at `s = 0` from the minor
/// expansion `sigma_k(A) = sum_{|S|=k} det A_S`: each principal minor
/// contributes twice the sum, over row pairs, of determinants with those two
/// rows taken from `H`. Works for any symmetric `A`; cost grows like
/// `C(n, k) k^2`.
pub fn sigma_second_by_minors(k: usize, a: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if k < 2 || k > n {
        return 0.0;
    }
    let mut total = 0.0;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        for r1 in 0..k {
            for r2 in (r1 + 1)..k {
                let m = DMatrix::from_fn(k, k, |r, c| {
                    let src = if r == r1 || r == r2 { h } else { a };
                    src[(subset[r], subset[c])]
                });
                total += 2.0 * m.determinant();
            }
        }
        // next k-subset in lexicographic order
        let mut j = k;
        while j > 0 && subset[j - 1] == n - k + j - 1 {
            j -= 1;
        }
        if j == 0 {
            break;
        }
        subset[j - 1] += 1;
        for t in j..k {
            subset[t] = subset[t - 1] + 1;
        }
    }
    total
}

/// A symmetric function of the eigenvalues, given by its value, gradient and
/// Hessian in the eigenvalue variables.
pub trait SymmetricFunction {
    fn value(&self, kappa: &[f64]) -> f64;
    fn grad(&self, kappa: &[f64]) -> DVector<f64>;
    fn hess(&self, kappa: &[f64]) -> DMatrix<f64>;
}

/// `sigma_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sigma(pub i64);

impl SymmetricFunction for Sigma {
    fn value(&self, kappa: &[f64]) -> f64 {
        sigma(self.0, kappa)
    }
    fn grad(&self, kappa: &[f64]) -> DVector<f64> {
        sigma_grad(self.0, kappa)
    }
    fn hess(&self, kappa: &[f64]) -> DMatrix<f64> {
        sigma_hess(self.0, kappa)
    }
}

/// `log sigma_k`, defined where `sigma_k > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogSigma(pub i64);

impl SymmetricFunction for LogSigma {
    fn value(&self, kappa: &[f64]) -> f64 {
        sigma(self.0, kappa).ln()
    }
    fn grad(&self, kappa: &[f64]) -> DVector<f64> {
        sigma_grad(self.0, kappa) / sigma(self.0, kappa)
    }
    fn hess(&self, kappa: &[f64]) -> DMatrix<f64> {
        let s = sigma(self.0, kappa);
        let g = sigma_grad(self.0, kappa);
        sigma_hess(self.0, kappa) / s - (&g * g.transpose()) / (s * s)
    }
}

/// Relative eigenvalue separation below which [`second_directional`] refuses
/// to form divided differences.
pub const SPECTRAL_GAP_TOL: f64 = 1e-8;

/// Second derivative of `F(A + tB)` at `t = 0` for a symmetric function `F`
/// of the eigenvalues, computed in the eigenbasis of `A`:
/// `sum f_jk B_jj B_kk + 2 sum_{j<k} (f_j - f_k)/(kappa_j - kappa_k) B_jk^2`.
pub fn second_directional<F: SymmetricFunction + ?Sized>(f: &F, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidInput("direction must match the matrix size".into()));
    }
    let eig = jacobi_eigen(a)?;
    let kappa = eig.values.as_slice();
    let scale = a.norm();
    let tol = SPECTRAL_GAP_TOL * scale;
    for j in 1..n {
        let gap = kappa[j - 1] - kappa[j];
        if gap <= tol {
            return Err(Error::DegenerateSpectrum { gap, tol });
        }
    }
    let q = &eig.vectors;
    let bt = q.transpose() * b * q;
    let fd = f.grad(kappa);
    let fdd = f.hess(kappa);
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            total += fdd[(j, k)] * bt[(j, j)] * bt[(k, k)];
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            total += 2.0 * (fd[j] - fd[k]) / (kappa[j] - kappa[k]) * bt[(j, k)] * bt[(j, k)];
        }
    }
    Ok(total)
}

/// Memoized table of deleted symmetric functions `sigma_m(kappa|S)` keyed by
/// the order and a bitmask of the removed indices.
#[derive(Debug, Clone)]
pub struct SymTable {
    base: Vec<f64>,
    entries: HashMap<(i64, u64), f64>,
}

impl SymTable {
    pub fn new(kappa: &[f64]) -> Result<Self> {
        if kappa.len() > 64 {
            return Err(Error::InvalidInput("SymTable supports at most 64 variables".into()));
        }
        Ok(Self { base: kappa.to_vec(), entries: HashMap::new() })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn mask(excl: &[usize]) -> u64 {
        excl.iter().fold(0u64, |m, &i| m | (1u64 << i))
    }

    /// `sigma_m(kappa|excl)`.
    pub fn get(&mut self, m: i64, excl: &[usize]) -> f64 {
        self.get_mask(m, Self::mask(excl))
    }

    pub fn get_mask(&mut self, m: i64, mask: u64) -> f64 {
        let remaining = self.base.len() as i64 - i64::from(mask.count_ones());
        if m == 0 {
            return 1.0;
        }
        if m < 0 || m > remaining {
            return 0.0;
        }
        if let Some(&v) = self.entries.get(&(m, mask)) {
            return v;
        }
        let sub: Vec<f64> =
            self.base.iter().enumerate().filter(|(j, _)| mask & (1u64 << j) == 0).map(|(_, &v)| v).collect();
        let v = sigma(m, &sub);
        self.entries.insert((m, mask), v);
        v
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute(m: i64, x: &[f64]) -> f64 {
        if m < 0 || m as usize > x.len() {
            return 0.0;
        }
        let n = x.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as i64 == m {
                total += (0..n).filter(|j| mask & (1 << j) != 0).map(|j| x[j]).product::<f64>();
            }
        }
        total
    }

    #[test]
    fn small_values() {
        assert_eq!(sigma(2, &[1.0, 1.0, 1.0, 1.0]), 6.0);
        assert_eq!(sigma(2, &[3.0, 2.0, 0.0, -1.0]), 1.0);
        assert_relative_eq!(sigma(3, &[3.0, 2.0, 1.0, -0.5]), 0.5, epsilon = 1e-15);
        assert_eq!(sigma(0, &[]), 1.0);
        assert_eq!(sigma(-1, &[1.0]), 0.0);
        assert_eq!(sigma(3, &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn deleted_values() {
        assert_eq!(sigma_excl(1, &[3.0, 2.0, 0.0, -1.0], &[0]), 1.0);
        assert_eq!(sigma_excl(0, &[3.0, 2.0], &[0, 1]), 1.0);
        assert_eq!(sigma_excl(3, &[5.0, 4.0, 3.0, 2.0, 1.0], &[1, 3]), 15.0);
    }

    #[test]
    fn gradient_at_counterexample_point() {
        let g = sigma_grad(2, &[3.0, 2.0, 0.0, -1.0]);
        assert_eq!(g.as_slice(), &[1.0, 2.0, 4.0, 5.0]);
        assert_eq!(sigma_grad(1, &[3.0, -2.0]).as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn hessian_entries() {
        let h = sigma_hess(3, &[3.0, 2.0, 1.0, -0.5]);
        assert_relative_eq!(h[(0, 1)], 0.5);
        for p in 0..4 {
            assert_eq!(h[(p, p)], 0.0);
        }
        let h2 = sigma_hess(2, &[0.3, -4.0, 2.0]);
        assert_eq!(h2[(0, 2)], 1.0);
    }

    #[test]
    fn recurrence_matches_enumeration() {
        let x = [0.7, -1.3, 2.2, 0.1, -0.4, 1.9];
        let all = sigma_all(&x);
        for m in 0..=6 {
            assert_relative_eq!(sigma(m, &x), brute(m, &x), max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(all[m as usize], brute(m, &x), max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn matrix_sigma_on_diagonal() {
        assert_relative_eq!(sigma_matrix(2, &DMatrix::identity(3, 3)).unwrap(), 3.0, epsilon = 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 0.0, -1.0]));
        assert_relative_eq!(sigma_matrix(2, &d).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn second_directional_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let b = DMatrix::identity(3, 3);
        assert_relative_eq!(second_directional(&Sigma(2), &a, &b).unwrap(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(second_directional(&Sigma(1), &a, &b).unwrap(), 0.0, epsilon = 1e-12);

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_relative_eq!(second_directional(&Sigma(2), &a, &b).unwrap(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_spectrum_is_an_error() {
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::identity(3, 3);
        assert!(matches!(second_directional(&Sigma(2), &a, &b), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn sym_table_memoizes() {
        let x = [3.0, 2.0, 1.0, -0.5];
        let mut t = SymTable::new(&x).unwrap();
        assert_relative_eq!(t.get(1, &[0, 1]), 0.5);
        assert_relative_eq!(t.get(1, &[1, 0]), 0.5);
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(0, &[0, 1, 2, 3]), 1.0);
        assert_eq!(t.get(3, &[0, 1]), 0.0);
        assert_eq!(t.get(-2, &[]), 0.0);
    }

    #[test]
    fn curvature_vector_validation() {
        assert!(CurvatureVector::new(vec![1.0, f64::INFINITY]).is_err());
        let c = CurvatureVector::sorted(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(c.values(), &[3.0, 2.0, 1.0]);
        assert!(c.is_sorted());
    }

    #[test]
    fn minor_expansion_matches_contraction() {
        let kappa = [1.3, -0.4, 2.2, 0.7, -1.1];
        let h = DMatrix::from_fn(5, 5, |r, c| ((r * 3 + c * 3 + r * c) % 7) as f64 - 3.0);
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&kappa));
        for k in 2..=5 {
            let lhs = sigma_second_by_minors(k, &a, &h);
            let rhs = sigma_second_contraction(k as i64, &kappa, std::slice::from_ref(&h));
            assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1.0), "k={k}: {lhs} vs {rhs}");
        }
    }
}
