//! The quadratic form of the key third-derivative inequality for
//! `sigma_{n-1}`, the Hadamard matrix behind its proof, closed-form minors and
//! cofactors of that matrix, and the `sigma_2` counterexample in four
//! dimensions.
//!
//! All indices are 0-based.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::in_gamma_k;
use crate::error::{Error, Result};
use crate::linalg::{householder_to_first_axis, jacobi_eigen, max_abs};
use crate::symfunc::{sigma, sigma_excl, sigma_grad, sigma_hess, SymTable};

/// Relative tolerance of every PSD verdict in this module.
pub const PSD_TOL: f64 = 1e-9;

/// Parameters a form was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormHypotheses {
    pub kappa: Vec<f64>,
    pub i: usize,
    /// Order of the symmetric function (`n - 1` for the main inequality).
    pub k: usize,
    #[serde(rename = "K")]
    pub big_k: f64,
    pub eps: f64,
}

/// A quadratic form, its smallest eigenvalue and PSD verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormReport {
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub min_eig: f64,
    #[serde(skip)]
    pub min_vector: DVector<f64>,
    pub psd: bool,
    /// Absolute tolerance used for the verdict (`PSD_TOL * scale`).
    pub tol: f64,
    pub scale: f64,
    pub hypotheses: FormHypotheses,
}

/// Splits the form as `c * g g^T + base` with `c = kappa_i * K`.
#[derive(Debug, Clone)]
pub struct FormParts {
    /// `-kappa_i S + D`, independent of `K`.
    pub base: DMatrix<f64>,
    /// Gradient of `sigma_k`.
    pub g: DVector<f64>,
    /// `kappa_i`; the rank-one coefficient is `kappa_i * K`.
    pub kappa_i: f64,
}

/// The `K`-independent pieces of the form for `sigma_k` at index `i`.
pub fn form_parts(kappa: &[f64], i: usize, k: usize, eps: f64) -> Result<FormParts> {
    let n = kappa.len();
    if i >= n {
        return Err(Error::InvalidInput(format!("index {i} out of range for n = {n}")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("order k={k} out of range for n = {n}")));
    }
    let g = sigma_grad(k as i64, kappa);
    let s = sigma_hess(k as i64, kappa);
    let ki = kappa[i];
    let mut base = -ki * s;
    for j in 0..n {
        base[(j, j)] += if j == i { -g[j] } else { (1.0 + eps) * g[j] };
    }
    Ok(FormParts { base, g, kappa_i: ki })
}

/// Smallest eigenvalue and eigenvector of `c * g g^T + base`.
///
/// The matrix is rotated so that `g` lies on the first axis before the
/// eigensolve; the rank-one term then only touches one diagonal entry and
/// its size cannot swamp the remaining eigenvalues.
pub fn rank_one_update_min_eig(base: &DMatrix<f64>, c: f64, g: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let q = householder_to_first_axis(g);
    let mut rotated = q.transpose() * base * &q;
    let n = rotated.nrows();
    for r in 0..n {
        for s in (r + 1)..n {
            let v = 0.5 * (rotated[(r, s)] + rotated[(s, r)]);
            rotated[(r, s)] = v;
            rotated[(s, r)] = v;
        }
    }
    rotated[(0, 0)] += c * g.norm_squared();
    let eig = jacobi_eigen(&rotated)?;
    Ok((eig.min(), q * eig.min_vector()))
}

/// The form for `sigma_k` at index `i` with constant `K` and `eps`:
/// `M = kappa_i K g g^T - kappa_i S + D`, where `D_ii = -g_i` and
/// `D_jj = (1 + eps) g_j` for `j != i`.
pub fn build_form(kappa: &[f64], i: usize, k: usize, big_k: f64, eps: f64) -> Result<FormReport> {
    let parts = form_parts(kappa, i, k, eps)?;
    let c = parts.kappa_i * big_k;
    let matrix = &parts.base + c * &parts.g * parts.g.transpose();
    let (min_eig, min_vector) = rank_one_update_min_eig(&parts.base, c, &parts.g)?;
    let scale = max_abs(&parts.base).max(f64::MIN_POSITIVE);
    let tol = PSD_TOL * scale;
    Ok(FormReport {
        matrix,
        min_eig,
        min_vector,
        psd: min_eig >= -tol,
        tol,
        scale,
        hypotheses: FormHypotheses { kappa: kappa.to_vec(), i, k, big_k, eps },
    })
}

/// The form for `sigma_{n-1}`.
pub fn build_prop21_form(kappa: &[f64], i: usize, big_k: f64, eps: f64) -> Result<FormReport> {
    if kappa.len() < 3 {
        return Err(Error::InvalidInput("the form needs n >= 3".into()));
    }
    build_form(kappa, i, kappa.len() - 1, big_k, eps)
}

/// Direct scalar evaluation of the form at `v`:
/// `kappa_i [K (g.v)^2 - sum_{p!=q} S_pq v_p v_q] - g_i v_i^2 + (1+eps) sum_{j!=i} g_j v_j^2`.
pub fn form_value(kappa: &[f64], i: usize, k: usize, big_k: f64, eps: f64, v: &[f64]) -> f64 {
    let n = kappa.len();
    let k = k as i64;
    let gv: f64 = (0..n).map(|p| sigma_excl(k - 1, kappa, &[p]) * v[p]).sum();
    let mut cross = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                cross += sigma_excl(k - 2, kappa, &[p, q]) * v[p] * v[q];
            }
        }
    }
    let mut rest = -sigma_excl(k - 1, kappa, &[i]) * v[i] * v[i];
    for j in (0..n).filter(|&j| j != i) {
        rest += (1.0 + eps) * sigma_excl(k - 1, kappa, &[j]) * v[j] * v[j];
    }
    kappa[i] * (big_k * gv * gv - cross) + rest
}

/// Smallest PSD constant on the grid `1, 2, 4, ...`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KThreshold {
    #[serde(rename = "K_star")]
    pub k_star: f64,
    pub min_eig: f64,
    /// Smallest eigenvalue of the form at `2 K*`.
    pub min_eig_double: f64,
    /// PSD verdict at `2 K*` (monotonicity sanity check).
    pub double_psd: bool,
}

/// Scans `K = 1, 2, 4, ... <= k_max` for the first PSD form of `sigma_k`.
pub fn find_k_threshold_for(kappa: &[f64], i: usize, k: usize, eps: f64, k_max: f64) -> Result<Option<KThreshold>> {
    let parts = form_parts(kappa, i, k, eps)?;
    let tol = PSD_TOL * max_abs(&parts.base).max(f64::MIN_POSITIVE);
    let mut big_k = 1.0;
    while big_k <= k_max {
        let (min_eig, _) = rank_one_update_min_eig(&parts.base, parts.kappa_i * big_k, &parts.g)?;
        if min_eig >= -tol {
            let (min_eig_double, _) = rank_one_update_min_eig(&parts.base, parts.kappa_i * 2.0 * big_k, &parts.g)?;
            return Ok(Some(KThreshold { k_star: big_k, min_eig, min_eig_double, double_psd: min_eig_double >= -tol }));
        }
        big_k *= 2.0;
    }
    Ok(None)
}

/// [`find_k_threshold_for`] with `k = n - 1`.
pub fn find_k_threshold(kappa: &[f64], i: usize, eps: f64, k_max: f64) -> Result<Option<KThreshold>> {
    if kappa.len() < 3 {
        return Err(Error::InvalidInput("the form needs n >= 3".into()));
    }
    find_k_threshold_for(kappa, i, kappa.len() - 1, eps, k_max)
}

/// The matrix `a_pq` over the indices `p, q != excluded`.
#[derive(Debug, Clone)]
pub struct HadamardMatrix {
    pub base: Vec<f64>,
    pub excluded: usize,
    /// Original indices of the rows/columns, in increasing order.
    pub indices: Vec<usize>,
    pub entries: DMatrix<f64>,
}

impl HadamardMatrix {
    /// Entrywise square `(a_pq^2)`.
    pub fn squared(&self) -> DMatrix<f64> {
        self.entries.map(|v| v * v)
    }
}

/// `a_pp = sigma_{n-3}(kappa|ip)`, `a_pq = -sigma_{n-3}(kappa|ipq)`.
pub fn hadamard_matrix(kappa: &[f64], i: usize) -> Result<HadamardMatrix> {
    let n = kappa.len();
    if n < 3 {
        return Err(Error::InvalidInput("the Hadamard matrix needs n >= 3".into()));
    }
    if i >= n {
        return Err(Error::InvalidInput(format!("index {i} out of range for n = {n}")));
    }
    let indices: Vec<usize> = (0..n).filter(|&p| p != i).collect();
    let mut table = SymTable::new(kappa)?;
    let m = n as i64 - 3;
    let entries = DMatrix::from_fn(n - 1, n - 1, |r, c| {
        let (p, q) = (indices[r], indices[c]);
        if p == q {
            table.get(m, &[i, p])
        } else {
            -table.get(m, &[i, p, q])
        }
    });
    Ok(HadamardMatrix { base: kappa.to_vec(), excluded: i, indices, entries })
}

/// Verdicts for `(a_pq)` and `(a_pq^2)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchurReport {
    pub psd_a: bool,
    pub psd_a2: bool,
    pub min_eig_a: f64,
    pub min_eig_a2: f64,
    pub scale_a: f64,
    pub scale_a2: f64,
}

/// PSD check of the Hadamard matrix and its entrywise square on
/// `Gamma_{n-1}`.
pub fn schur_psd_check(kappa: &[f64], i: usize) -> Result<SchurReport> {
    let n = kappa.len();
    if n < 3 || !in_gamma_k(kappa, n - 1) {
        return Err(Error::NotInCone { k: n.saturating_sub(1) });
    }
    schur_psd_unchecked(kappa, i)
}

/// Same as [`schur_psd_check`] without the cone precondition (boundary probes).
pub fn schur_psd_unchecked(kappa: &[f64], i: usize) -> Result<SchurReport> {
    let h = hadamard_matrix(kappa, i)?;
    let a2 = h.squared();
    let min_eig_a = jacobi_eigen(&h.entries)?.min();
    let min_eig_a2 = jacobi_eigen(&a2)?.min();
    let scale_a = max_abs(&h.entries);
    let scale_a2 = max_abs(&a2);
    Ok(SchurReport {
        psd_a: min_eig_a >= -PSD_TOL * scale_a,
        psd_a2: min_eig_a2 >= -PSD_TOL * scale_a2,
        min_eig_a,
        min_eig_a2,
        scale_a,
        scale_a2,
    })
}

fn check_indices(n: usize, indices: &[usize], excluded: usize) -> Result<()> {
    if excluded >= n || indices.iter().any(|&p| p >= n || p == excluded) {
        return Err(Error::InvalidInput("indices must be in range and differ from the excluded index".into()));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("indices must be strictly increasing".into()));
    }
    Ok(())
}

/// Closed form of the principal minor of `(a_pq)` on rows/columns `indices`:
/// `sigma_{n-2}(kappa|e)^{m-1} sigma_{n-m-2}(kappa|e i_1..i_m)` with `e` the
/// excluded index. The empty minor is 1.
pub fn principal_minor_formula(kappa: &[f64], indices: &[usize], excluded: usize) -> Result<f64> {
    let n = kappa.len();
    check_indices(n, indices, excluded)?;
    let mut table = SymTable::new(kappa)?;
    Ok(principal_minor_with(&mut table, indices, excluded))
}

fn principal_minor_with(table: &mut SymTable, indices: &[usize], e: usize) -> f64 {
    let m = indices.len() as i64;
    if m == 0 {
        return 1.0;
    }
    let n = table.base().len() as i64;
    let mut excl = vec![e];
    excl.extend_from_slice(indices);
    table.get(n - 2, &[e]).powi((m - 1) as i32) * table.get(n - m - 2, &excl)
}

/// Closed form of the determinant of the `(m-1) x (m-1)` block of `(a_pq)`
/// with rows `i_1..i_{m-1}` and columns `i_1..i_m` minus column `i_k`
/// (`dropped` is the 0-based position `k - 1`, which must be below `m - 1`):
///
/// `(-1)^{m+k} [ sigma_{n-3}(kappa|e i_k i_m) D_{m-2}(i_1..^i_k..i_{m-1})
///   + sigma_{n-m}(kappa|e i_1..i_{m-1}) sigma_{n-2}(kappa|e)^{m-3}
///     sum_{l<m, l!=k} sigma_{n-3}(kappa|e i_l i_m) ]`.
pub fn cofactor_formula(kappa: &[f64], indices: &[usize], dropped: usize, excluded: usize) -> Result<f64> {
    let n = kappa.len();
    check_indices(n, indices, excluded)?;
    let m = indices.len();
    if m < 2 || dropped + 1 >= m {
        return Err(Error::InvalidInput("need m >= 2 and a dropped column before the last".into()));
    }
    let mut table = SymTable::new(kappa)?;
    Ok(cofactor_with(&mut table, indices, dropped, excluded))
}

fn cofactor_with(table: &mut SymTable, idx: &[usize], dropped: usize, e: usize) -> f64 {
    let n = table.base().len() as i64;
    let m = idx.len();
    let ik = idx[dropped];
    let im = idx[m - 1];
    let rest: Vec<usize> = idx[..m - 1].iter().enumerate().filter(|(j, _)| *j != dropped).map(|(_, &p)| p).collect();
    let head = table.get(n - 3, &[e, ik, im]) * principal_minor_with(table, &rest, e);
    let mut tail = 0.0;
    if m >= 3 {
        let sum: f64 = (0..m - 1).filter(|&l| l != dropped).map(|l| table.get(n - 3, &[e, idx[l], im])).sum();
        let mut excl = vec![e];
        excl.extend_from_slice(&idx[..m - 1]);
        tail = table.get(n - m as i64, &excl) * table.get(n - 2, &[e]).powi(m as i32 - 3) * sum;
    }
    let sign = if (m + dropped + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (head + tail)
}

/// The block of `(a_pq)` described in [`cofactor_formula`].
pub fn cofactor_block(h: &HadamardMatrix, indices: &[usize], dropped: usize) -> DMatrix<f64> {
    let pos = |p: usize| h.indices.iter().position(|&q| q == p).expect("index present");
    let m = indices.len();
    let rows: Vec<usize> = indices[..m - 1].iter().map(|&p| pos(p)).collect();
    let cols: Vec<usize> = indices.iter().enumerate().filter(|(j, _)| *j != dropped).map(|(_, &p)| pos(p)).collect();
    DMatrix::from_fn(m - 1, m - 1, |r, c| h.entries[(rows[r], cols[c])])
}

/// The principal block of `(a_pq)` on `indices`.
pub fn principal_block(h: &HadamardMatrix, indices: &[usize]) -> DMatrix<f64> {
    let pos: Vec<usize> =
        indices.iter().map(|&p| h.indices.iter().position(|&q| q == p).expect("index present")).collect();
    DMatrix::from_fn(pos.len(), pos.len(), |r, c| h.entries[(pos[r], pos[c])])
}

/// The polynomial `275K - 311 + (12K-12)/t^4 + (96K-100)/t^2 + (313K-427)t^2
/// + (66K-216)t^4 - 72K t^6`, the determinant of the four-dimensional
/// `sigma_2` form along [`counterexample_family`].
pub fn counterexample_poly(big_k: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t4 = t2 * t2;
    275.0 * big_k - 311.0
        + (12.0 * big_k - 12.0) / t4
        + (96.0 * big_k - 100.0) / t2
        + (313.0 * big_k - 427.0) * t2
        + (66.0 * big_k - 216.0) * t4
        - 72.0 * big_k * t4 * t2
}

/// `(2t + 1/t, 2t, 0, -t)`: a curve in `Gamma_2` with `sigma_2 = 1`.
pub fn counterexample_family(t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    Ok(vec![2.0 * t + 1.0 / t, 2.0 * t, 0.0, -t])
}

/// The `sigma_2` form at index 0 along the family, `eps = 0`.
pub fn counterexample_form(t: f64, big_k: f64) -> Result<FormReport> {
    build_form(&counterexample_family(t)?, 0, 2, big_k, 0.0)
}

/// One algebraic identity evaluated at a point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub indices: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// Magnitude used to turn the residual into a relative error.
    pub scale: f64,
}

impl IdentityCheck {
    pub fn rel_err(&self) -> f64 {
        let s = self.lhs.abs().max(self.rhs.abs()).max(self.scale);
        if s == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).abs() / s
        }
    }
}

/// Polynomial identities among deleted symmetric functions used in the
/// proof of the form inequality, for `k = n - 1`, at every admissible index
/// tuple. Valid for any real `kappa` with `n >= 3`.
pub fn identity_suite(kappa: &[f64]) -> Result<Vec<IdentityCheck>> {
    let n = kappa.len();
    if n < 3 {
        return Err(Error::InvalidInput("identity suite needs n >= 3".into()));
    }
    let ni = n as i64;
    let mut t = SymTable::new(kappa)?;
    let mag = kappa.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let scale = |deg: i64| mag.powi(deg as i32);
    let sn1 = t.get(ni - 1, &[]);
    let mut out = Vec::new();
    for i in 0..n {
        let ki = kappa[i];
        let gi = t.get(ni - 2, &[i]);
        for j in (0..n).filter(|&j| j != i) {
            let kj = kappa[j];
            let gj = t.get(ni - 2, &[j]);
            let sij = t.get(ni - 3, &[i, j]);
            out.push(IdentityCheck {
                name: "grad_difference",
                indices: vec![i, j],
                lhs: -gj + 2.0 * ki * sij + gi,
                rhs: (ki + kj) * sij,
                scale: scale(ni - 2),
            });
            out.push(IdentityCheck {
                name: "grad_product",
                indices: vec![i, j],
                lhs: gj * (ki + kj) * sij,
                rhs: ki * ki * sij * sij + sn1 * sij,
                scale: scale(2 * ni - 4),
            });
        }
        for p in (0..n).filter(|&p| p != i) {
            for q in (0..n).filter(|&q| q != i && q != p) {
                let gp = t.get(ni - 2, &[p]);
                let gq = t.get(ni - 2, &[q]);
                let sip = t.get(ni - 3, &[i, p]);
                let siq = t.get(ni - 3, &[i, q]);
                let spq = t.get(ni - 3, &[p, q]);
                let s3 = t.get(ni - 3, &[i, p, q]);
                let s4 = t.get(ni - 4, &[i, p, q]);
                let si = t.get(ni - 2, &[i]);
                out.push(IdentityCheck {
                    name: "cross_term",
                    indices: vec![i, p, q],
                    lhs: ki * (gp * siq + gq * sip - gi * spq) - gp * gq,
                    rhs: ki * ki * s3 * s3 - sn1 * s3,
                    scale: scale(2 * ni - 4),
                });
                out.push(IdentityCheck {
                    name: "hess_product",
                    indices: vec![i, p, q],
                    lhs: sip * siq,
                    rhs: s3 * s3 + si * s4,
                    scale: scale(2 * ni - 6),
                });
                out.push(IdentityCheck {
                    name: "hess_split",
                    indices: vec![i, p, q],
                    lhs: spq,
                    rhs: ki * s4 + s3,
                    scale: scale(ni - 3),
                });
                out.push(IdentityCheck {
                    name: "hess_combination",
                    indices: vec![i, p, q],
                    lhs: -ki * ki * sip * siq + ki * gi * spq,
                    rhs: -ki * ki * s3 * s3 + ki * gi * s3,
                    scale: scale(2 * ni - 4),
                });
            }
        }
    }
    Ok(out)
}

/// Newton expansion `sigma_k = kappa_i sigma_{k-1}(kappa|i) + sigma_k(kappa|i)`
/// and the exact second differences of the multi-affine `sigma_k`
/// (`d^2/dkappa_p^2 = 0`, mixed derivative `sigma_{k-2}(kappa|pq)`), for all
/// orders and indices.
pub fn symmetric_fact_suite(kappa: &[f64]) -> Vec<IdentityCheck> {
    let n = kappa.len();
    let mag = kappa.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    let mut y = kappa.to_vec();
    for k in 1..=n as i64 {
        let sk = sigma(k, kappa);
        let hess = sigma_hess(k, kappa);
        for i in 0..n {
            out.push(IdentityCheck {
                name: "newton_expansion",
                indices: vec![i],
                lhs: sk,
                rhs: kappa[i] * sigma_excl(k - 1, kappa, &[i]) + sigma_excl(k, kappa, &[i]),
                scale: mag.powi(k as i32),
            });
            // sigma_k is affine in each variable: unit second difference vanishes
            y[i] = kappa[i] + 1.0;
            let up = sigma(k, &y);
            y[i] = kappa[i] - 1.0;
            let down = sigma(k, &y);
            y[i] = kappa[i];
            out.push(IdentityCheck {
                name: "pure_second_zero",
                indices: vec![i],
                lhs: up - 2.0 * sk + down,
                rhs: hess[(i, i)],
                scale: (mag + 1.0).powi(k as i32),
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                y[p] = kappa[p] + 1.0;
                y[q] = kappa[q] + 1.0;
                let pp = sigma(k, &y);
                y[q] = kappa[q];
                let p0 = sigma(k, &y);
                y[p] = kappa[p];
                y[q] = kappa[q] + 1.0;
                let q0 = sigma(k, &y);
                y[q] = kappa[q];
                out.push(IdentityCheck {
                    name: "mixed_second",
                    indices: vec![p, q],
                    lhs: pp - p0 - q0 + sk,
                    rhs: hess[(p, q)],
                    scale: (mag + 1.0).powi(k as i32),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn counterexample_form_at_t1() {
        let r = counterexample_form(1.0, 3.0).unwrap();
        let g = [1.0, 2.0, 4.0, 5.0];
        for p in 0..4 {
            for q in 0..4 {
                let mut expect = 3.0 * 3.0 * g[p] * g[q];
                if p != q {
                    expect -= 3.0;
                } else if p == 0 {
                    expect -= g[0];
                } else {
                    expect += g[p];
                }
                assert_relative_eq!(r.matrix[(p, q)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn determinant_matches_polynomial() {
        for &t in &[0.5, 1.0, 2.0, 3.0] {
            for &k in &[1.0, 2.0, 10.0] {
                let r = counterexample_form(t, k).unwrap();
                let det = r.matrix.determinant();
                let p = counterexample_poly(k, t);
                assert_relative_eq!(det, p, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn polynomial_values() {
        for &k in &[0.0, 1.0, 7.5] {
            assert_relative_eq!(counterexample_poly(k, 1.0), 690.0 * k - 1066.0, epsilon = 1e-9);
        }
        assert_eq!(counterexample_poly(1.0, 1.0), -376.0);
        assert!(counterexample_poly(1e6, 50.0) < 0.0);
    }

    #[test]
    fn family_has_unit_sigma2() {
        for &t in &[0.5, 1.0, 2.0, 10.0] {
            let x = counterexample_family(t).unwrap();
            assert_relative_eq!(sigma(2, &x), 1.0, max_relative = 1e-12);
            assert!(in_gamma_k(&x, 2));
        }
        assert_eq!(counterexample_family(1.0).unwrap(), vec![3.0, 2.0, 0.0, -1.0]);
        assert!(counterexample_family(0.0).is_err());
    }

    #[test]
    fn symmetric_point_has_threshold() {
        let th = find_k_threshold(&[1.0; 4], 0, 0.1, 2f64.powi(60)).unwrap().unwrap();
        assert!(th.double_psd);
        let below = build_prop21_form(&[1.0; 4], 0, th.k_star / 2.0, 0.1).unwrap();
        assert!(th.k_star == 1.0 || !below.psd);
    }

    #[test]
    fn counterexample_not_psd_at_t10() {
        assert!(find_k_threshold_for(&counterexample_family(10.0).unwrap(), 0, 2, 0.0, 2f64.powi(60))
            .unwrap()
            .is_none());
    }

    #[test]
    fn hadamard_examples() {
        let h = hadamard_matrix(&[3.0, 2.0, 1.0, -0.5], 0).unwrap();
        assert_relative_eq!(h.entries[(0, 0)], 0.5);
        assert_relative_eq!(h.entries[(1, 1)], 1.5);
        assert_relative_eq!(h.entries[(2, 2)], 3.0);
        let h3 = hadamard_matrix(&[1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(h3.entries, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let s = schur_psd_check(&[1.0; 4], 0).unwrap();
        assert!(s.psd_a && s.psd_a2);
        assert!(schur_psd_check(&[1.0, 1.0, -5.0], 0).is_err());
    }

    #[test]
    fn minor_base_cases() {
        let x = [2.5, 1.5, 0.7, -0.3, 0.2];
        let e = 0;
        let d1 = principal_minor_formula(&x, &[2], e).unwrap();
        assert_relative_eq!(d1, sigma_excl(2, &x, &[0, 2]), max_relative = 1e-14);
        let d2 = principal_minor_formula(&x, &[1, 3], e).unwrap();
        let a = sigma_excl(2, &x, &[0, 1]) * sigma_excl(2, &x, &[0, 3]) - sigma_excl(2, &x, &[0, 1, 3]).powi(2);
        assert_relative_eq!(d2, a, max_relative = 1e-12);
        let b = cofactor_formula(&x, &[1, 3], 0, e).unwrap();
        assert_relative_eq!(b, -sigma_excl(2, &x, &[0, 1, 3]), max_relative = 1e-14);
    }

    #[test]
    fn identity_suites_hold_at_a_point() {
        let x = [1.3, -0.7, 2.1, 0.4, -1.1];
        for c in identity_suite(&x).unwrap().iter().chain(symmetric_fact_suite(&x).iter()) {
            assert!(c.rel_err() < 1e-12, "{} {:?} {} {}", c.name, c.indices, c.lhs, c.rhs);
        }
    }

    #[test]
    fn index_validation() {
        assert!(principal_minor_formula(&[1.0, 2.0, 3.0], &[0], 0).is_err());
        assert!(principal_minor_formula(&[1.0, 2.0, 3.0, 4.0], &[2, 1], 0).is_err());
        assert!(cofactor_formula(&[1.0, 2.0, 3.0, 4.0], &[1, 2], 1, 0).is_err());
        assert!(build_form(&[1.0, 2.0], 3, 1, 1.0, 0.0).is_err());
    }
}
