//! Pointwise checks of the inequalities feeding the curvature estimate:
//! the two Guan-type concavity inequalities, the divided-difference
//! inequality for small `kappa_i`, and the five-term combination
//! `A_i + B_i + C_i + D_i - E_i`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::in_gamma_k;
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::symfunc::{sigma, sigma_excl, sigma_grad, sigma_hess};

/// Relative slack of every verdict: `lhs >= rhs - LEMMA_TOL * scale`.
pub const LEMMA_TOL: f64 = 1e-9;

/// Largest |kappa| accepted by the unnormalized exponential profile.
pub const EXP_CLAMP: f64 = 500.0;

/// One evaluation of an inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTrial {
    pub kappa: Vec<f64>,
    pub aux: BTreeMap<String, f64>,
    /// The direction (`u_{pph}` or `h_{lli}` surrogate).
    pub direction: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
    pub hypotheses_met: bool,
    pub satisfied: bool,
}

impl LemmaTrial {
    fn new(kappa: &[f64], direction: &[f64], lhs: f64, rhs: f64, scale: f64, hypotheses_met: bool) -> Self {
        Self {
            kappa: kappa.to_vec(),
            aux: BTreeMap::new(),
            direction: direction.to_vec(),
            lhs,
            rhs,
            scale,
            hypotheses_met,
            satisfied: holds(lhs, rhs, scale),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }

    /// A violation: hypotheses hold but the inequality fails.
    pub fn is_violation(&self) -> bool {
        self.hypotheses_met && !self.satisfied
    }
}

fn holds(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs >= rhs - LEMMA_TOL * scale
}

/// `(e^a - e^b) / (a - b)`, with the confluent value `e^a` at `a = b` and a
/// series for `|a - b| < 1e-6`.
pub fn divided_difference_exp(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() < 1e-6 {
        // e^b (e^d - 1)/d = e^b (1 + d/2 + d^2/6 + d^3/24)
        let m = 0.5 * (a + b);
        // symmetric form about the midpoint: e^m sinh(d/2)/(d/2)
        let x = 0.5 * d;
        m.exp() * (1.0 + x * x / 6.0 + x * x * x * x / 120.0)
    } else {
        // e^M (1 - e^{-|d|}) / |d| with M = max(a, b): no inf * 0 for wide gaps
        let top = a.max(b);
        let gap = d.abs();
        top.exp() * -(-gap).exp_m1() / gap
    }
}

/// `P = sum_l e^{kappa_l}` and `log P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PProfile {
    pub kappa: Vec<f64>,
    pub p: f64,
    pub log_p: f64,
}

impl PProfile {
    pub fn new(kappa: &[f64]) -> Result<Self> {
        if let Some(&v) = kappa.iter().find(|v| v.abs() > EXP_CLAMP || !v.is_finite()) {
            return Err(Error::OutOfRange { value: v });
        }
        let p: f64 = kappa.iter().map(|v| v.exp()).sum();
        Ok(Self { kappa: kappa.to_vec(), p, log_p: p.ln() })
    }
}

struct Parts {
    sigma: f64,
    dir: f64,
    quad: f64,
    quad_abs: f64,
}

/// `sigma_k`, `(sigma_k)_h = sum_p sigma_k^{pp} v_p` and
/// `sum_{p != q} sigma_k^{pp,qq} v_p v_q`.
fn parts(k: usize, kappa: &[f64], v: &[f64]) -> Parts {
    let g = sigma_grad(k as i64, kappa);
    let s = sigma_hess(k as i64, kappa);
    let vv = DVector::from_column_slice(v);
    let quad = (vv.transpose() * &s * &vv)[(0, 0)];
    let quad_abs = (vv.abs().transpose() * s.abs() * vv.abs())[(0, 0)];
    Parts { sigma: sigma(k as i64, kappa), dir: g.dot(&vv), quad, quad_abs }
}

fn guan_hypotheses(kappa: &[f64], k: usize, l: usize, v: &[f64]) -> Result<bool> {
    if v.len() != kappa.len() {
        return Err(Error::InvalidInput("direction length must equal n".into()));
    }
    if k > kappa.len() || l == 0 {
        return Err(Error::InvalidInput(format!("need 1 <= l < k <= n, got k={k}, l={l}")));
    }
    Ok(k > l && sigma(k as i64, kappa) > 0.0 && sigma(l as i64, kappa) > 0.0)
}

/// First Guan-type inequality with `alpha = 1/(k-l)`:
/// `-Q_k/sigma_k + Q_l/sigma_l >= (a - b)((alpha-1) a - (alpha+1) b)` where
/// `Q_m = sum_{p!=q} sigma_m^{pp,qq} v_p v_q`, `a = (sigma_k)_h/sigma_k` and
/// `b = (sigma_l)_h/sigma_l`.
pub fn check_guan_17(kappa: &[f64], k: usize, l: usize, v: &[f64]) -> Result<LemmaTrial> {
    let met = guan_hypotheses(kappa, k, l, v)?;
    if !met {
        return Ok(LemmaTrial::new(kappa, v, f64::NAN, f64::NAN, 0.0, false).with("k", k as f64).with("l", l as f64));
    }
    let alpha = 1.0 / (k - l) as f64;
    let pk = parts(k, kappa, v);
    let pl = parts(l, kappa, v);
    let a = pk.dir / pk.sigma;
    let b = pl.dir / pl.sigma;
    let lhs = -pk.quad / pk.sigma + pl.quad / pl.sigma;
    let rhs = (a - b) * ((alpha - 1.0) * a - (alpha + 1.0) * b);
    let scale = pk.quad_abs / pk.sigma.abs()
        + pl.quad_abs / pl.sigma.abs()
        + (a.abs() + b.abs()) * ((alpha - 1.0).abs() * a.abs() + (alpha + 1.0) * b.abs());
    Ok(LemmaTrial::new(kappa, v, lhs, rhs, scale, true).with("k", k as f64).with("l", l as f64))
}

fn guan_18_sides(pk: &Parts, pl: &Parts, alpha: f64, delta: f64) -> (f64, f64, f64) {
    let b = pl.dir / pl.sigma;
    let c = 1.0 - alpha + alpha / delta;
    let lhs = -pk.quad + c * pk.dir * pk.dir / pk.sigma;
    let rhs = pk.sigma * (alpha + 1.0 - delta * alpha) * b * b - pk.sigma / pl.sigma * pl.quad;
    let scale = pk.quad_abs
        + c.abs() * pk.dir * pk.dir / pk.sigma.abs()
        + pk.sigma.abs() * (alpha + 1.0 + delta * alpha) * b * b
        + (pk.sigma / pl.sigma).abs() * pl.quad_abs;
    (lhs, rhs, scale)
}

/// Second Guan-type inequality:
/// `-Q_k + (1 - alpha + alpha/delta) (sigma_k)_h^2 / sigma_k
///   >= sigma_k (alpha + 1 - delta alpha) b^2 - (sigma_k/sigma_l) Q_l`.
///
/// `aux["delta_star"]` holds the largest `delta` in `{1/2, 1/4, ..., 2^-40}`
/// at which the inequality holds for this trial (0 when none does).
pub fn check_guan_18(kappa: &[f64], k: usize, l: usize, v: &[f64], delta: f64) -> Result<LemmaTrial> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    let met = guan_hypotheses(kappa, k, l, v)?;
    if !met {
        return Ok(LemmaTrial::new(kappa, v, f64::NAN, f64::NAN, 0.0, false)
            .with("k", k as f64)
            .with("l", l as f64)
            .with("delta", delta));
    }
    let alpha = 1.0 / (k - l) as f64;
    let pk = parts(k, kappa, v);
    let pl = parts(l, kappa, v);
    let (lhs, rhs, scale) = guan_18_sides(&pk, &pl, alpha, delta);
    let mut delta_star = 0.0;
    let mut d = 0.5;
    for _ in 0..40 {
        let (ld, rd, sd) = guan_18_sides(&pk, &pl, alpha, d);
        if holds(ld, rd, sd) {
            delta_star = d;
            break;
        }
        d *= 0.5;
    }
    Ok(LemmaTrial::new(kappa, v, lhs, rhs, scale, true)
        .with("k", k as f64)
        .with("l", l as f64)
        .with("delta", delta)
        .with("delta_star", delta_star))
}

/// Divided-difference inequality for an index with `|kappa_i| < delta kappa_1`:
/// `(1+eps_T) e^{kappa_l} sigma_{k-2}(kappa|il)
///   + (1+eps_T) DD(kappa_l, kappa_i) sigma_{k-1}(kappa|l)
///   >= e^{kappa_l} sigma_{k-1}(kappa|i) / kappa_1`.
///
/// Both sides are multiplied by `e^{-max(kappa_l, kappa_i)}` so large
/// curvatures do not overflow. The hypotheses do not include "kappa_1
/// sufficiently large"; callers sweep `kappa_1` and report the threshold.
pub fn check_le_r(kappa: &[f64], k: usize, i: usize, l: usize, eps_t: f64, delta: f64) -> Result<LemmaTrial> {
    let n = kappa.len();
    if i >= n || l >= n || i == l {
        return Err(Error::InvalidInput("need distinct indices i, l < n".into()));
    }
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("need 2 <= k <= n, got k={k}")));
    }
    let k1 = kappa[0];
    let sorted = kappa.windows(2).all(|w| w[0] >= w[1]);
    let met = eps_t > 0.0
        && eps_t < 0.5
        && delta > 0.0
        && delta < (eps_t / 2.0).min(1.0 / 200.0)
        && sorted
        && k1 > 0.0
        && kappa[i].abs() < delta * k1
        && in_gamma_k(kappa, k);
    let (ki, kl) = (kappa[i], kappa[l]);
    let shift = ki.max(kl);
    let el = (kl - shift).exp();
    let dd = divided_difference_exp(kl - shift, ki - shift);
    let s_il = sigma_excl(k as i64 - 2, kappa, &[i, l]);
    let s_l = sigma_excl(k as i64 - 1, kappa, &[l]);
    let s_i = sigma_excl(k as i64 - 1, kappa, &[i]);
    let t1 = (1.0 + eps_t) * el * s_il;
    let t2 = (1.0 + eps_t) * dd * s_l;
    let lhs = t1 + t2;
    let rhs = el / k1 * s_i;
    let scale = t1.abs() + t2.abs() + rhs.abs();
    Ok(LemmaTrial::new(kappa, &[], lhs, rhs, scale, met)
        .with("k", k as f64)
        .with("i", i as f64)
        .with("l", l as f64)
        .with("eps_T", eps_t)
        .with("delta", delta)
        .with("kappa_1", k1))
}

/// The five terms `A_i .. E_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abcde {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl Abcde {
    pub fn combination(&self) -> f64 {
        self.a + self.b + self.c + self.d - self.e
    }

    pub fn magnitude(&self) -> f64 {
        self.a.abs() + self.b.abs() + self.c.abs() + self.d.abs() + self.e.abs()
    }
}

fn abcde_generic(kappa: &[f64], i: usize, h: &[f64], big_k: f64, shift: f64, log_p: f64, p: f64) -> Abcde {
    let n = kappa.len();
    let k = n as i64 - 1;
    let g = sigma_grad(k, kappa);
    let s = sigma_hess(k, kappa);
    let e: Vec<f64> = kappa.iter().map(|v| (v - shift).exp()).collect();
    let gh: f64 = (0..n).map(|p| g[p] * h[p]).sum();
    let mut quad = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                quad += s[(p, q)] * h[p] * h[q];
            }
        }
    }
    let a = e[i] * (big_k * gh * gh - quad);
    let b = 2.0 * (0..n).filter(|&l| l != i).map(|l| s[(i, l)] * e[l] * h[l] * h[l]).sum::<f64>();
    let c = g[i] * (0..n).map(|l| e[l] * h[l] * h[l]).sum::<f64>();
    let d = 2.0
        * (0..n)
            .filter(|&l| l != i)
            .map(|l| g[l] * divided_difference_exp(kappa[l] - shift, kappa[i] - shift) * h[l] * h[l])
            .sum::<f64>();
    let pi: f64 = (0..n).map(|l| e[l] * h[l]).sum();
    let e_term = (1.0 + log_p) / (p * log_p) * g[i] * pi * pi;
    Abcde { a, b, c, d, e: e_term }
}

fn check_abcde_args(kappa: &[f64], i: usize, h: &[f64]) -> Result<()> {
    if kappa.len() < 3 {
        return Err(Error::InvalidInput("need n >= 3".into()));
    }
    if i >= kappa.len() || h.len() != kappa.len() {
        return Err(Error::InvalidInput("index or direction length out of range".into()));
    }
    Ok(())
}

/// The five terms with `sigma = sigma_{n-1}`, `P = sum e^{kappa_l}` and
/// `P_i = sum e^{kappa_l} h_l`:
/// `A = e^{kappa_i}(K (g.h)^2 - sum_{p!=q} S_pq h_p h_q)`,
/// `B = 2 sum_{l!=i} S_il e^{kappa_l} h_l^2`, `C = g_i sum e^{kappa_l} h_l^2`,
/// `D = 2 sum_{l!=i} g_l DD(kappa_l, kappa_i) h_l^2`,
/// `E = (1 + log P)/(P log P) g_i P_i^2`.
pub fn compute_abcde(kappa: &[f64], i: usize, hvec: &[f64], big_k: f64) -> Result<Abcde> {
    check_abcde_args(kappa, i, hvec)?;
    let prof = PProfile::new(kappa)?;
    Ok(abcde_generic(kappa, i, hvec, big_k, 0.0, prof.log_p, prof.p))
}

/// [`compute_abcde`] divided by `e^{max kappa}`; usable for any finite
/// curvatures. Requires `P > 1` (true on `Gamma_{n-1}`, where `kappa_1 > 0`).
pub fn compute_abcde_scaled(kappa: &[f64], i: usize, hvec: &[f64], big_k: f64) -> Result<Abcde> {
    check_abcde_args(kappa, i, hvec)?;
    let (shift, log_p, p_scaled) = scaled_profile(kappa)?;
    Ok(abcde_generic(kappa, i, hvec, big_k, shift, log_p, p_scaled))
}

fn scaled_profile(kappa: &[f64]) -> Result<(f64, f64, f64)> {
    if let Some(&v) = kappa.iter().find(|v| !v.is_finite()) {
        return Err(Error::OutOfRange { value: v });
    }
    let shift = kappa.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_scaled: f64 = kappa.iter().map(|v| (v - shift).exp()).sum();
    let log_p = shift + p_scaled.ln();
    if log_p <= 0.0 {
        return Err(Error::InvalidInput("log P must be positive".into()));
    }
    Ok((shift, log_p, p_scaled))
}

/// Symmetric matrix `M` with `h^T M h = (A+B+C+D-E) e^{-max kappa}`.
pub fn combination_matrix_scaled(kappa: &[f64], i: usize, big_k: f64) -> Result<DMatrix<f64>> {
    let n = kappa.len();
    check_abcde_args(kappa, i, &vec![0.0; n])?;
    let (shift, log_p, p) = scaled_profile(kappa)?;
    let k = n as i64 - 1;
    let g = sigma_grad(k, kappa);
    let s = sigma_hess(k, kappa);
    let e = DVector::from_iterator(n, kappa.iter().map(|v| (v - shift).exp()));
    let mut m = e[i] * (big_k * &g * g.transpose() - &s);
    for l in 0..n {
        m[(l, l)] += g[i] * e[l];
        if l != i {
            m[(l, l)] +=
                2.0 * s[(i, l)] * e[l] + 2.0 * g[l] * divided_difference_exp(kappa[l] - shift, kappa[i] - shift);
        }
    }
    m -= (1.0 + log_p) / (p * log_p) * g[i] * &e * e.transpose();
    Ok(m)
}

/// Which of the three cases for `kappa_i` relative to `delta kappa_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|kappa_i| < delta kappa_1`
    SmallI,
    /// `kappa_i >= delta kappa_1`
    PositiveI,
    /// `-kappa_i >= delta kappa_1`
    NegativeI,
}

impl Regime {
    pub fn holds(self, kappa: &[f64], i: usize, delta: f64) -> bool {
        let (ki, k1) = (kappa[i], kappa[0]);
        match self {
            Regime::SmallI => ki.abs() < delta * k1,
            Regime::PositiveI => ki >= delta * k1,
            Regime::NegativeI => -ki >= delta * k1,
        }
    }
}

/// Sign of `A_i + B_i + C_i + D_i - E_i` (evaluated scaled by
/// `e^{-max kappa}`), with the regime, cone and ordering hypotheses recorded.
pub fn check_lemma_combination(
    kappa: &[f64],
    i: usize,
    hvec: &[f64],
    big_k: f64,
    regime: Regime,
    delta: f64,
) -> Result<LemmaTrial> {
    let n = kappa.len();
    check_abcde_args(kappa, i, hvec)?;
    let sorted = kappa.windows(2).all(|w| w[0] >= w[1]);
    let met = sorted && in_gamma_k(kappa, n - 1) && regime.holds(kappa, i, delta);
    let t = compute_abcde_scaled(kappa, i, hvec, big_k)?;
    Ok(LemmaTrial::new(kappa, hvec, t.combination(), 0.0, t.magnitude(), met)
        .with("i", i as f64)
        .with("K", big_k)
        .with("delta", delta)
        .with("kappa_1", kappa[0])
        .with("A", t.a)
        .with("B", t.b)
        .with("C", t.c)
        .with("D", t.d)
        .with("E", t.e))
}

/// Unit direction minimizing the combination (most negative eigenvector).
pub fn adversarial_direction(kappa: &[f64], i: usize, big_k: f64) -> Result<Vec<f64>> {
    let m = combination_matrix_scaled(kappa, i, big_k)?;
    Ok(jacobi_eigen(&m)?.min_vector().iter().copied().collect())
}
