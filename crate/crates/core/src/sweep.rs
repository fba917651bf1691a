//! Seeded verification sweeps. Every sweep returns per-trial rows (sorted by
//! trial) and named thresholds for the run summary.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cone::{in_gamma_k, is_near_boundary_trial, min_eig_ratio_bound, sample_one, ConeSpec};
use crate::error::{Error, Result};
use crate::estimate_verify::{
    adversarial_direction, check_guan_17, check_guan_18, check_le_r, check_lemma_combination,
    combination_matrix_scaled, Regime, LEMMA_TOL,
};
use crate::geometry::{curvatures_euclidean, curvatures_minkowski, hyperboloid_jet, GraphJet, Signature};
use crate::keyineq::{
    cofactor_block, cofactor_formula, counterexample_family, counterexample_form, counterexample_poly,
    find_k_threshold, find_k_threshold_for, hadamard_matrix, identity_suite, principal_block, principal_minor_formula,
    schur_psd_check, symmetric_fact_suite, IdentityCheck, PSD_TOL,
};
use crate::linalg::{jacobi_eigen, max_abs};
use crate::report::TrialRow;
use crate::rng::{sub_seed, trial_rng};
use crate::symfunc::{
    second_directional, sigma, sigma_excl, sigma_hess, sigma_matrix, sigma_second_by_minors, sigma_second_contraction,
    Sigma,
};

/// Relative tolerance of the identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Relative tolerance of the determinant formulas.
pub const DETERMINANT_TOL: f64 = 1e-9;

/// Shared sweep settings. Named parameters override the per-sweep defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub seed: u64,
    pub samples: usize,
    pub dims: Vec<usize>,
    pub params: BTreeMap<String, f64>,
}

impl SweepConfig {
    pub fn new(seed: u64, samples: usize, dims: &[usize]) -> Self {
        Self { seed, samples, dims: dims.to_vec(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn require_dims(&self, min: usize) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::InvalidInput("no dimensions given".into()));
        }
        if let Some(&n) = self.dims.iter().find(|&&n| n < min) {
            return Err(Error::InvalidInput(format!("dimension {n} is below the minimum {min}")));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be positive".into()));
        }
        Ok(())
    }
}

/// Rows and thresholds of one sweep.
#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<TrialRow>,
    pub thresholds: BTreeMap<String, Value>,
}

impl SweepOutput {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.is_violation()).count()
    }

    fn merge(&mut self, other: SweepOutput) {
        let offset = self.rows.iter().map(|r| r.trial + 1).max().unwrap_or(0);
        self.rows.extend(other.rows.into_iter().map(|mut r| {
            r.trial += offset;
            r
        }));
        self.thresholds.extend(other.thresholds);
    }
}

/// Runs `trial(n, j, rng)` for every dimension and trial in parallel; rows
/// keep `(dimension, trial)` order and get consecutive global trial numbers.
fn per_trial<F>(cfg: &SweepConfig, tag: u64, samples: usize, trial: F) -> Result<Vec<TrialRow>>
where
    F: Fn(usize, usize, &mut rand_chacha::ChaCha8Rng) -> Result<Vec<TrialRow>> + Sync,
{
    let mut rows = Vec::new();
    let mut offset = 0u64;
    for &n in &cfg.dims {
        let stream = sub_seed(cfg.seed, tag.wrapping_mul(1000).wrapping_add(n as u64));
        let chunk: Vec<Vec<TrialRow>> = (0..samples)
            .into_par_iter()
            .map(|j| {
                let mut rng = trial_rng(stream, j as u64);
                trial(n, j, &mut rng)
            })
            .collect::<Result<_>>()?;
        for (j, trial_rows) in chunk.into_iter().enumerate() {
            rows.extend(trial_rows.into_iter().map(|mut r| {
                r.trial = offset + j as u64;
                r
            }));
        }
        offset += samples as u64;
    }
    Ok(rows)
}

fn normals<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let v: f64 = rng.sample(StandardNormal);
            h[(r, c)] = v;
            h[(c, r)] = v;
        }
    }
    h
}

fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    let s = a.abs().max(b.abs()).max(scale);
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn cone_sample<R: Rng>(n: usize, k: usize, near: bool, rng: &mut R) -> Result<Vec<f64>> {
    sample_one(ConeSpec::new(n, k)?, near, rng)
}

/// Worst relative error per identity name, in first-seen order.
fn worst_by_name(checks: &[IdentityCheck]) -> Vec<(&'static str, &IdentityCheck)> {
    let mut order: Vec<&'static str> = Vec::new();
    let mut worst: BTreeMap<&'static str, &IdentityCheck> = BTreeMap::new();
    for c in checks {
        match worst.get(c.name) {
            Some(w) if w.rel_err() >= c.rel_err() => {}
            Some(_) => {
                worst.insert(c.name, c);
            }
            None => {
                order.push(c.name);
                worst.insert(c.name, c);
            }
        }
    }
    order.into_iter().map(|name| (name, worst[name])).collect()
}

fn identity_row(trial: u64, name: &str, kappa: &[f64], lhs: f64, rhs: f64, err: f64) -> TrialRow {
    TrialRow::check(trial, name, kappa, lhs, rhs, err <= IDENTITY_TOL).param("rel_err", err).param("tol", IDENTITY_TOL)
}

/// Polynomial identities, the Newton expansion, first and second derivatives
/// of `sigma_k` of a matrix at a diagonal point, on Gaussian `kappa`.
/// One row per trial and identity, holding the worst index tuple.
pub fn identities(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let rows = per_trial(cfg, 1, cfg.samples, |n, j, rng| {
        let trial = j as u64;
        let kappa = normals(rng, n);
        let h = random_symmetric(rng, n);
        let mut rows = Vec::new();
        let mut checks = identity_suite(&kappa)?;
        checks.extend(symmetric_fact_suite(&kappa));
        for (name, c) in worst_by_name(&checks) {
            rows.push(identity_row(trial, name, &kappa, c.lhs, c.rhs, c.rel_err()));
        }
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&kappa));
        let mag = kappa.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        // first derivative: sigma_k(A + s E) is at most quadratic in s, so the
        // central difference with unit step is exact
        let mut first_worst = (0.0, 0.0, -1.0);
        for k in 1..=n as i64 {
            for p in 0..n {
                for q in p..n {
                    let mut e = DMatrix::zeros(n, n);
                    e[(p, q)] = 1.0;
                    e[(q, p)] = 1.0;
                    let up = sigma_matrix(k, &(&a + &e))?;
                    let dn = sigma_matrix(k, &(&a - &e))?;
                    let lhs = (up - dn) / 2.0;
                    let rhs = if p == q { sigma_excl(k - 1, &kappa, &[p]) } else { 0.0 };
                    let err = rel_err(lhs, rhs, (mag + 1.0).powi(k as i32));
                    if err > first_worst.2 {
                        first_worst = (lhs, rhs, err);
                    }
                }
            }
        }
        rows.push(identity_row(trial, "first_derivative", &kappa, first_worst.0, first_worst.1, first_worst.2));

        let mut eig_worst = (0.0, 0.0, -1.0);
        let mut minor_worst = (0.0, 0.0, -1.0);
        let mut degenerate = false;
        for k in 2..=n {
            let ki = k as i64;
            let contraction = sigma_second_contraction(ki, &kappa, std::slice::from_ref(&h));
            let s = sigma_hess(ki, &kappa);
            let mut scale = 0.0;
            for p in 0..n {
                for q in (0..n).filter(|&q| q != p) {
                    scale += s[(p, q)].abs() * ((h[(p, p)] * h[(q, q)]).abs() + h[(p, q)] * h[(p, q)]);
                }
            }
            let minors = sigma_second_by_minors(k, &a, &h);
            let err = rel_err(contraction, minors, scale);
            if err > minor_worst.2 {
                minor_worst = (contraction, minors, err);
            }
            match second_directional(&Sigma(ki), &a, &h) {
                Ok(eig) => {
                    let err = rel_err(contraction, eig, scale);
                    if err > eig_worst.2 {
                        eig_worst = (contraction, eig, err);
                    }
                }
                Err(Error::DegenerateSpectrum { .. }) => degenerate = true,
                Err(e) => return Err(e),
            }
        }
        rows.push(identity_row(trial, "second_derivative_minors", &kappa, minor_worst.0, minor_worst.1, minor_worst.2));
        if degenerate {
            rows.push(TrialRow::observation(trial, "second_derivative_eigenbasis", &kappa, f64::NAN, f64::NAN, false));
        } else {
            rows.push(identity_row(
                trial,
                "second_derivative_eigenbasis",
                &kappa,
                eig_worst.0,
                eig_worst.1,
                eig_worst.2,
            ));
        }
        Ok(rows)
    })?;
    let worst = rows.iter().filter_map(|r| r.params.get("rel_err")).fold(0.0_f64, |a, &b| a.max(b));
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    out.thresholds.insert("max_rel_err".into(), json!(worst));
    out.thresholds.insert("tol".into(), json!(IDENTITY_TOL));
    Ok(out)
}

/// Smallest `K` on `1, 2, 4, ...` making the form PSD, and the PSD verdict at
/// `2K`, for every index with `kappa_i >= delta kappa_1` on `Gamma_{n-1}`
/// samples. Parameters: `delta` (0.1), `eps` (0.1), `K_max` (2^60),
/// `near_fraction` (0).
pub fn prop21(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let delta = cfg.get("delta", 0.1);
    let eps = cfg.get("eps", 0.1);
    let k_max = cfg.get("K_max", 2f64.powi(60));
    let near = cfg.get("near_fraction", 0.0);
    let rows = per_trial(cfg, 2, cfg.samples, |n, j, rng| {
        let kappa = cone_sample(n, n - 1, is_near_boundary_trial(j, near), rng)?;
        let mut rows = Vec::new();
        for i in (0..n).filter(|&i| kappa[i] >= delta * kappa[0]) {
            let row = match find_k_threshold(&kappa, i, eps, k_max)? {
                Some(t) => TrialRow::check(0, "form_psd", &kappa, t.min_eig_double, 0.0, t.double_psd)
                    .param("K_star", t.k_star)
                    .param("min_eig", t.min_eig),
                None => TrialRow::check(0, "form_psd", &kappa, f64::NAN, 0.0, false).param("K_star", f64::INFINITY),
            };
            rows.push(row.param("i", i as f64).param("delta", delta).param("eps", eps));
        }
        Ok(rows)
    })?;
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    for &n in &cfg.dims {
        let worst = out.rows.iter().filter(|r| r.n == n).map(|r| r.params["K_star"]).fold(0.0_f64, f64::max);
        out.thresholds.insert(format!("K_star_max_n{n}"), json!(worst));
    }
    out.thresholds.insert("forms_checked".into(), json!(out.rows.len()));
    Ok(out)
}

/// Product of row norms: a bound on `|det|` used as the error scale.
fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

/// Closed-form principal minors and cofactors of the Hadamard matrix against
/// LU determinants, for every excluded index and index tuple. Rows hold the
/// worst relative error per trial and formula. Parameter: `near_fraction` (0.2).
pub fn determinants(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let near = cfg.get("near_fraction", 0.2);
    let rows = per_trial(cfg, 3, cfg.samples, |n, j, rng| {
        let kappa = cone_sample(n, n - 1, is_near_boundary_trial(j, near), rng)?;
        let mut minor_worst = (0.0, 0.0, -1.0);
        let mut cof_worst = (0.0, 0.0, -1.0);
        let mut tuples = 0usize;
        for e in 0..n {
            let h = hadamard_matrix(&kappa, e)?;
            let others: Vec<usize> = (0..n).filter(|&p| p != e).collect();
            for mask in 1u32..(1 << others.len()) {
                let subset: Vec<usize> =
                    others.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect();
                let block = principal_block(&h, &subset);
                let formula = principal_minor_formula(&kappa, &subset, e)?;
                let det = block.determinant();
                let err = rel_err(formula, det, hadamard_bound(&block));
                tuples += 1;
                if err > minor_worst.2 {
                    minor_worst = (formula, det, err);
                }
                let m = subset.len();
                if m < 2 {
                    continue;
                }
                for dropped in 0..m - 1 {
                    let block = cofactor_block(&h, &subset, dropped);
                    let formula = cofactor_formula(&kappa, &subset, dropped, e)?;
                    let det = block.determinant();
                    let err = rel_err(formula, det, hadamard_bound(&block));
                    tuples += 1;
                    if err > cof_worst.2 {
                        cof_worst = (formula, det, err);
                    }
                }
            }
        }
        let row = |name: &str, w: (f64, f64, f64)| {
            TrialRow::check(0, name, &kappa, w.0, w.1, w.2 <= DETERMINANT_TOL)
                .param("rel_err", w.2)
                .param("tol", DETERMINANT_TOL)
                .param("tuples", tuples as f64)
        };
        Ok(vec![row("principal_minor", minor_worst), row("cofactor", cof_worst)])
    })?;
    let worst = rows.iter().map(|r| r.params["rel_err"]).fold(0.0_f64, f64::max);
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    out.thresholds.insert("max_rel_err".into(), json!(worst));
    Ok(out)
}

/// PSD checks of the Hadamard matrix and its entrywise square for every
/// excluded index. Parameter: `near_fraction` (0.2).
pub fn schur(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let near = cfg.get("near_fraction", 0.2);
    let rows = per_trial(cfg, 4, cfg.samples, |n, j, rng| {
        let near_trial = is_near_boundary_trial(j, near);
        let kappa = cone_sample(n, n - 1, near_trial, rng)?;
        let mut rows = Vec::new();
        for i in 0..n {
            let s = schur_psd_check(&kappa, i)?;
            rows.push(
                TrialRow::check(0, "hadamard_psd", &kappa, s.min_eig_a, -PSD_TOL * s.scale_a, s.psd_a)
                    .param("i", i as f64)
                    .param("near_boundary", near_trial as u8 as f64),
            );
            rows.push(
                TrialRow::check(0, "hadamard_square_psd", &kappa, s.min_eig_a2, -PSD_TOL * s.scale_a2, s.psd_a2)
                    .param("i", i as f64)
                    .param("near_boundary", near_trial as u8 as f64),
            );
        }
        Ok(rows)
    })?;
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    let worst = out
        .rows
        .iter()
        .map(|r| if r.rhs == 0.0 { r.lhs } else { r.lhs / -r.rhs * PSD_TOL })
        .fold(f64::INFINITY, f64::min);
    out.thresholds.insert("min_relative_eigenvalue".into(), json!(worst));
    Ok(out)
}

/// `-kappa_n < kappa_1 / (n - 1)` on `Gamma_{n-1}`. Parameter:
/// `near_fraction` (0.2).
pub fn ratio_bound(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let near = cfg.get("near_fraction", 0.2);
    let rows = per_trial(cfg, 5, cfg.samples, |n, j, rng| {
        let kappa = cone_sample(n, n - 1, is_near_boundary_trial(j, near), rng)?;
        let r = min_eig_ratio_bound(&kappa)?;
        Ok(vec![TrialRow::check(0, "min_curvature_ratio", &kappa, r.ratio, r.bound, r.holds)
            .param("equality", r.equality as u8 as f64)])
    })?;
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    for &n in &cfg.dims {
        let worst = out.rows.iter().filter(|r| r.n == n).map(|r| r.lhs / r.rhs).fold(f64::NEG_INFINITY, f64::max);
        out.thresholds.insert(format!("max_ratio_over_bound_n{n}"), json!(worst));
    }
    Ok(out)
}

/// Both concavity inequalities with `k = n - 1` (parameter `k` overrides),
/// `l` (1) and `delta` (1/16) on `Gamma_k` samples with Gaussian directions.
pub fn guan(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let delta = cfg.get("delta_guan", 1.0 / 16.0);
    let l = cfg.get("l", 1.0) as usize;
    let rows = per_trial(cfg, 6, cfg.samples, |n, _, rng| {
        let k = cfg.params.get("k").map(|&k| k as usize).unwrap_or(n - 1);
        if l == 0 || l >= k || k > n {
            return Err(Error::InvalidInput(format!("need 1 <= l < k <= n, got l={l}, k={k}, n={n}")));
        }
        let kappa = cone_sample(n, k, false, rng)?;
        let v = normals(rng, n);
        let t17 = check_guan_17(&kappa, k, l, &v)?;
        let t18 = check_guan_18(&kappa, k, l, &v, delta)?;
        let row = |name: &str, t: &crate::estimate_verify::LemmaTrial| {
            let mut r = TrialRow::check(0, name, &kappa, t.lhs, t.rhs, !t.is_violation());
            for (key, &val) in &t.aux {
                r = r.param(key, val);
            }
            r.param("scale", t.scale)
        };
        Ok(vec![row("concavity_first", &t17), row("concavity_second", &t18)])
    })?;
    let min_delta = rows.iter().filter_map(|r| r.params.get("delta_star")).fold(f64::INFINITY, |a, &b| a.min(b));
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    out.thresholds.insert("concavity_second_min_delta_star".into(), json!(min_delta));
    out.thresholds.insert("concavity_second_delta".into(), json!(delta));
    Ok(out)
}

/// Divided-difference inequality for a small curvature. Each trial draws a
/// `Gamma_{n-1}` sample, replaces one entry by `delta kappa_1 U(-1, 1)`,
/// rescales so `kappa_1` is log-uniform in `[1, kappa1_max]` and checks
/// every `l != i`. Rows with `kappa_1 < kappa1_min` are observations.
/// Parameters: `eps_T` (0.25), `delta_small` (1/400), `kappa1_min` (1e3),
/// `kappa1_max` (1e4).
pub fn divided_difference(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let eps_t = cfg.get("eps_T", 0.25);
    let delta = cfg.get("delta_small", 1.0 / 400.0);
    let k1_min = cfg.get("kappa1_min", 1e3);
    let k1_max = cfg.get("kappa1_max", 1e4);
    let rows = per_trial(cfg, 7, cfg.samples, |n, _, rng| {
        let k = n - 1;
        let mut found = None;
        for _ in 0..crate::cone::MAX_ATTEMPTS {
            let mut kappa = cone_sample(n, k, false, rng)?;
            let pos = rng.random_range(1..n);
            let small = delta * kappa[0] * rng.random_range(-1.0..1.0);
            kappa[pos] = small;
            crate::symfunc::sort_descending(&mut kappa);
            if in_gamma_k(&kappa, k) {
                let i = kappa.iter().position(|&v| v == small).expect("entry present");
                found = Some((kappa, i));
                break;
            }
        }
        let (mut kappa, i) = found.ok_or(Error::SamplerExhausted { attempts: crate::cone::MAX_ATTEMPTS })?;
        let target = (rng.random_range(0.0..1.0) * k1_max.ln()).exp();
        let s = target / kappa[0];
        kappa.iter_mut().for_each(|v| *v *= s);
        let mut rows = Vec::new();
        for l in (0..n).filter(|&l| l != i) {
            let t = check_le_r(&kappa, k, i, l, eps_t, delta)?;
            let mut row = if kappa[0] >= k1_min {
                TrialRow::check(0, "divided_difference", &kappa, t.lhs, t.rhs, !t.is_violation())
            } else {
                TrialRow::observation(0, "divided_difference", &kappa, t.lhs, t.rhs, !t.is_violation())
            };
            row = row.param("i", i as f64).param("l", l as f64).param("hypotheses_met", t.hypotheses_met as u8 as f64);
            rows.push(row.param("scale", t.scale));
        }
        Ok(rows)
    })?;
    let failing_k1 = rows.iter().filter(|r| !r.satisfied).map(|r| r.kappa[0]).fold(f64::NAN, f64::max);
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    out.thresholds.insert(
        "divided_difference_empirical_kappa1".into(),
        if failing_k1.is_nan() { json!("no failures") } else { json!(failing_k1) },
    );
    out.thresholds.insert("divided_difference_kappa1_min".into(), json!(k1_min));
    Ok(out)
}

const KAPPA1_SCALES: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// Positive-regime draw normalized to `kappa_1 = 1`, with an admissible
/// index chosen uniformly.
fn positive_regime_draw<R: Rng>(n: usize, delta: f64, rng: &mut R) -> Result<(Vec<f64>, usize)> {
    let mut kappa = cone_sample(n, n - 1, false, rng)?;
    let k1 = kappa[0];
    kappa.iter_mut().for_each(|v| *v /= k1);
    let admissible: Vec<usize> = (0..n).filter(|&i| kappa[i] >= delta).collect();
    let i = admissible[rng.random_range(0..admissible.len())];
    Ok((kappa, i))
}

fn combination_min_eig(kappa: &[f64], i: usize, big_k: f64) -> Result<(f64, f64)> {
    let m = combination_matrix_scaled(kappa, i, big_k)?;
    Ok((jacobi_eigen(&m)?.min(), max_abs(&m)))
}

/// `A + B + C + D - E` in the regime `kappa_i >= delta kappa_1`, with `K`
/// the form threshold of the normalized sample. A calibration pass over the
/// scales `kappa_1 in {1, 10, 100, 1000}` finds the smallest scale from
/// which no failure is seen; fresh trials at log-uniform `kappa_1` between
/// that scale and 1000 are then checked along a Gaussian direction and along
/// the most negative eigenvector. Parameters: `delta` (0.1), `eps` (0.1),
/// `K_max` (2^60), `calibration` (samples).
pub fn combination(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.require_dims(3)?;
    let delta = cfg.get("delta", 0.1);
    let eps = cfg.get("eps", 0.1);
    let k_max = cfg.get("K_max", 2f64.powi(60));
    let calibration = cfg.get("calibration", cfg.samples as f64) as usize;
    let mut out = SweepOutput::default();
    for &n in &cfg.dims {
        let single = SweepConfig { dims: vec![n], ..cfg.clone() };
        let k_of = |kappa: &[f64], i: usize| -> Result<f64> {
            Ok(find_k_threshold(kappa, i, eps, k_max)?.map(|t| t.k_star).unwrap_or(f64::NAN))
        };
        let calib = per_trial(&single, 8, calibration.max(1), |n, _, rng| {
            let (kappa, i) = positive_regime_draw(n, delta, rng)?;
            let big_k = k_of(&kappa, i)?;
            let mut rows = Vec::new();
            for s in KAPPA1_SCALES {
                let y: Vec<f64> = kappa.iter().map(|v| v * s).collect();
                let (min_eig, scale) = combination_min_eig(&y, i, big_k)?;
                rows.push(
                    TrialRow::observation(
                        0,
                        "combination_calibration",
                        &y,
                        min_eig,
                        -LEMMA_TOL * scale,
                        min_eig >= -LEMMA_TOL * scale,
                    )
                    .param("i", i as f64)
                    .param("K", big_k)
                    .param("scale", s),
                );
            }
            Ok(rows)
        })?;
        let failing: Vec<f64> = calib.iter().filter(|r| !r.satisfied).map(|r| r.params["scale"]).collect();
        let threshold = KAPPA1_SCALES
            .iter()
            .copied()
            .find(|&s| failing.iter().all(|&f| f < s))
            .unwrap_or(*KAPPA1_SCALES.last().expect("non-empty"));
        let k_star_max = calib.iter().map(|r| r.params["K"]).fold(0.0_f64, f64::max);
        let top = *KAPPA1_SCALES.last().expect("non-empty");
        let eval = per_trial(&single, 9, cfg.samples, |n, j, rng| {
            let (kappa, i) = positive_regime_draw(n, delta, rng)?;
            let big_k = k_of(&kappa, i)?;
            let target = if threshold >= top {
                top
            } else {
                threshold * ((top / threshold).ln() * rng.random_range(0.0..1.0)).exp()
            };
            let y: Vec<f64> = kappa.iter().map(|v| v * target).collect();
            let h = normals(rng, n);
            let t = check_lemma_combination(&y, i, &h, big_k, Regime::PositiveI, delta)?;
            let (min_eig, scale) = combination_min_eig(&y, i, big_k)?;
            let ray = adversarial_direction(&y, i, big_k)?;
            let mut rows = vec![
                TrialRow::check(0, "combination_random", &y, t.lhs, t.rhs, !t.is_violation()).param("scale", t.scale),
                TrialRow::check(
                    0,
                    "combination_adversarial",
                    &y,
                    min_eig,
                    -LEMMA_TOL * scale,
                    min_eig >= -LEMMA_TOL * scale,
                )
                .param("scale", scale)
                .param("ray_0", ray[0]),
            ];
            for r in rows.iter_mut() {
                r.params.insert("i".into(), i as f64);
                r.params.insert("K".into(), big_k);
                r.params.insert("trial_in_dim".into(), j as f64);
            }
            Ok(rows)
        })?;
        let mut part = SweepOutput { rows: calib, thresholds: BTreeMap::new() };
        part.merge(SweepOutput { rows: eval, thresholds: BTreeMap::new() });
        part.thresholds.insert(format!("combination_kappa1_threshold_n{n}"), json!(threshold));
        part.thresholds.insert(format!("combination_K_star_max_n{n}"), json!(k_star_max));
        part.thresholds.insert(format!("combination_calibration_failures_n{n}"), json!(failing.len()));
        out.merge(part);
    }
    Ok(out)
}

/// All estimate-lemma sweeps: ratio bound, concavity inequalities,
/// divided-difference inequality and the five-term combination.
pub fn lemmas(cfg: &SweepConfig) -> Result<SweepOutput> {
    let mut out = ratio_bound(cfg)?;
    out.merge(guan(cfg)?);
    out.merge(divided_difference(cfg)?);
    out.merge(combination(cfg)?);
    Ok(out)
}

/// Counterexample family: determinant against the printed polynomial on a
/// `t` grid (checks), smallest eigenvalues of the form (observations) and a
/// `K` scan at `t` and at `t = 10`. Parameters: `t` (1), `K` (1), `K_max` (2^60).
pub fn counterexample(cfg: &SweepConfig) -> Result<SweepOutput> {
    let t0 = cfg.get("t", 1.0);
    let big_k = cfg.get("K", 1.0);
    let k_max = cfg.get("K_max", 2f64.powi(60));
    if !(t0 > 0.0) || !(big_k > 0.0) {
        return Err(Error::InvalidInput("t and K must be positive".into()));
    }
    let mut ts: Vec<f64> = (-8..=16).map(|j| 2f64.powf(j as f64 / 4.0)).collect();
    ts.push(t0);
    ts.push(10.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut rows = Vec::new();
    let poly = counterexample_poly(big_k, t0);
    rows.push(
        TrialRow::observation(0, "poly_value", &counterexample_family(t0)?, poly, 690.0 * big_k - 1066.0, true)
            .param("t", t0)
            .param("K", big_k),
    );
    for &t in &ts {
        let form = counterexample_form(t, big_k)?;
        let kappa = counterexample_family(t)?;
        let det = form.matrix.determinant();
        let p = counterexample_poly(big_k, t);
        let err = rel_err(det, p, hadamard_bound(&form.matrix));
        rows.push(
            TrialRow::check(0, "determinant", &kappa, det, p, err <= DETERMINANT_TOL)
                .param("t", t)
                .param("K", big_k)
                .param("rel_err", err),
        );
        rows.push(
            TrialRow::observation(0, "form_min_eig", &kappa, form.min_eig, -form.tol, form.psd)
                .param("t", t)
                .param("K", big_k),
        );
    }
    let mut thresholds = BTreeMap::new();
    for (key, t) in [("psd_K_at_t", t0), ("psd_K_at_t10", 10.0)] {
        let kappa = counterexample_family(t)?;
        let found = find_k_threshold_for(&kappa, 0, 2, 0.0, k_max)?;
        thresholds.insert(key.to_string(), found.map(|f| json!(f.k_star)).unwrap_or(Value::Null));
    }
    let mut big = 1.0;
    let kappa10 = counterexample_family(10.0)?;
    let mut worst_at_10 = f64::NEG_INFINITY;
    while big <= k_max {
        let form = counterexample_form(10.0, big)?;
        worst_at_10 = worst_at_10.max(form.min_eig);
        rows.push(
            TrialRow::observation(0, "form_min_eig_t10", &kappa10, form.min_eig, -form.tol, form.psd)
                .param("t", 10.0)
                .param("K", big),
        );
        big *= 2.0;
    }
    for (j, r) in rows.iter_mut().enumerate() {
        r.trial = j as u64;
    }
    let negative = rows.iter().filter(|r| r.check == "form_min_eig" && !r.satisfied).map(|r| r.params["t"]);
    thresholds.insert("negative_t".into(), json!(negative.collect::<Vec<_>>()));
    thresholds.insert("poly_value".into(), json!(poly));
    thresholds.insert("max_min_eig_t10".into(), json!(worst_at_10));
    Ok(SweepOutput { rows, thresholds })
}

/// Curvatures of one graph jet, given `du` and row-major `d2u`.
pub fn curvature_point(du: &[f64], d2u: &[f64], signature: Signature) -> Result<SweepOutput> {
    let n = du.len();
    if n < 2 || d2u.len() != n * n {
        return Err(Error::InvalidInput(format!("need n >= 2 and {} Hessian entries, got {}", n * n, d2u.len())));
    }
    let jet = GraphJet::from_derivatives(DVector::from_column_slice(du), DMatrix::from_row_slice(n, n, d2u))?;
    let c = match signature {
        Signature::Euclidean => curvatures_euclidean(&jet)?,
        Signature::Minkowski => curvatures_minkowski(&jet)?,
    };
    let kappa = c.kappa.values().to_vec();
    let s = sigma(n as i64 - 1, &kappa);
    let row = TrialRow::observation(0, "curvatures", &kappa, s, f64::NAN, in_gamma_k(&kappa, n - 1))
        .param("sigma_n_minus_1", s)
        .param("sigma_n", sigma(n as i64, &kappa));
    Ok(SweepOutput { rows: vec![row], thresholds: BTreeMap::new() })
}

/// Umbilic test surfaces with all curvatures 1: the hyperboloid
/// `sqrt(1 + |x|^2)` (Minkowski, `x` uniform in `[-2, 2]^n`) or the lower
/// unit hemisphere (Euclidean, `|x| < 0.9`). Checks `|kappa - 1| <= 1e-8`
/// and `|sigma_{n-1} - n| <= 1e-7`.
pub fn curvature_sweep(cfg: &SweepConfig, signature: Signature) -> Result<SweepOutput> {
    cfg.require_dims(2)?;
    let rows = per_trial(cfg, 10, cfg.samples, |n, _, rng| {
        let jet = match signature {
            Signature::Minkowski => {
                let x = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-2.0..2.0)));
                hyperboloid_jet(&x)
            }
            Signature::Euclidean => {
                let dir = DVector::from_vec(normals(rng, n)).normalize();
                let x: DVector<f64> = dir * 0.9 * rng.random_range(0.0..1.0);
                let r = (1.0 - x.norm_squared()).sqrt();
                let du = &x / r;
                let d2u = (DMatrix::identity(n, n) + &du * du.transpose()) / r;
                GraphJet::new(x, -r, du, d2u)?
            }
        };
        let c = match signature {
            Signature::Euclidean => curvatures_euclidean(&jet)?,
            Signature::Minkowski => curvatures_minkowski(&jet)?,
        };
        let kappa = c.kappa.values().to_vec();
        let dev = kappa.iter().fold(0.0_f64, |a, v| a.max((v - 1.0).abs()));
        let s = sigma(n as i64 - 1, &kappa);
        let point: Vec<f64> = jet.point.iter().copied().collect();
        let mut rows = vec![
            TrialRow::check(0, "umbilic_curvatures", &kappa, dev, 1e-8, dev <= 1e-8),
            TrialRow::check(0, "umbilic_sigma", &kappa, s, n as f64, (s - n as f64).abs() <= 1e-7),
        ];
        for r in rows.iter_mut() {
            for (a, &x) in point.iter().enumerate() {
                r.params.insert(format!("x{a}"), x);
            }
        }
        Ok(rows)
    })?;
    let worst = rows.iter().filter(|r| r.check == "umbilic_curvatures").map(|r| r.lhs).fold(0.0_f64, f64::max);
    let mut out = SweepOutput { rows, thresholds: BTreeMap::new() };
    out.thresholds.insert("max_curvature_deviation".into(), json!(worst));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweeps_pass() {
        let cfg = SweepConfig::new(3, 8, &[3, 4]);
        for out in [identities(&cfg), determinants(&cfg), schur(&cfg), ratio_bound(&cfg), guan(&cfg)] {
            let out = out.unwrap();
            assert!(!out.rows.is_empty());
            assert_eq!(out.violations(), 0, "{:?}", out.rows.iter().find(|r| r.is_violation()));
        }
    }

    #[test]
    fn rows_are_ordered_and_deterministic() {
        let cfg = SweepConfig::new(9, 6, &[3, 5]);
        let a = ratio_bound(&cfg).unwrap().rows;
        let b = ratio_bound(&cfg).unwrap().rows;
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].trial <= w[1].trial));
        assert_eq!(a.last().unwrap().trial, 11);
    }

    #[test]
    fn counterexample_rows() {
        let out = counterexample(&SweepConfig::new(1, 1, &[4])).unwrap();
        assert_eq!(out.violations(), 0);
        assert_eq!(out.thresholds["poly_value"], json!(-376.0));
        assert_eq!(out.thresholds["psd_K_at_t10"], Value::Null);
        assert!(out.rows.iter().any(|r| r.check == "form_min_eig" && r.lhs < 0.0));
    }

    #[test]
    fn rejects_small_dimensions() {
        assert!(identities(&SweepConfig::new(1, 2, &[2])).is_err());
        assert!(schur(&SweepConfig::new(1, 0, &[3])).is_err());
    }
}
