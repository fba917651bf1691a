//! Garding cones `Gamma_k = { sigma_1 > 0, ..., sigma_k > 0 }`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::trial_rng;
use crate::symfunc::{sigma_all, sort_descending};

/// Dimension and order of a Garding cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub n: usize,
    pub k: usize,
}

impl ConeSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("cone order k={k} must satisfy 1 <= k <= n={n}")));
        }
        Ok(Self { n, k })
    }
}

/// Strict membership: `sigma_m(kappa) > 0` for `m = 1..=k`.
pub fn in_gamma_k(kappa: &[f64], k: usize) -> bool {
    let e = sigma_all(kappa);
    k <= kappa.len() && (1..=k).all(|m| e[m] > 0.0)
}

/// Scale-free cone margin `min_{m<=k} sigma_m / |kappa|^m`; positive exactly
/// on `Gamma_k`.
pub fn gamma_margin(kappa: &[f64], k: usize) -> f64 {
    let norm = kappa.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || k > kappa.len() {
        return 0.0;
    }
    let e = sigma_all(kappa);
    (1..=k).map(|m| e[m] / norm.powi(m as i32)).fold(f64::INFINITY, f64::min)
}

/// Outcome of the smallest-eigenvalue ratio test on `Gamma_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBound {
    /// `-kappa_n / kappa_1`.
    pub ratio: f64,
    /// `1 / (n - 1)`.
    pub bound: f64,
    /// Strict `ratio < bound`.
    pub holds: bool,
    /// `ratio == bound` exactly; reported apart from `holds`.
    pub equality: bool,
}

/// For sorted `kappa` in `Gamma_{n-1}`, compares `-kappa_n / kappa_1` with
/// `1/(n-1)`.
pub fn min_eig_ratio_bound(kappa: &[f64]) -> Result<RatioBound> {
    let n = kappa.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two entries".into()));
    }
    if kappa.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("curvature vector must be sorted descending".into()));
    }
    if !in_gamma_k(kappa, n - 1) || kappa[0] <= 0.0 {
        return Err(Error::NotInCone { k: n - 1 });
    }
    let ratio = -kappa[n - 1] / kappa[0];
    let bound = 1.0 / (n as f64 - 1.0);
    Ok(RatioBound { ratio, bound, holds: ratio < bound, equality: ratio == bound })
}

/// Rejection attempts allowed per sample before giving up.
pub const MAX_ATTEMPTS: usize = 100_000;

/// Target margin for the near-boundary stratum.
pub const NEAR_BOUNDARY_MARGIN: f64 = 1e-3;

/// Whether trial `j` of `count` belongs to the near-boundary stratum.
///
/// Spreads `round(count * fraction)` near-boundary trials evenly over the run.
pub fn is_near_boundary_trial(j: usize, fraction: f64) -> bool {
    ((j + 1) as f64 * fraction).floor() > (j as f64 * fraction).floor()
}

/// One cone sample drawn from its own random stream.
pub fn sample_one<R: Rng>(spec: ConeSpec, near_boundary: bool, rng: &mut R) -> Result<Vec<f64>> {
    let mut kappa = vec![0.0; spec.n];
    let mut found = false;
    for _ in 0..MAX_ATTEMPTS {
        for v in kappa.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z + 1.0;
        }
        if in_gamma_k(&kappa, spec.k) {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::SamplerExhausted { attempts: MAX_ATTEMPTS });
    }
    sort_descending(&mut kappa);
    if near_boundary {
        push_to_boundary(&mut kappa, spec.k);
    }
    Ok(kappa)
}

/// Lowers the smallest entry by bisection until the vector is still in
/// `Gamma_k` with margin below [`NEAR_BOUNDARY_MARGIN`].
fn push_to_boundary(kappa: &mut [f64], k: usize) {
    let last = kappa.len() - 1;
    let mut inside = kappa[last];
    if gamma_margin(kappa, k) < NEAR_BOUNDARY_MARGIN {
        return;
    }
    let scale = kappa.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut step = scale;
    let mut outside = inside - step;
    kappa[last] = outside;
    while in_gamma_k(kappa, k) {
        step *= 2.0;
        outside = inside - step;
        kappa[last] = outside;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        kappa[last] = mid;
        if in_gamma_k(kappa, k) {
            inside = mid;
            if gamma_margin(kappa, k) < NEAR_BOUNDARY_MARGIN {
                return;
            }
        } else {
            outside = mid;
        }
    }
    kappa[last] = inside;
}

/// Deterministic list of `count` sorted samples in `Gamma_k`; a fraction
/// `near_boundary_fraction` of them is pushed close to the cone boundary.
pub fn sample_gamma_k(spec: ConeSpec, count: usize, seed: u64, near_boundary_fraction: f64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if !(0.0..=1.0).contains(&near_boundary_fraction) {
        return Err(Error::InvalidInput("near-boundary fraction must lie in [0, 1]".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|j| {
            let mut rng = trial_rng(seed, j as u64);
            sample_one(spec, is_near_boundary_trial(j, near_boundary_fraction), &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn membership_examples() {
        assert!(in_gamma_k(&[1.0, 1.0, 1.0], 3));
        assert!(in_gamma_k(&[3.0, 2.0, 1.0, -0.5], 3));
        assert!(!in_gamma_k(&[3.0, 2.0, 0.0, -1.0], 3));
        assert!(!in_gamma_k(&[1.0, 0.0], 2));
    }

    #[test]
    fn margin_examples() {
        assert_relative_eq!(gamma_margin(&[1.0, 1.0, 1.0], 2), 1.0, epsilon = 1e-15);
        assert!(gamma_margin(&[-1.0, -1.0, -1.0], 1) < 0.0);
        assert_eq!(gamma_margin(&[1.0, 0.0], 2), 0.0);
    }

    #[test]
    fn ratio_bound_examples() {
        let r = min_eig_ratio_bound(&[3.0, 2.0, 1.0, -0.5]).unwrap();
        assert_relative_eq!(r.ratio, 1.0 / 6.0);
        assert!(r.holds && !r.equality);
        let r = min_eig_ratio_bound(&[1.0; 5]).unwrap();
        assert_eq!(r.ratio, -1.0);
        assert!(r.holds);
        assert!(matches!(min_eig_ratio_bound(&[3.0, 2.0, 0.0, -1.0]), Err(Error::NotInCone { k: 3 })));
        assert!(min_eig_ratio_bound(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn sampler_postconditions() {
        let spec = ConeSpec::new(5, 4).unwrap();
        let a = sample_gamma_k(spec, 10, 7, 0.0).unwrap();
        let b = sample_gamma_k(spec, 10, 7, 0.0).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert!(in_gamma_k(s, 4));
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }
        let near = sample_gamma_k(spec, 20, 3, 1.0).unwrap();
        for s in &near {
            assert!(in_gamma_k(s, 4));
            assert!(gamma_margin(s, 4) < NEAR_BOUNDARY_MARGIN);
        }
    }

    #[test]
    fn stratum_counts() {
        let hits = (0..100).filter(|&j| is_near_boundary_trial(j, 0.2)).count();
        assert_eq!(hits, 20);
        assert_eq!((0..7).filter(|&j| is_near_boundary_trial(j, 1.0)).count(), 7);
        assert_eq!((0..7).filter(|&j| is_near_boundary_trial(j, 0.0)).count(), 0);
    }

    #[test]
    fn bad_spec() {
        assert!(ConeSpec::new(3, 0).is_err());
        assert!(ConeSpec::new(3, 4).is_err());
        assert!(sample_gamma_k(ConeSpec::new(3, 2).unwrap(), 0, 1, 0.0).is_err());
    }
}
