//! Radial solutions: spheres `|X| = r` with `sigma_k(1/r, ..., 1/r) = f(r)`.

use serde::{Deserialize, Serialize};

use super::rhs::RadialRhs;
use crate::error::{Error, Result};

/// Points of the monotonicity grid.
pub const BARRIER_POINTS: usize = 1000;
/// Allowed positive slope of `rho^k f`, relative to `max(1, |rho^k f|)`.
pub const BARRIER_TOL: f64 = 1e-8;
/// Root tolerance on `g(r) = r^k f(r) - C(n, k)`.
pub const ROOT_TOL: f64 = 1e-12;

/// Binomial coefficient as a float, `sigma_k(1, ..., 1)` in `n` variables.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Outcome of the two radial barrier conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    /// `f(r1) >= C/r1^k` and `f(r2) <= C/r2^k`.
    pub cond1: bool,
    /// `d/drho (rho^k f) <= 0` on `[r1, r2]`.
    pub cond2: bool,
    /// Largest sampled slope of `rho^k f`.
    pub max_slope: f64,
}

impl BarrierReport {
    pub fn passes(&self) -> bool {
        self.cond1 && self.cond2
    }
}

fn check_radii(r1: f64, r2: f64, n: usize, k: usize) -> Result<()> {
    if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// Checks both barrier conditions for a radial right side.
pub fn sphere_barrier_check(f: &RadialRhs, r1: f64, r2: f64, n: usize, k: usize) -> Result<BarrierReport> {
    check_radii(r1, r2, n, k)?;
    let c = binomial(n, k);
    let ki = k as i32;
    // Relative slack so that the marginal family C / rho^k passes with equality.
    let close = |a: f64, b: f64| a >= b - 1e-12 * b.abs().max(1.0);
    let cond1 = close(f.eval(r1), c / r1.powi(ki)) && close(c / r2.powi(ki), f.eval(r2));
    let phi = |rho: f64| rho.powi(ki) * f.eval(rho);
    let mut max_slope = f64::NEG_INFINITY;
    let mut cond2 = true;
    for j in 0..BARRIER_POINTS {
        let rho = r1 + (r2 - r1) * j as f64 / (BARRIER_POINTS - 1) as f64;
        let step = 1e-6 * rho;
        let slope = (phi(rho + step) - phi(rho - step)) / (2.0 * step);
        max_slope = max_slope.max(slope);
        if !(slope <= BARRIER_TOL * phi(rho).abs().max(1.0)) {
            cond2 = false;
        }
    }
    Ok(BarrierReport { cond1, cond2, max_slope })
}

/// Radius of the round solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSolution {
    pub r: f64,
    /// `g` vanishes at both ends: the radius is not determined and `r1` is
    /// returned.
    pub degenerate: bool,
    pub residual: f64,
}

/// Bisection on `g(r) = r^k f(r) - C(n, k)` over `[r1, r2]`.
pub fn sphere_solve(f: &RadialRhs, r1: f64, r2: f64, n: usize, k: usize) -> Result<SphereSolution> {
    check_radii(r1, r2, n, k)?;
    let c = binomial(n, k);
    let g = |r: f64| r.powi(k as i32) * f.eval(r) - c;
    let (g1, g2) = (g(r1), g(r2));
    if g1.abs() < ROOT_TOL && g2.abs() < ROOT_TOL {
        return Ok(SphereSolution { r: r1, degenerate: true, residual: g1 });
    }
    if g1.abs() < ROOT_TOL {
        return Ok(SphereSolution { r: r1, degenerate: false, residual: g1 });
    }
    if g2.abs() < ROOT_TOL {
        return Ok(SphereSolution { r: r2, degenerate: false, residual: g2 });
    }
    if g1.signum() == g2.signum() {
        return Err(Error::NoRoot { r1, r2 });
    }
    let (mut lo, mut hi, mut glo) = (r1, r2, g1);
    let mut mid = 0.5 * (lo + hi);
    let mut gm = g(mid);
    for _ in 0..200 {
        if gm.abs() < ROOT_TOL || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        gm = g(mid);
    }
    Ok(SphereSolution { r: mid, degenerate: false, residual: gm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn power(coef: f64, exponent: f64) -> RadialRhs {
        RadialRhs::Power { coef, exponent }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 3), 4.0);
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn unit_sphere() {
        for n in 2..6 {
            let f = power(n as f64, -(n as f64));
            let rep = sphere_barrier_check(&f, 0.5, 2.0, n, n - 1).unwrap();
            assert!(rep.passes());
            let s = sphere_solve(&f, 0.5, 2.0, n, n - 1).unwrap();
            assert!((s.r - 1.0).abs() < 1e-10);
            assert!(!s.degenerate);
        }
    }

    #[test]
    fn doubled_rhs_gives_radius_two() {
        let n = 3;
        let s = sphere_solve(&power(2.0 * n as f64, -(n as f64)), 0.5, 4.0, n, n - 1).unwrap();
        assert_relative_eq!(s.r, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn constant_rhs_fails_first_barrier() {
        let rep = sphere_barrier_check(&RadialRhs::Constant { value: 3.0 }, 0.5, 2.0, 3, 2).unwrap();
        assert!(!rep.cond1);
    }

    #[test]
    fn marginal_family_is_degenerate() {
        let f = power(3.0, -2.0);
        let rep = sphere_barrier_check(&f, 0.5, 2.0, 3, 2).unwrap();
        assert!(rep.cond1 && rep.cond2);
        let s = sphere_solve(&f, 0.5, 2.0, 3, 2).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.r, 0.5);
    }

    #[test]
    fn no_sign_change() {
        let f = RadialRhs::Constant { value: 100.0 };
        assert!(matches!(sphere_solve(&f, 0.5, 2.0, 3, 2), Err(Error::NoRoot { .. })));
    }
}
