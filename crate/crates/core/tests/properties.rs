use curvest::cone::{gamma_margin, in_gamma_k, min_eig_ratio_bound, sample_one, ConeSpec, NEAR_BOUNDARY_MARGIN};
use curvest::estimate_verify::divided_difference_exp;
use curvest::geometry::Signature;
use curvest::keyineq::schur_psd_check;
use curvest::linalg::jacobi_eigen;
use curvest::report::fmt_float;
use curvest::rng::trial_rng;
use curvest::solver::{newton_step, BoundaryPreset, BoundarySpec, GridProblem, RhsSpec, SolverState};
use curvest::symfunc::{sigma, sigma_excl, sigma_grad, sigma_matrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// `sigma_m` by enumerating subsets.
fn sigma_brute(m: usize, kappa: &[f64]) -> f64 {
    let n = kappa.len();
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == m)
        .map(|s| (0..n).filter(|j| s >> j & 1 == 1).map(|j| kappa[j]).product::<f64>())
        .sum()
}

/// Sum of the absolute values of the terms of `sigma_m`.
fn sigma_abs(m: usize, kappa: &[f64]) -> f64 {
    let abs: Vec<f64> = kappa.iter().map(|v| v.abs()).collect();
    sigma_brute(m, &abs)
}

fn kappa_vec(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2..=max_n)
}

fn cone_draw() -> impl Strategy<Value = (usize, usize, bool, u64)> {
    (3usize..=7).prop_flat_map(|n| (Just(n), 1..=n, any::<bool>(), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sigma_matches_subset_sum(kappa in kappa_vec(8)) {
        for m in 0..=kappa.len() {
            let scale = sigma_abs(m, &kappa).max(1e-300);
            prop_assert!((sigma(m as i64, &kappa) - sigma_brute(m, &kappa)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sigma_is_symmetric(kappa in kappa_vec(8), shift in 0usize..8) {
        let mut rotated = kappa.clone();
        rotated.rotate_left(shift % kappa.len());
        rotated.reverse();
        for m in 0..=kappa.len() as i64 {
            let scale = sigma_abs(m as usize, &kappa).max(1e-300);
            prop_assert!((sigma(m, &kappa) - sigma(m, &rotated)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn newton_expansion(kappa in kappa_vec(8), i in 0usize..8, m in 1i64..8) {
        let i = i % kappa.len();
        let lhs = sigma(m, &kappa);
        let rhs = sigma_excl(m, &kappa, &[i]) + kappa[i] * sigma_excl(m - 1, &kappa, &[i]);
        let scale = sigma_abs(m.min(kappa.len() as i64) as usize, &kappa).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn euler_homogeneity(kappa in kappa_vec(8), m in 1i64..8) {
        let m = m.min(kappa.len() as i64);
        let g = sigma_grad(m, &kappa);
        let lhs: f64 = kappa.iter().zip(g.iter()).map(|(k, d)| k * d).sum();
        let scale = m as f64 * sigma_abs(m as usize, &kappa).max(1.0);
        prop_assert!((lhs - m as f64 * sigma(m, &kappa)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn sigma_of_matrix_is_sum_of_principal_minors(entries in prop::collection::vec(-2.0..2.0f64, 16), m in 1usize..=4) {
        let b = DMatrix::from_column_slice(4, 4, &entries);
        let a = &b + b.transpose();
        let minors: f64 = (0u32..16)
            .filter(|s| s.count_ones() as usize == m)
            .map(|s| {
                let idx: Vec<usize> = (0..4).filter(|j| s >> j & 1 == 1).collect();
                DMatrix::from_fn(m, m, |r, c| a[(idx[r], idx[c])]).determinant()
            })
            .sum();
        let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max).powi(m as i32) * 24.0;
        prop_assert!((sigma_matrix(m as i64, &a).unwrap() - minors).abs() <= 1e-11 * scale);
    }

    #[test]
    fn jacobi_agrees_with_reference(entries in prop::collection::vec(-5.0..5.0f64, 36)) {
        let b = DMatrix::from_column_slice(6, 6, &entries);
        let a = &b + b.transpose();
        let eig = jacobi_eigen(&a).unwrap();
        let mut reference: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        let norm = a.norm();
        for (x, y) in eig.values.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= 1e-12 * norm);
        }
        let recon = &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        prop_assert!((recon - &a).norm() <= 1e-12 * norm);
    }

    #[test]
    fn sampler_lands_in_cone((n, k, near, seed) in cone_draw()) {
        let kappa = sample_one(ConeSpec::new(n, k).unwrap(), near, &mut trial_rng(seed, 0)).unwrap();
        prop_assert_eq!(kappa.len(), n);
        prop_assert!(in_gamma_k(&kappa, k));
        prop_assert!(kappa.windows(2).all(|w| w[0] >= w[1]));
        if near {
            prop_assert!(gamma_margin(&kappa, k) < NEAR_BOUNDARY_MARGIN);
        }
    }

    #[test]
    fn cone_is_convex((n, k, _near, seed) in cone_draw(), s in 0.0..1.0f64) {
        let spec = ConeSpec::new(n, k).unwrap();
        let a = sample_one(spec, false, &mut trial_rng(seed, 0)).unwrap();
        let b = sample_one(spec, false, &mut trial_rng(seed, 1)).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + (1.0 - s) * y).collect();
        prop_assert!(in_gamma_k(&mid, k));
    }

    #[test]
    fn ratio_bound_and_schur_on_cone(n in 3usize..=7, near in any::<bool>(), seed in any::<u64>()) {
        let kappa = sample_one(ConeSpec::new(n, n - 1).unwrap(), near, &mut trial_rng(seed, 0)).unwrap();
        prop_assert!(min_eig_ratio_bound(&kappa).unwrap().holds);
        for i in 0..n {
            let s = schur_psd_check(&kappa, i).unwrap();
            prop_assert!(s.psd_a && s.psd_a2);
        }
    }

    #[test]
    fn divided_difference_mean_value(a in -700.0..700.0f64, b in -700.0..700.0f64) {
        let d = divided_difference_exp(a, b);
        prop_assert_eq!(d, divided_difference_exp(b, a));
        let (lo, hi) = (a.min(b).exp(), a.max(b).exp());
        prop_assert!(d >= lo * (1.0 - 1e-12) && d <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn float_format_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn newton_residual_decreases_near_solution(seed in any::<u64>(), size in 1e-4..1e-2f64) {
        let p = GridProblem::unit_box(
            2,
            8,
            Signature::Euclidean,
            RhsSpec::Constant { value: 2.0 },
            BoundarySpec::preset(BoundaryPreset::Quadratic),
        )
        .unwrap();
        let mut rng = trial_rng(seed, 0);
        let mut u: Vec<f64> = (0..p.grid.len()).map(|i| 0.5 * p.grid.point(i).norm_squared()).collect();
        for i in p.grid.interior() {
            u[i] += size * rng.random_range(-1.0..1.0);
        }
        let mut state = newton_step(&SolverState::from_values(u), &p).unwrap();
        for _ in 0..4 {
            let next = newton_step(&state, &p).unwrap();
            prop_assert!(next.residual_norm <= state.residual_norm);
            prop_assert!(next.cone_ok);
            state = next;
        }
        prop_assert!(state.residual_norm < 1e-10);
    }
}
