use curvest::geometry::Signature;
use curvest::solver::{
    assemble_jacobian, assemble_residual, evaluate, manufactured_exact, newton_solve, newton_step, seed,
    solve_continuation, BoundaryPreset, BoundarySpec, GridProblem, Homotopy, RhsSpec, SolveOptions, SolverState,
};
use curvest::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quadratic(n: usize, cells: usize) -> GridProblem {
    GridProblem::unit_box(
        n,
        cells,
        Signature::Euclidean,
        RhsSpec::Constant { value: n as f64 },
        BoundarySpec::preset(BoundaryPreset::Quadratic),
    )
    .unwrap()
}

fn exact_values(p: &GridProblem, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..p.grid.len()).map(|i| f(p.grid.point(i).as_slice())).collect()
}

fn half_norm(x: &[f64]) -> f64 {
    0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn quadratic_residual_vanishes() {
    for n in [2, 3] {
        let p = quadratic(n, 8);
        let u = exact_values(&p, half_norm);
        let r = assemble_residual(&SolverState::from_values(u), &p).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-12), "{r:?}");
    }
}

#[test]
fn zero_grid_residual_is_minus_one() {
    let p = GridProblem::unit_box(
        2,
        4,
        Signature::Euclidean,
        RhsSpec::Constant { value: 1.0 },
        BoundarySpec::preset(BoundaryPreset::Zero),
    )
    .unwrap();
    let r = assemble_residual(&SolverState::from_values(vec![0.0; p.grid.len()]), &p).unwrap();
    assert!(r.iter().all(|v| (v + 1.0).abs() < 1e-15));
}

#[test]
fn manufactured_residual_vanishes() {
    for (n, sig) in [(2, Signature::Euclidean), (3, Signature::Euclidean), (2, Signature::Minkowski)] {
        let amp = if sig == Signature::Minkowski { 0.05 } else { 0.1 };
        let bounds = vec![[-0.3, 0.3]; n];
        let p = GridProblem::new(
            &bounds,
            &vec![0.1; n],
            sig,
            RhsSpec::Manufactured { amplitude: amp, c_u: 0.0, c_p: 0.0 },
            BoundarySpec::Preset { preset: BoundaryPreset::Manufactured, amplitude: amp },
        )
        .unwrap();
        // forward evaluation of the discrete operator on u* defines f
        let u = exact_values(&p, |x| manufactured_exact(x, amp).0);
        let base = evaluate(&p, &u, &Homotopy { t: 0.0, f0: Some(vec![0.0; p.grid.interior().len()]) }).unwrap();
        let hom = Homotopy { t: 0.0, f0: Some(base.residual.clone()) };
        let r = evaluate(&p, &u, &hom).unwrap();
        assert!(r.norm <= 1e-12);
    }
}

#[test]
fn exact_start_is_fixed_point() {
    let p = quadratic(2, 8);
    let u = exact_values(&p, half_norm);
    let s = newton_step(&SolverState::from_values(u.clone()), &p).unwrap();
    assert_eq!(s.damping, 1.0);
    assert!(s.residual_norm <= 1e-12);
    assert!(s.u.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn perturbed_quadratic_converges_monotonically() {
    let p = quadratic(2, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut u = exact_values(&p, half_norm);
    for i in p.grid.interior() {
        u[i] += 1e-3 * (rng.random::<f64>() - 0.5);
    }
    let mut log = Vec::new();
    let s = newton_solve(&SolverState::from_values(u), &p, &Homotopy::target(), 1e-10, 10, &mut log).unwrap();
    assert!(s.residual_norm < 1e-10);
    for w in log.windows(2) {
        assert!(w[1].residual < w[0].residual);
    }
}

#[test]
fn continuation_recovers_quadratic() {
    for n in [2, 3] {
        let p = quadratic(n, 8);
        let out = solve_continuation(&p, &SolveOptions::default()).unwrap();
        let exact = exact_values(&p, half_norm);
        let err = out.state.u.iter().zip(&exact).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err < 1e-8, "n={n} err={err}");
        assert!(out.state.cone_ok);
        assert_eq!(out.seed_alpha, 0.0);
    }
}

#[test]
fn path_independence() {
    let rhs = RhsSpec::Sine { amplitude: 0.5 };
    let p = GridProblem::unit_box(2, 8, Signature::Euclidean, rhs, BoundarySpec::preset(BoundaryPreset::Quadratic))
        .unwrap();
    let one = solve_continuation(&p, &SolveOptions { t_steps: 1, ..Default::default() }).unwrap();
    let eight = solve_continuation(&p, &SolveOptions { t_steps: 8, ..Default::default() }).unwrap();
    let diff = one.state.u.iter().zip(&eight.state.u).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn nonlinear_rhs_in_three_dimensions() {
    let p = GridProblem::unit_box(
        3,
        6,
        Signature::Euclidean,
        RhsSpec::Manufactured { amplitude: 0.1, c_u: 0.5, c_p: 0.2 },
        BoundarySpec::preset(BoundaryPreset::Manufactured),
    )
    .unwrap();
    let out = solve_continuation(&p, &SolveOptions::default()).unwrap();
    assert!(out.state.residual_norm < 1e-10);
    assert!(out.log.iter().all(|e| e.min_margin > 0.0));
}

#[test]
fn minkowski_hyperboloid() {
    // sigma_1 of the curvatures of sqrt(1+|x|^2) is 2 in two dimensions.
    let p = GridProblem::new(
        &[[-0.5, 0.5], [-0.5, 0.5]],
        &[0.0625, 0.0625],
        Signature::Minkowski,
        RhsSpec::Constant { value: 2.0 },
        BoundarySpec::preset(BoundaryPreset::Hyperboloid),
    )
    .unwrap();
    let out = solve_continuation(&p, &SolveOptions::default()).unwrap();
    let exact = exact_values(&p, |x| (1.0 + 2.0 * half_norm(x)).sqrt());
    let err = out.state.u.iter().zip(&exact).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(err < 1e-3, "{err}");
    for i in p.grid.interior() {
        let (du, _) = p.grid.derivatives(&out.state.u, i);
        assert!(du.norm() < 1.0);
    }
}

#[test]
fn infeasible_instance_reports_failure() {
    let p = GridProblem::new(
        &[[0.0, 2.0], [0.0, 2.0]],
        &[1.0, 1.0],
        Signature::Euclidean,
        RhsSpec::ExpDecay { amplitude: 100.0 },
        BoundarySpec::preset(BoundaryPreset::Zero),
    )
    .unwrap();
    let err = solve_continuation(&p, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, Error::LineSearchFailure { .. } | Error::SingularJacobian { .. }), "{err}");
}

#[test]
fn nonpositive_rhs_rejected() {
    let p = GridProblem::unit_box(
        2,
        4,
        Signature::Euclidean,
        RhsSpec::Constant { value: -1.0 },
        BoundarySpec::preset(BoundaryPreset::Quadratic),
    )
    .unwrap();
    assert!(matches!(solve_continuation(&p, &SolveOptions::default()), Err(Error::NonPositiveRhs { .. })));
}

#[test]
fn seed_is_convexified() {
    let p = GridProblem::unit_box(
        2,
        4,
        Signature::Euclidean,
        RhsSpec::Constant { value: 1.0 },
        BoundarySpec::Expr { expr: "-(x*x + y*y)".into() },
    )
    .unwrap();
    let s = seed(&p).unwrap();
    assert!(s.alpha > 0.0);
    let lam_min = s.hessian[0][0].min(s.hessian[1][1]);
    assert!(lam_min > 0.0);
}

#[test]
fn jacobian_matches_differences() {
    let p = GridProblem::unit_box(
        3,
        4,
        Signature::Euclidean,
        RhsSpec::Manufactured { amplitude: 0.1, c_u: 0.3, c_p: 0.4 },
        BoundarySpec::preset(BoundaryPreset::Manufactured),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let interior = p.grid.interior();
    let mut u = exact_values(&p, |x| manufactured_exact(x, 0.1).0);
    for &i in &interior {
        u[i] += 1e-3 * (rng.random::<f64>() - 0.5);
    }
    let hom = Homotopy::target();
    let jac = assemble_jacobian(&p, &u, &hom).unwrap();
    let v: Vec<f64> = (0..interior.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let jv = jac.apply(&v);
    let eps = 1e-6;
    let shifted = |s: f64| {
        let mut w = u.clone();
        for (c, &i) in interior.iter().enumerate() {
            w[i] += s * v[c];
        }
        evaluate(&p, &w, &hom).unwrap().residual
    };
    let (rp, rm) = (shifted(eps), shifted(-eps));
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    let num = fd.iter().zip(&jv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(num / den < 1e-5, "{}", num / den);
}
