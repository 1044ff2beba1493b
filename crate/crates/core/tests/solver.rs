mod common;

use common::{rng, Qp};
use limbswing::checks::random_vector;
use limbswing::solver::{
    nullspace_basis, numerical_gradient, project, solve, ProblemFunctions, SolverError, SolverOptions,
    TerminationReason,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn quadratics_reach_the_kkt_point() {
    for seed in 0..20 {
        let qp = Qp::random(seed, 10, 3);
        let result = solve(&qp.functions(), &[0.0; 10], &SolverOptions::default()).unwrap();
        let reference = qp.kkt_solution();
        let err = (DVector::from_vec(result.x_star.clone()) - reference).amax();
        assert!(err < 1e-5, "seed {seed}: {err:e}");
        assert!(result.constraint_residuals.iter().all(|r| r.abs() < 1e-8));
        for w in result.cost_history.windows(2) {
            assert!(w[1] <= w[0], "seed {seed}: cost went up");
        }
    }
}

#[test]
fn unconstrained_rosenbrock_reaches_its_minimum() {
    let funcs = ProblemFunctions::new(|x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
    let opts = SolverOptions {
        max_iters: 20_000,
        gradient_tol: 1e-8,
        cost_change_tol: 1e-300,
        ..SolverOptions::default()
    };
    let result = solve(&funcs, &[-1.2, 1.0], &opts).unwrap();
    assert!(
        result.cost_star < 1e-6,
        "cost {} after {:?}",
        result.cost_star,
        result.termination_reason
    );
}

#[test]
fn circle_constraint_is_followed() {
    // Minimize x + y on the unit circle: optimum at -(1, 1)/√2.
    let funcs = ProblemFunctions::new(|x: &[f64]| x[0] + x[1]).constraint(|x: &[f64]| x[0] * x[0] + x[1] * x[1] - 1.0);
    let result = solve(&funcs, &[0.6, -0.8], &SolverOptions::default()).unwrap();
    let target = -std::f64::consts::FRAC_1_SQRT_2;
    assert!((result.x_star[0] - target).abs() < 1e-4 && (result.x_star[1] - target).abs() < 1e-4);
    assert!(result.constraint_residuals[0].abs() < 1e-8);
}

#[test]
fn feasible_start_point_stays_put_for_a_constant_cost() {
    let funcs = ProblemFunctions::new(|_: &[f64]| 3.0).constraint(|x: &[f64]| x[0] - 1.0);
    let result = solve(&funcs, &[1.0, 2.0], &SolverOptions::default()).unwrap();
    assert_eq!(result.x_star, vec![1.0, 2.0]);
    assert_eq!(result.termination_reason, TerminationReason::GradientTol);
}

#[test]
fn contradictory_constraints_are_infeasible() {
    let funcs = ProblemFunctions::new(|x: &[f64]| x[0] * x[0])
        .constraint(|x: &[f64]| x[0] - 1.0)
        .constraint(|x: &[f64]| x[0] + 1.0);
    assert!(matches!(
        solve(&funcs, &[0.0], &SolverOptions::default()),
        Err(SolverError::Infeasible { .. })
    ));
}

#[test]
fn nan_cost_is_reported() {
    let funcs = ProblemFunctions::new(|x: &[f64]| if x[0] > 0.5 { f64::NAN } else { -x[0] });
    assert!(matches!(
        solve(&funcs, &[0.0], &SolverOptions::default()),
        Err(SolverError::NonFinite { .. })
    ));
}

#[test]
fn repeated_solves_are_bit_identical() {
    let qp = Qp::random(77, 10, 3);
    let a = solve(&qp.functions(), &[0.0; 10], &SolverOptions::default()).unwrap();
    let b = solve(&qp.functions(), &[0.0; 10], &SolverOptions::default()).unwrap();
    assert_eq!(a.x_star, b.x_star);
    assert_eq!(a.cost_history, b.cost_history);
}

proptest! {
    #[test]
    fn projection_removes_the_constraint_directions(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = rng(seed);
        let p = 8;
        let j = DMatrix::from_vec(p, k, random_vector(&mut rng, p * k, 1.0));
        let v = DVector::from_vec(random_vector(&mut rng, p, 1.0));
        let pv = project(&j, &v);
        // Orthogonal to every gradient, idempotent, and never longer than v.
        prop_assert!((j.transpose() * &pv).amax() < 1e-12);
        prop_assert!((project(&j, &pv) - &pv).amax() < 1e-12);
        prop_assert!(pv.norm() <= v.norm() + 1e-12);
        // v − Pv lies in the range, so Pv is the closest nullspace vector.
        let z = nullspace_basis(&j);
        prop_assert_eq!(z.ncols(), p - k);
        prop_assert!((&z * (z.transpose() * &v) - &pv).amax() < 1e-12);
        prop_assert!((z.transpose() * &z - DMatrix::identity(p - k, p - k)).amax() < 1e-12);
    }

    #[test]
    fn central_difference_gradient_of_a_cubic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a = random_vector(&mut rng, 4, 2.0);
        let x = random_vector(&mut rng, 4, 1.0);
        let f = |y: &[f64]| y.iter().zip(&a).map(|(yi, ai)| ai * yi.powi(3)).sum::<f64>();
        let g = numerical_gradient(&f, &x, 1e-6).unwrap();
        for i in 0..4 {
            prop_assert!((g[i] - 3.0 * a[i] * x[i] * x[i]).abs() < 1e-7);
        }
    }
}
