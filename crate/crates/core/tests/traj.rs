use limbswing::model_io::builtin;
use limbswing::traj::{FreeVariableLayout, GammaFile, TimeScaling, TrajectoryMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn coefficients(n: usize, degree: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0f64..5.0, n * (degree + 1)).prop_map(move |v| DMatrix::from_vec(n, degree + 1, v))
}

#[test]
fn evaluation_outside_the_horizon_is_an_error() {
    let traj = TrajectoryMatrix::hold(&[0.1, 0.2], 3, 0.3).unwrap();
    assert!(traj.eval(0.3).is_ok());
    assert!(traj.eval(-0.01).is_err());
    assert!(traj.eval_rate(0.31).is_err());
    assert!(traj.eval(f64::NAN).is_err());
    assert!(TrajectoryMatrix::hold(&[0.0], 3, 0.0).is_err());
}

#[test]
fn hold_is_constant_with_zero_rate() {
    let traj = TrajectoryMatrix::hold(&[0.4, -0.2, 1.0], 3, 0.5).unwrap();
    for t in [0.0, 0.1, 0.5] {
        assert_eq!(traj.eval(t).unwrap().as_slice(), &[0.4, -0.2, 1.0]);
        assert_eq!(traj.eval_rate(t).unwrap().amax(), 0.0);
    }
}

#[test]
fn gamma_file_round_trips_through_json() {
    let model = builtin("planar3").unwrap();
    let gamma = DMatrix::from_row_slice(2, 4, &[0.1, -0.2, 0.3, 0.4, 1.0 / 3.0, 2.5e-7, -9.0, 0.0]);
    let traj = TrajectoryMatrix::new(gamma, 0.27).unwrap();
    let file = GammaFile::from_trajectory(&traj, &model);
    let text = serde_json::to_string(&file).unwrap();
    let back: GammaFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_trajectory().unwrap(), traj);
}

#[test]
fn ragged_gamma_file_is_rejected() {
    let file = GammaFile {
        degree: 3,
        t_f: 0.3,
        joint_names: vec!["a".into(), "b".into()],
        gamma: vec![vec![0.0; 4], vec![0.0; 3]],
    };
    assert!(file.to_trajectory().is_err());
}

#[test]
fn layout_covers_significant_joints_only() {
    let model = builtin("biped12").unwrap();
    let layout = FreeVariableLayout::for_model(&model, 3, TimeScaling::Seconds);
    assert_eq!(layout.dim(), 24);
    assert_eq!(layout.dofs(), model.significant_dofs().as_slice());
    let model = builtin("humanoid20").unwrap();
    assert_eq!(FreeVariableLayout::for_model(&model, 3, TimeScaling::Seconds).dim(), 32);
}

proptest! {
    #[test]
    fn rate_matches_power_rule_and_finite_difference(gamma in coefficients(3, 3), s in 0.05f64..0.95) {
        let t_f = 0.4;
        let t = s * t_f;
        let traj = TrajectoryMatrix::new(gamma.clone(), t_f).unwrap();
        let rate = traj.eval_rate(t).unwrap();
        let h = 1e-6;
        let fd = (traj.eval(t + h).unwrap() - traj.eval(t - h).unwrap()) / (2.0 * h);
        prop_assert!((&rate - fd).amax() < 1e-6);
        let d = traj.derivative_coefficients();
        for i in 0..3 {
            let manual = 3.0 * gamma[(i, 0)] * t * t + 2.0 * gamma[(i, 1)] * t + gamma[(i, 2)];
            let from_d = d[(i, 0)] * t * t + d[(i, 1)] * t + d[(i, 2)];
            prop_assert!((rate[i] - manual).abs() < 1e-12);
            prop_assert!((rate[i] - from_d).abs() < 1e-12);
        }
    }

    #[test]
    fn pack_then_unpack_restores_the_matrix(gamma in coefficients(12, 3), normalized in any::<bool>()) {
        let model = builtin("biped12").unwrap();
        let scaling = if normalized { TimeScaling::Normalized } else { TimeScaling::Seconds };
        let layout = FreeVariableLayout::for_model(&model, 3, scaling);
        let t_f = 0.31;
        let holds: Vec<f64> = (0..12).map(|i| 0.01 * i as f64).collect();
        // Frozen rows hold their angle; only significant rows carry free coefficients.
        let mut gamma = gamma;
        for dof in 0..12 {
            if !layout.dofs().contains(&dof) {
                gamma.row_mut(dof).fill(0.0);
                gamma[(dof, 3)] = holds[dof];
            }
        }
        let traj = TrajectoryMatrix::new(gamma, t_f).unwrap();
        let x = layout.pack(&traj).unwrap();
        prop_assert_eq!(x.len(), layout.dim());
        let back = layout.unpack(x.as_slice(), &holds, t_f).unwrap();
        let err = (back.gamma() - traj.gamma()).amax();
        if normalized {
            prop_assert!(err <= 1e-12 * traj.gamma().amax().max(1.0));
        } else {
            prop_assert_eq!(err, 0.0);
        }
    }

    #[test]
    fn unpack_then_pack_is_identity(x in prop::collection::vec(-2.0f64..2.0, 24)) {
        let model = builtin("biped12").unwrap();
        let layout = FreeVariableLayout::for_model(&model, 3, TimeScaling::Seconds);
        let traj = layout.unpack(&x, &[0.0; 12], 0.31).unwrap();
        let packed = layout.pack(&traj).unwrap();
        prop_assert_eq!(packed.as_slice(), x.as_slice());
    }
}
