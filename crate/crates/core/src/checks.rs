//! Randomized consistency checks of a model's centroidal quantities.
//!
//! Three suites run over seeded random configurations:
//!
//! - the angular rows carry no base translational term,
//! - the base angular block equals the rotated composite inertia and is
//!   invertible,
//! - `A_G ν` equals momentum summed body by body from propagated link
//!   velocities.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rbd::{body_velocities, compute_centroidal_map, forward_kinematics, verify_a_omega_identity, RobotModel};

pub const A_V_TOL: f64 = 1e-9;
pub const A_OMEGA_TOL: f64 = 1e-9;
pub const MOMENTUM_TOL: f64 = 1e-8;

/// Joint angles are drawn from `[-JOINT_RANGE, JOINT_RANGE]`.
pub const JOINT_RANGE: f64 = 1.5;
/// Velocity components are drawn from `[-VELOCITY_RANGE, VELOCITY_RANGE]`.
pub const VELOCITY_RANGE: f64 = 2.0;

/// Uniformly distributed rotation.
pub fn random_orientation<R: RngExt>(rng: &mut R) -> UnitQuaternion<f64> {
    // Shoemake's subgroup algorithm.
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

pub fn random_vector<R: RngExt>(rng: &mut R, len: usize, range: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-range..=range)).collect()
}

/// Momentum `(l_G, k_G)` summed over bodies, with link velocities propagated
/// from `ν = (v_b, ω_b, q̇)`.
pub fn per_body_momentum(
    model: &RobotModel,
    theta: &UnitQuaternion<f64>,
    q: &[f64],
    nu: &[f64],
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    crate::error::check_len("generalized velocity", model.n() + 6, nu.len())?;
    let v_b = Vector3::new(nu[0], nu[1], nu[2]);
    let w_b = Vector3::new(nu[3], nu[4], nu[5]);
    let poses = forward_kinematics(model, theta, q)?;
    let vel = body_velocities(model, theta, q, &v_b, &w_b, &nu[6..])?;
    let mut first = Vector3::zeros();
    let coms: Vec<Vector3<f64>> = model
        .links()
        .iter()
        .zip(&poses)
        .map(|(link, pose)| {
            let c = pose.translation + pose.rotation * link.inertia.com_offset;
            first += c * link.inertia.mass;
            c
        })
        .collect();
    let p_g = first / model.total_mass();
    let mut l = Vector3::zeros();
    let mut k = Vector3::zeros();
    for (i, link) in model.links().iter().enumerate() {
        let m = link.inertia.mass;
        let r = poses[i].rotation;
        l += vel.com_linear[i] * m;
        k += r * link.inertia.inertia_about_com * r.transpose() * vel.angular[i]
            + (coms[i] - p_g).cross(&vel.com_linear[i]) * m;
    }
    Ok((l, k))
}

/// A sample that broke a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckFailure {
    pub check: String,
    pub sample: usize,
    pub value: f64,
    pub bound: f64,
    /// `[w, x, y, z]`.
    pub orientation: [f64; 4],
    pub q: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub model: String,
    pub seed: u64,
    pub samples: usize,
    pub max_abs_a_v: f64,
    pub max_a_omega_residual: f64,
    pub min_a_omega_singular_value: f64,
    pub max_momentum_error: f64,
    pub passed: bool,
    pub first_failure: Option<CheckFailure>,
}

/// Runs all three suites on `samples` random states drawn from `seed`.
pub fn check_model(model: &RobotModel, samples: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport {
        model: model.name().to_owned(),
        seed,
        samples,
        max_abs_a_v: 0.0,
        max_a_omega_residual: 0.0,
        min_a_omega_singular_value: f64::INFINITY,
        max_momentum_error: 0.0,
        passed: true,
        first_failure: None,
    };
    for sample in 0..samples {
        let theta = random_orientation(&mut rng);
        let q = random_vector(&mut rng, model.n(), JOINT_RANGE);
        let nu = random_vector(&mut rng, model.n() + 6, VELOCITY_RANGE);

        let cmap = compute_centroidal_map(model, &theta, &q)?;
        let a_v = cmap.a_v.amax();
        let identity = verify_a_omega_identity(model, &theta, &q)?;
        let (l, k) = cmap.momentum(&nu)?;
        let (l_ref, k_ref) = per_body_momentum(model, &theta, &q, &nu)?;
        let scale = (l_ref.norm_squared() + k_ref.norm_squared())
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let err = ((l - l_ref).norm_squared() + (k - k_ref).norm_squared()).sqrt() / scale;

        report.max_abs_a_v = report.max_abs_a_v.max(a_v);
        report.max_a_omega_residual = report.max_a_omega_residual.max(identity.residual);
        report.min_a_omega_singular_value = report.min_a_omega_singular_value.min(identity.min_singular_value);
        report.max_momentum_error = report.max_momentum_error.max(err);

        let violations = [
            ("a_v_zero", a_v, a_v < A_V_TOL, A_V_TOL),
            (
                "a_omega_identity",
                identity.residual,
                identity.residual < A_OMEGA_TOL,
                A_OMEGA_TOL,
            ),
            (
                "a_omega_invertible",
                identity.min_singular_value,
                identity.min_singular_value > 0.0,
                0.0,
            ),
            ("momentum_oracle", err, err < MOMENTUM_TOL, MOMENTUM_TOL),
        ];
        for (check, value, ok, bound) in violations {
            if !ok && report.first_failure.is_none() {
                let qt = theta.quaternion();
                report.first_failure = Some(CheckFailure {
                    check: check.into(),
                    sample,
                    value,
                    bound,
                    orientation: [qt.w, qt.i, qt.j, qt.k],
                    q: q.clone(),
                    nu: nu.clone(),
                });
            }
            report.passed &= ok;
        }
    }
    Ok(report)
}
