//! Base orientation during flight.
//!
//! With no contact the centroidal angular momentum `k_G` is constant, so the
//! base rate follows from the joint motion alone:
//! `ω_b = A_ω⁻¹ (k_G − A_j q̇)`. The integrator advances the orientation
//! quaternion with fixed explicit-Euler steps, recomputing the centroidal
//! map at every step. The base translational velocity never enters: its
//! block of the angular rows vanishes identically.

mod log;

pub use log::{FlightLog, FlightSample};

use nalgebra::{DMatrix, DVector, Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rbd::{
    check_orientation, CentroidalMap, CentroidalWorkspace, JointMomentum, ReducedTree, RobotModel, TreeState,
};
use crate::traj::TrajectoryMatrix;

/// Default number of integration steps for cost evaluation.
pub const DEFAULT_STEPS: usize = 11;

/// Reciprocal condition number below which `A_ω` is treated as singular.
pub const RCOND_MIN: f64 = 1e-12;

/// State at liftoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightInitialState {
    pub theta0: UnitQuaternion<f64>,
    /// World-frame base angular velocity.
    pub omega0: Vector3<f64>,
    pub q0: Vec<f64>,
    pub qdot0: Vec<f64>,
    /// Base translational velocity. Accepted for completeness and ignored.
    #[serde(default)]
    pub v_b: Option<Vector3<f64>>,
}

impl FlightInitialState {
    /// Liftoff state consistent with `traj` at `t = 0`.
    pub fn from_trajectory(theta0: UnitQuaternion<f64>, omega0: Vector3<f64>, traj: &TrajectoryMatrix) -> Result<Self> {
        Ok(Self {
            theta0,
            omega0,
            q0: traj.eval(0.0)?.as_slice().to_vec(),
            qdot0: traj.eval_rate(0.0)?.as_slice().to_vec(),
            v_b: None,
        })
    }

    fn check(&self, model: &RobotModel) -> Result<()> {
        check_orientation(&self.theta0)?;
        check_len("liftoff joint positions", model.n(), self.q0.len())?;
        check_len("liftoff joint velocities", model.n(), self.qdot0.len())
    }
}

/// Conserved angular momentum `k_G = A_ω ω₀ + A_j q̇₀` at liftoff.
pub fn flight_momentum(model: &RobotModel, init: &FlightInitialState) -> Result<Vector3<f64>> {
    init.check(model)?;
    let mut jm = JointMomentum::default();
    jm.update(model, &init.q0, &init.qdot0)?;
    Ok(total_momentum(&jm.i_com, &jm.k_joint, &init.theta0, &init.omega0))
}

/// World-frame momentum from the base-frame composite inertia and joint term.
fn total_momentum(
    i_com: &Matrix3<f64>,
    k_joint: &Vector3<f64>,
    theta: &UnitQuaternion<f64>,
    omega: &Vector3<f64>,
) -> Vector3<f64> {
    theta * (i_com * theta.inverse_transform_vector(omega) + k_joint)
}

fn checked_inverse(a: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let norm1 = |m: &Matrix3<f64>| m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    match a.try_inverse() {
        Some(inv) => {
            let rcond = 1.0 / (norm1(a) * norm1(&inv));
            if rcond.is_finite() && rcond >= RCOND_MIN {
                Ok(inv)
            } else {
                Err(Error::IllConditioned { rcond })
            }
        }
        None => Err(Error::IllConditioned { rcond: 0.0 }),
    }
}

/// Base angular velocity that keeps the momentum at `k_gf` while the joints
/// move at `qdot`.
pub fn body_rate(cmap: &CentroidalMap, k_gf: &Vector3<f64>, qdot: &[f64]) -> Result<Vector3<f64>> {
    check_len("joint velocities", cmap.n(), qdot.len())?;
    let inv = checked_inverse(&cmap.a_omega)?;
    Ok(inv * (k_gf - cmap.joint_momentum(qdot)))
}

fn body_rate_from_momentum(jm: &JointMomentum, theta: &UnitQuaternion<f64>, k: &Vector3<f64>) -> Result<Vector3<f64>> {
    let inv = checked_inverse(&jm.i_com)?;
    Ok(theta * (inv * (theta.inverse_transform_vector(k) - jm.k_joint)))
}

/// One explicit-Euler step of `θ̇ = ½ [0, ω] ⊗ θ`, renormalized.
pub fn quaternion_step(theta: &UnitQuaternion<f64>, omega: &Vector3<f64>, dt: f64) -> UnitQuaternion<f64> {
    let q = theta.quaternion();
    let rate = Quaternion::from_imag(*omega) * q * 0.5;
    UnitQuaternion::new_normalize(q + rate * dt)
}

/// Rotation angle of an orientation, in `[0, π]`.
pub fn rotation_angle(theta: &UnitQuaternion<f64>) -> f64 {
    let q = theta.quaternion();
    2.0 * q.imag().norm().atan2(q.w.abs())
}

/// Final state of an integration.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightOutcome {
    pub theta_tf: UnitQuaternion<f64>,
    pub omega_tf: Vector3<f64>,
    pub k_gf: Vector3<f64>,
}

/// Scratch state reused across integrations of one model.
#[derive(Debug, Clone, Default)]
pub(crate) struct FlightScratch {
    /// Full workspace, valid at `t_f` once an integration returns.
    pub ws: CentroidalWorkspace,
    jm: JointMomentum,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

/// Runs the fixed-step integration, calling `visit` at every sample
/// (including `t = 0`). On return `scratch` holds the configuration at `t_f`.
pub(crate) fn integrate_with<F>(
    model: &RobotModel,
    init: &FlightInitialState,
    traj: &TrajectoryMatrix,
    steps: usize,
    scratch: &mut FlightScratch,
    mut visit: F,
) -> Result<FlightOutcome>
where
    F: FnMut(usize, f64, &UnitQuaternion<f64>, &Vector3<f64>, &FlightScratch) -> Result<()>,
{
    if steps < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 integration steps needed, got {steps}"
        )));
    }
    init.check(model)?;
    check_len("trajectory rows", model.n(), traj.n())?;
    let n = model.n();
    scratch.q.clear();
    scratch.q.extend_from_slice(&init.q0);
    scratch.qdot.clear();
    scratch.qdot.extend_from_slice(&init.qdot0);
    scratch.jm.update(model, &scratch.q, &scratch.qdot)?;

    let k = total_momentum(&scratch.jm.i_com, &scratch.jm.k_joint, &init.theta0, &init.omega0);
    let mut theta = init.theta0;
    let mut omega = init.omega0;
    visit(0, 0.0, &theta, &omega, scratch)?;

    let dt = traj.t_f() / steps as f64;
    scratch.q.resize(n, 0.0);
    scratch.qdot.resize(n, 0.0);
    for step in 1..=steps {
        theta = quaternion_step(&theta, &omega, dt);
        let t = if step == steps { traj.t_f() } else { step as f64 * dt };
        traj.eval_into(t, &mut scratch.q);
        traj.eval_rate_into(t, &mut scratch.qdot);
        scratch.jm.update(model, &scratch.q, &scratch.qdot)?;
        omega = body_rate_from_momentum(&scratch.jm, &theta, &k)?;
        visit(step, t, &theta, &omega, scratch)?;
    }
    scratch.ws.update(model, &scratch.q)?;
    Ok(FlightOutcome {
        theta_tf: theta,
        omega_tf: omega,
        k_gf: k,
    })
}

/// Per-step tree states kept between integrations of nearby trajectories.
#[derive(Debug, Clone, Default)]
pub(crate) struct ReducedFlight {
    pub states: Vec<TreeState>,
    inverses: Vec<Option<Matrix3<f64>>>,
    /// Joint positions and rates per step.
    joints: Vec<(Vec<f64>, Vec<f64>)>,
    /// Coefficients and horizon of the last successful call.
    seen: Option<(DMatrix<f64>, f64)>,
    rows: Vec<usize>,
}

/// [`integrate_with`] over a welded tree. `traj` must hold every welded
/// joint at its welding angle. Steps whose joint state is unchanged since
/// the previous call reuse their cached terms, so a trajectory that
/// differs in one row costs little more than that row's subtree.
pub(crate) fn integrate_reduced(
    tree: &ReducedTree,
    theta0: &UnitQuaternion<f64>,
    omega0: &Vector3<f64>,
    traj: &TrajectoryMatrix,
    steps: usize,
    cache: &mut ReducedFlight,
) -> Result<FlightOutcome> {
    if steps < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 integration steps needed, got {steps}"
        )));
    }
    check_orientation(theta0)?;
    let n = traj.n();
    cache.states.resize_with(steps + 1, TreeState::default);
    cache.inverses.resize(steps + 1, None);
    if cache.joints.len() != steps + 1 || cache.joints[0].0.len() != n {
        cache.joints = vec![(vec![0.0; n], vec![0.0; n]); steps + 1];
        cache.seen = None;
    }
    // Only rows whose coefficients changed need evaluating again.
    cache.rows.clear();
    let new = traj.gamma();
    match &cache.seen {
        Some((old, t_f)) if t_f.to_bits() == traj.t_f().to_bits() && old.shape() == new.shape() => {
            cache.rows.extend(tree.dofs().iter().copied().filter(|&d| {
                old.row(d)
                    .iter()
                    .zip(new.row(d).iter())
                    .any(|(a, b)| a.to_bits() != b.to_bits())
            }));
        }
        _ => {
            cache.rows.extend_from_slice(tree.dofs());
            cache.seen = Some((new.clone(), traj.t_f()));
        }
    }
    // Marks the cache stale until this call completes.
    let mut seen = cache.seen.take();

    let dt = traj.t_f() / steps as f64;
    let mut theta = *theta0;
    let mut omega = *omega0;
    let mut k = Vector3::zeros();
    for step in 0..=steps {
        if step > 0 {
            theta = quaternion_step(&theta, &omega, dt);
        }
        let t = if step == steps { traj.t_f() } else { step as f64 * dt };
        let (q, qdot) = &mut cache.joints[step];
        traj.eval_rows_into(t, &cache.rows, q, qdot);
        let state = &mut cache.states[step];
        if state.update(tree, q, qdot)? {
            cache.inverses[step] = None;
        }
        if step == 0 {
            k = total_momentum(&state.i_com, &state.k_joint, theta0, omega0);
            continue;
        }
        let inv = match cache.inverses[step] {
            Some(inv) => inv,
            None => {
                let inv = checked_inverse(&state.i_com)?;
                cache.inverses[step] = Some(inv);
                inv
            }
        };
        omega = theta * (inv * (theta.inverse_transform_vector(&k) - state.k_joint));
    }
    if let Some((gamma, _)) = &mut seen {
        gamma.copy_from(new);
    }
    cache.seen = seen;
    Ok(FlightOutcome {
        theta_tf: theta,
        omega_tf: omega,
        k_gf: k,
    })
}

/// Integrates the base orientation over the trajectory horizon with `steps`
/// explicit-Euler steps of `t_f / steps`, logging every sample.
pub fn integrate_orientation(
    model: &RobotModel,
    init: &FlightInitialState,
    traj: &TrajectoryMatrix,
    steps: usize,
) -> Result<(FlightOutcome, FlightLog)> {
    let mut scratch = FlightScratch::default();
    let mut log = FlightLog::new(model);
    let outcome = integrate_with(model, init, traj, steps, &mut scratch, |_, t, theta, omega, s| {
        log.record(model, t, theta, omega, &s.q, &s.qdot)
    })?;
    log.k_gf = outcome.k_gf;
    Ok((outcome, log))
}

/// Same integration without the log.
pub fn integrate_final(
    model: &RobotModel,
    init: &FlightInitialState,
    traj: &TrajectoryMatrix,
    steps: usize,
) -> Result<FlightOutcome> {
    integrate_with(
        model,
        init,
        traj,
        steps,
        &mut FlightScratch::default(),
        |_, _, _, _, _| Ok(()),
    )
}

/// Split of `k_G` into the share carried by each limb's joint motion and the
/// remainder carried by the rotation of the whole body.
#[derive(Debug, Clone, PartialEq)]
pub struct LimbContributions {
    /// `(limb name, A_j[:, limb] q̇[limb])`.
    pub limbs: Vec<(String, Vector3<f64>)>,
    /// `k_G` minus all limb shares.
    pub body: Vector3<f64>,
    pub total: Vector3<f64>,
}

pub fn limb_contributions(
    model: &RobotModel,
    theta: &UnitQuaternion<f64>,
    q: &[f64],
    omega_b: &Vector3<f64>,
    qdot: &[f64],
) -> Result<LimbContributions> {
    check_orientation(theta)?;
    check_len("joint velocities", model.n(), qdot.len())?;
    let mut ws = CentroidalWorkspace::default();
    ws.update(model, q)?;
    Ok(contributions_from_workspace(model, &ws, theta, omega_b, qdot))
}

pub(crate) fn contributions_from_workspace(
    model: &RobotModel,
    ws: &CentroidalWorkspace,
    theta: &UnitQuaternion<f64>,
    omega_b: &Vector3<f64>,
    qdot: &[f64],
) -> LimbContributions {
    let joint: Vector3<f64> = &ws.a_j * DVector::from_column_slice(qdot);
    let total = total_momentum(&ws.i_com, &joint, theta, omega_b);
    let mut body = total;
    let limbs = model
        .limbs()
        .iter()
        .map(|limb| {
            let mut k = Vector3::zeros();
            for &dof in &limb.dofs {
                k += ws.a_j.column(dof) * qdot[dof];
            }
            let k = theta * k;
            body -= k;
            (limb.name.clone(), k)
        })
        .collect();
    LimbContributions { limbs, body, total }
}
