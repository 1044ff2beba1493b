//! Optimize, then replay the result at high resolution.

use serde::{Deserialize, Serialize};

use super::eval::Evaluator;
use super::FlightProblem;
use crate::error::{Error, Result};
use crate::flight::{integrate_orientation, rotation_angle, FlightInitialState, FlightLog};
use crate::solver::{solve, ProblemFunctions, ScalarFn, SolveResult};
use crate::traj::TrajectoryMatrix;

/// Summary of a high-resolution replay of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackReport {
    pub steps: usize,
    /// Base rotation angle at touchdown, radians.
    pub touchdown_angle: f64,
    /// `[w, x, y, z]`.
    pub touchdown_orientation: [f64; 4],
    pub omega_tf: [f64; 3],
    /// Constraint residuals recomputed at this resolution.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Largest deviation of the body-summed momentum from its liftoff value.
    pub momentum_drift: f64,
    pub k_gf: [f64; 3],
    /// Largest `|k_y|` carried by the rotation of the whole body.
    pub body_peak_k_y: f64,
    /// Largest `|k_y|` carried by each limb, in limb order.
    pub limb_peak_k_y: Vec<(String, f64)>,
    /// Whether the body share of `k_y` stays below every leg's peak share
    /// at all samples.
    pub body_share_bounded: bool,
}

#[derive(Debug, Clone)]
pub struct FlightSolution {
    pub result: SolveResult,
    pub trajectory: TrajectoryMatrix,
    pub log: FlightLog,
    pub report: PlaybackReport,
}

/// Replays `traj` with `steps` integration steps and checks the outcome
/// against the problem's targets.
pub fn playback(problem: &FlightProblem, traj: &TrajectoryMatrix, steps: usize) -> Result<(FlightLog, PlaybackReport)> {
    let t_f = problem.t_f();
    if (traj.t_f() - t_f).abs() > 1e-12 * t_f {
        return Err(Error::InvalidInput(format!(
            "trajectory horizon {} s does not match the problem's {} s",
            traj.t_f(),
            t_f
        )));
    }
    let model = &problem.model;
    let init = FlightInitialState::from_trajectory(problem.theta0, problem.omega0, traj)?;
    let (outcome, log) = integrate_orientation(model, &init, traj, steps)?;
    let residuals = Evaluator::new(problem, steps).trajectory_residuals(traj)?;

    let legs: Vec<usize> = model
        .limbs()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.links.contains(&problem.stance_link) || l.links.contains(&problem.swing_link))
        .map(|(i, _)| i)
        .collect();
    let mut limb_peak = vec![0.0f64; model.limbs().len()];
    let mut body_peak = 0.0f64;
    for s in &log.samples {
        body_peak = body_peak.max(s.body_k.y.abs());
        for (peak, k) in limb_peak.iter_mut().zip(&s.limb_k) {
            *peak = peak.max(k.y.abs());
        }
    }
    let leg_floor = legs.iter().map(|&i| limb_peak[i]).fold(f64::INFINITY, f64::min);
    let body_share_bounded = !legs.is_empty() && log.samples.iter().all(|s| s.body_k.y.abs() < leg_floor);

    let q = outcome.theta_tf.quaternion();
    let report = PlaybackReport {
        steps,
        touchdown_angle: rotation_angle(&outcome.theta_tf),
        touchdown_orientation: [q.w, q.i, q.j, q.k],
        omega_tf: outcome.omega_tf.into(),
        max_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        residuals,
        momentum_drift: log.max_momentum_drift(),
        k_gf: outcome.k_gf.into(),
        body_peak_k_y: body_peak,
        limb_peak_k_y: log.limb_names.iter().cloned().zip(limb_peak).collect(),
        body_share_bounded,
    };
    Ok((log, report))
}

/// Solves the problem from the constant hold posture and replays the
/// solution at the verification resolution.
pub fn optimize_flight(problem: &FlightProblem) -> Result<FlightSolution> {
    optimize_flight_from(problem, &problem.initial_guess())
}

/// Same as [`optimize_flight`] from a caller-supplied start, e.g. the
/// previous step's solution.
pub fn optimize_flight_from(problem: &FlightProblem, x0: &[f64]) -> Result<FlightSolution> {
    let ev = Evaluator::new(problem, problem.config.steps);
    let constraints: Vec<ScalarFn> = (0..super::CONSTRAINT_COUNT)
        .map(|i| {
            let ev = &ev;
            Box::new(move |x: &[f64]| ev.residual(i, x).unwrap_or(f64::NAN)) as ScalarFn
        })
        .collect();
    let funcs = ProblemFunctions {
        cost: Box::new(|x: &[f64]| ev.cost(x).unwrap_or(f64::NAN)),
        constraints,
    };
    let result = solve(&funcs, x0, &problem.config.solver)?;
    let trajectory = problem.trajectory(&result.x_star)?;
    let (log, report) = playback(problem, &trajectory, problem.config.n_verify)?;
    Ok(FlightSolution {
        result,
        trajectory,
        log,
        report,
    })
}
