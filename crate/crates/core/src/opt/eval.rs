//! Cost and constraint evaluation for the limb-swing problem.

use std::cell::{RefCell, RefMut};
use std::collections::HashMap;

use nalgebra::{UnitQuaternion, Vector3};

use super::FlightProblem;
use crate::error::{check_len, Result};
use crate::flight::{
    integrate_reduced, integrate_with, rotation_angle, FlightInitialState, FlightScratch, ReducedFlight,
};
use crate::rbd::{point_jacobian_base, CentroidalWorkspace, ReducedTree, RobotModel, TreeState};
use crate::traj::TrajectoryMatrix;

pub const CONSTRAINT_COUNT: usize = 14;

pub const CONSTRAINT_LABELS: [&str; CONSTRAINT_COUNT] = [
    "touchdown_pos_x",
    "touchdown_pos_y",
    "touchdown_pos_z",
    "liftoff_pos_x",
    "liftoff_pos_y",
    "liftoff_pos_z",
    "touchdown_vel_x",
    "touchdown_vel_y",
    "touchdown_vel_z",
    "liftoff_vel_x",
    "liftoff_vel_y",
    "liftoff_vel_z",
    "touchdown_foot_clearance",
    "liftoff_foot_clearance",
];

/// Quantities at the end of the flight, world-aligned.
#[derive(Debug, Clone)]
struct Touchdown {
    theta: UnitQuaternion<f64>,
    /// Touchdown foot minus CoM.
    stance_rel: Vector3<f64>,
    /// Liftoff foot minus CoM.
    swing_rel: Vector3<f64>,
    /// CoM relative to the base origin.
    com: Vector3<f64>,
    /// Touchdown foot velocity minus CoM velocity.
    stance_vel_rel: Vector3<f64>,
}

/// Quantities at liftoff, world-aligned.
#[derive(Debug, Clone)]
struct Liftoff {
    stance_rel: Vector3<f64>,
    swing_rel: Vector3<f64>,
    /// Liftoff foot relative to the base origin.
    swing_pos: Vector3<f64>,
    swing_vel_rel: Vector3<f64>,
}

/// World-aligned velocity of a point relative to the CoM, given its base-frame
/// offset and relative velocity with the base held still.
fn rotate_relative(
    theta: &UnitQuaternion<f64>,
    omega: &Vector3<f64>,
    offset: &Vector3<f64>,
    velocity: &Vector3<f64>,
) -> Vector3<f64> {
    theta * velocity + omega.cross(&(theta * offset))
}

/// Velocity of a link origin relative to the CoM, world-aligned.
fn relative_velocity(
    model: &RobotModel,
    ws: &CentroidalWorkspace,
    link: usize,
    theta: &UnitQuaternion<f64>,
    omega: &Vector3<f64>,
    qdot: &[f64],
) -> Vector3<f64> {
    let kin = &ws.kin;
    let p = kin.poses[link].translation;
    let jac = point_jacobian_base(model, kin, link, &p);
    let mut local = Vector3::zeros();
    let m = model.total_mass();
    for (j, &rate) in qdot.iter().enumerate() {
        if rate != 0.0 {
            local += (jac.column(6 + j) - ws.a_l_joint.column(j) / m) * rate;
        }
    }
    theta * local + omega.cross(&(theta * (p - kin.com)))
}

/// Results keyed on the exact bits of the variables. Central differences of
/// constraints that share one integration probe the same points, so those
/// repeats cost a lookup.
struct Memo<T> {
    entries: HashMap<Box<[u64]>, T>,
    key: Vec<u64>,
    capacity: usize,
}

impl<T: Clone> Memo<T> {
    fn new(capacity: usize) -> Self {
        Self {
            entries: HashMap::new(),
            key: Vec::new(),
            capacity,
        }
    }

    fn get_or(&mut self, x: &[f64], compute: impl FnOnce() -> Result<T>) -> Result<T> {
        self.key.clear();
        self.key.extend(x.iter().map(|v| v.to_bits()));
        if let Some(hit) = self.entries.get(self.key.as_slice()) {
            return Ok(hit.clone());
        }
        let value = compute()?;
        if self.entries.len() >= self.capacity {
            self.entries.clear();
        }
        self.entries.insert(self.key.as_slice().into(), value.clone());
        Ok(value)
    }
}

/// Evaluates cost and residuals for one problem at a fixed step count,
/// remembering the last integration so that all quantities at one point
/// share it.
pub(crate) struct Evaluator<'p> {
    problem: &'p FlightProblem,
    steps: usize,
    scratch: RefCell<FlightScratch>,
    liftoff_ws: RefCell<CentroidalWorkspace>,
    /// The model with frozen joints welded at their hold angles, which is
    /// exact for every trajectory built from optimizer variables.
    tree: ReducedTree,
    flight: RefCell<ReducedFlight>,
    liftoff_state: RefCell<(TreeState, Vec<f64>, Vec<f64>)>,
    buffer: RefCell<TrajectoryMatrix>,
    touchdown_cache: RefCell<Memo<Touchdown>>,
    liftoff_cache: RefCell<Memo<Liftoff>>,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p FlightProblem, steps: usize) -> Self {
        let tree = ReducedTree::new(&problem.model, problem.layout.dofs(), &problem.q_hold)
            .expect("problem holds are validated against the model");
        Self {
            problem,
            steps,
            scratch: RefCell::default(),
            liftoff_ws: RefCell::default(),
            tree,
            flight: RefCell::default(),
            liftoff_state: RefCell::default(),
            buffer: RefCell::new(
                problem
                    .trajectory(&problem.initial_guess())
                    .expect("hold trajectory is valid"),
            ),
            // Room for one full set of central-difference probes and then some.
            touchdown_cache: RefCell::new(Memo::new(4 * problem.dim() + 8)),
            liftoff_cache: RefCell::new(Memo::new(4 * problem.dim() + 8)),
        }
    }

    /// The trajectory for `x`, written into a reused buffer.
    fn trajectory(&self, x: &[f64]) -> Result<RefMut<'_, TrajectoryMatrix>> {
        check_len("optimizer variables", self.problem.dim(), x.len())?;
        let mut traj = self.buffer.borrow_mut();
        self.problem.layout.write_free_rows(x, &mut traj);
        Ok(traj)
    }

    fn touchdown(&self, x: &[f64]) -> Result<Touchdown> {
        self.touchdown_cache
            .borrow_mut()
            .get_or(x, || self.welded_touchdown(&*self.trajectory(x)?))
    }

    fn touchdown_of(&self, traj: &TrajectoryMatrix) -> Result<Touchdown> {
        let p = self.problem;
        let init = FlightInitialState::from_trajectory(p.theta0, p.omega0, traj)?;
        let mut scratch = self.scratch.borrow_mut();
        let out = integrate_with(&p.model, &init, traj, self.steps, &mut scratch, |_, _, _, _, _| Ok(()))?;
        let ws = &scratch.ws;
        let theta = out.theta_tf;
        let com = ws.kin.com;
        Ok(Touchdown {
            theta,
            stance_rel: theta * (ws.kin.poses[p.stance_link].translation - com),
            swing_rel: theta * (ws.kin.poses[p.swing_link].translation - com),
            com: theta * com,
            stance_vel_rel: relative_velocity(&p.model, ws, p.stance_link, &theta, &out.omega_tf, &scratch.qdot),
        })
    }

    fn welded_touchdown(&self, traj: &TrajectoryMatrix) -> Result<Touchdown> {
        let p = self.problem;
        let mut flight = self.flight.borrow_mut();
        let out = integrate_reduced(&self.tree, &p.theta0, &p.omega0, traj, self.steps, &mut flight)?;
        let state = &flight.states[self.steps];
        let theta = out.theta_tf;
        let (stance, stance_vel) = state.link_point(&self.tree, p.stance_link);
        let (swing, _) = state.link_point(&self.tree, p.swing_link);
        Ok(Touchdown {
            theta,
            stance_rel: theta * (stance - state.com),
            swing_rel: theta * (swing - state.com),
            com: theta * state.com,
            stance_vel_rel: rotate_relative(
                &theta,
                &out.omega_tf,
                &(stance - state.com),
                &(stance_vel - state.com_velocity(&self.tree)),
            ),
        })
    }

    fn welded_liftoff(&self, traj: &TrajectoryMatrix) -> Result<Liftoff> {
        let p = self.problem;
        let mut guard = self.liftoff_state.borrow_mut();
        let (state, q, qdot) = &mut *guard;
        q.resize(traj.n(), 0.0);
        qdot.resize(traj.n(), 0.0);
        traj.eval_rows_into(0.0, self.tree.dofs(), q, qdot);
        state.update(&self.tree, q, qdot)?;
        let theta = p.theta0;
        let (stance, _) = state.link_point(&self.tree, p.stance_link);
        let (swing, swing_vel) = state.link_point(&self.tree, p.swing_link);
        Ok(Liftoff {
            stance_rel: theta * (stance - state.com),
            swing_rel: theta * (swing - state.com),
            swing_pos: theta * swing,
            swing_vel_rel: rotate_relative(
                &theta,
                &p.omega0,
                &(swing - state.com),
                &(swing_vel - state.com_velocity(&self.tree)),
            ),
        })
    }

    fn liftoff(&self, x: &[f64]) -> Result<Liftoff> {
        self.liftoff_cache
            .borrow_mut()
            .get_or(x, || self.welded_liftoff(&*self.trajectory(x)?))
    }

    fn liftoff_of(&self, traj: &TrajectoryMatrix) -> Result<Liftoff> {
        let p = self.problem;
        let q0 = traj.eval(0.0)?;
        let qdot0 = traj.eval_rate(0.0)?;
        let mut ws = self.liftoff_ws.borrow_mut();
        ws.update(&p.model, q0.as_slice())?;
        let theta = p.theta0;
        let com = ws.kin.com;
        let swing = ws.kin.poses[p.swing_link].translation;
        Ok(Liftoff {
            stance_rel: theta * (ws.kin.poses[p.stance_link].translation - com),
            swing_rel: theta * (swing - com),
            swing_pos: theta * swing,
            swing_vel_rel: relative_velocity(&p.model, &ws, p.swing_link, &theta, &p.omega0, qdot0.as_slice()),
        })
    }

    pub fn cost(&self, x: &[f64]) -> Result<f64> {
        Ok(rotation_angle(&self.touchdown(x)?.theta))
    }

    pub fn residual(&self, i: usize, x: &[f64]) -> Result<f64> {
        combine(self.problem, i, || self.touchdown(x), || self.liftoff(x))
    }

    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..CONSTRAINT_COUNT).map(|i| self.residual(i, x)).collect()
    }

    /// Residuals of a full trajectory, frozen rows included as given.
    pub fn trajectory_residuals(&self, traj: &TrajectoryMatrix) -> Result<Vec<f64>> {
        let td = self.touchdown_of(traj)?;
        let lo = self.liftoff_of(traj)?;
        (0..CONSTRAINT_COUNT)
            .map(|i| combine(self.problem, i, || Ok(td.clone()), || Ok(lo.clone())))
            .collect()
    }
}

fn combine(
    problem: &FlightProblem,
    i: usize,
    touchdown: impl Fn() -> Result<Touchdown>,
    liftoff: impl Fn() -> Result<Liftoff>,
) -> Result<f64> {
    let c = &problem.config;
    Ok(match i {
        0..=2 => touchdown()?.stance_rel[i] - c.p_stance_td_target[i],
        3..=5 => {
            let k = i - 3;
            let lo = liftoff()?;
            if c.literal_constraint_3 {
                lo.swing_pos[k] - touchdown()?.com[k] - c.p_swing_lo_target[k]
            } else {
                lo.swing_rel[k] - c.p_swing_lo_target[k]
            }
        }
        6..=8 => touchdown()?.stance_vel_rel[i - 6],
        9..=11 => liftoff()?.swing_vel_rel[i - 9] + c.v_com_liftoff[i - 9],
        12 => liftoff()?.stance_rel.z - (c.p_swing_lo_target[2] + c.h_stance),
        13 => touchdown()?.swing_rel.z - (c.p_stance_td_target[2] + c.h_swing),
        _ => panic!("constraint index {i} out of range"),
    })
}

/// Touchdown rotation angle for variables `x`, radians.
pub fn flight_cost(problem: &FlightProblem, x: &[f64]) -> Result<f64> {
    Evaluator::new(problem, problem.config.steps).cost(x)
}

/// The fourteen equality residuals for variables `x`, in canonical order.
pub fn constraint_residuals(problem: &FlightProblem, x: &[f64]) -> Result<Vec<f64>> {
    Evaluator::new(problem, problem.config.steps).residuals(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::builtin;
    use crate::opt::tests::config;
    use crate::opt::FlightProblem;

    #[test]
    fn hold_trajectory_has_zero_cost() {
        let p = FlightProblem::new(builtin("biped12").unwrap(), config("biped12")).unwrap();
        assert_eq!(flight_cost(&p, &p.initial_guess()).unwrap(), 0.0);
        assert_eq!(constraint_residuals(&p, &p.initial_guess()).unwrap().len(), 14);
    }

    #[test]
    fn cached_and_fresh_evaluations_agree() {
        let p = FlightProblem::new(builtin("biped12").unwrap(), config("biped12")).unwrap();
        let mut x = p.initial_guess();
        for (i, v) in x.iter_mut().enumerate() {
            *v += 0.1 * (i as f64).sin();
        }
        let ev = Evaluator::new(&p, p.config.steps);
        let first: Vec<f64> = (0..14).map(|i| ev.residual(i, &x).unwrap()).collect();
        assert_eq!(first, constraint_residuals(&p, &x).unwrap());
        assert_eq!(ev.cost(&x).unwrap(), flight_cost(&p, &x).unwrap());
    }

    #[test]
    fn wrong_length_rejected() {
        let p = FlightProblem::new(builtin("biped12").unwrap(), config("biped12")).unwrap();
        assert!(flight_cost(&p, &[0.0; 3]).is_err());
    }
}
