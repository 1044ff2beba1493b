//! The limb-swing problem: land with minimal base rotation while placing
//! the feet where the running planner asks.
//!
//! Free variables are the polynomial coefficients of the inertially
//! significant joints; frozen joints hold their liftoff angle. The cost is the
//! rotation angle of the base at touchdown, obtained by integrating the
//! orientation under conserved momentum. Fourteen scalar equalities pin the
//! feet, in this order:
//!
//! | rows   | meaning                                                   |
//! |--------|-----------------------------------------------------------|
//! | 0..3   | touchdown foot position relative to the CoM at `t_f`      |
//! | 3..6   | liftoff foot position relative to the CoM at `0`          |
//! | 6..9   | touchdown foot velocity relative to the CoM at `t_f`      |
//! | 9..12  | liftoff foot world velocity at `0`                        |
//! | 12     | touchdown foot height above the ground at `0`             |
//! | 13     | liftoff foot height above the touchdown plane at `t_f`    |
//!
//! "Touchdown foot" is the leg that lands next; "liftoff foot" is the one
//! that has just left the ground. Heights are measured against the liftoff
//! foot's target height (the ground at liftoff) and the touchdown foot's
//! target height (the ground at touchdown), both CoM-relative.

mod eval;
mod pipeline;

pub use eval::{constraint_residuals, flight_cost, CONSTRAINT_COUNT, CONSTRAINT_LABELS};
pub use pipeline::{optimize_flight, optimize_flight_from, playback, FlightSolution, PlaybackReport};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::flight::DEFAULT_STEPS;
use crate::rbd::{BaseKinematics, RobotModel};
use crate::solver::SolverOptions;
use crate::traj::{FreeVariableLayout, TimeScaling, TrajectoryMatrix, DEFAULT_DEGREE};

/// Resolution of the post-solve playback.
pub const DEFAULT_VERIFY_STEPS: usize = 1001;

/// Allowed ratio of target distance to leg length.
pub const REACH_MARGIN: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

fn default_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

fn default_verify() -> usize {
    DEFAULT_VERIFY_STEPS
}

/// Problem description as read from a JSON config. Vectors are world-aligned
/// and CoM-relative; the quaternion is `[w, x, y, z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightConfig {
    /// Built-in model id or path to a URDF file.
    pub model: String,
    pub t_f: f64,
    #[serde(default = "default_quat")]
    pub theta0_quat: [f64; 4],
    #[serde(default)]
    pub omega0: [f64; 3],
    pub v_com_liftoff: [f64; 3],
    /// Touchdown foot relative to the CoM at touchdown.
    pub p_stance_td_target: [f64; 3],
    /// Liftoff foot relative to the CoM at liftoff.
    pub p_swing_lo_target: [f64; 3],
    /// Height of the touchdown foot above the ground at liftoff.
    pub h_stance: f64,
    /// Height of the liftoff foot above the ground at touchdown.
    pub h_swing: f64,
    #[serde(rename = "N", default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Which foot lands next.
    #[serde(default)]
    pub stance_foot: Side,
    /// Joint angles held by frozen joints and used as the constant term of
    /// the initial guess. Defaults to a slightly crouched posture.
    #[serde(default)]
    pub q_liftoff_hold: Option<Vec<f64>>,
    #[serde(default)]
    pub time_scaling: TimeScaling,
    /// Measure the liftoff foot against the touchdown CoM instead of the
    /// liftoff CoM.
    #[serde(default)]
    pub literal_constraint_3: bool,
    #[serde(default = "default_verify")]
    pub n_verify: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl FlightConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Crouched default posture: hips flexed, knees bent, feet flat.
pub fn nominal_hold(model: &RobotModel) -> Vec<f64> {
    (0..model.n())
        .map(|d| {
            let name = model.dof_name(d);
            if name.contains("hip_pitch") || name.contains("ankle_pitch") {
                -0.25
            } else if name.contains("knee") {
                0.5
            } else {
                0.0
            }
        })
        .collect()
}

/// A validated problem bound to its model.
#[derive(Debug, Clone)]
pub struct FlightProblem {
    pub model: RobotModel,
    pub config: FlightConfig,
    pub theta0: UnitQuaternion<f64>,
    pub omega0: Vector3<f64>,
    pub q_hold: Vec<f64>,
    pub layout: FreeVariableLayout,
    pub stance_link: usize,
    pub swing_link: usize,
}

impl FlightProblem {
    pub fn new(model: RobotModel, config: FlightConfig) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        let c = &config;
        if !(c.t_f > 0.0 && c.t_f.is_finite()) {
            return bad(format!("t_f must be positive, got {}", c.t_f));
        }
        if !(c.h_stance >= 0.0 && c.h_swing >= 0.0) {
            return bad("clearances must be non-negative".into());
        }
        if c.steps < 2 || c.n_verify < 2 {
            return bad("integration needs at least 2 steps".into());
        }
        if c.degree < 1 {
            return bad("trajectory degree must be at least 1".into());
        }
        let all_finite = c
            .theta0_quat
            .iter()
            .chain(&c.omega0)
            .chain(&c.v_com_liftoff)
            .chain(&c.p_stance_td_target)
            .chain(&c.p_swing_lo_target)
            .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite vector entry".into());
        }
        let [w, x, y, z] = c.theta0_quat;
        let quat = Quaternion::new(w, x, y, z);
        if (quat.norm() - 1.0).abs() > 1e-6 {
            return bad(format!("theta0_quat has norm {}, expected 1", quat.norm()));
        }
        c.solver.validate()?;

        let q_hold = match &c.q_liftoff_hold {
            Some(q) => {
                check_len("q_liftoff_hold", model.n(), q.len())?;
                q.clone()
            }
            None => nominal_hold(&model),
        };
        let layout = FreeVariableLayout::for_model(&model, c.degree, c.time_scaling);
        if layout.dim() == 0 {
            return bad("model has no inertially significant joints".into());
        }
        let (stance_link, swing_link) = match c.stance_foot {
            Side::Left => (model.left_foot(), model.right_foot()),
            Side::Right => (model.right_foot(), model.left_foot()),
        };
        if stance_link == swing_link {
            return bad("left and right feet are the same frame".into());
        }
        let problem = Self {
            theta0: UnitQuaternion::from_quaternion(quat),
            omega0: Vector3::from(c.omega0),
            q_hold,
            layout,
            stance_link,
            swing_link,
            model,
            config,
        };
        problem.check_reach()?;
        Ok(problem)
    }

    /// Rejects foot targets farther from the hip than the leg can stretch.
    fn check_reach(&self) -> Result<()> {
        let kin = BaseKinematics::compute(&self.model, &self.q_hold)?;
        let checks = [
            (
                "touchdown",
                self.stance_link,
                UnitQuaternion::identity(),
                self.config.p_stance_td_target,
            ),
            ("liftoff", self.swing_link, self.theta0, self.config.p_swing_lo_target),
        ];
        for (foot, link, orientation, target) in checks {
            let path = self.model.path_to_base(link);
            let Some(&root) = path.last() else {
                return Err(Error::InvalidProblem("foot frame is the base".into()));
            };
            let reach: f64 = path
                .iter()
                .filter(|&&l| l != root)
                .map(|&l| {
                    let joint = self.model.links()[l].joint.expect("non-base link");
                    self.model.origin_translation(joint).norm()
                })
                .sum();
            let point = kin.com + orientation.inverse_transform_vector(&Vector3::from(target));
            let distance = (point - kin.poses[root].translation).norm();
            if distance > REACH_MARGIN * reach {
                return Err(Error::Unreachable { foot, distance, reach });
            }
        }
        Ok(())
    }

    pub fn t_f(&self) -> f64 {
        self.config.t_f
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Variables of the all-constant trajectory at the hold posture.
    pub fn initial_guess(&self) -> Vec<f64> {
        let hold = TrajectoryMatrix::hold(&self.q_hold, self.config.degree, self.t_f()).expect("validated horizon");
        self.layout
            .pack(&hold)
            .expect("layout matches model")
            .as_slice()
            .to_vec()
    }

    pub fn trajectory(&self, x: &[f64]) -> Result<TrajectoryMatrix> {
        self.layout.unpack(x, &self.q_hold, self.t_f())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::builtin;

    pub(crate) fn config(model: &str) -> FlightConfig {
        FlightConfig {
            model: model.into(),
            t_f: 0.31,
            theta0_quat: default_quat(),
            omega0: [0.0; 3],
            v_com_liftoff: [1.0, 0.0, 1.52],
            p_stance_td_target: [0.12, 0.1, -0.84],
            p_swing_lo_target: [-0.12, -0.1, -0.84],
            h_stance: 0.08,
            h_swing: 0.05,
            steps: DEFAULT_STEPS,
            degree: 3,
            stance_foot: Side::Left,
            q_liftoff_hold: None,
            time_scaling: TimeScaling::Seconds,
            literal_constraint_3: false,
            n_verify: DEFAULT_VERIFY_STEPS,
            solver: SolverOptions::default(),
        }
    }

    #[test]
    fn valid_problem_dimensions() {
        let p = FlightProblem::new(builtin("biped12").unwrap(), config("biped12")).unwrap();
        assert_eq!(p.dim(), 24);
        assert_eq!(p.initial_guess().len(), 24);
        let p = FlightProblem::new(builtin("humanoid20").unwrap(), config("humanoid20")).unwrap();
        assert_eq!(p.dim(), 32);
    }

    #[test]
    fn zero_horizon_rejected() {
        let mut c = config("biped12");
        c.t_f = 0.0;
        assert!(matches!(
            FlightProblem::new(builtin("biped12").unwrap(), c),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn unreachable_target_rejected() {
        let mut c = config("biped12");
        c.p_stance_td_target = [2.0, 0.1, -0.84];
        assert!(matches!(
            FlightProblem::new(builtin("biped12").unwrap(), c),
            Err(Error::Unreachable { foot: "touchdown", .. })
        ));
    }

    #[test]
    fn config_json_defaults() {
        let text = r#"{"model": "biped12", "t_f": 0.31, "v_com_liftoff": [1, 0, 1.5],
            "p_stance_td_target": [0.1, 0.1, -0.8], "p_swing_lo_target": [-0.1, -0.1, -0.8],
            "h_stance": 0.05, "h_swing": 0.05}"#;
        let c = FlightConfig::from_json(text).unwrap();
        assert_eq!(c.steps, 11);
        assert_eq!(c.degree, 3);
        assert_eq!(c.n_verify, 1001);
        assert_eq!(c.theta0_quat, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.solver, SolverOptions::default());
        assert!(FlightConfig::from_json(r#"{"model": "x", "bogus": 1}"#).is_err());
    }
}
