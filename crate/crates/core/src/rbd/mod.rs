//! Rigid-body kinematics and centroidal momentum of a floating-base tree.

mod centroidal;
mod inertia;
mod kinematics;
mod model;
mod reduced;

pub use centroidal::{compute_centroidal_map, verify_a_omega_identity, AOmegaCheck, CentroidalMap};
pub(crate) use centroidal::{CentroidalWorkspace, JointMomentum};
pub use inertia::{point_mass_inertia, skew, SpatialInertia};
pub use kinematics::{
    body_velocities, com_position, forward_kinematics, frame_position, point_jacobian, BodyVelocities, FramePose,
};
pub(crate) use kinematics::{check_orientation, point_jacobian_base, BaseKinematics};
pub use model::{EndEffectors, JointKind, JointSpec, Limb, Link, RobotModel, Significance};
pub(crate) use reduced::{ReducedTree, TreeState};

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Floating-base state: orientation (body to world) and world-frame rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseState {
    pub orientation: UnitQuaternion<f64>,
    pub angular_velocity: Vector3<f64>,
    #[serde(default)]
    pub translational_velocity: Option<Vector3<f64>>,
}

/// Centroidal linear and angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidalState {
    pub l_g: Vector3<f64>,
    pub k_g: Vector3<f64>,
}
