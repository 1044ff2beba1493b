//! Flight-phase limb-swing trajectory optimization for running humanoids.
//!
//! During flight the centroidal angular momentum of a humanoid is conserved,
//! so the torso orientation at touchdown is fully determined by how the
//! limbs move. This crate computes the centroidal momentum matrix of a
//! kinematic tree, integrates the base orientation under momentum
//! conservation, and chooses polynomial joint trajectories that land the
//! body upright while placing the feet where a running planner wants them.
//!
//! Modules, bottom up:
//!
//! - [`rbd`]: kinematic tree, forward kinematics, centroidal momentum matrix.
//! - [`model_io`]: URDF-subset parser and built-in robot models.
//! - [`traj`]: polynomial joint trajectories and the optimizer variable layout.
//! - [`flight`]: orientation integration under conserved angular momentum.
//! - [`solver`]: equality-constrained nullspace-projection optimizer.
//! - [`opt`]: the limb-swing problem and its optimize/playback pipeline.
//! - [`checks`]: randomized property suites used by `check-model`.

pub mod checks;
pub mod error;
pub mod flight;
pub mod model_io;
pub mod opt;
pub mod rbd;
pub mod solver;
pub mod traj;

pub use error::{Error, ModelError, Result};
