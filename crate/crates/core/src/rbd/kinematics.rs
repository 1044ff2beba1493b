//! Forward kinematics, center of mass and point Jacobians.
//!
//! The floating base sits at the world origin. Everything is first computed
//! in the base frame and then rotated by the base orientation, so results
//! never depend on a base translation.

use nalgebra::{Matrix3, Matrix3xX, UnitQuaternion, Vector3};

use super::model::RobotModel;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl FramePose {
    pub const IDENTITY: FramePose = FramePose {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        translation: Vector3::new(0.0, 0.0, 0.0),
    };

    fn rotated(&self, r: &Matrix3<f64>) -> FramePose {
        FramePose {
            rotation: r * self.rotation,
            translation: r * self.translation,
        }
    }
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub(crate) fn axis_angle_matrix(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    axis_rotation(axis, angle.sin_cos())
}

/// [`axis_angle_matrix`] from a precomputed `(sin, cos)` pair.
#[inline]
pub(crate) fn axis_rotation(axis: &Vector3<f64>, (s, c): (f64, f64)) -> Matrix3<f64> {
    let t = 1.0 - c;
    let (x, y, z) = (axis.x, axis.y, axis.z);
    Matrix3::new(
        t * x * x + c,
        t * x * y - s * z,
        t * x * z + s * y,
        t * x * y + s * z,
        t * y * y + c,
        t * y * z - s * x,
        t * x * z - s * y,
        t * y * z + s * x,
        t * z * z + c,
    )
}

/// Link poses and mass distribution at one configuration, in the base frame.
#[derive(Debug, Clone, Default)]
pub(crate) struct BaseKinematics {
    pub poses: Vec<FramePose>,
    /// Center of mass of each link.
    pub body_com: Vec<Vector3<f64>>,
    /// Total center of mass.
    pub com: Vector3<f64>,
}

impl BaseKinematics {
    pub fn compute(model: &RobotModel, q: &[f64]) -> Result<Self> {
        let mut kin = Self::default();
        kin.update(model, q)?;
        Ok(kin)
    }

    pub fn update(&mut self, model: &RobotModel, q: &[f64]) -> Result<()> {
        check_len("joint positions", model.n(), q.len())?;
        let links = model.links();
        self.poses.clear();
        self.body_com.clear();
        let mut first_moment = Vector3::zeros();
        for (i, link) in links.iter().enumerate() {
            let pose = match (link.parent, link.joint) {
                (Some(parent), Some(joint)) => {
                    let p = self.poses[parent];
                    let spec = &model.joints()[joint];
                    let mut rot = p.rotation * model.origin_rotation(joint);
                    let translation = p.translation + p.rotation * model.origin_translation(joint);
                    if let Some(dof) = model.joint_dof(joint) {
                        rot *= axis_angle_matrix(&spec.axis, q[dof]);
                    }
                    FramePose {
                        rotation: rot,
                        translation,
                    }
                }
                _ => {
                    debug_assert_eq!(i, 0);
                    FramePose::IDENTITY
                }
            };
            let c = pose.translation + pose.rotation * link.inertia.com_offset;
            first_moment += c * link.inertia.mass;
            self.poses.push(pose);
            self.body_com.push(c);
        }
        self.com = first_moment / model.total_mass();
        Ok(())
    }

    /// Base-frame joint axis and joint origin for joint `joint`.
    pub fn joint_axis(&self, model: &RobotModel, joint: usize) -> (Vector3<f64>, Vector3<f64>) {
        let child = self.poses[model.joint_child(joint)];
        (child.rotation * model.joints()[joint].axis, child.translation)
    }
}

pub(crate) fn check_orientation(orientation: &UnitQuaternion<f64>) -> Result<()> {
    let norm = orientation.quaternion().norm();
    if (norm - 1.0).abs() > 1e-9 || !norm.is_finite() {
        return Err(Error::InvalidInput(format!(
            "base orientation quaternion has norm {norm}"
        )));
    }
    Ok(())
}

/// World poses of every link (and therefore every named frame), base at the origin.
pub fn forward_kinematics(
    model: &RobotModel,
    base_orientation: &UnitQuaternion<f64>,
    q: &[f64],
) -> Result<Vec<FramePose>> {
    check_orientation(base_orientation)?;
    let kin = BaseKinematics::compute(model, q)?;
    let r = base_orientation.to_rotation_matrix().into_inner();
    Ok(kin.poses.iter().map(|p| p.rotated(&r)).collect())
}

/// World position of a named frame.
pub fn frame_position(
    model: &RobotModel,
    base_orientation: &UnitQuaternion<f64>,
    q: &[f64],
    frame: &str,
) -> Result<Vector3<f64>> {
    let idx = model
        .link_index(frame)
        .ok_or_else(|| Error::UnknownFrame(frame.to_owned()))?;
    Ok(forward_kinematics(model, base_orientation, q)?[idx].translation)
}

pub fn com_position(model: &RobotModel, base_orientation: &UnitQuaternion<f64>, q: &[f64]) -> Result<Vector3<f64>> {
    check_orientation(base_orientation)?;
    let kin = BaseKinematics::compute(model, q)?;
    Ok(base_orientation * kin.com)
}

/// Base-frame linear Jacobian of a point rigidly attached to `link`.
///
/// Columns are ordered `(v_b, ω_b, q̇)`; the base block is expressed for
/// base-frame velocities.
pub(crate) fn point_jacobian_base(
    model: &RobotModel,
    kin: &BaseKinematics,
    link: usize,
    point: &Vector3<f64>,
) -> Matrix3xX<f64> {
    let n = model.n();
    let mut jac = Matrix3xX::zeros(n + 6);
    jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    jac.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-super::inertia::skew(point)));
    for &l in model.path_to_base(link).iter() {
        let joint = model.links()[l].joint.expect("non-base link has a joint");
        if let Some(dof) = model.joint_dof(joint) {
            let (axis, origin) = kin.joint_axis(model, joint);
            jac.set_column(6 + dof, &axis.cross(&(point - origin)));
        }
    }
    jac
}

/// World-frame linear velocity Jacobian of a frame origin, `ẋ = J ν` with
/// `ν = (v_b, ω_b, q̇)` and both base velocities in world coordinates.
pub fn point_jacobian(
    model: &RobotModel,
    base_orientation: &UnitQuaternion<f64>,
    q: &[f64],
    frame: &str,
) -> Result<Matrix3xX<f64>> {
    check_orientation(base_orientation)?;
    let link = model
        .link_index(frame)
        .ok_or_else(|| Error::UnknownFrame(frame.to_owned()))?;
    let kin = BaseKinematics::compute(model, q)?;
    let origin = kin.poses[link].translation;
    let jac = point_jacobian_base(model, &kin, link, &origin);
    Ok(world_jacobian(base_orientation, &jac))
}

/// Re-expresses a base-frame Jacobian for world-frame rows and world-frame
/// base velocity columns.
pub(crate) fn world_jacobian(base_orientation: &UnitQuaternion<f64>, jac: &Matrix3xX<f64>) -> Matrix3xX<f64> {
    let r = base_orientation.to_rotation_matrix().into_inner();
    let mut out = r * jac;
    // Base velocity columns act on world-frame inputs: J_w = R J_b Rᵀ.
    let v = out.fixed_view::<3, 3>(0, 0) * r.transpose();
    let w = out.fixed_view::<3, 3>(0, 3) * r.transpose();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&v);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&w);
    out
}

/// Per-link velocities obtained by propagating `ν` down the tree.
#[derive(Debug, Clone)]
pub struct BodyVelocities {
    /// World angular velocity of each link.
    pub angular: Vec<Vector3<f64>>,
    /// World linear velocity of each link's center of mass.
    pub com_linear: Vec<Vector3<f64>>,
}

/// Velocity propagation from the base outwards. `v_b` and `ω_b` are world
/// frame; `v_b` is the velocity of the base origin.
pub fn body_velocities(
    model: &RobotModel,
    base_orientation: &UnitQuaternion<f64>,
    q: &[f64],
    v_b: &Vector3<f64>,
    omega_b: &Vector3<f64>,
    qdot: &[f64],
) -> Result<BodyVelocities> {
    check_orientation(base_orientation)?;
    check_len("joint velocities", model.n(), qdot.len())?;
    let kin = BaseKinematics::compute(model, q)?;
    let r = base_orientation.to_rotation_matrix().into_inner();
    let links = model.links();
    let mut angular: Vec<Vector3<f64>> = Vec::with_capacity(links.len());
    let mut origin_vel: Vec<Vector3<f64>> = Vec::with_capacity(links.len());
    for (i, link) in links.iter().enumerate() {
        match (link.parent, link.joint) {
            (Some(parent), Some(joint)) => {
                let dp = r * (kin.poses[i].translation - kin.poses[parent].translation);
                let v = origin_vel[parent] + angular[parent].cross(&dp);
                let mut w = angular[parent];
                if let Some(dof) = model.joint_dof(joint) {
                    let (axis, _) = kin.joint_axis(model, joint);
                    w += r * axis * qdot[dof];
                }
                angular.push(w);
                origin_vel.push(v);
            }
            _ => {
                angular.push(*omega_b);
                origin_vel.push(*v_b);
            }
        }
    }
    let com_linear = (0..links.len())
        .map(|i| {
            let arm = r * (kin.body_com[i] - kin.poses[i].translation);
            origin_vel[i] + angular[i].cross(&arm)
        })
        .collect();
    Ok(BodyVelocities { angular, com_linear })
}
