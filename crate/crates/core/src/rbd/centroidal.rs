//! Centroidal momentum matrix.
//!
//! The map is accumulated per body: every joint column is the momentum of the
//! subtree it drives, computed from that subtree's composite mass, center of
//! mass and rotational inertia. Base columns follow from the whole-tree
//! composite.

use nalgebra::{DMatrix, Matrix3, Matrix3xX, UnitQuaternion, Vector3};

use super::inertia::{point_mass_inertia, skew};
use super::kinematics::{check_orientation, BaseKinematics};
use super::model::RobotModel;
use crate::error::{check_len, Result};

/// Centroidal momentum matrix blocks and the composite quantities that come with them.
///
/// Column order of the generalized velocity is `ν = (v_b, ω_b, q̇)` with both
/// base velocities in world coordinates. Momentum rows are world-aligned and
/// taken about the center of mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidalMap {
    /// Linear momentum rows, 3×(n+6).
    pub a_l: Matrix3xX<f64>,
    /// Angular momentum per unit base translational velocity.
    pub a_v: Matrix3<f64>,
    /// Angular momentum per unit base angular velocity.
    pub a_omega: Matrix3<f64>,
    /// Angular momentum per unit joint velocity, 3×n.
    pub a_j: Matrix3xX<f64>,
    /// Center of mass relative to the base origin, world frame.
    pub p_g: Vector3<f64>,
    /// Composite rotational inertia about the center of mass, world-aligned.
    pub i_com: Matrix3<f64>,
    pub total_mass: f64,
}

impl CentroidalMap {
    pub fn n(&self) -> usize {
        self.a_j.ncols()
    }

    /// Angular rows `A_k = [A_v A_ω A_j]`.
    pub fn a_k(&self) -> Matrix3xX<f64> {
        let n = self.n();
        let mut a_k = Matrix3xX::zeros(n + 6);
        a_k.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.a_v);
        a_k.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.a_omega);
        a_k.columns_mut(6, n).copy_from(&self.a_j);
        a_k
    }

    /// Full 6×(n+6) matrix `A_G = [A_l; A_k]`.
    pub fn a_g(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a_g = DMatrix::zeros(6, n + 6);
        a_g.view_mut((0, 0), (3, n + 6)).copy_from(&self.a_l);
        a_g.view_mut((3, 0), (3, n + 6)).copy_from(&self.a_k());
        a_g
    }

    /// `h_G = A_G ν`, returned as `(l_G, k_G)`.
    pub fn momentum(&self, nu: &[f64]) -> Result<(Vector3<f64>, Vector3<f64>)> {
        check_len("generalized velocity", self.n() + 6, nu.len())?;
        let v = Vector3::new(nu[0], nu[1], nu[2]);
        let w = Vector3::new(nu[3], nu[4], nu[5]);
        let qdot = &nu[6..];
        let mut l = self.a_l.fixed_view::<3, 3>(0, 0) * v + self.a_l.fixed_view::<3, 3>(0, 3) * w;
        let mut k = self.a_v * v + self.a_omega * w;
        for (j, &rate) in qdot.iter().enumerate() {
            l += self.a_l.column(6 + j) * rate;
            k += self.a_j.column(j) * rate;
        }
        Ok((l, k))
    }

    /// `A_j q̇`.
    pub fn joint_momentum(&self, qdot: &[f64]) -> Vector3<f64> {
        let mut k = Vector3::zeros();
        for (j, &rate) in qdot.iter().enumerate() {
            if rate != 0.0 {
                k += self.a_j.column(j) * rate;
            }
        }
        k
    }
}

/// Reusable buffers for repeated centroidal evaluations of one model.
#[derive(Debug, Clone, Default)]
pub(crate) struct CentroidalWorkspace {
    pub kin: BaseKinematics,
    sub_mass: Vec<f64>,
    sub_first: Vec<Vector3<f64>>,
    sub_second: Vec<Matrix3<f64>>,
    /// Base-frame joint columns of the angular rows.
    pub a_j: Matrix3xX<f64>,
    /// Base-frame joint columns of the linear rows.
    pub a_l_joint: Matrix3xX<f64>,
    /// Composite inertia about the CoM, base frame.
    pub i_com: Matrix3<f64>,
    /// `Σ mᵢ cᵢ − m p_G`, base frame (zero up to rounding).
    pub first_moment_residual: Vector3<f64>,
}

impl CentroidalWorkspace {
    pub fn update(&mut self, model: &RobotModel, q: &[f64]) -> Result<()> {
        self.kin.update(model, q)?;
        let links = model.links();
        let count = links.len();
        self.sub_mass.clear();
        self.sub_first.clear();
        self.sub_second.clear();
        for (i, link) in links.iter().enumerate() {
            let m = link.inertia.mass;
            let c = self.kin.body_com[i];
            let r = &self.kin.poses[i].rotation;
            let rotational = r * link.inertia.inertia_about_com * r.transpose();
            self.sub_mass.push(m);
            self.sub_first.push(c * m);
            self.sub_second.push(rotational + point_mass_inertia(m, &c));
        }
        for i in (1..count).rev() {
            let parent = links[i].parent.expect("non-base link has a parent");
            let (m, f, s) = (self.sub_mass[i], self.sub_first[i], self.sub_second[i]);
            self.sub_mass[parent] += m;
            self.sub_first[parent] += f;
            self.sub_second[parent] += s;
        }

        let total = self.sub_mass[0];
        let com = self.kin.com;
        self.i_com = self.sub_second[0] - point_mass_inertia(total, &com);
        self.first_moment_residual = self.sub_first[0] - com * total;

        let n = model.n();
        if self.a_j.ncols() != n {
            self.a_j = Matrix3xX::zeros(n);
            self.a_l_joint = Matrix3xX::zeros(n);
        }
        for dof in 0..n {
            let joint = model.dof_joint(dof);
            let s = model.joint_child(joint);
            let m = self.sub_mass[s];
            if m <= 0.0 {
                self.a_j.set_column(dof, &Vector3::zeros());
                self.a_l_joint.set_column(dof, &Vector3::zeros());
                continue;
            }
            let c = self.sub_first[s] / m;
            let i_c = self.sub_second[s] - point_mass_inertia(m, &c);
            let (axis, origin) = self.kin.joint_axis(model, joint);
            let v_c = axis.cross(&(c - origin));
            self.a_j.set_column(dof, &(i_c * axis + (c - com).cross(&v_c) * m));
            self.a_l_joint.set_column(dof, &(v_c * m));
        }
        Ok(())
    }

    pub fn to_world(&self, model: &RobotModel, orientation: &UnitQuaternion<f64>) -> CentroidalMap {
        let r = orientation.to_rotation_matrix().into_inner();
        let n = model.n();
        let m = model.total_mass();
        let p_g = r * self.kin.com;
        let a_omega = r * self.i_com * r.transpose();
        let mut a_l = Matrix3xX::zeros(n + 6);
        a_l.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * m));
        a_l.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(&p_g) * m));
        a_l.columns_mut(6, n).copy_from(&(r * &self.a_l_joint));
        CentroidalMap {
            a_l,
            a_v: skew(&(r * self.first_moment_residual)),
            a_omega,
            a_j: r * &self.a_j,
            p_g,
            i_com: a_omega,
            total_mass: m,
        }
    }
}

/// Composite inertia and joint-driven angular momentum about the CoM, in the
/// base frame, from one outward sweep over the tree.
///
/// This is the part of a workspace update that flight integration needs at
/// every step: `k = A_j q̇` is the momentum of the links moving at `q̇` with
/// the base held still.
#[derive(Debug, Clone, Default)]
pub(crate) struct JointMomentum {
    rotation: Vec<Matrix3<f64>>,
    origin: Vec<Vector3<f64>>,
    angular: Vec<Vector3<f64>>,
    linear: Vec<Vector3<f64>>,
    pub com: Vector3<f64>,
    pub i_com: Matrix3<f64>,
    pub k_joint: Vector3<f64>,
}

impl JointMomentum {
    pub fn update(&mut self, model: &RobotModel, q: &[f64], qdot: &[f64]) -> Result<()> {
        check_len("joint positions", model.n(), q.len())?;
        check_len("joint velocities", model.n(), qdot.len())?;
        let links = model.links();
        let identity = Matrix3::identity();
        self.rotation.resize(links.len(), identity);
        self.origin.resize(links.len(), Vector3::zeros());
        self.angular.resize(links.len(), Vector3::zeros());
        self.linear.resize(links.len(), Vector3::zeros());

        let mut first = Vector3::zeros();
        let mut second = Matrix3::zeros();
        let mut linear_momentum = Vector3::zeros();
        // Angular momentum about the base origin.
        let mut angular_momentum = Vector3::zeros();
        for (i, link) in links.iter().enumerate() {
            if let (Some(parent), Some(joint)) = (link.parent, link.joint) {
                let rp = self.rotation[parent];
                let origin = self.origin[parent] + rp * model.origin_translation(joint);
                let o = model.origin_rotation(joint);
                let mut rot = if *o == identity { rp } else { rp * o };
                let mut w = self.angular[parent];
                if let Some(dof) = model.joint_dof(joint) {
                    let axis = &model.joints()[joint].axis;
                    if qdot[dof] != 0.0 {
                        w += rot * axis * qdot[dof];
                    }
                    rot *= super::kinematics::axis_angle_matrix(axis, q[dof]);
                }
                self.linear[i] = self.linear[parent] + self.angular[parent].cross(&(origin - self.origin[parent]));
                self.rotation[i] = rot;
                self.origin[i] = origin;
                self.angular[i] = w;
            } else {
                self.rotation[i] = identity;
                self.origin[i] = Vector3::zeros();
                self.angular[i] = Vector3::zeros();
                self.linear[i] = Vector3::zeros();
            }

            let m = link.inertia.mass;
            if m <= 0.0 {
                continue;
            }
            let r = &self.rotation[i];
            let arm = r * link.inertia.com_offset;
            let c = self.origin[i] + arm;
            let w = self.angular[i];
            let v = self.linear[i] + w.cross(&arm);
            let rotational = r * link.inertia.inertia_about_com * r.transpose();
            first += c * m;
            second += rotational + point_mass_inertia(m, &c);
            linear_momentum += v * m;
            angular_momentum += rotational * w + c.cross(&v) * m;
        }
        let total = model.total_mass();
        self.com = first / total;
        self.i_com = second - point_mass_inertia(total, &self.com);
        self.k_joint = angular_momentum - self.com.cross(&linear_momentum);
        Ok(())
    }
}

pub fn compute_centroidal_map(
    model: &RobotModel,
    base_orientation: &UnitQuaternion<f64>,
    q: &[f64],
) -> Result<CentroidalMap> {
    check_orientation(base_orientation)?;
    let mut ws = CentroidalWorkspace::default();
    ws.update(model, q)?;
    Ok(ws.to_world(model, base_orientation))
}

/// Result of checking `A_ω` against `R · Ī_com`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOmegaCheck {
    /// `‖A_ω R − R Ī_com‖_F / ‖A_ω‖_F`.
    pub residual: f64,
    pub min_singular_value: f64,
}

/// Compares `A_ω` with the product of the base rotation and the base-frame
/// composite inertia about the CoM, the latter summed body by body with the
/// parallel-axis theorem.
///
/// `A_ω` here maps world-frame base rates; `A_ω R` is the same map for
/// body-frame rates, which is the form `R Ī_com` describes.
pub fn verify_a_omega_identity(
    model: &RobotModel,
    base_orientation: &UnitQuaternion<f64>,
    q: &[f64],
) -> Result<AOmegaCheck> {
    let cmap = compute_centroidal_map(model, base_orientation, q)?;
    let kin = BaseKinematics::compute(model, q)?;
    let mut total = 0.0;
    let mut first = Vector3::zeros();
    for (link, c) in model.links().iter().zip(&kin.body_com) {
        total += link.inertia.mass;
        first += c * link.inertia.mass;
    }
    let com = first / total;
    let mut i_bar = Matrix3::zeros();
    for ((link, c), pose) in model.links().iter().zip(&kin.body_com).zip(&kin.poses) {
        let rot = pose.rotation * link.inertia.inertia_about_com * pose.rotation.transpose();
        i_bar += rot + point_mass_inertia(link.inertia.mass, &(c - com));
    }
    let r = base_orientation.to_rotation_matrix().into_inner();
    let lhs = cmap.a_omega * r;
    let rhs = r * i_bar;
    let residual = (lhs - rhs).norm() / cmap.a_omega.norm();
    let min_singular_value = cmap
        .a_omega
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(AOmegaCheck {
        residual,
        min_singular_value,
    })
}
