//! Sampled flight time series and its CSV form.

use std::io::Write;

use nalgebra::{UnitQuaternion, Vector3};

use super::contributions_from_workspace;
use crate::error::Result;
use crate::rbd::{body_velocities, forward_kinematics, CentroidalWorkspace, RobotModel};

#[derive(Debug, Clone, PartialEq)]
pub struct FlightSample {
    pub t: f64,
    pub theta: UnitQuaternion<f64>,
    pub omega: Vector3<f64>,
    /// Centroidal angular momentum summed body by body from propagated
    /// link velocities.
    pub k_g: Vector3<f64>,
    /// Per-limb joint-motion share, in the model's limb order.
    pub limb_k: Vec<Vector3<f64>>,
    /// Share of the rigid rotation of the whole body.
    pub body_k: Vector3<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightLog {
    pub limb_names: Vec<String>,
    pub joint_names: Vec<String>,
    /// Momentum fixed at liftoff.
    pub k_gf: Vector3<f64>,
    pub samples: Vec<FlightSample>,
}

/// Angular momentum about the CoM as a plain sum over bodies.
pub(crate) fn per_body_momentum(
    model: &RobotModel,
    theta: &UnitQuaternion<f64>,
    q: &[f64],
    omega: &Vector3<f64>,
    qdot: &[f64],
) -> Result<Vector3<f64>> {
    let poses = forward_kinematics(model, theta, q)?;
    let vel = body_velocities(model, theta, q, &Vector3::zeros(), omega, qdot)?;
    let coms: Vec<Vector3<f64>> = model
        .links()
        .iter()
        .zip(&poses)
        .map(|(l, p)| p.translation + p.rotation * l.inertia.com_offset)
        .collect();
    let p_g = model
        .links()
        .iter()
        .zip(&coms)
        .fold(Vector3::zeros(), |acc, (l, c)| acc + c * l.inertia.mass)
        / model.total_mass();
    let mut k = Vector3::zeros();
    for (i, link) in model.links().iter().enumerate() {
        let r = poses[i].rotation;
        let inertia = r * link.inertia.inertia_about_com * r.transpose();
        k += inertia * vel.angular[i] + (coms[i] - p_g).cross(&vel.com_linear[i]) * link.inertia.mass;
    }
    Ok(k)
}

impl FlightLog {
    pub fn new(model: &RobotModel) -> Self {
        Self {
            limb_names: model.limbs().iter().map(|l| l.name.clone()).collect(),
            joint_names: (0..model.n()).map(|d| model.dof_name(d).to_owned()).collect(),
            k_gf: Vector3::zeros(),
            samples: Vec::new(),
        }
    }

    pub(crate) fn record(
        &mut self,
        model: &RobotModel,
        t: f64,
        theta: &UnitQuaternion<f64>,
        omega: &Vector3<f64>,
        q: &[f64],
        qdot: &[f64],
    ) -> Result<()> {
        let mut ws = CentroidalWorkspace::default();
        ws.update(model, q)?;
        let parts = contributions_from_workspace(model, &ws, theta, omega, qdot);
        self.samples.push(FlightSample {
            t,
            theta: *theta,
            omega: *omega,
            k_g: per_body_momentum(model, theta, q, omega, qdot)?,
            limb_k: parts.limbs.into_iter().map(|(_, k)| k).collect(),
            body_k: parts.body,
            q: q.to_vec(),
            qdot: qdot.to_vec(),
        });
        Ok(())
    }

    pub fn last(&self) -> Option<&FlightSample> {
        self.samples.last()
    }

    /// Largest `‖k_G(t) − k_Gf‖` over the samples.
    pub fn max_momentum_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.k_g - self.k_gf).norm())
            .fold(0.0, f64::max)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "qw", "qx", "qy", "qz", "wx", "wy", "wz", "kx", "ky", "kz"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for limb in &self.limb_names {
            for axis in ["x", "y", "z"] {
                h.push(format!("{limb}_k{axis}"));
            }
        }
        h.extend(self.joint_names.iter().map(|j| format!("q_{j}")));
        h.extend(self.joint_names.iter().map(|j| format!("qd_{j}")));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        let mut row: Vec<String> = Vec::new();
        for s in &self.samples {
            row.clear();
            let q = s.theta.quaternion();
            row.push(s.t.to_string());
            for v in [q.w, q.i, q.j, q.k] {
                row.push(v.to_string());
            }
            for v in s.omega.iter().chain(s.k_g.iter()) {
                row.push(v.to_string());
            }
            for k in &s.limb_k {
                row.extend(k.iter().map(f64::to_string));
            }
            row.extend(s.q.iter().chain(&s.qdot).map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
