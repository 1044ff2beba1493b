//! Oracles shared by the integration tests.
//!
//! Momentum here is rebuilt from forward kinematics alone: link velocities
//! come from a fourth-order central difference of link poses along the
//! motion `θ(t) = exp(ω t) θ₀`, `q(t) = q + q̇ t`, base at `v_b t`. Nothing
//! from the library's velocity propagation is used.

#![allow(dead_code)]

use limbswing::checks::{random_orientation, random_vector};
use limbswing::rbd::{forward_kinematics, RobotModel};
use limbswing::solver::ProblemFunctions;
use limbswing::traj::TrajectoryMatrix;
use nalgebra::{DMatrix, DVector, Matrix3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(θ, q, ν)` with joint angles in ±1.5 rad and rates in ±2.
pub fn random_state(model: &RobotModel, rng: &mut ChaCha8Rng) -> (UnitQuaternion<f64>, Vec<f64>, Vec<f64>) {
    let theta = random_orientation(rng);
    let q = random_vector(rng, model.n(), 1.5);
    let nu = random_vector(rng, model.n() + 6, 2.0);
    (theta, q, nu)
}

/// World-frame link CoM positions and rotations at time `t` along the motion.
fn snapshot(
    model: &RobotModel,
    theta: &UnitQuaternion<f64>,
    q: &[f64],
    nu: &[f64],
    t: f64,
) -> (Vec<Vector3<f64>>, Vec<Matrix3<f64>>) {
    let v_b = Vector3::new(nu[0], nu[1], nu[2]);
    let w_b = Vector3::new(nu[3], nu[4], nu[5]);
    let theta_t = UnitQuaternion::from_scaled_axis(w_b * t) * theta;
    let q_t: Vec<f64> = q.iter().zip(&nu[6..]).map(|(a, r)| a + r * t).collect();
    let poses = forward_kinematics(model, &theta_t, &q_t).unwrap();
    let coms = model
        .links()
        .iter()
        .zip(&poses)
        .map(|(l, p)| v_b * t + p.translation + p.rotation * l.inertia.com_offset)
        .collect();
    (coms, poses.iter().map(|p| p.rotation).collect())
}

fn stencil<T>(f: impl Fn(f64) -> T, h: f64) -> (T, T, T, T)
where
    T: Clone,
{
    (f(2.0 * h), f(h), f(-h), f(-2.0 * h))
}

/// `(l_G, k_G)` summed body by body from finite-differenced link motion.
pub fn fd_momentum(
    model: &RobotModel,
    theta: &UnitQuaternion<f64>,
    q: &[f64],
    nu: &[f64],
) -> (Vector3<f64>, Vector3<f64>) {
    let h = FD_STEP;
    let (c0, r0) = snapshot(model, theta, q, nu, 0.0);
    let (p2, p1, m1, m2) = stencil(|t| snapshot(model, theta, q, nu, t), h);
    let d = |a2: f64, a1: f64, b1: f64, b2: f64| (-a2 + 8.0 * a1 - 8.0 * b1 + b2) / (12.0 * h);

    let links = model.links();
    let total: f64 = links.iter().map(|l| l.inertia.mass).sum();
    let p_g = links
        .iter()
        .zip(&c0)
        .fold(Vector3::zeros(), |acc, (l, c)| acc + c * l.inertia.mass)
        / total;
    let mut l_g = Vector3::zeros();
    let mut k_g = Vector3::zeros();
    for (i, link) in links.iter().enumerate() {
        let m = link.inertia.mass;
        let v = Vector3::from_fn(|k, _| d(p2.0[i][k], p1.0[i][k], m1.0[i][k], m2.0[i][k]));
        let r_dot = Matrix3::from_fn(|a, b| d(p2.1[i][(a, b)], p1.1[i][(a, b)], m1.1[i][(a, b)], m2.1[i][(a, b)]));
        let w = r_dot * r0[i].transpose();
        let omega = Vector3::new(w[(2, 1)] - w[(1, 2)], w[(0, 2)] - w[(2, 0)], w[(1, 0)] - w[(0, 1)]) * 0.5;
        let inertia = r0[i] * link.inertia.inertia_about_com * r0[i].transpose();
        l_g += v * m;
        k_g += inertia * omega + (c0[i] - p_g).cross(&v) * m;
    }
    (l_g, k_g)
}

/// Relative error of `(l, k)` against `(l_ref, k_ref)`.
pub fn relative_error(l: &Vector3<f64>, k: &Vector3<f64>, l_ref: &Vector3<f64>, k_ref: &Vector3<f64>) -> f64 {
    let scale = (l_ref.norm_squared() + k_ref.norm_squared()).sqrt().max(1e-12);
    ((l - l_ref).norm_squared() + (k - k_ref).norm_squared()).sqrt() / scale
}

/// Cubic rows `q(t) = a + b s² (3 − 2s)`, `s = t/t_f`: moves each joint from
/// `from` to `to` with zero rate at both ends.
pub fn rest_to_rest(from: &[f64], to: &[f64], t_f: f64) -> TrajectoryMatrix {
    let n = from.len();
    let mut gamma = DMatrix::zeros(n, 4);
    for i in 0..n {
        let delta = to[i] - from[i];
        gamma[(i, 0)] = -2.0 * delta / t_f.powi(3);
        gamma[(i, 1)] = 3.0 * delta / t_f.powi(2);
        gamma[(i, 3)] = from[i];
    }
    TrajectoryMatrix::new(gamma, t_f).unwrap()
}

/// Smooth cubic for every row with the given amplitude around `centre`.
pub fn smooth_cubic(centre: &[f64], amplitude: f64, t_f: f64, rng: &mut ChaCha8Rng) -> TrajectoryMatrix {
    let n = centre.len();
    let coeffs = random_vector(rng, 3 * n, 1.0);
    let mut gamma = DMatrix::zeros(n, 4);
    for i in 0..n {
        // Scaled so every term stays within `amplitude` over the horizon.
        gamma[(i, 0)] = amplitude * coeffs[3 * i] / t_f.powi(3);
        gamma[(i, 1)] = amplitude * coeffs[3 * i + 1] / t_f.powi(2);
        gamma[(i, 2)] = amplitude * coeffs[3 * i + 2] / t_f;
        gamma[(i, 3)] = centre[i];
    }
    TrajectoryMatrix::new(gamma, t_f).unwrap()
}

/// `min xᵀ H x` subject to `C x = d`.
pub struct Qp {
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl Qp {
    pub fn random(seed: u64, p: usize, k: usize) -> Self {
        let mut rng = rng(seed);
        let a = DMatrix::from_vec(p, p, random_vector(&mut rng, p * p, 1.0));
        let h = a.transpose() * a + DMatrix::identity(p, p);
        let c = DMatrix::from_vec(k, p, random_vector(&mut rng, k * p, 1.0));
        let d = DVector::from_vec(random_vector(&mut rng, k, 1.0));
        Self { h, c, d }
    }

    /// Stationarity `2 H x + Cᵀ λ = 0` plus feasibility as one linear system.
    pub fn kkt_solution(&self) -> DVector<f64> {
        let (p, k) = (self.h.nrows(), self.c.nrows());
        let mut m = DMatrix::zeros(p + k, p + k);
        m.view_mut((0, 0), (p, p)).copy_from(&(&self.h * 2.0));
        m.view_mut((0, p), (p, k)).copy_from(&self.c.transpose());
        m.view_mut((p, 0), (k, p)).copy_from(&self.c);
        let mut rhs = DVector::zeros(p + k);
        rhs.rows_mut(p, k).copy_from(&self.d);
        m.lu().solve(&rhs).unwrap().rows(0, p).into_owned()
    }

    pub fn functions(&self) -> ProblemFunctions<'_> {
        let mut funcs = ProblemFunctions::new(move |x: &[f64]| {
            let x = DVector::from_column_slice(x);
            x.dot(&(&self.h * &x))
        });
        for i in 0..self.c.nrows() {
            funcs = funcs
                .constraint(move |x: &[f64]| self.c.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.d[i]);
        }
        funcs
    }
}
