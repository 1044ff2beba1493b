//! Trees with some joints welded at fixed angles.
//!
//! Welding a joint merges its child link into the parent's body, so a leg
//! with frozen yaw and ankle joints becomes three bodies instead of seven
//! links. At any configuration whose welded joints sit at their welding
//! angles the merged tree carries the same mass distribution and momentum
//! as the full one.
//!
//! [`TreeState`] keeps every body's pose, velocity and momentum terms from
//! its last update and recomputes only bodies whose joint, or some joint
//! above them, moved. Totals are always summed over all bodies in the same
//! order, so a partial update gives bit-for-bit the result of a full one.

use nalgebra::{Matrix3, Vector3};

use super::inertia::point_mass_inertia;
use super::kinematics::{axis_angle_matrix, axis_rotation, FramePose};
use super::model::{JointKind, RobotModel};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone)]
struct Body {
    parent: Option<usize>,
    /// Joint frame in the parent body's frame.
    origin: FramePose,
    rotates_at_origin: bool,
    /// Driving dof and its axis in the joint frame; `None` for the base.
    joint: Option<(usize, Vector3<f64>)>,
    /// Index of the joint axis if it is a positive coordinate axis.
    coordinate_axis: Option<usize>,
    mass: f64,
    com: Vector3<f64>,
    /// Rotational inertia about `com`, body frame.
    inertia: Matrix3<f64>,
}

/// A model with every dof outside a kept set welded in place.
#[derive(Debug, Clone)]
pub(crate) struct ReducedTree {
    bodies: Vec<Body>,
    /// Body and in-body pose of every link of the full model.
    link_frames: Vec<(usize, FramePose)>,
    total_mass: f64,
    n: usize,
    dofs: Vec<usize>,
}

impl ReducedTree {
    /// Keeps the dofs in `kept` free and welds all others at their value in
    /// `weld`, a full joint vector.
    pub fn new(model: &RobotModel, kept: &[usize], weld: &[f64]) -> Result<Self> {
        check_len("welding angles", model.n(), weld.len())?;
        if let Some(&bad) = kept.iter().find(|&&d| d >= model.n()) {
            return Err(Error::InvalidInput(format!("dof {bad} out of range")));
        }
        let mut bodies: Vec<Body> = Vec::new();
        let mut link_frames: Vec<(usize, FramePose)> = Vec::with_capacity(model.links().len());
        // Per body: mass, first moment and second moment about the body origin.
        let mut sums: Vec<(f64, Vector3<f64>, Matrix3<f64>)> = Vec::new();

        for link in model.links() {
            let (body, pose) = match (link.parent, link.joint) {
                (Some(parent), Some(joint)) => {
                    let (pb, ppose) = link_frames[parent];
                    let spec = &model.joints()[joint];
                    let origin = FramePose {
                        rotation: ppose.rotation * model.origin_rotation(joint),
                        translation: ppose.translation + ppose.rotation * model.origin_translation(joint),
                    };
                    let dof = model.joint_dof(joint);
                    match dof {
                        Some(d) if spec.kind == JointKind::Revolute && kept.contains(&d) => {
                            bodies.push(Body {
                                parent: Some(pb),
                                rotates_at_origin: origin.rotation != Matrix3::identity(),
                                origin,
                                joint: Some((d, spec.axis)),
                                coordinate_axis: (0..3).find(|&k| spec.axis == Vector3::ith(k, 1.0)),
                                mass: 0.0,
                                com: Vector3::zeros(),
                                inertia: Matrix3::zeros(),
                            });
                            sums.push((0.0, Vector3::zeros(), Matrix3::zeros()));
                            (bodies.len() - 1, FramePose::IDENTITY)
                        }
                        Some(d) => {
                            let rotation = origin.rotation * axis_angle_matrix(&spec.axis, weld[d]);
                            (pb, FramePose { rotation, ..origin })
                        }
                        None => (pb, origin),
                    }
                }
                _ => {
                    bodies.push(Body {
                        parent: None,
                        origin: FramePose::IDENTITY,
                        rotates_at_origin: false,
                        joint: None,
                        coordinate_axis: None,
                        mass: 0.0,
                        com: Vector3::zeros(),
                        inertia: Matrix3::zeros(),
                    });
                    sums.push((0.0, Vector3::zeros(), Matrix3::zeros()));
                    (0, FramePose::IDENTITY)
                }
            };
            let m = link.inertia.mass;
            let c = pose.translation + pose.rotation * link.inertia.com_offset;
            let entry = &mut sums[body];
            entry.0 += m;
            entry.1 += c * m;
            entry.2 +=
                pose.rotation * link.inertia.inertia_about_com * pose.rotation.transpose() + point_mass_inertia(m, &c);
            link_frames.push((body, pose));
        }

        for (body, (m, first, second)) in bodies.iter_mut().zip(sums) {
            if m > 0.0 {
                body.mass = m;
                body.com = first / m;
                body.inertia = second - point_mass_inertia(m, &body.com);
            }
        }
        Ok(Self {
            bodies,
            link_frames,
            total_mass: model.total_mass(),
            n: model.n(),
            dofs: kept.to_vec(),
        })
    }

    /// The free dofs, as given.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }
}

#[derive(Debug, Clone, Copy)]
struct BodyState {
    q: f64,
    qdot: f64,
    rotation: Matrix3<f64>,
    origin: Vector3<f64>,
    angular: Vector3<f64>,
    /// Velocity of the body origin.
    linear: Vector3<f64>,
    first: Vector3<f64>,
    second: Matrix3<f64>,
    momentum: Vector3<f64>,
    /// Angular momentum about the base origin.
    angular_momentum: Vector3<f64>,
    /// `sin q` and `cos q`, reused while `q` is unchanged.
    sin_cos: (f64, f64),
}

impl BodyState {
    const EMPTY: BodyState = BodyState {
        q: f64::NAN,
        qdot: f64::NAN,
        rotation: FramePose::IDENTITY.rotation,
        origin: Vector3::new(0.0, 0.0, 0.0),
        angular: Vector3::new(0.0, 0.0, 0.0),
        linear: Vector3::new(0.0, 0.0, 0.0),
        first: Vector3::new(0.0, 0.0, 0.0),
        second: Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        momentum: Vector3::new(0.0, 0.0, 0.0),
        angular_momentum: Vector3::new(0.0, 0.0, 0.0),
        sin_cos: (f64::NAN, f64::NAN),
    };
}

/// Configuration-dependent quantities of a [`ReducedTree`], base frame,
/// with the base held still.
#[derive(Debug, Clone, Default)]
pub(crate) struct TreeState {
    bodies: Vec<BodyState>,
    dirty: Vec<bool>,
    summed: bool,
    pub com: Vector3<f64>,
    pub i_com: Matrix3<f64>,
    /// `A_j q̇`.
    pub k_joint: Vector3<f64>,
    /// Linear momentum.
    pub l_joint: Vector3<f64>,
}

impl TreeState {
    /// Brings the state to `(q, q̇)`. Returns whether anything changed.
    pub fn update(&mut self, tree: &ReducedTree, q: &[f64], qdot: &[f64]) -> Result<bool> {
        check_len("joint positions", tree.n, q.len())?;
        check_len("joint velocities", tree.n, qdot.len())?;
        let count = tree.bodies.len();
        if self.bodies.len() != count {
            self.bodies = vec![BodyState::EMPTY; count];
            self.dirty = vec![true; count];
            self.summed = false;
            self.fill(tree, 0, 0.0, 0.0);
        } else {
            self.dirty.iter_mut().for_each(|d| *d = false);
        }

        let mut changed = false;
        for b in 1..count {
            let body = &tree.bodies[b];
            let parent = body.parent.expect("non-base body has a parent");
            let (dof, _) = body.joint.expect("non-base body has a joint");
            let (qb, qdb) = (q[dof], qdot[dof]);
            let state = &self.bodies[b];
            // Bitwise comparison: NaN inputs always count as moved.
            let moved = state.q.to_bits() != qb.to_bits() || state.qdot.to_bits() != qdb.to_bits();
            if moved || self.dirty[parent] {
                self.fill(tree, b, qb, qdb);
                self.dirty[b] = true;
                changed = true;
            }
        }
        if changed || !self.summed {
            self.sum(tree);
            self.summed = true;
        }
        Ok(changed)
    }

    fn fill(&mut self, tree: &ReducedTree, b: usize, q: f64, qdot: f64) {
        let body = &tree.bodies[b];
        let prev = &self.bodies[b];
        let sin_cos = if prev.q.to_bits() == q.to_bits() {
            prev.sin_cos
        } else {
            q.sin_cos()
        };
        let (rotation, origin, angular, linear) = match (body.parent, body.joint) {
            (Some(parent), Some((_, axis))) => {
                let p = &self.bodies[parent];
                let origin = p.origin + p.rotation * body.origin.translation;
                let frame = if body.rotates_at_origin {
                    p.rotation * body.origin.rotation
                } else {
                    p.rotation
                };
                let linear = p.linear + p.angular.cross(&(origin - p.origin));
                match body.coordinate_axis {
                    Some(a) => {
                        let angular = p.angular + frame.column(a) * qdot;
                        (rotate_about_coordinate(&frame, a, sin_cos), origin, angular, linear)
                    }
                    None => {
                        let angular = p.angular + frame * axis * qdot;
                        (frame * axis_rotation(&axis, sin_cos), origin, angular, linear)
                    }
                }
            }
            _ => (
                Matrix3::identity(),
                Vector3::zeros(),
                Vector3::zeros(),
                Vector3::zeros(),
            ),
        };
        let m = body.mass;
        let arm = rotation * body.com;
        let c = origin + arm;
        let v = linear + angular.cross(&arm);
        let rotational = congruence(&rotation, &body.inertia);
        self.bodies[b] = BodyState {
            q,
            qdot,
            rotation,
            origin,
            angular,
            linear,
            first: c * m,
            second: rotational + point_mass_inertia(m, &c),
            sin_cos,
            momentum: v * m,
            angular_momentum: rotational * angular + c.cross(&v) * m,
        };
    }

    fn sum(&mut self, tree: &ReducedTree) {
        let mut first = Vector3::zeros();
        let mut second = Matrix3::zeros();
        let mut momentum = Vector3::zeros();
        let mut angular = Vector3::zeros();
        for s in &self.bodies {
            first += s.first;
            second += s.second;
            momentum += s.momentum;
            angular += s.angular_momentum;
        }
        self.com = first / tree.total_mass;
        self.i_com = second - point_mass_inertia(tree.total_mass, &self.com);
        self.l_joint = momentum;
        self.k_joint = angular - self.com.cross(&momentum);
    }

    /// Base-frame position and velocity of the origin of full-model link
    /// `link`.
    pub fn link_point(&self, tree: &ReducedTree, link: usize) -> (Vector3<f64>, Vector3<f64>) {
        let (b, pose) = &tree.link_frames[link];
        let s = &self.bodies[*b];
        let arm = s.rotation * pose.translation;
        (s.origin + arm, s.linear + s.angular.cross(&arm))
    }

    /// Velocity of the center of mass.
    pub fn com_velocity(&self, tree: &ReducedTree) -> Vector3<f64> {
        self.l_joint / tree.total_mass
    }
}

/// `frame · R_a(angle)` for the coordinate axis `a`, touching only the two
/// columns the rotation mixes.
/// `R I Rᵀ` for symmetric `I`, computed once per unique entry.
#[inline]
fn congruence(r: &Matrix3<f64>, inertia: &Matrix3<f64>) -> Matrix3<f64> {
    let a = r * inertia;
    let entry = |i: usize, j: usize| a[(i, 0)] * r[(j, 0)] + a[(i, 1)] * r[(j, 1)] + a[(i, 2)] * r[(j, 2)];
    let (xx, yy, zz) = (entry(0, 0), entry(1, 1), entry(2, 2));
    let (xy, xz, yz) = (entry(0, 1), entry(0, 2), entry(1, 2));
    Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
}

fn rotate_about_coordinate(frame: &Matrix3<f64>, a: usize, (s, c): (f64, f64)) -> Matrix3<f64> {
    let (i, j) = ((a + 1) % 3, (a + 2) % 3);
    let (fi, fj) = (frame.column(i).into_owned(), frame.column(j).into_owned());
    let mut out = *frame;
    out.set_column(i, &(fi * c + fj * s));
    out.set_column(j, &(fj * c - fi * s));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::builtin;
    use crate::rbd::{BaseKinematics, CentroidalWorkspace};

    fn sample(model: &RobotModel, phase: f64) -> (Vec<f64>, Vec<f64>) {
        let n = model.n();
        (
            (0..n).map(|i| (0.7 * i as f64 + phase).sin()).collect(),
            (0..n).map(|i| (1.3 * i as f64 + phase).cos()).collect(),
        )
    }

    #[test]
    fn matches_full_model_with_frozen_rates_zero() {
        for id in crate::model_io::BUILTIN_MODELS {
            let model = builtin(id).unwrap();
            let kept = model.significant_dofs();
            let (weld, _) = sample(&model, 0.3);
            let tree = ReducedTree::new(&model, &kept, &weld).unwrap();
            let (mut q, mut qdot) = sample(&model, 1.1);
            for d in 0..model.n() {
                if !kept.contains(&d) {
                    q[d] = weld[d];
                    qdot[d] = 0.0;
                }
            }
            let mut state = TreeState::default();
            state.update(&tree, &q, &qdot).unwrap();
            let mut ws = CentroidalWorkspace::default();
            ws.update(&model, &q).unwrap();
            let k = &ws.a_j * nalgebra::DVector::from_column_slice(&qdot);
            let l = &ws.a_l_joint * nalgebra::DVector::from_column_slice(&qdot);
            assert!((state.k_joint - k).norm() < 1e-12 * (1.0 + k.norm()), "{id}");
            assert!((state.l_joint - l).norm() < 1e-12 * (1.0 + l.norm()), "{id}");
            assert!((state.i_com - ws.i_com).norm() < 1e-12 * ws.i_com.norm(), "{id}");
            let kin = BaseKinematics::compute(&model, &q).unwrap();
            for link in 0..model.links().len() {
                let (p, _) = state.link_point(&tree, link);
                assert!((p - kin.poses[link].translation).norm() < 1e-13, "{id} link {link}");
            }
        }
    }

    #[test]
    fn coordinate_rotation_matches_rodrigues() {
        let frame = axis_angle_matrix(&Vector3::new(0.6, -0.48, 0.64), 0.9);
        for a in 0..3 {
            let direct = frame * axis_angle_matrix(&Vector3::ith(a, 1.0), -1.3);
            assert!((rotate_about_coordinate(&frame, a, (-1.3f64).sin_cos()) - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn welds_frozen_links() {
        let model = builtin("biped12").unwrap();
        let tree = ReducedTree::new(&model, &model.significant_dofs(), &[0.0; 12]).unwrap();
        assert_eq!(tree.bodies.len(), 7);
    }

    #[test]
    fn partial_update_is_bitwise_equal_to_fresh() {
        let model = builtin("humanoid20").unwrap();
        let kept = model.significant_dofs();
        let weld = vec![0.0; model.n()];
        let tree = ReducedTree::new(&model, &kept, &weld).unwrap();
        let (mut q, mut qdot) = sample(&model, 0.5);
        let mut warm = TreeState::default();
        warm.update(&tree, &q, &qdot).unwrap();
        for &d in &kept {
            q[d] += 1e-6;
            qdot[d] -= 2e-6;
            assert!(warm.update(&tree, &q, &qdot).unwrap());
            let mut fresh = TreeState::default();
            fresh.update(&tree, &q, &qdot).unwrap();
            assert_eq!(warm.k_joint, fresh.k_joint);
            assert_eq!(warm.i_com, fresh.i_com);
            assert_eq!(warm.com, fresh.com);
        }
        assert!(!warm.update(&tree, &q, &qdot).unwrap());
    }
}
