//! Kinematic tree representation of a floating-base robot.

use std::collections::HashMap;

use nalgebra::{Isometry3, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::inertia::SpatialInertia;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Fixed,
}

/// Whether a joint moves during flight optimization or holds its liftoff angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Significant,
    Frozen,
}

impl Significance {
    /// Name-based default: ankle, wrist and any yaw joint are frozen.
    pub fn from_joint_name(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower.starts_with("ankle")
            || lower.starts_with("wrist")
            || lower.contains("_ankle")
            || lower.contains("_wrist")
            || lower.contains("yaw")
        {
            Significance::Frozen
        } else {
            Significance::Significant
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// Rotation axis in the joint frame. Ignored for fixed joints.
    pub axis: Vector3<f64>,
    /// Pose of the joint frame in the parent link frame.
    pub parent_frame_transform: Isometry3<f64>,
    pub significance: Significance,
    pub parent: String,
    pub child: String,
}

impl JointSpec {
    pub fn revolute(name: &str, parent: &str, child: &str, origin: Vector3<f64>, axis: Vector3<f64>) -> Self {
        Self {
            name: name.to_owned(),
            kind: JointKind::Revolute,
            axis,
            parent_frame_transform: Isometry3::translation(origin.x, origin.y, origin.z),
            significance: Significance::from_joint_name(name),
            parent: parent.to_owned(),
            child: child.to_owned(),
        }
    }

    pub fn fixed(name: &str, parent: &str, child: &str, origin: Vector3<f64>) -> Self {
        Self {
            name: name.to_owned(),
            kind: JointKind::Fixed,
            axis: Vector3::zeros(),
            parent_frame_transform: Isometry3::translation(origin.x, origin.y, origin.z),
            significance: Significance::Frozen,
            parent: parent.to_owned(),
            child: child.to_owned(),
        }
    }

    pub fn with_significance(mut self, significance: Significance) -> Self {
        self.significance = significance;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndEffectors {
    pub left_foot: String,
    pub right_foot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_hand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_hand: Option<String>,
}

impl EndEffectors {
    pub fn feet(left: &str, right: &str) -> Self {
        Self {
            left_foot: left.to_owned(),
            right_foot: right.to_owned(),
            left_hand: None,
            right_hand: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub inertia: SpatialInertia,
    pub parent: Option<usize>,
    /// Index into [`RobotModel::joints`] of the joint connecting this link to its parent.
    pub joint: Option<usize>,
}

/// A subtree hanging off the floating base, e.g. one leg or one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Limb {
    pub name: String,
    pub links: Vec<usize>,
    pub dofs: Vec<usize>,
}

/// Immutable kinematic tree rooted at the floating base (link 0).
///
/// Links are stored in depth-first order so every parent precedes its
/// children; joint `k` connects `joint_parent(k)` to `joint_child(k)`.
#[derive(Debug, Clone)]
pub struct RobotModel {
    name: String,
    links: Vec<Link>,
    joints: Vec<JointSpec>,
    joint_parent: Vec<usize>,
    joint_child: Vec<usize>,
    joint_dof: Vec<Option<usize>>,
    dof_joint: Vec<usize>,
    origin_rotation: Vec<Matrix3<f64>>,
    origin_translation: Vec<Vector3<f64>>,
    end_effectors: EndEffectors,
    left_foot: usize,
    right_foot: usize,
    limbs: Vec<Limb>,
    total_mass: f64,
}

impl RobotModel {
    pub fn new(
        name: &str,
        links: Vec<(String, SpatialInertia)>,
        joints: Vec<JointSpec>,
        end_effectors: EndEffectors,
    ) -> Result<Self, ModelError> {
        let mut by_name = HashMap::new();
        for (i, (link_name, inertia)) in links.iter().enumerate() {
            if by_name.insert(link_name.as_str(), i).is_some() {
                return Err(ModelError::DuplicateName {
                    kind: "link",
                    name: link_name.clone(),
                });
            }
            inertia.validate().map_err(|reason| ModelError::NonPhysicalInertia {
                link: link_name.clone(),
                reason,
            })?;
        }

        let mut joint_names = HashMap::new();
        let mut parent_of: Vec<Option<(usize, usize)>> = vec![None; links.len()];
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); links.len()];
        for (k, joint) in joints.iter().enumerate() {
            if joint_names.insert(joint.name.as_str(), k).is_some() {
                return Err(ModelError::DuplicateName {
                    kind: "joint",
                    name: joint.name.clone(),
                });
            }
            let lookup = |link: &str| {
                by_name.get(link).copied().ok_or_else(|| ModelError::UnknownLink {
                    joint: joint.name.clone(),
                    link: link.to_owned(),
                })
            };
            let parent = lookup(&joint.parent)?;
            let child = lookup(&joint.child)?;
            if parent_of[child].is_some() {
                return Err(ModelError::MultipleParents(joint.child.clone()));
            }
            if joint.kind == JointKind::Revolute && (joint.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(ModelError::NonUnitAxis(joint.name.clone()));
            }
            parent_of[child] = Some((parent, k));
            children[parent].push((child, k));
        }

        let roots: Vec<usize> = (0..links.len()).filter(|&i| parent_of[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(ModelError::RootCount(
                roots.iter().map(|&i| links[i].0.clone()).collect(),
            ));
        }

        // Depth-first preorder keeps each limb contiguous.
        let mut order = Vec::with_capacity(links.len());
        let mut stack = vec![roots[0]];
        let mut seen = vec![false; links.len()];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(ModelError::Cycle(vec![links[i].0.clone()]));
            }
            seen[i] = true;
            order.push(i);
            for &(c, _) in children[i].iter().rev() {
                stack.push(c);
            }
        }
        if order.len() != links.len() {
            return Err(ModelError::Cycle(
                (0..links.len())
                    .filter(|&i| !seen[i])
                    .map(|i| links[i].0.clone())
                    .collect(),
            ));
        }

        let mut new_index = vec![0; links.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }

        let mut out_links = Vec::with_capacity(links.len());
        let mut out_joints = Vec::with_capacity(joints.len());
        let mut joint_parent = Vec::new();
        let mut joint_child = Vec::new();
        let mut joint_dof = Vec::new();
        let mut dof_joint = Vec::new();
        let mut origin_rotation = Vec::new();
        let mut origin_translation = Vec::new();
        for (new, &old) in order.iter().enumerate() {
            let (link_name, inertia) = &links[old];
            let joint = parent_of[old].map(|(parent, k)| {
                let spec = joints[k].clone();
                let jk = out_joints.len();
                joint_parent.push(new_index[parent]);
                joint_child.push(new);
                origin_rotation.push(*spec.parent_frame_transform.rotation.to_rotation_matrix().matrix());
                origin_translation.push(spec.parent_frame_transform.translation.vector);
                if spec.kind == JointKind::Revolute {
                    joint_dof.push(Some(dof_joint.len()));
                    dof_joint.push(jk);
                } else {
                    joint_dof.push(None);
                }
                out_joints.push(spec);
                jk
            });
            out_links.push(Link {
                name: link_name.clone(),
                inertia: *inertia,
                parent: parent_of[old].map(|(p, _)| new_index[p]),
                joint,
            });
        }

        let total_mass: f64 = out_links.iter().map(|l| l.inertia.mass).sum();
        if total_mass <= 0.0 || !total_mass.is_finite() {
            return Err(ModelError::ZeroMass);
        }

        let find = |frame: &str| {
            out_links
                .iter()
                .position(|l| l.name == frame)
                .ok_or_else(|| ModelError::UnknownEndEffector(frame.to_owned()))
        };
        let left_foot = find(&end_effectors.left_foot)?;
        let right_foot = find(&end_effectors.right_foot)?;
        for hand in [&end_effectors.left_hand, &end_effectors.right_hand]
            .into_iter()
            .flatten()
        {
            find(hand)?;
        }

        let mut model = Self {
            name: name.to_owned(),
            links: out_links,
            joints: out_joints,
            joint_parent,
            joint_child,
            joint_dof,
            dof_joint,
            origin_rotation,
            origin_translation,
            end_effectors,
            left_foot,
            right_foot,
            limbs: Vec::new(),
            total_mass,
        };
        model.limbs = model.detect_limbs();
        Ok(model)
    }

    fn detect_limbs(&self) -> Vec<Limb> {
        let mut limbs = Vec::new();
        for (k, &parent) in self.joint_parent.iter().enumerate() {
            if parent != 0 {
                continue;
            }
            let root = self.joint_child[k];
            let links: Vec<usize> = (root..self.links.len())
                .filter(|&i| self.is_ancestor(root, i))
                .collect();
            let dofs: Vec<usize> = links
                .iter()
                .filter_map(|&i| self.links[i].joint.and_then(|j| self.joint_dof[j]))
                .collect();
            if dofs.is_empty() {
                continue;
            }
            let contains = |frame: &Option<String>| {
                frame
                    .as_deref()
                    .and_then(|f| self.link_index(f))
                    .is_some_and(|i| links.contains(&i))
            };
            let ee = &self.end_effectors;
            let name = if links.contains(&self.left_foot) {
                "left_leg".to_owned()
            } else if links.contains(&self.right_foot) {
                "right_leg".to_owned()
            } else if contains(&ee.left_hand) {
                "left_arm".to_owned()
            } else if contains(&ee.right_hand) {
                "right_arm".to_owned()
            } else {
                self.joints[k].name.clone()
            };
            limbs.push(Limb { name, links, dofs });
        }
        limbs
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    /// Number of revolute joints.
    pub fn n(&self) -> usize {
        self.dof_joint.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn end_effectors(&self) -> &EndEffectors {
        &self.end_effectors
    }

    pub fn left_foot(&self) -> usize {
        self.left_foot
    }

    pub fn right_foot(&self) -> usize {
        self.right_foot
    }

    pub fn limbs(&self) -> &[Limb] {
        &self.limbs
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn joint_parent(&self, joint: usize) -> usize {
        self.joint_parent[joint]
    }

    pub fn joint_child(&self, joint: usize) -> usize {
        self.joint_child[joint]
    }

    /// Generalized-coordinate index of a joint, `None` for fixed joints.
    pub fn joint_dof(&self, joint: usize) -> Option<usize> {
        self.joint_dof[joint]
    }

    /// Joint index driven by generalized coordinate `dof`.
    pub fn dof_joint(&self, dof: usize) -> usize {
        self.dof_joint[dof]
    }

    pub fn dof_name(&self, dof: usize) -> &str {
        &self.joints[self.dof_joint[dof]].name
    }

    pub fn dof_significance(&self, dof: usize) -> Significance {
        self.joints[self.dof_joint[dof]].significance
    }

    /// Generalized-coordinate indices of the inertially significant joints, in order.
    pub fn significant_dofs(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&d| self.dof_significance(d) == Significance::Significant)
            .collect()
    }

    pub(crate) fn origin_rotation(&self, joint: usize) -> &Matrix3<f64> {
        &self.origin_rotation[joint]
    }

    pub(crate) fn origin_translation(&self, joint: usize) -> &Vector3<f64> {
        &self.origin_translation[joint]
    }

    /// True if `ancestor` lies on the path from `link` to the base (inclusive).
    pub fn is_ancestor(&self, ancestor: usize, link: usize) -> bool {
        let mut cur = Some(link);
        while let Some(i) = cur {
            if i == ancestor {
                return true;
            }
            if i < ancestor {
                return false;
            }
            cur = self.links[i].parent;
        }
        false
    }

    /// Links from `link` up to (excluding) the base, child first.
    pub fn path_to_base(&self, link: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = link;
        while let Some(parent) = self.links[cur].parent {
            path.push(cur);
            cur = parent;
        }
        path
    }

    /// Replaces the significance tag of a joint. Used when applying
    /// annotation overrides after parsing.
    pub fn set_significance(&mut self, joint: usize, significance: Significance) {
        self.joints[joint].significance = significance;
    }
}
