use serde::{Deserialize, Serialize};

use crate::rbd::{EndEffectors, RobotModel, Significance};

/// Side-channel annotations stored next to a model as `<model>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default)]
    pub frozen_joints: Vec<String>,
    #[serde(default)]
    pub significant_joints: Vec<String>,
    pub left_foot: String,
    pub right_foot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_hand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_hand: Option<String>,
}

impl ModelMeta {
    /// Captures the significance tags and end effectors of an existing model.
    pub fn from_model(model: &RobotModel) -> Self {
        let mut frozen = Vec::new();
        let mut significant = Vec::new();
        for dof in 0..model.n() {
            let name = model.dof_name(dof).to_owned();
            match model.dof_significance(dof) {
                Significance::Frozen => frozen.push(name),
                Significance::Significant => significant.push(name),
            }
        }
        let ee = model.end_effectors();
        Self {
            frozen_joints: frozen,
            significant_joints: significant,
            left_foot: ee.left_foot.clone(),
            right_foot: ee.right_foot.clone(),
            left_hand: ee.left_hand.clone(),
            right_hand: ee.right_hand.clone(),
        }
    }

    pub fn end_effectors(&self) -> EndEffectors {
        EndEffectors {
            left_foot: self.left_foot.clone(),
            right_foot: self.right_foot.clone(),
            left_hand: self.left_hand.clone(),
            right_hand: self.right_hand.clone(),
        }
    }
}
