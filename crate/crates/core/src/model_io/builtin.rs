//! Built-in robot models.
//!
//! Three fixed models with the topology of a planar test rig, a legs-only
//! biped and a biped with arms. Mass properties are round numbers chosen to
//! be physically plausible (about 40 kg total, each leg 15 %); they are part
//! of the versioned API and must not change silently.

use nalgebra::Vector3;

use crate::error::ModelError;
use crate::rbd::{EndEffectors, JointSpec, RobotModel, Significance, SpatialInertia};

pub const BUILTIN_MODELS: [&str; 3] = ["planar3", "biped12", "humanoid20"];

pub fn builtin(identifier: &str) -> Result<RobotModel, ModelError> {
    match identifier {
        "planar3" => Ok(planar3()),
        "biped12" => Ok(biped12()),
        "humanoid20" => Ok(humanoid20()),
        other => Err(ModelError::UnknownBuiltin(other.to_owned())),
    }
}

struct Builder {
    links: Vec<(String, SpatialInertia)>,
    joints: Vec<JointSpec>,
}

impl Builder {
    fn new(base: &str, inertia: SpatialInertia) -> Self {
        Self {
            links: vec![(base.to_owned(), inertia)],
            joints: Vec::new(),
        }
    }

    fn body(mass: f64, com: [f64; 3], diag: [f64; 3]) -> SpatialInertia {
        SpatialInertia::from_diagonal(mass, Vector3::from(com), diag[0], diag[1], diag[2])
    }

    #[allow(clippy::too_many_arguments)]
    fn revolute(
        &mut self,
        joint: &str,
        parent: &str,
        child: &str,
        origin: [f64; 3],
        axis: Vector3<f64>,
        significance: Significance,
        inertia: SpatialInertia,
    ) {
        self.links.push((child.to_owned(), inertia));
        self.joints.push(
            JointSpec::revolute(joint, parent, child, Vector3::from(origin), axis).with_significance(significance),
        );
    }

    fn frame(&mut self, joint: &str, parent: &str, child: &str, origin: [f64; 3]) {
        self.links.push((child.to_owned(), SpatialInertia::massless()));
        self.joints
            .push(JointSpec::fixed(joint, parent, child, Vector3::from(origin)));
    }

    fn build(self, name: &str, ee: EndEffectors) -> RobotModel {
        RobotModel::new(name, self.links, self.joints, ee).expect("built-in model is valid")
    }
}

/// Torso plus two single-hinge legs swinging about the lateral axis.
fn planar3() -> RobotModel {
    use Significance::Significant;
    let mut b = Builder::new("torso", Builder::body(10.0, [0.0, 0.0, 0.2], [0.3, 0.25, 0.1]));
    for (side, y) in [("left", 0.1), ("right", -0.1)] {
        let leg = format!("{side}_leg");
        b.revolute(
            &format!("{side}_hip"),
            "torso",
            &leg,
            [0.0, y, 0.0],
            Vector3::y(),
            Significant,
            Builder::body(2.0, [0.0, 0.0, -0.25], [0.05, 0.05, 0.005]),
        );
        b.frame(&format!("{side}_sole"), &leg, &format!("{side}_foot"), [0.0, 0.0, -0.5]);
    }
    b.build("planar3", EndEffectors::feet("left_foot", "right_foot"))
}

fn add_leg(b: &mut Builder, base: &str, side: &str, y: f64) {
    use Significance::{Frozen, Significant};
    let l = |s: &str| format!("{side}_{s}");
    b.revolute(
        &l("hip_yaw"),
        base,
        &l("hip_yaw_link"),
        [0.0, y, -0.05],
        Vector3::z(),
        Frozen,
        Builder::body(0.6, [0.0, 0.0, -0.03], [1e-3, 1e-3, 1e-3]),
    );
    b.revolute(
        &l("hip_roll"),
        &l("hip_yaw_link"),
        &l("hip_roll_link"),
        [0.0, 0.0, -0.06],
        Vector3::x(),
        Significant,
        Builder::body(0.6, [0.0, 0.0, -0.02], [1e-3, 1e-3, 1e-3]),
    );
    b.revolute(
        &l("hip_pitch"),
        &l("hip_roll_link"),
        &l("thigh"),
        [0.0, 0.0, -0.04],
        Vector3::y(),
        Significant,
        Builder::body(2.4, [0.0, 0.0, -0.15], [0.025, 0.025, 0.003]),
    );
    b.revolute(
        &l("knee"),
        &l("thigh"),
        &l("shank"),
        [0.0, 0.0, -0.35],
        Vector3::y(),
        Significant,
        Builder::body(1.8, [0.0, 0.0, -0.15], [0.018, 0.018, 0.002]),
    );
    b.revolute(
        &l("ankle_pitch"),
        &l("shank"),
        &l("ankle_link"),
        [0.0, 0.0, -0.35],
        Vector3::y(),
        Frozen,
        Builder::body(0.1, [0.0, 0.0, 0.0], [5e-5, 5e-5, 5e-5]),
    );
    b.revolute(
        &l("ankle_roll"),
        &l("ankle_link"),
        &l("foot_link"),
        [0.0, 0.0, 0.0],
        Vector3::x(),
        Frozen,
        Builder::body(0.5, [0.03, 0.0, -0.03], [5e-4, 2e-3, 2e-3]),
    );
    b.frame(&l("sole"), &l("foot_link"), &l("foot"), [0.0, 0.0, -0.06]);
}

fn add_arm(b: &mut Builder, base: &str, side: &str, y: f64) {
    use Significance::{Frozen, Significant};
    let l = |s: &str| format!("{side}_{s}");
    b.revolute(
        &l("shoulder_pitch"),
        base,
        &l("shoulder_pitch_link"),
        [0.0, y, 0.35],
        Vector3::y(),
        Significant,
        Builder::body(0.2, [0.0, 0.0, 0.0], [2e-4, 2e-4, 2e-4]),
    );
    b.revolute(
        &l("shoulder_roll"),
        &l("shoulder_pitch_link"),
        &l("shoulder_roll_link"),
        [0.0, 0.0, 0.0],
        Vector3::x(),
        Frozen,
        Builder::body(0.2, [0.0, 0.0, -0.02], [2e-4, 2e-4, 2e-4]),
    );
    b.revolute(
        &l("shoulder_yaw"),
        &l("shoulder_roll_link"),
        &l("upper_arm"),
        [0.0, 0.0, -0.04],
        Vector3::z(),
        Frozen,
        Builder::body(0.9, [0.0, 0.0, -0.1], [5e-3, 5e-3, 6e-4]),
    );
    b.revolute(
        &l("elbow"),
        &l("upper_arm"),
        &l("forearm"),
        [0.0, 0.0, -0.21],
        Vector3::y(),
        Frozen,
        Builder::body(0.7, [0.0, 0.0, -0.1], [3e-3, 3e-3, 4e-4]),
    );
    b.frame(&l("palm"), &l("forearm"), &l("hand"), [0.0, 0.0, -0.22]);
}

/// Legs-only biped: hip yaw/roll/pitch, knee, ankle pitch/roll per leg.
fn biped12() -> RobotModel {
    let mut b = Builder::new("pelvis", Builder::body(28.0, [0.0, 0.0, 0.15], [1.0, 0.9, 0.3]));
    add_leg(&mut b, "pelvis", "left", 0.1);
    add_leg(&mut b, "pelvis", "right", -0.1);
    b.build("biped12", EndEffectors::feet("left_foot", "right_foot"))
}

/// The biped with shoulder pitch/roll/yaw and elbow on each arm.
fn humanoid20() -> RobotModel {
    let mut b = Builder::new("pelvis", Builder::body(24.0, [0.0, 0.0, 0.18], [0.9, 0.8, 0.25]));
    add_leg(&mut b, "pelvis", "left", 0.1);
    add_leg(&mut b, "pelvis", "right", -0.1);
    add_arm(&mut b, "pelvis", "left", 0.2);
    add_arm(&mut b, "pelvis", "right", -0.2);
    let mut ee = EndEffectors::feet("left_foot", "right_foot");
    ee.left_hand = Some("left_hand".into());
    ee.right_hand = Some("right_hand".into());
    b.build("humanoid20", ee)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar3_dimensions() {
        let m = builtin("planar3").unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.total_mass(), 14.0);
        assert_eq!(m.significant_dofs().len(), 2);
    }

    #[test]
    fn biped12_dimensions() {
        let m = builtin("biped12").unwrap();
        assert_eq!(m.n(), 12);
        assert_eq!(m.significant_dofs().len(), 6);
        assert!((m.total_mass() - 40.0).abs() < 1e-12);
        let names: Vec<_> = m.significant_dofs().iter().map(|&d| m.dof_name(d)).collect();
        assert_eq!(
            names,
            [
                "left_hip_roll",
                "left_hip_pitch",
                "left_knee",
                "right_hip_roll",
                "right_hip_pitch",
                "right_knee"
            ]
        );
        for limb in m.limbs() {
            let mass: f64 = limb.links.iter().map(|&i| m.links()[i].inertia.mass).sum();
            assert!((mass / m.total_mass() - 0.15).abs() < 1e-12);
        }
    }

    #[test]
    fn humanoid20_dimensions() {
        let m = builtin("humanoid20").unwrap();
        assert_eq!(m.n(), 20);
        assert_eq!(m.significant_dofs().len(), 8);
        assert!((m.total_mass() - 40.0).abs() < 1e-12);
        let limbs: Vec<_> = m.limbs().iter().map(|l| l.name.as_str()).collect();
        assert_eq!(limbs, ["left_leg", "right_leg", "left_arm", "right_arm"]);
    }

    #[test]
    fn unknown_builtin() {
        assert_eq!(
            builtin("quadruped").unwrap_err(),
            ModelError::UnknownBuiltin("quadruped".into())
        );
    }
}
