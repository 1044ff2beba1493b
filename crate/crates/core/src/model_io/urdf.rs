//! A URDF subset: links with inertial blocks and revolute, continuous or
//! fixed joints. Visual, collision and any other elements are ignored.

use std::fmt::Write as _;

use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};
use roxmltree::{Document, Node};

use super::meta::ModelMeta;
use super::{ParseError, ParseErrorKind};
use crate::rbd::{EndEffectors, JointKind, JointSpec, RobotModel, Significance, SpatialInertia};

struct Ctx<'a> {
    doc: &'a Document<'a>,
}

impl Ctx<'_> {
    fn err(&self, node: Node, element: String, kind: ParseErrorKind) -> ParseError {
        let pos = self.doc.text_pos_at(node.range().start);
        ParseError {
            line: Some(pos.row),
            element,
            kind,
        }
    }

    fn attr<'n>(&self, node: Node<'n, '_>, element: &str, name: &'static str) -> Result<&'n str, ParseError> {
        node.attribute(name)
            .ok_or_else(|| self.err(node, element.to_owned(), ParseErrorKind::MissingAttribute(name)))
    }

    fn number(&self, node: Node, element: &str, text: &str) -> Result<f64, ParseError> {
        text.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(node, element.to_owned(), ParseErrorKind::InvalidNumber(text.to_owned())))
    }

    fn vec3(&self, node: Node, element: &str, text: Option<&str>) -> Result<Vector3<f64>, ParseError> {
        let Some(text) = text else {
            return Ok(Vector3::zeros());
        };
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(self.err(node, element.to_owned(), ParseErrorKind::InvalidNumber(text.to_owned())));
        }
        let mut v = Vector3::zeros();
        for (i, p) in parts.iter().enumerate() {
            v[i] = self.number(node, element, p)?;
        }
        Ok(v)
    }

    /// `<origin xyz rpy>`, with rpy applied about the fixed x, y, z axes in
    /// that order.
    fn origin(&self, parent: Node, element: &str) -> Result<Isometry3<f64>, ParseError> {
        let Some(origin) = child(parent, "origin") else {
            return Ok(Isometry3::identity());
        };
        let xyz = self.vec3(origin, element, origin.attribute("xyz"))?;
        let rpy = self.vec3(origin, element, origin.attribute("rpy"))?;
        Ok(Isometry3::from_parts(
            Translation3::from(xyz),
            UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z),
        ))
    }
}

fn child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == tag)
}

fn parse_inertial(ctx: &Ctx, link: Node, element: &str) -> Result<SpatialInertia, ParseError> {
    let inertial =
        child(link, "inertial").ok_or_else(|| ctx.err(link, element.to_owned(), ParseErrorKind::MissingInertial))?;
    let origin = ctx.origin(inertial, element)?;
    let mass_node = child(inertial, "mass")
        .ok_or_else(|| ctx.err(inertial, element.to_owned(), ParseErrorKind::MissingAttribute("mass")))?;
    let mass = ctx.number(mass_node, element, ctx.attr(mass_node, element, "value")?)?;
    let inertia_node = child(inertial, "inertia").ok_or_else(|| {
        ctx.err(
            inertial,
            element.to_owned(),
            ParseErrorKind::MissingAttribute("inertia"),
        )
    })?;
    let get = |name: &'static str| -> Result<f64, ParseError> {
        let text = ctx.attr(inertia_node, element, name)?;
        ctx.number(inertia_node, element, text)
    };
    let (ixx, ixy, ixz) = (get("ixx")?, get("ixy")?, get("ixz")?);
    let (iyy, iyz, izz) = (get("iyy")?, get("iyz")?, get("izz")?);
    let local = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
    let r = origin.rotation.to_rotation_matrix().into_inner();
    let inertia = SpatialInertia::new(mass, origin.translation.vector, r * local * r.transpose());
    inertia
        .validate()
        .map_err(|reason| ctx.err(inertial, element.to_owned(), ParseErrorKind::NonPhysicalInertia(reason)))?;
    Ok(inertia)
}

fn parse_joint(ctx: &Ctx, node: Node) -> Result<JointSpec, ParseError> {
    let name = ctx.attr(node, "joint", "name")?.to_owned();
    let element = format!("joint `{name}`");
    let kind = match ctx.attr(node, &element, "type")? {
        "revolute" | "continuous" => JointKind::Revolute,
        "fixed" => JointKind::Fixed,
        other => return Err(ctx.err(node, element, ParseErrorKind::UnknownJointType(other.to_owned()))),
    };
    let link_attr = |tag: &'static str| -> Result<String, ParseError> {
        let n =
            child(node, tag).ok_or_else(|| ctx.err(node, element.clone(), ParseErrorKind::MissingAttribute(tag)))?;
        Ok(ctx.attr(n, &element, "link")?.to_owned())
    };
    let parent = link_attr("parent")?;
    let child_link = link_attr("child")?;
    let origin = ctx.origin(node, &element)?;
    let axis = match kind {
        JointKind::Revolute => {
            let axis = match child(node, "axis") {
                Some(a) => ctx.vec3(a, &element, Some(ctx.attr(a, &element, "xyz")?))?,
                None => Vector3::x(),
            };
            let norm = axis.norm();
            if norm < 1e-12 {
                return Err(ctx.err(node, element, ParseErrorKind::ZeroAxis));
            }
            axis / norm
        }
        JointKind::Fixed => Vector3::zeros(),
    };
    Ok(JointSpec {
        significance: if kind == JointKind::Fixed {
            Significance::Frozen
        } else {
            Significance::from_joint_name(&name)
        },
        name,
        kind,
        axis,
        parent_frame_transform: origin,
        parent,
        child: child_link,
    })
}

/// Parses a URDF-subset document. Significance tags and end-effector frames
/// come from `meta`; without it the name-based defaults apply and the feet
/// must be links named `left_foot` and `right_foot`.
pub fn parse_model(text: &str, meta: Option<&ModelMeta>) -> Result<RobotModel, ParseError> {
    let doc = Document::parse(text).map_err(|e| ParseError {
        line: Some(e.pos().row),
        element: "document".into(),
        kind: ParseErrorKind::Xml(e.to_string()),
    })?;
    let ctx = Ctx { doc: &doc };
    let root = doc.root_element();
    if root.tag_name().name() != "robot" {
        return Err(ctx.err(
            root,
            root.tag_name().name().to_owned(),
            ParseErrorKind::UnexpectedRoot(root.tag_name().name().to_owned()),
        ));
    }
    let robot_name = root.attribute("name").unwrap_or("robot");

    let mut links = Vec::new();
    let mut joints = Vec::new();
    for node in root.children().filter(|c| c.is_element()) {
        match node.tag_name().name() {
            "link" => {
                let name = ctx.attr(node, "link", "name")?.to_owned();
                let element = format!("link `{name}`");
                let inertia = parse_inertial(&ctx, node, &element)?;
                links.push((name, inertia));
            }
            "joint" => joints.push(parse_joint(&ctx, node)?),
            _ => {}
        }
    }

    let ee = match meta {
        Some(m) => m.end_effectors(),
        None => EndEffectors::feet("left_foot", "right_foot"),
    };
    if let Some(meta) = meta {
        for joint in joints.iter_mut() {
            if joint.kind == JointKind::Fixed {
                continue;
            }
            if meta.frozen_joints.iter().any(|n| n == &joint.name) {
                joint.significance = Significance::Frozen;
            } else if meta.significant_joints.iter().any(|n| n == &joint.name) {
                joint.significance = Significance::Significant;
            }
        }
    }
    RobotModel::new(robot_name, links, joints, ee).map_err(|e| ParseError {
        line: None,
        element: "robot".into(),
        kind: ParseErrorKind::Model(e),
    })
}

fn fmt3(v: &Vector3<f64>) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

/// Writes a model back out as a URDF-subset document.
pub fn serialize_model(model: &RobotModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="utf-8"?>"#);
    let _ = writeln!(out, r#"<robot name="{}">"#, model.name());
    for link in model.links() {
        let i = &link.inertia;
        let m = &i.inertia_about_com;
        let _ = writeln!(out, r#"  <link name="{}">"#, link.name);
        let _ = writeln!(out, "    <inertial>");
        let _ = writeln!(out, r#"      <origin xyz="{}" rpy="0 0 0"/>"#, fmt3(&i.com_offset));
        let _ = writeln!(out, r#"      <mass value="{}"/>"#, i.mass);
        let _ = writeln!(
            out,
            r#"      <inertia ixx="{}" ixy="{}" ixz="{}" iyy="{}" iyz="{}" izz="{}"/>"#,
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 2)]
        );
        let _ = writeln!(out, "    </inertial>");
        let _ = writeln!(out, "  </link>");
    }
    for (k, joint) in model.joints().iter().enumerate() {
        let kind = match joint.kind {
            JointKind::Revolute => "continuous",
            JointKind::Fixed => "fixed",
        };
        let (roll, pitch, yaw) = joint.parent_frame_transform.rotation.euler_angles();
        let _ = writeln!(out, r#"  <joint name="{}" type="{kind}">"#, joint.name);
        let _ = writeln!(
            out,
            r#"    <origin xyz="{}" rpy="{roll} {pitch} {yaw}"/>"#,
            fmt3(&joint.parent_frame_transform.translation.vector)
        );
        let _ = writeln!(
            out,
            r#"    <parent link="{}"/>"#,
            model.links()[model.joint_parent(k)].name
        );
        let _ = writeln!(
            out,
            r#"    <child link="{}"/>"#,
            model.links()[model.joint_child(k)].name
        );
        if joint.kind == JointKind::Revolute {
            let _ = writeln!(out, r#"    <axis xyz="{}"/>"#, fmt3(&joint.axis));
        }
        let _ = writeln!(out, "  </joint>");
    }
    let _ = writeln!(out, "</robot>");
    out
}
