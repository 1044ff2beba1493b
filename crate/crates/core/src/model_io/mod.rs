//! Robot model loading: the URDF subset, its JSON annotation file, and the
//! built-in models.

mod builtin;
mod meta;
mod urdf;

use std::fmt;
use std::path::{Path, PathBuf};

pub use builtin::{builtin, BUILTIN_MODELS};
pub use meta::ModelMeta;
pub use urdf::{parse_model, serialize_model};

use crate::error::{ModelError, Result};
use crate::rbd::RobotModel;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Xml(String),
    UnexpectedRoot(String),
    MissingAttribute(&'static str),
    InvalidNumber(String),
    UnknownJointType(String),
    MissingInertial,
    NonPhysicalInertia(String),
    ZeroAxis,
    Model(ModelError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Xml(msg) => write!(f, "malformed XML: {msg}"),
            Self::UnexpectedRoot(tag) => write!(f, "expected <robot> root element, found <{tag}>"),
            Self::MissingAttribute(name) => write!(f, "missing `{name}`"),
            Self::InvalidNumber(text) => write!(f, "invalid number `{text}`"),
            Self::UnknownJointType(t) => write!(f, "unknown joint type `{t}`"),
            Self::MissingInertial => f.write_str("missing <inertial> block"),
            Self::NonPhysicalInertia(reason) => write!(f, "non-physical inertia: {reason}"),
            Self::ZeroAxis => f.write_str("joint axis has zero length"),
            Self::Model(e) => e.fmt(f),
        }
    }
}

/// A model document that could not be turned into a [`RobotModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: Option<u32>,
    pub element: String,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{}: {}", self.element, self.kind)
    }
}

impl std::error::Error for ParseError {}

/// Path of the annotation file that belongs to a model file.
pub fn meta_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("meta.json")
}

/// Loads a model from a URDF file, picking up `<model>.meta.json` if present.
pub fn load_model(path: &Path) -> Result<RobotModel> {
    let text = std::fs::read_to_string(path)?;
    let meta_file = meta_path(path);
    let meta = if meta_file.exists() {
        Some(serde_json::from_str::<ModelMeta>(&std::fs::read_to_string(meta_file)?)?)
    } else {
        None
    };
    Ok(parse_model(&text, meta.as_ref())?)
}

/// Resolves a model argument: a built-in identifier or a path to a URDF file.
pub fn resolve_model(spec: &str) -> Result<RobotModel> {
    if BUILTIN_MODELS.contains(&spec) {
        return Ok(builtin(spec)?);
    }
    let path = Path::new(spec);
    if path.exists() {
        load_model(path)
    } else {
        Err(ModelError::UnknownBuiltin(spec.to_owned()).into())
    }
}

/// Writes `model` as `<path>` plus its `<model>.meta.json` annotation file.
pub fn save_model(model: &RobotModel, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_model(model))?;
    let meta = serde_json::to_string_pretty(&ModelMeta::from_model(model))?;
    std::fs::write(meta_path(path), meta)?;
    Ok(())
}
