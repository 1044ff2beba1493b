use thiserror::Error;

use crate::model_io::ParseError;
use crate::solver::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Violations of the structural or physical invariants of a robot model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-physical inertia for link `{link}`: {reason}")]
    NonPhysicalInertia { link: String, reason: String },
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("joint `{joint}` references unknown link `{link}`")]
    UnknownLink { joint: String, link: String },
    #[error("link `{0}` has more than one parent joint")]
    MultipleParents(String),
    #[error("expected exactly one root link, found {0:?}")]
    RootCount(Vec<String>),
    #[error("kinematic tree contains a cycle or disconnected links: {0:?}")]
    Cycle(Vec<String>),
    #[error("revolute joint `{0}` has a non-unit axis")]
    NonUnitAxis(String),
    #[error("total model mass must be positive")]
    ZeroMass,
    #[error("end-effector frame `{0}` does not name a link")]
    UnknownEndEffector(String),
    #[error("unknown built-in model `{0}` (expected planar3, biped12 or humanoid20)")]
    UnknownBuiltin(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("time {t} s lies outside the trajectory horizon [0, {t_f}] s")]
    OutsideHorizon { t: f64, t_f: f64 },
    #[error("composite rotational inertia is ill-conditioned (reciprocal condition {rcond:e})")]
    IllConditioned { rcond: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid flight problem: {0}")]
    InvalidProblem(String),
    #[error("{foot} target is out of reach: distance {distance:.3} m exceeds leg reach {reach:.3} m")]
    Unreachable {
        foot: &'static str,
        distance: f64,
        reach: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
