use thiserror::Error;

use crate::topology::NodeId;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("no path between {0} and {1}")]
    NoPath(NodeId, NodeId),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("backend unavailable: {0}")]
    Backend(String),

    #[error("snapshot is not a tree ({nodes} nodes, {edges} edges)")]
    NotATree { nodes: usize, edges: usize },

    #[error("no suspect is infected")]
    NoCandidate,

    #[error("enumeration budget exceeded: visited more than {limit} chain states (delta={delta}, d={d}, n={n})")]
    Budget { limit: u64, delta: u32, d: u32, n: u32 },

    #[error("unsupported configuration: {0}")]
    Config(String),
}

/// Broad classes used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Capacity,
    Validation,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Capacity(_) | Error::Budget { .. } => ErrorClass::Capacity,
            Error::Argument(_) | Error::Domain(_) | Error::Config(_) | Error::Backend(_) => ErrorClass::Usage,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::NoPath(..)
            | Error::NotATree { .. }
            | Error::NoCandidate => ErrorClass::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
