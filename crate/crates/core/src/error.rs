use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "graph is disconnected: nodes {unreachable:?} cannot be reached from the plant node 0"
    )]
    DisconnectedGraph { unreachable: Vec<usize> },

    #[error("edge ({i}, {j}) has nonpositive weight {weight}")]
    NonpositiveWeight { i: usize, j: usize, weight: f64 },

    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },

    #[error("edge ({i}, {j}) references a node outside 0..={max}")]
    NodeOutOfRange { i: usize, j: usize, max: usize },

    #[error("edge ({i}, {j}) declared more than once")]
    DuplicateEdge { i: usize, j: usize },

    #[error("observer coupling direction alpha1 must be nonzero")]
    ZeroAlpha,

    #[error("plant output row C_p must be nonzero")]
    ZeroOutput,

    #[error(
        "plant Hamiltonian coefficients must vanish for observer synthesis (got r_p = {r_p:?})"
    )]
    NonzeroPlantHamiltonian { r_p: [f64; 3] },

    #[error(
        "R_o is not positive definite: lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}"
    )]
    NotPositiveDefinite { lambda_min: f64, lambda_max: f64 },

    #[error("observer drift A_o is singular")]
    SingularDrift,

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid time grid: {0}")]
    BadGrid(String),

    #[error("time horizon must be positive and finite (got {0})")]
    BadHorizon(f64),

    #[error("initial state must be nonzero")]
    ZeroState,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation { .. } | Error::Io { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
