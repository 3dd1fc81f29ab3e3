use thiserror::Error;

use crate::io::ParseError;
use crate::tables::{TableError, VarId};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` has no state `{state}`")]
    UnknownState { var: String, state: String },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid finding: {0}")]
    InvalidFinding(String),
    #[error("network is not singly connected")]
    NotSinglyConnected,
    #[error("conditioning set {0:?} is not a loop cutset")]
    NotLoopCutset(Vec<VarId>),
    #[error("graph is not chordal under the given elimination order")]
    NotChordal,
    #[error("no cluster contains the finding scope {0:?}")]
    FindingNotCoverable(Vec<VarId>),
    #[error("no cluster contains the query scope {0:?}")]
    QueryNotCoverable(Vec<VarId>),
    #[error("evidence has probability zero")]
    ImpossibleEvidence,
    #[error("invalid restructuring move: {0}")]
    InvalidMove(String),
    #[error("joint state space of {cells} cells exceeds the cap of {cap}")]
    StateSpaceTooLarge { cells: u128, cap: usize },
    #[error("unknown finding id {0}")]
    UnknownFinding(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
