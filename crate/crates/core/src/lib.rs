//! Exact inference for discrete belief networks by message passing on
//! cluster trees.
//!
//! The pieces:
//!
//! * [`network`]: the belief-network model, evidence, moral graphs and arc
//!   cutting.
//! * [`tables`]: dense potential tables and their algebra.
//! * [`treebuild`]: triangulation and cluster-tree construction, including
//!   the polytree and loop-cutset trees.
//! * [`propagate`]: the clustering engine with factored and joint message
//!   forms.
//! * [`condition`]: global conditioning, run in parallel over instantiations
//!   or serially under a memory bound.
//! * [`restructure`]: arc replacement between clusters sharing a sepset.
//! * [`oracle`]: brute-force enumeration used as ground truth.

pub mod condition;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod network;
pub mod oracle;
pub mod propagate;
pub mod restructure;
pub mod tables;
pub mod treebuild;

pub use error::{Error, Result};
pub use network::{BeliefNetwork, LikelihoodFinding};
pub use propagate::{EngineState, Form};
pub use tables::{Scope, Table, VarId};
pub use treebuild::ClusterTree;
