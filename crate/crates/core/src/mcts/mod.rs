//! UCT search over the dispatch model.
//!
//! Each edge is an assignment followed by one sampled arrival: a child's
//! state is `transition(apply(parent, action))` with a seed derived from the
//! child's id, so every node holds a concrete decision-epoch snapshot.

mod dump;
mod label;
mod rollout;
mod search;
mod tree;

pub use dump::{DumpAction, DumpNode, LabelValue, TreeDump};
pub use label::{export_labeled_tree, node_labels, LabelConstants, LabelContext};
pub use rollout::{rollout, LeafEvaluator, RandomRollout, RolloutValue};
pub use search::{plan, plan_with, Infeasibility, PlanOutcome};
pub use tree::{SearchNode, SearchParams, SearchTree};

use crate::model::{ConstraintViolation, ModelError, VehicleId};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MctsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no feasible action for request {request_id}")]
    Infeasible { request_id: u32, violations: Vec<(VehicleId, Vec<ConstraintViolation>)> },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("node {0} has no children")]
    Leaf(usize),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, MctsError>;

/// SplitMix64 finaliser, used to derive independent stream seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
