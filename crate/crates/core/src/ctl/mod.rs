//! Formulas over explanation trees: parsing, model checking and violation
//! statistics.

mod checker;
mod formula;
mod labels;
mod parser;
mod quantify;

pub use checker::{check, eval_atom, AtomValue, CheckResult, Truth};
pub use formula::{Atom, Comparator, Formula, LinExpr, TemporalOp, Var};
pub use labels::{LabeledNode, LabeledTree, Labels, Lookup, TreeShapeError};
pub use parser::{parse_formula, ParseError};
pub use quantify::{quantify_violations, QuantitativeSummary, ViolationRecord};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CtlError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("variable '{0}' has no label")]
    MissingLabel(Var),
    #[error("variable '{var}' has no label at node {node}")]
    MissingLabelAt { node: usize, var: Var },
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("malformed tree: {0}")]
    Tree(#[from] TreeShapeError),
    #[error("only formulas of the form OP (atom) can be quantified, got '{0}'")]
    NotQuantifiable(String),
}

impl CtlError {
    pub(crate) fn at_node(self, node: usize) -> Self {
        match self {
            CtlError::MissingLabel(var) => CtlError::MissingLabelAt { node, var },
            other => other,
        }
    }
}
