use super::checker::{eval_atom, AtomValue};
use super::formula::Formula;
use super::labels::LabeledTree;
use super::CtlError;
use serde::Serialize;

/// A node at which the atom of a quantified formula fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationRecord {
    pub node: usize,
    pub degree: f64,
}

/// Violation statistics of `OP (atom)` over the nodes of a tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantitativeSummary {
    pub formula: String,
    /// Nodes where the atom has a defined value.
    pub applicable_nodes: usize,
    pub violating_nodes: usize,
    /// Percentage of applicable nodes that violate, 0 when none apply.
    pub violation_pct: f64,
    pub avg_degree: Option<f64>,
    pub min_degree: Option<f64>,
    pub max_degree: Option<f64>,
    /// Simulated scenarios the tree summarises.
    pub scenario_count: u64,
    pub violations: Vec<ViolationRecord>,
}

impl QuantitativeSummary {
    pub fn satisfied(&self) -> bool {
        self.violating_nodes == 0
    }
}

pub fn quantify_violations(tree: &LabeledTree, formula: &Formula) -> Result<QuantitativeSummary, CtlError> {
    let (_, atom) = formula.as_quantifiable().ok_or_else(|| CtlError::NotQuantifiable(formula.to_string()))?;
    tree.validate()?;
    let mut applicable = 0;
    let mut violations = Vec::new();
    for id in tree.preorder() {
        match eval_atom(&tree.nodes[id].labels, atom).map_err(|e| e.at_node(id))? {
            AtomValue::NotApplicable => {}
            AtomValue::Holds => applicable += 1,
            AtomValue::Violated(degree) => {
                applicable += 1;
                violations.push(ViolationRecord { node: id, degree });
            }
        }
    }
    violations.sort_by_key(|v| v.node);
    let degrees = violations.iter().map(|v| v.degree);
    let count = violations.len();
    Ok(QuantitativeSummary {
        formula: formula.to_string(),
        applicable_nodes: applicable,
        violating_nodes: count,
        violation_pct: if applicable == 0 { 0.0 } else { 100.0 * count as f64 / applicable as f64 },
        avg_degree: (count > 0).then(|| degrees.clone().sum::<f64>() / count as f64),
        min_degree: degrees.clone().reduce(f64::min),
        max_degree: degrees.reduce(f64::max),
        scenario_count: tree.iterations_run,
        violations,
    })
}
