//! Bottom-up CTL labelling over a finite tree.
//!
//! Paths are the maximal root-to-leaf paths of the tree. At a leaf `AX` holds
//! vacuously, `EX` fails, and the `F`/`G` operators reduce to the operand at
//! the leaf itself.
//!
//! Atoms may be not-applicable at a node (the queried entity is absent on
//! that branch). Boolean connectives treat that as a third value (Kleene
//! logic); the nearest enclosing temporal operator resolves it, as satisfied
//! for `AX`/`AG`/`EG` and as unsatisfied for `EX`/`AF`/`EF`. A not-applicable
//! value that reaches the top of the formula counts as satisfied.

use super::formula::{Atom, Comparator, Formula, TemporalOp};
use super::labels::{LabeledTree, Labels, Lookup};
use super::CtlError;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    True,
    False,
    NotApplicable,
}

impl Truth {
    pub fn from_bool(value: bool) -> Self {
        if value {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::NotApplicable => Truth::NotApplicable,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::NotApplicable,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::NotApplicable,
        }
    }

    /// Resolution under the given temporal operator.
    pub fn resolve(self, op: TemporalOp) -> bool {
        match self {
            Truth::True => true,
            Truth::False => false,
            Truth::NotApplicable => op.is_safety(),
        }
    }

    /// Top-level resolution: not-applicable is vacuously satisfied.
    pub fn holds(self) -> bool {
        self != Truth::False
    }
}

/// Outcome of one atom at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtomValue {
    NotApplicable,
    Holds,
    /// Failed, with the margin by which it failed.
    Violated(f64),
}

impl AtomValue {
    pub fn truth(self) -> Truth {
        match self {
            AtomValue::NotApplicable => Truth::NotApplicable,
            AtomValue::Holds => Truth::True,
            AtomValue::Violated(_) => Truth::False,
        }
    }
}

pub fn eval_atom(labels: &Labels, atom: &Atom) -> Result<AtomValue, CtlError> {
    match atom {
        Atom::Compare { lhs, op, rhs } => {
            let vars = atom.vars();
            if vars.iter().any(|&v| labels.lookup(v) == Lookup::NotApplicable) {
                return Ok(AtomValue::NotApplicable);
            }
            if let Some(&var) = vars.iter().find(|&&v| labels.lookup(v) == Lookup::Missing) {
                return Err(CtlError::MissingLabel(var));
            }
            let value = |var| match labels.lookup(var) {
                Lookup::Value(v) => Some(v),
                _ => None,
            };
            let l = lhs.eval(value).expect("checked above");
            let r = rhs.eval(value).expect("checked above");
            Ok(if op.holds(l, r) { AtomValue::Holds } else { AtomValue::Violated(op.shortfall(l, r)) })
        }
        Atom::Status { op, status } => {
            if labels.lookup(super::Var::RCs) == Lookup::NotApplicable {
                return Ok(AtomValue::NotApplicable);
            }
            let current = labels.status.ok_or(CtlError::MissingLabel(super::Var::RCs))?;
            let holds = match op {
                Comparator::Eq => current == *status,
                Comparator::Ne => current != *status,
                other => return Err(CtlError::InvalidAtom(format!("r_cs compared with '{}'", other.symbol()))),
            };
            Ok(if holds { AtomValue::Holds } else { AtomValue::Violated(1.0) })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    /// Every subformula, operands before the formulas containing them; the
    /// last entry is the checked formula.
    pub subformulas: Vec<String>,
    /// `satisfaction[k][node]` for subformula `k`.
    pub satisfaction: Vec<Vec<Truth>>,
    pub root_verdict: bool,
}

impl CheckResult {
    /// Per-node values of the checked formula.
    pub fn top(&self) -> &[Truth] {
        self.satisfaction.last().expect("at least one subformula")
    }
}

struct Labeler<'t> {
    tree: &'t LabeledTree,
    /// Children before parents.
    bottom_up: Vec<usize>,
    subformulas: Vec<String>,
    satisfaction: Vec<Vec<Truth>>,
}

impl Labeler<'_> {
    fn label(&mut self, formula: &Formula) -> Result<Vec<Truth>, CtlError> {
        let n = self.tree.len();
        let values = match formula {
            Formula::True => vec![Truth::True; n],
            Formula::False => vec![Truth::False; n],
            Formula::Atom(atom) => self
                .tree
                .nodes
                .iter()
                .map(|node| eval_atom(&node.labels, atom).map(AtomValue::truth).map_err(|e| e.at_node(node.id)))
                .collect::<Result<_, _>>()?,
            Formula::Not(inner) => self.label(inner)?.into_iter().map(Truth::negate).collect(),
            Formula::And(l, r) => {
                let l = self.label(l)?;
                let r = self.label(r)?;
                l.into_iter().zip(r).map(|(a, b)| a.and(b)).collect()
            }
            Formula::Or(l, r) => {
                let l = self.label(l)?;
                let r = self.label(r)?;
                l.into_iter().zip(r).map(|(a, b)| a.or(b)).collect()
            }
            Formula::Temporal(op, inner) => {
                let inner = self.label(inner)?;
                self.temporal(*op, &inner)
            }
        };
        self.subformulas.push(formula.to_string());
        self.satisfaction.push(values.clone());
        Ok(values)
    }

    fn temporal(&self, op: TemporalOp, inner: &[Truth]) -> Vec<Truth> {
        let mut out = vec![false; self.tree.len()];
        for &id in &self.bottom_up {
            let children = &self.tree.nodes[id].children;
            let here = inner[id].resolve(op);
            let leaf = children.is_empty();
            out[id] = match op {
                TemporalOp::AX => children.iter().all(|&c| inner[c].resolve(op)),
                TemporalOp::EX => children.iter().any(|&c| inner[c].resolve(op)),
                TemporalOp::AG => here && children.iter().all(|&c| out[c]),
                TemporalOp::EG => here && (leaf || children.iter().any(|&c| out[c])),
                TemporalOp::AF => here || (!leaf && children.iter().all(|&c| out[c])),
                TemporalOp::EF => here || children.iter().any(|&c| out[c]),
            };
        }
        out.into_iter().map(Truth::from_bool).collect()
    }
}

/// Labels every node with every subformula and reports the verdict at the root.
pub fn check(tree: &LabeledTree, formula: &Formula) -> Result<CheckResult, CtlError> {
    tree.validate()?;
    let mut bottom_up = tree.preorder();
    bottom_up.reverse();
    let mut labeler = Labeler { tree, bottom_up, subformulas: Vec::new(), satisfaction: Vec::new() };
    let top = labeler.label(formula)?;
    Ok(CheckResult {
        root_verdict: top[tree.root].holds(),
        subformulas: labeler.subformulas,
        satisfaction: labeler.satisfaction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::{parse_formula, Var};
    use crate::model::RequestStatus;

    fn timing(t_est: f64, t_d: f64) -> Labels {
        Labels::default().with(Var::TEst, t_est).with(Var::TD, t_d).with(Var::TA, 10.0)
    }

    #[test]
    fn atom_boundary_holds() {
        let atom = parse_formula("t_est <= t_d + t_a").unwrap();
        let Formula::Atom(atom) = atom else { unreachable!() };
        assert_eq!(eval_atom(&timing(30.0, 20.0), &atom).unwrap(), AtomValue::Holds);
        assert_eq!(eval_atom(&timing(53.0, 20.0), &atom).unwrap(), AtomValue::Violated(23.0));
    }

    #[test]
    fn atom_not_applicable() {
        let Formula::Atom(atom) = parse_formula("v_o <= v_c").unwrap() else { unreachable!() };
        let mut labels = Labels::default().with(Var::VC, 4.0);
        labels.mark_not_applicable(Var::VO);
        assert_eq!(eval_atom(&labels, &atom).unwrap(), AtomValue::NotApplicable);
        assert!(matches!(
            eval_atom(&Labels::default().with(Var::VC, 4.0), &atom),
            Err(CtlError::MissingLabel(Var::VO))
        ));
    }

    #[test]
    fn status_atoms() {
        let Formula::Atom(atom) = parse_formula("r_cs = dropped-off").unwrap() else { unreachable!() };
        let labels = Labels::default().with_status(RequestStatus::InTransit);
        assert_eq!(eval_atom(&labels, &atom).unwrap(), AtomValue::Violated(1.0));
        let labels = Labels::default().with_status(RequestStatus::DroppedOff);
        assert_eq!(eval_atom(&labels, &atom).unwrap(), AtomValue::Holds);
    }

    #[test]
    fn single_node_globally() {
        let tree = LabeledTree::leaf(timing(10.0, 20.0));
        let result = check(&tree, &parse_formula("AG (t_est <= t_d + t_a)").unwrap()).unwrap();
        assert!(result.root_verdict);
        let result = check(&tree, &parse_formula("EX (t_est <= t_d)").unwrap()).unwrap();
        assert!(!result.root_verdict);
        let result = check(&tree, &parse_formula("AX (t_est > t_d)").unwrap()).unwrap();
        assert!(result.root_verdict);
    }

    #[test]
    fn true_holds_everywhere() {
        let tree = LabeledTree::from_parents(&[None, Some(0), Some(0)], vec![Labels::default(); 3]);
        let result = check(&tree, &Formula::True).unwrap();
        assert!(result.root_verdict);
        assert!(result.top().iter().all(|t| *t == Truth::True));
    }

    #[test]
    fn eventually_on_all_branches() {
        // root -> a (p) ; root -> b -> c (p)
        let p = |v: bool| Labels::default().with(Var::VO, if v { 1.0 } else { 5.0 }).with(Var::VC, 2.0);
        let tree =
            LabeledTree::from_parents(&[None, Some(0), Some(0), Some(2)], vec![p(false), p(true), p(false), p(true)]);
        let af = check(&tree, &parse_formula("AF (v_o <= v_c)").unwrap()).unwrap();
        assert!(af.root_verdict);
        let ag = check(&tree, &parse_formula("AG (v_o <= v_c)").unwrap()).unwrap();
        assert!(!ag.root_verdict);
        let eg = check(&tree, &parse_formula("EG (v_o > v_c)").unwrap()).unwrap();
        assert!(!eg.root_verdict);
        assert_eq!(ag.subformulas, vec!["v_o <= v_c".to_string(), "AG (v_o <= v_c)".to_string()]);
    }
}
