use super::formula::Var;
use crate::model::RequestStatus;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Variable valuation of one tree node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default)]
    pub values: BTreeMap<Var, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<RequestStatus>,
    /// Variables that have no meaning at this node.
    #[serde(default)]
    pub not_applicable: BTreeSet<Var>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lookup {
    Value(f64),
    NotApplicable,
    Missing,
}

impl Labels {
    pub fn set(&mut self, var: Var, value: f64) -> &mut Self {
        self.not_applicable.remove(&var);
        self.values.insert(var, value);
        self
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn mark_not_applicable(&mut self, var: Var) -> &mut Self {
        self.values.remove(&var);
        if var == Var::RCs {
            self.status = None;
        }
        self.not_applicable.insert(var);
        self
    }

    pub fn with_status(mut self, status: RequestStatus) -> Self {
        self.not_applicable.remove(&Var::RCs);
        self.status = Some(status);
        self
    }

    pub fn lookup(&self, var: Var) -> Lookup {
        if self.not_applicable.contains(&var) {
            return Lookup::NotApplicable;
        }
        match self.values.get(&var) {
            Some(&value) => Lookup::Value(value),
            None => Lookup::Missing,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub labels: Labels,
}

/// A finite tree of labelled states, the structure formulas are checked on.
/// Node ids are positions in `nodes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTree {
    pub nodes: Vec<LabeledNode>,
    pub root: usize,
    pub iterations_run: u64,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum TreeShapeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("node {0} is out of range")]
    OutOfRange(usize),
    #[error("node {0} stored at position {1}")]
    Misplaced(usize, usize),
    #[error("parent/child links disagree at node {0}")]
    Inconsistent(usize),
    #[error("node {0} is reachable twice or lies on a cycle")]
    NotATree(usize),
}

impl LabeledTree {
    /// A single-node tree.
    pub fn leaf(labels: Labels) -> Self {
        Self { nodes: vec![LabeledNode { id: 0, parent: None, children: vec![], labels }], root: 0, iterations_run: 0 }
    }

    /// Builds a tree from parent pointers; `parents[0]` must be `None`.
    pub fn from_parents(parents: &[Option<usize>], labels: Vec<Labels>) -> Self {
        assert_eq!(parents.len(), labels.len());
        let mut nodes: Vec<LabeledNode> = labels
            .into_iter()
            .enumerate()
            .map(|(id, labels)| LabeledNode { id, parent: parents[id], children: vec![], labels })
            .collect();
        for (id, parent) in parents.iter().enumerate() {
            if let Some(p) = parent {
                nodes[*p].children.push(id);
            }
        }
        Self { nodes, root: 0, iterations_run: 0 }
    }

    pub fn node(&self, id: usize) -> &LabeledNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes reachable from the root, parents before children.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        order
    }

    /// Verifies single-rootedness, acyclicity and link consistency.
    pub fn validate(&self) -> Result<(), TreeShapeError> {
        if self.nodes.is_empty() {
            return Err(TreeShapeError::Empty);
        }
        if self.root >= self.nodes.len() {
            return Err(TreeShapeError::OutOfRange(self.root));
        }
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id != pos {
                return Err(TreeShapeError::Misplaced(node.id, pos));
            }
            for &child in &node.children {
                let c = self.nodes.get(child).ok_or(TreeShapeError::OutOfRange(child))?;
                if c.parent != Some(pos) {
                    return Err(TreeShapeError::Inconsistent(child));
                }
            }
            if let Some(parent) = node.parent {
                let p = self.nodes.get(parent).ok_or(TreeShapeError::OutOfRange(parent))?;
                if !p.children.contains(&pos) {
                    return Err(TreeShapeError::Inconsistent(pos));
                }
            }
        }
        if self.nodes[self.root].parent.is_some() {
            return Err(TreeShapeError::Inconsistent(self.root));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(TreeShapeError::NotATree(id));
            }
            stack.extend(&self.nodes[id].children);
        }
        Ok(())
    }

    /// The subtree below `focus`, re-rooted and re-numbered. The returned
    /// vector maps new ids back to ids in `self`.
    pub fn subtree(&self, focus: usize) -> (LabeledTree, Vec<usize>) {
        let mut old_ids = Vec::new();
        let mut stack = vec![focus];
        while let Some(id) = stack.pop() {
            old_ids.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        let new_id: BTreeMap<usize, usize> = old_ids.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let nodes = old_ids
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let source = &self.nodes[old];
                LabeledNode {
                    id: new,
                    parent: if old == focus { None } else { source.parent.map(|p| new_id[&p]) },
                    children: source.children.iter().map(|c| new_id[c]).collect(),
                    labels: source.labels.clone(),
                }
            })
            .collect();
        (LabeledTree { nodes, root: 0, iterations_run: self.iterations_run }, old_ids)
    }
}
