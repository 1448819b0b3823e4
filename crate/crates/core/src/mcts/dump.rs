use super::{LabelContext, SearchTree};
use crate::ctl::{LabeledNode, LabeledTree, Labels, TreeShapeError, Var};
use crate::model::{Action, ConstraintViolation, RequestId, RequestStatus, VehicleId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpAction {
    pub request_id: RequestId,
    pub vehicle_id: VehicleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropoff_index: Option<usize>,
}

impl From<Action> for DumpAction {
    fn from(a: Action) -> Self {
        Self {
            request_id: a.request_id,
            vehicle_id: a.vehicle_id,
            pickup_index: Some(a.pickup_index),
            dropoff_index: Some(a.dropoff_index),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValue {
    Number(f64),
    Status(RequestStatus),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpNode {
    pub id: usize,
    pub parent: Option<usize>,
    #[serde(default)]
    pub entering_action: Option<DumpAction>,
    #[serde(default)]
    pub visits: u64,
    #[serde(default)]
    pub total_value: f64,
    #[serde(default)]
    pub labels: BTreeMap<Var, LabelValue>,
    #[serde(default)]
    pub not_applicable: BTreeSet<Var>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ConstraintViolation>,
}

impl DumpNode {
    pub fn to_labels(&self) -> Labels {
        let mut labels = Labels::default();
        for (&var, value) in &self.labels {
            match *value {
                LabelValue::Number(n) => {
                    labels.set(var, n);
                }
                LabelValue::Status(s) => labels = labels.with_status(s),
            }
        }
        for &var in &self.not_applicable {
            labels.mark_not_applicable(var);
        }
        labels
    }

    fn from_labels(labels: &Labels) -> (BTreeMap<Var, LabelValue>, BTreeSet<Var>) {
        let mut map: BTreeMap<Var, LabelValue> =
            labels.values.iter().map(|(&k, &v)| (k, LabelValue::Number(v))).collect();
        if let Some(status) = labels.status {
            map.insert(Var::RCs, LabelValue::Status(status));
        }
        (map, labels.not_applicable.clone())
    }
}

/// Serialisable snapshot of a search tree with one labelling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDump {
    pub nodes: Vec<DumpNode>,
    pub root: usize,
    pub iterations_run: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<LabelContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommended: Option<DumpAction>,
}

impl TreeDump {
    /// Pairs search statistics with `labeled` (same ids) when given.
    pub fn new(tree: &SearchTree, labeled: Option<&LabeledTree>, context: Option<LabelContext>) -> Self {
        let nodes = tree
            .nodes
            .iter()
            .map(|n| {
                let (labels, not_applicable) = labeled
                    .and_then(|t| t.nodes.get(n.id))
                    .map(|ln| DumpNode::from_labels(&ln.labels))
                    .unwrap_or_default();
                DumpNode {
                    id: n.id,
                    parent: n.parent,
                    entering_action: n.entering_action.map(DumpAction::from),
                    visits: n.visits,
                    total_value: n.total_value,
                    labels,
                    not_applicable,
                    violations: n.violations.clone(),
                }
            })
            .collect();
        Self {
            nodes,
            root: tree.root,
            iterations_run: tree.iterations_run,
            context,
            recommended: tree.recommendation().map(DumpAction::from),
        }
    }

    /// Rebuilds the labelled tree; children are ordered by id.
    pub fn to_labeled_tree(&self) -> Result<LabeledTree, TreeShapeError> {
        let mut nodes: Vec<LabeledNode> = self
            .nodes
            .iter()
            .map(|n| LabeledNode { id: n.id, parent: n.parent, children: Vec::new(), labels: n.to_labels() })
            .collect();
        for i in 0..self.nodes.len() {
            if let Some(p) = self.nodes[i].parent {
                let id = self.nodes[i].id;
                nodes.get_mut(p).ok_or(TreeShapeError::OutOfRange(p))?.children.push(id);
            }
        }
        for node in &mut nodes {
            node.children.sort_unstable();
        }
        let tree = LabeledTree { nodes, root: self.root, iterations_run: self.iterations_run };
        tree.validate()?;
        Ok(tree)
    }
}
