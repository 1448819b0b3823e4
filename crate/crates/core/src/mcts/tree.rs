use super::{mix_seed, MctsError, Result, RolloutValue};
use crate::model::{
    apply_action_forced, best_insertion, feasible_actions, transition, Action, ConstraintViolation, ModelError, State,
    TransitModel, VehicleId,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub iterations: u64,
    pub exploration_c: f64,
    pub rollout_depth: u32,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { iterations: 150, exploration_c: std::f64::consts::SQRT_2, rollout_depth: 10, seed: 0 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(MctsError::InvalidParams("iterations must be at least 1".into()));
        }
        if !(self.exploration_c >= 0.0 && self.exploration_c.is_finite()) {
            return Err(MctsError::InvalidParams("exploration_c must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub entering_action: Option<Action>,
    pub state: State,
    pub visits: u64,
    pub total_value: f64,
    /// Service-rate part of `total_value`.
    pub total_service: f64,
    /// Punctuality part of `total_value`.
    pub total_punctuality: f64,
    pub children: Vec<usize>,
    pub expanded: bool,
    /// Hard-constraint violations of the entering action (forced nodes only).
    pub violations: Vec<ConstraintViolation>,
}

impl SearchNode {
    pub fn mean_value(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.total_value / self.visits as f64)
    }

    pub fn mean_service(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.total_service / self.visits as f64)
    }

    pub fn mean_punctuality(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.total_punctuality / self.visits as f64)
    }

    pub fn vehicle_id(&self) -> Option<VehicleId> {
        self.entering_action.map(|a| a.vehicle_id)
    }
}

/// Arena of search nodes; ids are creation order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    pub root: usize,
    pub iterations_run: u64,
    pub params: SearchParams,
    pub discount: f64,
}

impl SearchTree {
    pub fn new(state: State, params: SearchParams, discount: f64) -> Self {
        let root = SearchNode {
            id: 0,
            parent: None,
            entering_action: None,
            state,
            visits: 0,
            total_value: 0.0,
            total_service: 0.0,
            total_punctuality: 0.0,
            children: Vec::new(),
            expanded: false,
            violations: Vec::new(),
        };
        Self { nodes: vec![root], root: 0, iterations_run: 0, params, discount }
    }

    pub fn node(&self, id: usize) -> Result<&SearchNode> {
        self.nodes.get(id).ok_or(MctsError::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_node(&self) -> &SearchNode {
        &self.nodes[self.root]
    }

    /// Appends a child holding `state` and returns its id.
    pub fn add_child(&mut self, parent: usize, action: Action, state: State) -> Result<usize> {
        self.node(parent)?;
        let id = self.nodes.len();
        let mut node = SearchTree::new(state, self.params.clone(), self.discount).nodes.remove(0);
        node.id = id;
        node.parent = Some(parent);
        node.entering_action = Some(action);
        self.nodes.push(node);
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    /// The child reached by assigning to `vehicle`, if it exists.
    pub fn child_for_vehicle(&self, parent: usize, vehicle: VehicleId) -> Option<usize> {
        self.nodes.get(parent)?.children.iter().copied().find(|&c| self.nodes[c].vehicle_id() == Some(vehicle))
    }

    fn successor(
        &self,
        parent: usize,
        action: &Action,
        model: &TransitModel,
    ) -> Result<(State, Vec<ConstraintViolation>)> {
        let (assigned, violations) = apply_action_forced(&self.nodes[parent].state, action, model)?;
        let seed = mix_seed(self.params.seed, self.nodes.len() as u64);
        Ok((transition(&assigned, seed, model)?, violations))
    }

    /// Creates one child per feasible action of the node's state.
    pub(crate) fn expand(&mut self, id: usize, model: &TransitModel) -> Result<()> {
        let node = self.node(id)?;
        if node.expanded {
            return Ok(());
        }
        let actions = if node.state.terminal || node.state.outstanding.is_none() {
            Vec::new()
        } else {
            feasible_actions(&node.state, model)?
        };
        for action in actions {
            if self.child_for_vehicle(id, action.vehicle_id).is_some() {
                continue;
            }
            let (state, _) = self.successor(id, &action, model)?;
            self.add_child(id, action, state)?;
        }
        self.nodes[id].expanded = true;
        Ok(())
    }

    /// Returns the child for assigning the node's outstanding request to
    /// `vehicle`, creating it (feasible or not) when missing.
    pub fn ensure_child(&mut self, parent: usize, vehicle: VehicleId, model: &TransitModel) -> Result<usize> {
        if let Some(child) = self.child_for_vehicle(parent, vehicle) {
            return Ok(child);
        }
        let state = &self.node(parent)?.state;
        let request = state
            .outstanding
            .as_ref()
            .ok_or_else(|| ModelError::InvalidState(format!("node {parent} has no outstanding request")))?;
        let v =
            state.vehicle(vehicle).ok_or_else(|| ModelError::InvalidInput(format!("unknown vehicle id {vehicle}")))?;
        let action = best_insertion(v, request, state.time, model)?.action;
        let (next, violations) = self.successor(parent, &action, model)?;
        let id = self.add_child(parent, action, next)?;
        self.nodes[id].violations = violations;
        Ok(id)
    }

    /// UCT choice among the node's children. Unvisited children come first;
    /// ties go to the lowest id.
    pub fn select_child(&self, id: usize, exploration_c: f64) -> Result<usize> {
        let node = self.node(id)?;
        if node.children.is_empty() {
            return Err(MctsError::Leaf(id));
        }
        if let Some(&fresh) = node.children.iter().find(|&&c| self.nodes[c].visits == 0) {
            return Ok(fresh);
        }
        let ln_n = (node.visits.max(1) as f64).ln();
        let mut best = node.children[0];
        let mut best_score = f64::NEG_INFINITY;
        for &c in &node.children {
            let child = &self.nodes[c];
            let n = child.visits as f64;
            let score = child.total_value / n + exploration_c * (ln_n / n).sqrt();
            if score > best_score {
                best = c;
                best_score = score;
            }
        }
        Ok(best)
    }

    /// Credits `value` to `leaf` and its ancestors up to and including
    /// `stop`, discounted by distance from the leaf.
    pub fn backpropagate(&mut self, leaf: usize, value: RolloutValue, stop: usize) -> Result<()> {
        self.node(leaf)?;
        let mut current = Some(leaf);
        let mut weight = 1.0;
        while let Some(id) = current {
            let node = &mut self.nodes[id];
            node.visits += 1;
            node.total_value += weight * value.total;
            node.total_service += weight * value.service;
            node.total_punctuality += weight * value.punctuality;
            if id == stop {
                break;
            }
            weight *= self.discount;
            current = node.parent;
        }
        Ok(())
    }

    /// Root child with the most visits, then the higher mean, then the
    /// lowest vehicle id.
    pub fn recommended_child(&self) -> Option<usize> {
        let root = self.root_node();
        root.children.iter().copied().max_by(|&a, &b| {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            na.visits
                .cmp(&nb.visits)
                .then(
                    na.mean_value()
                        .unwrap_or(f64::NEG_INFINITY)
                        .total_cmp(&nb.mean_value().unwrap_or(f64::NEG_INFINITY)),
                )
                .then(nb.vehicle_id().cmp(&na.vehicle_id()))
        })
    }

    pub fn recommendation(&self) -> Option<Action> {
        self.recommended_child().and_then(|c| self.nodes[c].entering_action)
    }

    /// Ids of the subtree below `id`, parents before children.
    pub fn subtree_ids(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Verifies ids, parent/child agreement and reachability of every node.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id != pos {
                return Err(format!("node {} stored at {pos}", node.id));
            }
            for &c in &node.children {
                if self.nodes.get(c).and_then(|n| n.parent) != Some(pos) {
                    return Err(format!("child {c} does not point back to {pos}"));
                }
            }
            match node.parent {
                Some(p) if !self.nodes.get(p).is_some_and(|n| n.children.contains(&pos)) => {
                    return Err(format!("parent {p} does not list {pos}"));
                }
                None if pos != self.root => return Err(format!("node {pos} has no parent")),
                _ => {}
            }
            if node.parent.is_some() == node.entering_action.is_none() {
                return Err(format!("node {pos} entering action does not match its position"));
            }
        }
        let reached = self.subtree_ids(self.root);
        if reached.len() != self.nodes.len() {
            return Err("unreachable or shared nodes".into());
        }
        Ok(())
    }
}
