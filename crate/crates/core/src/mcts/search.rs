use super::{mix_seed, LeafEvaluator, MctsError, RandomRollout, Result, SearchParams, SearchTree};
use crate::model::{candidate_actions, Action, ConstraintViolation, ModelError, State, TransitModel, VehicleId};
use serde::Serialize;

/// Per-vehicle hard-constraint violations of an epoch without feasible actions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Infeasibility {
    pub request_id: u32,
    pub violations: Vec<(VehicleId, Vec<ConstraintViolation>)>,
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub action: Action,
    pub tree: SearchTree,
    /// Best insertion of every vehicle with its violations, by vehicle id.
    pub candidates: Vec<(Action, Vec<ConstraintViolation>)>,
}

pub fn plan(state: &State, params: &SearchParams, model: &TransitModel) -> Result<PlanOutcome> {
    plan_with(state, params, model, &mut RandomRollout { depth: params.rollout_depth })
}

/// Runs `params.iterations` UCT iterations from `state`. Infeasible
/// assignments never enter the tree.
pub fn plan_with(
    state: &State,
    params: &SearchParams,
    model: &TransitModel,
    evaluator: &mut dyn LeafEvaluator,
) -> Result<PlanOutcome> {
    params.validate()?;
    let request = state
        .outstanding
        .as_ref()
        .ok_or_else(|| ModelError::InvalidState("no outstanding request to plan for".into()))?;
    let candidates = candidate_actions(state, model)?;
    if candidates.iter().all(|(_, v)| !v.is_empty()) {
        return Err(MctsError::Infeasible {
            request_id: request.id,
            violations: candidates.into_iter().map(|(a, v)| (a.vehicle_id, v)).collect(),
        });
    }
    let mut tree = SearchTree::new(state.clone(), params.clone(), model.config.discount);
    tree.expand(tree.root, model)?;
    let root = tree.root;
    tree.run(root, params.iterations, params.seed, model, evaluator)?;
    let action = tree.recommendation().expect("root has at least one feasible child");
    Ok(PlanOutcome { action, tree, candidates })
}

impl SearchTree {
    fn iterate(
        &mut self,
        top: usize,
        seed: u64,
        model: &TransitModel,
        evaluator: &mut dyn LeafEvaluator,
    ) -> Result<()> {
        let c = self.params.exploration_c;
        let mut node = top;
        loop {
            if node != top && self.nodes[node].visits == 0 {
                break;
            }
            self.expand(node, model)?;
            if self.nodes[node].children.is_empty() {
                break;
            }
            node = self.select_child(node, c)?;
        }
        let value = evaluator.evaluate(&self.nodes[node].state, seed, model)?;
        self.backpropagate(node, value, top)
    }

    fn run(
        &mut self,
        top: usize,
        budget: u64,
        seed: u64,
        model: &TransitModel,
        evaluator: &mut dyn LeafEvaluator,
    ) -> Result<()> {
        for _ in 0..budget {
            let iteration_seed = mix_seed(seed, self.iterations_run);
            self.iterate(top, iteration_seed, model, evaluator)?;
            self.iterations_run += 1;
        }
        Ok(())
    }

    /// Runs `budget` further iterations rooted at `queried`; statistics of
    /// nodes outside its subtree are left untouched. Returns the number of
    /// new simulated scenarios.
    pub fn expand_alternative(&mut self, queried: usize, budget: u64, seed: u64, model: &TransitModel) -> Result<u64> {
        let depth = self.params.rollout_depth;
        self.expand_alternative_with(queried, budget, seed, model, &mut RandomRollout { depth })
    }

    pub fn expand_alternative_with(
        &mut self,
        queried: usize,
        budget: u64,
        seed: u64,
        model: &TransitModel,
        evaluator: &mut dyn LeafEvaluator,
    ) -> Result<u64> {
        self.node(queried)?;
        self.run(queried, budget, seed, model, evaluator)?;
        Ok(budget)
    }
}
