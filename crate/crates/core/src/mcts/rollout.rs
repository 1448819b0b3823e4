use super::Result;
use crate::model::{apply_action, feasible_actions, state_reward, transition, State, TransitModel};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Discounted return of one simulation, split into its reward parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutValue {
    pub total: f64,
    pub service: f64,
    pub punctuality: f64,
}

impl RolloutValue {
    pub fn scaled(self, factor: f64) -> Self {
        Self { total: self.total * factor, service: self.service * factor, punctuality: self.punctuality * factor }
    }
}

/// Estimates the value of a newly reached node.
pub trait LeafEvaluator {
    fn evaluate(&mut self, state: &State, seed: u64, model: &TransitModel) -> Result<RolloutValue>;
}

/// Uniformly random feasible assignments for a fixed number of epochs.
#[derive(Clone, Copy, Debug)]
pub struct RandomRollout {
    pub depth: u32,
}

impl LeafEvaluator for RandomRollout {
    fn evaluate(&mut self, state: &State, seed: u64, model: &TransitModel) -> Result<RolloutValue> {
        rollout(state, self.depth, seed, model)
    }
}

/// Sums `discount^k * reward(s_k)` over `depth` simulated epochs, where
/// `s_0` is `state`. Each epoch assigns the outstanding request to a
/// uniformly chosen feasible vehicle (dropping it if there is none) and then
/// samples the next arrival. Stops early at a terminal state.
pub fn rollout(state: &State, depth: u32, seed: u64, model: &TransitModel) -> Result<RolloutValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let discount = model.config.discount;
    let mut current = state.clone();
    let mut acc = RolloutValue::default();
    let mut weight = 1.0;
    let mut credit = |s: &State, weight: f64| {
        let r = state_reward(s, model);
        acc.total += weight * r.total();
        acc.service += weight * r.service;
        acc.punctuality += weight * r.punctuality();
    };
    credit(&current, weight);
    for _ in 0..depth {
        if current.terminal {
            break;
        }
        if current.outstanding.is_some() {
            let actions = feasible_actions(&current, model)?;
            if actions.is_empty() {
                current.outstanding = None;
            } else {
                let pick = actions[rng.random_range(0..actions.len())];
                current = apply_action(&current, &pick, model)?;
            }
        }
        current = transition(&current, rng.next_u64(), model)?;
        weight *= discount;
        credit(&current, weight);
    }
    Ok(acc)
}
