use super::{apply_action_forced, Action, RequestStatus, Result, State, StopKind, TransitModel};
use serde::{Deserialize, Serialize};

/// Weighted terms of the reward for one state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// `gamma1 * (N_t + N_d) / |assigned|`
    pub service: f64,
    /// `gamma2 * sum(t_p - pickup)`
    pub pickup_punctuality: f64,
    /// `gamma3 * sum(t_d - dropoff)`
    pub dropoff_punctuality: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.service + self.pickup_punctuality + self.dropoff_punctuality
    }

    pub fn punctuality(&self) -> f64 {
        self.pickup_punctuality + self.dropoff_punctuality
    }
}

/// Evaluates the reward terms over a state. Timing terms cover every
/// assigned request, using actual pickup/drop-off times once realised and
/// the route's estimates before that. Late service counts negatively.
pub fn state_reward(state: &State, model: &TransitModel) -> RewardBreakdown {
    let cfg = &model.config;
    let assigned = state.total_assigned();
    if assigned == 0 {
        return RewardBreakdown::default();
    }
    let served = state
        .requests
        .values()
        .filter(|r| matches!(r.status, RequestStatus::InTransit | RequestStatus::DroppedOff))
        .count();

    let estimate = |request_id, kind| {
        state
            .vehicles
            .iter()
            .flat_map(|v| v.route.iter())
            .find(|s| s.request_id == request_id && s.kind == kind)
            .map(|s| s.t_est)
    };
    let mut pickup_sum = 0i64;
    let mut dropoff_sum = 0i64;
    for request in state.requests.values() {
        if let Some(at) = request.actual_pickup.or_else(|| estimate(request.id, StopKind::Pickup)) {
            pickup_sum += request.pickup_time - at;
        }
        if let Some(at) = request.actual_dropoff.or_else(|| estimate(request.id, StopKind::Dropoff)) {
            dropoff_sum += request.dropoff_time - at;
        }
    }
    RewardBreakdown {
        service: cfg.gamma1 * served as f64 / assigned as f64,
        pickup_punctuality: cfg.gamma2 * pickup_sum as f64,
        dropoff_punctuality: cfg.gamma3 * dropoff_sum as f64,
    }
}

/// Reward of taking `action` in `state`: the reward terms evaluated over the
/// post-action state.
pub fn reward(state: &State, action: &Action, model: &TransitModel) -> Result<f64> {
    let (next, _) = apply_action_forced(state, action, model)?;
    Ok(state_reward(&next, model).total())
}
