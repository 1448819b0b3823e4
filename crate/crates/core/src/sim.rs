//! Headless episodes that accept every recommendation.

use crate::mcts::TreeDump;
use crate::model::{apply_action_forced, Action, ConstraintViolation, Minutes, RequestId, RequestStatus, VehicleId};
use crate::scenario::Scenario;
use crate::session::{ApplyOptions, PlanOptions, Session, SessionError, SessionStatus};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub time: Minutes,
    pub request_id: RequestId,
    pub recommended: Option<VehicleId>,
    pub applied: Option<Action>,
    pub infeasible: bool,
    /// Per-vehicle violations when no vehicle could take the request.
    pub infeasible_violations: Vec<(VehicleId, Vec<ConstraintViolation>)>,
    pub iterations_run: u64,
    pub node_count: usize,
    /// Hard-constraint audit of the applied action, recomputed on the
    /// pre-apply state.
    pub violations: Vec<ConstraintViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub epochs_run: u64,
    pub infeasible_epochs: u64,
    pub requests_assigned: usize,
    pub requests_skipped: usize,
    /// Assigned requests picked up or dropped off by the final time.
    pub requests_served: usize,
    pub service_rate: f64,
    /// Mean absolute gap between realised and requested times, in minutes.
    pub mean_pickup_deviation: Option<f64>,
    pub mean_dropoff_deviation: Option<f64>,
    pub final_time: Minutes,
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Simulation {
    pub records: Vec<EpochRecord>,
    /// Tree of every planned epoch that had a feasible action.
    pub dumps: Vec<(u64, TreeDump)>,
    pub metrics: Metrics,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Plays up to `epochs` epochs. `seed`, when given, replaces the scenario seed.
pub fn simulate(scenario: &Scenario, epochs: u64, seed: Option<u64>) -> Result<Simulation, SessionError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let mut session = Session::new(scenario)?;
    let mut records = Vec::new();
    let mut dumps = Vec::new();
    while records.len() < epochs as usize && session.status() == SessionStatus::AwaitingPlan {
        let epoch = session.epoch();
        let time = session.state().time;
        let report = session.plan(PlanOptions::default())?;
        let violations = match report.recommendation {
            Some(action) => {
                dumps.push((epoch, session.tree_dump()?));
                apply_action_forced(session.state(), &action, session.model())?.1
            }
            None => Vec::new(),
        };
        let applied = session.apply(ApplyOptions::default())?;
        records.push(EpochRecord {
            epoch,
            time,
            request_id: report.request_id,
            recommended: report.recommended_vehicle,
            applied: applied.applied,
            infeasible: report.infeasibility.is_some(),
            infeasible_violations: report.infeasibility.map(|i| i.violations).unwrap_or_default(),
            iterations_run: report.iterations_run,
            node_count: report.node_count,
            violations,
        });
    }

    let state = session.state();
    let assigned: Vec<_> = state.requests.values().collect();
    let served =
        assigned.iter().filter(|r| matches!(r.status, RequestStatus::InTransit | RequestStatus::DroppedOff)).count();
    let pickup: Vec<f64> =
        assigned.iter().filter_map(|r| r.actual_pickup.map(|t| (t - r.pickup_time).abs() as f64)).collect();
    let dropoff: Vec<f64> =
        assigned.iter().filter_map(|r| r.actual_dropoff.map(|t| (t - r.dropoff_time).abs() as f64)).collect();
    let metrics = Metrics {
        epochs_run: records.len() as u64,
        infeasible_epochs: records.iter().filter(|r| r.infeasible).count() as u64,
        requests_assigned: assigned.len(),
        requests_skipped: session.skipped().len(),
        requests_served: served,
        service_rate: if assigned.is_empty() { 0.0 } else { served as f64 / assigned.len() as f64 },
        mean_pickup_deviation: mean(&pickup),
        mean_dropoff_deviation: mean(&dropoff),
        final_time: state.time,
        terminal: session.status() == SessionStatus::Terminal,
    };
    Ok(Simulation { records, dumps, metrics })
}
