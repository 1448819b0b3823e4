use super::{Result, SearchTree};
use crate::ctl::{LabeledNode, LabeledTree, Labels, Var};
use crate::model::{
    route_travel_minutes, ModelConfig, ModelError, Request, RequestId, State, StopKind, TransitModel, Vehicle,
    VehicleId,
};
use serde::{Deserialize, Serialize};

/// Thresholds that appear as constants in formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelConstants {
    pub t_a: i64,
    /// Reasonable ride time for one passenger.
    pub v_rt: i64,
    /// Reasonable number of intermediate stops.
    pub theta_d: i64,
}

impl LabelConstants {
    pub const DEFAULT_THETA_D: i64 = 6;

    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self { t_a: cfg.t_a, v_rt: cfg.t_max, theta_d: Self::DEFAULT_THETA_D }
    }
}

/// Which request, vehicle and event the variables refer to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelContext {
    pub request_id: RequestId,
    /// When unset, whichever vehicle serves the request.
    pub vehicle_id: Option<VehicleId>,
    pub event: StopKind,
    pub constants: LabelConstants,
}

fn event_time(request: &Request, vehicle: Option<&Vehicle>, kind: StopKind) -> Option<i64> {
    let actual = match kind {
        StopKind::Pickup => request.actual_pickup,
        StopKind::Dropoff => request.actual_dropoff,
    };
    actual.or_else(|| {
        let v = vehicle?;
        v.stop_index(request.id, kind).map(|i| v.route[i].t_est)
    })
}

fn peak_load(vehicle: &Vehicle) -> i64 {
    let mut load = vehicle.occupancy as i64;
    let mut peak = load;
    for stop in &vehicle.route {
        load += if stop.kind == StopKind::Pickup { 1 } else { -1 };
        peak = peak.max(load);
    }
    peak
}

/// Variable valuation of one state under the context.
pub fn node_labels(state: &State, ctx: &LabelContext, model: &TransitModel) -> Result<Labels> {
    let mut labels = Labels::default()
        .with(Var::Time, state.time as f64)
        .with(Var::TA, ctx.constants.t_a as f64)
        .with(Var::VRT, ctx.constants.v_rt as f64)
        .with(Var::ThetaD, ctx.constants.theta_d as f64);

    let request = state.request(ctx.request_id);
    match request {
        Some(r) => {
            labels.set(Var::TP, r.pickup_time as f64);
            labels.set(Var::TD, r.dropoff_time as f64);
            labels = labels.with_status(r.status);
        }
        None => {
            for var in [Var::TP, Var::TD, Var::RCs] {
                labels.mark_not_applicable(var);
            }
        }
    }

    let vehicle_id = ctx.vehicle_id.or_else(|| request.and_then(|r| r.vehicle));
    let vehicle = vehicle_id.and_then(|id| state.vehicle(id));
    match vehicle {
        Some(v) => {
            labels.set(Var::VC, v.capacity as f64);
            labels.set(Var::VO, peak_load(v) as f64);
            match v.fuel {
                Some(fuel) => {
                    labels.set(Var::VFT, fuel);
                    labels.set(Var::VFR, route_travel_minutes(v.location, &v.route, model)? as f64);
                }
                None => {
                    labels.mark_not_applicable(Var::VFT);
                    labels.mark_not_applicable(Var::VFR);
                }
            }
        }
        None => {
            for var in [Var::VC, Var::VO, Var::VFT, Var::VFR] {
                labels.mark_not_applicable(var);
            }
        }
    }

    // Service variables exist only where this vehicle carries the request.
    let served = match (request, vehicle) {
        (Some(r), Some(v)) if r.vehicle == Some(v.id) => Some((r, v)),
        _ => None,
    };
    let t_est = served.and_then(|(r, v)| event_time(r, Some(v), ctx.event));
    let ride = served.and_then(|(r, v)| {
        Some(event_time(r, Some(v), StopKind::Dropoff)? - event_time(r, Some(v), StopKind::Pickup)?)
    });
    let stops_before = served.and_then(|(r, v)| {
        let end = v.stop_index(r.id, StopKind::Dropoff)?;
        Some(v.route[..end].iter().filter(|s| s.request_id != r.id).count())
    });
    for (var, value) in [
        (Var::TEst, t_est.map(|t| t as f64)),
        (Var::VTT, ride.map(|t| t as f64)),
        (Var::ThetaS, stops_before.map(|n| n as f64)),
    ] {
        match value {
            Some(value) => {
                labels.set(var, value);
            }
            None => {
                labels.mark_not_applicable(var);
            }
        }
    }
    Ok(labels)
}

/// Labels every node of the search tree for the query context.
pub fn export_labeled_tree(tree: &SearchTree, ctx: &LabelContext, model: &TransitModel) -> Result<LabeledTree> {
    let root_state = &tree.root_node().state;
    if root_state.request(ctx.request_id).is_none() {
        return Err(ModelError::InvalidInput(format!("unknown request id {}", ctx.request_id)).into());
    }
    if let Some(v) = ctx.vehicle_id {
        if root_state.vehicle(v).is_none() {
            return Err(ModelError::InvalidInput(format!("unknown vehicle id {v}")).into());
        }
    }
    let nodes = tree
        .nodes
        .iter()
        .map(|n| {
            Ok(LabeledNode {
                id: n.id,
                parent: n.parent,
                children: n.children.clone(),
                labels: node_labels(&n.state, ctx, model)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LabeledTree { nodes, root: tree.root, iterations_run: tree.iterations_run })
}
