use super::routing::insert_request;
use super::{
    estimate_route_times, Action, ModelError, RequestId, Result, State, StopKind, TransitModel, Vehicle, VehicleId,
};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Capacity,
    EnRouteTime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub kind: ConstraintKind,
    pub vehicle_id: VehicleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<RequestId>,
    /// Passenger overflow for capacity, minutes over `T_max` for en-route time.
    pub degree: i64,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::Capacity => {
                write!(f, "vehicle {} over capacity by {}", self.vehicle_id, self.degree)
            }
            ConstraintKind::EnRouteTime => write!(
                f,
                "request {} on vehicle {} exceeds maximum en-route time by {} min",
                self.request_id.unwrap_or_default(),
                self.vehicle_id,
                self.degree
            ),
        }
    }
}

/// Checks the vehicle's planned route (with `t_est` already filled in)
/// against capacity and maximum en-route time.
pub fn audit_vehicle(vehicle: &Vehicle, state: &State, model: &TransitModel) -> Vec<ConstraintViolation> {
    let mut violations = Vec::new();

    let mut load = vehicle.occupancy as i64;
    let mut peak = load;
    for stop in &vehicle.route {
        match stop.kind {
            StopKind::Pickup => load += 1,
            StopKind::Dropoff => load -= 1,
        }
        peak = peak.max(load);
    }
    if peak > vehicle.capacity as i64 {
        violations.push(ConstraintViolation {
            kind: ConstraintKind::Capacity,
            vehicle_id: vehicle.id,
            request_id: None,
            degree: peak - vehicle.capacity as i64,
        });
    }

    for stop in vehicle.route.iter().filter(|s| s.kind == StopKind::Dropoff) {
        let picked_up = vehicle
            .route
            .iter()
            .find(|s| s.kind == StopKind::Pickup && s.request_id == stop.request_id)
            .map(|s| s.t_est)
            .or_else(|| state.request(stop.request_id).and_then(|r| r.actual_pickup));
        let Some(picked_up) = picked_up else { continue };
        let ride = stop.t_est - picked_up;
        if ride > model.config.t_max {
            violations.push(ConstraintViolation {
                kind: ConstraintKind::EnRouteTime,
                vehicle_id: vehicle.id,
                request_id: Some(stop.request_id),
                degree: ride - model.config.t_max,
            });
        }
    }
    violations
}

pub(crate) fn validate_action(state: &State, action: &Action) -> Result<()> {
    let request =
        state.outstanding.as_ref().ok_or_else(|| ModelError::InvalidState("no outstanding request".into()))?;
    if request.id != action.request_id {
        return Err(ModelError::InvalidInput(format!(
            "action references request {} but the outstanding request is {}",
            action.request_id, request.id
        )));
    }
    let vehicle = state
        .vehicle(action.vehicle_id)
        .ok_or_else(|| ModelError::InvalidInput(format!("unknown vehicle id {}", action.vehicle_id)))?;
    if action.pickup_index > action.dropoff_index || action.dropoff_index > vehicle.route.len() {
        return Err(ModelError::InvalidInput(format!(
            "insertion positions ({}, {}) out of bounds for a route of {} stops",
            action.pickup_index,
            action.dropoff_index,
            vehicle.route.len()
        )));
    }
    Ok(())
}

/// The vehicle as it would look after the action, with re-estimated times.
pub(crate) fn vehicle_after(state: &State, action: &Action, model: &TransitModel) -> Result<Vehicle> {
    validate_action(state, action)?;
    let request = state.outstanding.as_ref().expect("validated");
    let mut vehicle = state.vehicle(action.vehicle_id).expect("validated").clone();
    insert_request(&mut vehicle.route, action, request);
    vehicle.route = estimate_route_times(&vehicle, state.time, model)?;
    Ok(vehicle)
}

/// Simulates the post-insertion route and reports every hard-constraint
/// violation; an empty list means the action is feasible.
pub fn check_hard_constraints(
    state: &State,
    action: &Action,
    model: &TransitModel,
) -> Result<Vec<ConstraintViolation>> {
    let vehicle = vehicle_after(state, action, model)?;
    Ok(audit_vehicle(&vehicle, state, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, Network, Request, RouteStop};

    fn model() -> TransitModel {
        let net = Network::grid(&[(1, 0.0, 0.0), (2, 10.0, 0.0), (3, 20.0, 0.0), (4, 60.0, 0.0)]).unwrap();
        TransitModel::new(net, ModelConfig::default())
    }

    fn loaded_vehicle(capacity: u32, onboard: u32) -> (State, Vehicle) {
        let mut state = State::new(0, vec![]);
        let mut v = Vehicle::new(1, capacity, 1);
        v.occupancy = onboard;
        for k in 0..onboard {
            let id = 100 + k;
            let mut r = Request::new(id, 0, 0, 60, 1, 3);
            r.status = crate::model::RequestStatus::InTransit;
            r.actual_pickup = Some(0);
            state.requests.insert(id, r);
            v.assigned.push(id);
            v.route.push(RouteStop::new(3, id, StopKind::Dropoff));
        }
        v.route = estimate_route_times(&v, 0, &model()).unwrap();
        state.vehicles.push(v.clone());
        (state, v)
    }

    fn with_request(mut state: State, request: Request) -> State {
        state.set_outstanding(request);
        state
    }

    #[test]
    fn capacity_boundary_is_feasible() {
        let (state, _) = loaded_vehicle(8, 7);
        let state = with_request(state, Request::new(1, 0, 5, 60, 1, 2));
        let action = Action { request_id: 1, vehicle_id: 1, pickup_index: 0, dropoff_index: 0 };
        let v = check_hard_constraints(&state, &action, &model()).unwrap();
        assert!(v.iter().all(|v| v.kind != ConstraintKind::Capacity));
    }

    #[test]
    fn capacity_overflow_degree() {
        // Four on board, capacity four; two more pickups before any drop-off
        // peaks the sweep at six.
        let (mut state, mut v) = loaded_vehicle(4, 4);
        let mut other = Request::new(50, 0, 5, 60, 1, 2);
        other.status = crate::model::RequestStatus::Assigned;
        state.requests.insert(50, other);
        v.route.insert(0, RouteStop::new(1, 50, StopKind::Pickup));
        v.route.insert(1, RouteStop::new(2, 50, StopKind::Dropoff));
        v.assigned.push(50);
        v.route = estimate_route_times(&v, 0, &model()).unwrap();
        state.vehicles = vec![v];
        let state = with_request(state, Request::new(1, 0, 5, 60, 1, 2));
        let action = Action { request_id: 1, vehicle_id: 1, pickup_index: 0, dropoff_index: 1 };
        let violations = check_hard_constraints(&state, &action, &model()).unwrap();
        let cap: Vec<_> = violations.iter().filter(|v| v.kind == ConstraintKind::Capacity).collect();
        assert_eq!(cap.len(), 1);
        assert_eq!(cap[0].degree, 2);
    }

    #[test]
    fn en_route_time_degree() {
        // Pickup at location 2 (t=10), drop-off at 4 via a 42-minute detour to
        // location 3 and back: ride = 62 - 10 = 52 minutes against T_max = 45.
        let net = Network::grid(&[(1, 0.0, 0.0), (2, 10.0, 0.0), (3, 31.0, 0.0), (4, 10.0, 10.0)]).unwrap();
        let model = TransitModel::new(net, ModelConfig::default());
        let mut state = State::new(0, vec![]);
        let mut v = Vehicle::new(1, 4, 1);
        v.occupancy = 1;
        let mut other = Request::new(50, 0, 0, 90, 1, 3);
        other.status = crate::model::RequestStatus::InTransit;
        other.actual_pickup = Some(0);
        state.requests.insert(50, other);
        v.assigned.push(50);
        v.route = vec![RouteStop::new(3, 50, StopKind::Dropoff)];
        state.vehicles = vec![v];
        let state = with_request(state, Request::new(1, 0, 5, 90, 2, 4));
        // pickup before the detour, drop-off after it
        let action = Action { request_id: 1, vehicle_id: 1, pickup_index: 0, dropoff_index: 1 };
        let violations = check_hard_constraints(&state, &action, &model).unwrap();
        assert_eq!(
            violations,
            vec![ConstraintViolation {
                kind: ConstraintKind::EnRouteTime,
                vehicle_id: 1,
                request_id: Some(1),
                degree: 7
            }]
        );
    }

    #[test]
    fn dangling_ids() {
        let (state, _) = loaded_vehicle(4, 0);
        let state = with_request(state, Request::new(1, 0, 5, 60, 1, 2));
        let bad_vehicle = Action { request_id: 1, vehicle_id: 9, pickup_index: 0, dropoff_index: 0 };
        assert!(matches!(check_hard_constraints(&state, &bad_vehicle, &model()), Err(ModelError::InvalidInput(_))));
        let bad_request = Action { request_id: 2, vehicle_id: 1, pickup_index: 0, dropoff_index: 0 };
        assert!(matches!(check_hard_constraints(&state, &bad_request, &model()), Err(ModelError::InvalidInput(_))));
    }
}
