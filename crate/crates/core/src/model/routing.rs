use itertools::Itertools;

use super::{
    check_hard_constraints, Action, ConstraintViolation, LocationId, Minutes, ModelError, Request, Result, RouteStop,
    State, TransitModel, Vehicle,
};

/// Recomputes `t_est` for every stop: the vehicle drives the legs back to
/// back from its location, starting at `max(now, available_at)`, with no
/// dwell time at stops.
pub fn estimate_route_times(vehicle: &Vehicle, now: Minutes, model: &TransitModel) -> Result<Vec<RouteStop>> {
    let mut clock = vehicle.departure(now);
    let mut here = vehicle.location;
    let mut route = vehicle.route.clone();
    for stop in &mut route {
        clock += model.travel_time(here, stop.location)?;
        stop.t_est = clock;
        here = stop.location;
    }
    Ok(route)
}

/// Total driving minutes from `origin` through every stop in order.
pub fn route_travel_minutes(origin: LocationId, stops: &[RouteStop], model: &TransitModel) -> Result<Minutes> {
    let mut here = origin;
    let mut total = 0;
    for stop in stops {
        total += model.travel_time(here, stop.location)?;
        here = stop.location;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Insertion {
    pub action: Action,
    /// Driving minutes the insertion adds to the vehicle's route.
    pub added_minutes: Minutes,
}

/// Cheapest position pair for the request's pickup and drop-off in the
/// vehicle's route, by added driving time. Ties go to the lexicographically
/// smallest `(pickup_index, dropoff_index)`.
pub fn best_insertion(vehicle: &Vehicle, request: &Request, _now: Minutes, model: &TransitModel) -> Result<Insertion> {
    let stops: Vec<LocationId> = vehicle.route.iter().map(|s| s.location).collect();
    let n = stops.len();
    let (p, d) = (request.pickup, request.dropoff);
    let tt = |a: LocationId, b: LocationId| model.travel_time(a, b);
    let before = |k: usize| if k == 0 { vehicle.location } else { stops[k - 1] };

    let mut best: Option<(Minutes, usize, usize)> = None;
    for pair in (0..=n).combinations_with_replacement(2) {
        let (i, j) = (pair[0], pair[1]);
        let added = if i == j {
            let detour = tt(before(i), p)? + tt(p, d)?;
            match stops.get(i) {
                Some(&next) => detour + tt(d, next)? - tt(before(i), next)?,
                None => detour,
            }
        } else {
            let next = stops[i];
            let pickup = tt(before(i), p)? + tt(p, next)? - tt(before(i), next)?;
            let last = stops[j - 1];
            let dropoff = match stops.get(j) {
                Some(&after) => tt(last, d)? + tt(d, after)? - tt(last, after)?,
                None => tt(last, d)?,
            };
            pickup + dropoff
        };
        if best.is_none_or(|(cost, _, _)| added < cost) {
            best = Some((added, i, j));
        }
    }
    let (added_minutes, pickup_index, dropoff_index) = best.expect("at least one insertion pair");
    Ok(Insertion {
        action: Action { request_id: request.id, vehicle_id: vehicle.id, pickup_index, dropoff_index },
        added_minutes,
    })
}

/// Every vehicle's best insertion for the outstanding request together with
/// the hard-constraint violations it would cause, ordered by vehicle id.
pub fn candidate_actions(state: &State, model: &TransitModel) -> Result<Vec<(Action, Vec<ConstraintViolation>)>> {
    let request =
        state.outstanding.as_ref().ok_or_else(|| ModelError::InvalidState("no outstanding request".into()))?;
    state
        .vehicles
        .iter()
        .map(|vehicle| {
            let insertion = best_insertion(vehicle, request, state.time, model)?;
            let violations = check_hard_constraints(state, &insertion.action, model)?;
            Ok((insertion.action, violations))
        })
        .collect()
}

/// At most one action per vehicle (its best insertion), keeping only those
/// that satisfy every hard constraint.
pub fn feasible_actions(state: &State, model: &TransitModel) -> Result<Vec<Action>> {
    Ok(candidate_actions(state, model)?
        .into_iter()
        .filter(|(_, violations)| violations.is_empty())
        .map(|(action, _)| action)
        .collect())
}

/// Inserts pickup and drop-off stops at the action's positions.
pub(crate) fn insert_request(route: &mut Vec<RouteStop>, action: &Action, request: &Request) {
    use super::StopKind;
    route.insert(action.dropoff_index, RouteStop::new(request.dropoff, request.id, StopKind::Dropoff));
    route.insert(action.pickup_index, RouteStop::new(request.pickup, request.id, StopKind::Pickup));
}
