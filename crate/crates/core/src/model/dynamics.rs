use super::constraints::vehicle_after;
use super::{
    audit_vehicle, round_minutes, Action, ConstraintViolation, Minutes, ModelError, Request, RequestStatus, Result,
    State, StopKind, TransitModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Applies an action regardless of feasibility and returns the violations it
/// causes alongside the successor state.
pub fn apply_action_forced(
    state: &State,
    action: &Action,
    model: &TransitModel,
) -> Result<(State, Vec<ConstraintViolation>)> {
    let vehicle = vehicle_after(state, action, model)?;
    let violations = audit_vehicle(&vehicle, state, model);

    let mut next = state.clone();
    let mut request = next.outstanding.take().expect("validated by vehicle_after");
    request.status = RequestStatus::Assigned;
    request.vehicle = Some(vehicle.id);
    let slot = next.vehicle_mut(vehicle.id).expect("validated by vehicle_after");
    *slot = vehicle;
    slot.assigned.push(request.id);
    next.requests.insert(request.id, request);
    Ok((next, violations))
}

/// Assigns the outstanding request; infeasible actions are rejected with the
/// violations they would cause.
pub fn apply_action(state: &State, action: &Action, model: &TransitModel) -> Result<State> {
    let (next, violations) = apply_action_forced(state, action, model)?;
    if violations.is_empty() {
        Ok(next)
    } else {
        Err(ModelError::Constraint(violations))
    }
}

/// Plays every route forward to `until`: stops whose estimated time has been
/// reached are served and their actual times recorded. A vehicle that is
/// driving towards its next stop at `until` is committed to that stop.
pub fn advance(state: &State, until: Minutes, model: &TransitModel) -> Result<State> {
    let until = until.max(state.time);
    let mut next = state.clone();
    next.time = until;
    for vehicle in &mut next.vehicles {
        let reached = vehicle.route.iter().take_while(|s| s.t_est <= until).count();
        for stop in vehicle.route.drain(..reached) {
            let leg = model.travel_time(vehicle.location, stop.location)?;
            if let Some(fuel) = vehicle.fuel.as_mut() {
                *fuel -= leg as f64;
            }
            vehicle.location = stop.location;
            vehicle.available_at = stop.t_est;
            let request = next.requests.get_mut(&stop.request_id).ok_or_else(|| {
                ModelError::InvalidState(format!("route references unknown request {}", stop.request_id))
            })?;
            match stop.kind {
                StopKind::Pickup => {
                    request.status = RequestStatus::InTransit;
                    request.actual_pickup = Some(stop.t_est);
                    vehicle.occupancy += 1;
                }
                StopKind::Dropoff => {
                    request.status = RequestStatus::DroppedOff;
                    request.actual_dropoff = Some(stop.t_est);
                    vehicle.occupancy = vehicle.occupancy.saturating_sub(1);
                    vehicle.assigned.retain(|&id| id != stop.request_id);
                }
            }
        }
        if let Some(first) = vehicle.route.first() {
            let leg = model.travel_time(vehicle.location, first.location)?;
            let departed = first.t_est - leg;
            if departed < until {
                if let Some(fuel) = vehicle.fuel.as_mut() {
                    *fuel -= leg as f64;
                }
                vehicle.location = first.location;
                vehicle.available_at = first.t_est;
            }
        }
    }
    Ok(next)
}

/// Samples the next decision epoch: an exponential inter-arrival gap, route
/// playback up to the arrival, and a new request with uniformly drawn
/// locations. Crossing the horizon yields a terminal state instead.
pub fn transition(state: &State, seed: u64, model: &TransitModel) -> Result<State> {
    if state.terminal {
        return Ok(state.clone());
    }
    if state.outstanding.is_some() {
        return Err(ModelError::InvalidState("outstanding request must be resolved before transition".into()));
    }
    let cfg = &model.config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(cfg.arrival_rate / 60.0)
        .map_err(|e| ModelError::InvalidInput(format!("arrival rate: {e}")))?
        .sample(&mut rng);
    let arrival = state.time + round_minutes(gap).max(1);
    if arrival > cfg.horizon {
        let mut next = advance(state, cfg.horizon, model)?;
        next.terminal = true;
        return Ok(next);
    }

    let mut next = advance(state, arrival, model)?;
    let ids: Vec<_> = model.network.ids().collect();
    if ids.is_empty() {
        return Err(ModelError::InvalidInput("network has no locations".into()));
    }
    let pickup = ids[rng.random_range(0..ids.len())];
    let dropoff = if ids.len() > 1 {
        let others: Vec<_> = ids.iter().copied().filter(|&id| id != pickup).collect();
        others[rng.random_range(0..others.len())]
    } else {
        pickup
    };
    let pickup_time = arrival + rng.random_range(5..=30);
    let slack = rng.random_range(0..=cfg.t_a);
    let dropoff_time = pickup_time + model.travel_time(pickup, dropoff)? + slack;
    let request = Request::new(next.next_request_id, arrival, pickup_time, dropoff_time, pickup, dropoff);
    next.set_outstanding(request);
    Ok(next)
}
