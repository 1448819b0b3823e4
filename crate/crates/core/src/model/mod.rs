//! The paratransit decision process: requests, vehicles, insertion actions,
//! hard constraints, the stochastic transition and the reward.

mod constraints;
mod dynamics;
mod network;
mod reward;
mod routing;

pub use constraints::{audit_vehicle, check_hard_constraints, ConstraintKind, ConstraintViolation};
pub use dynamics::{advance, apply_action, apply_action_forced, transition};
pub use network::{Location, Network, TravelEntry};
pub use reward::{reward, state_reward, RewardBreakdown};
pub use routing::{
    best_insertion, candidate_actions, estimate_route_times, feasible_actions, route_travel_minutes, Insertion,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Integer minutes since scenario start.
pub type Minutes = i64;
pub type LocationId = u32;
pub type RequestId = u32;
pub type VehicleId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("action violates hard constraints: {}", describe(.0))]
    Constraint(Vec<ConstraintViolation>),
}

fn describe(violations: &[ConstraintViolation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Rounds half-up to whole minutes.
pub fn round_minutes(value: f64) -> Minutes {
    (value + 0.5).floor() as Minutes
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestStatus {
    Waiting,
    Assigned,
    InTransit,
    DroppedOff,
}

impl RequestStatus {
    pub const ALL: [RequestStatus; 4] =
        [RequestStatus::Waiting, RequestStatus::Assigned, RequestStatus::InTransit, RequestStatus::DroppedOff];

    pub fn as_str(self) -> &'static str {
        match self {
            RequestStatus::Waiting => "waiting",
            RequestStatus::Assigned => "assigned",
            RequestStatus::InTransit => "in-transit",
            RequestStatus::DroppedOff => "dropped-off",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.as_str() == text)
    }
}

impl fmt::Display for RequestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    /// Time the request was made.
    #[serde(rename = "t_r")]
    pub requested_at: Minutes,
    /// Requested pickup time.
    #[serde(rename = "t_p")]
    pub pickup_time: Minutes,
    /// Requested drop-off time.
    #[serde(rename = "t_d")]
    pub dropoff_time: Minutes,
    #[serde(rename = "l_p")]
    pub pickup: LocationId,
    #[serde(rename = "l_d")]
    pub dropoff: LocationId,
    #[serde(default = "waiting")]
    pub status: RequestStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual_pickup: Option<Minutes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual_dropoff: Option<Minutes>,
    /// Vehicle the request was assigned to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleId>,
}

fn waiting() -> RequestStatus {
    RequestStatus::Waiting
}

impl Request {
    pub fn new(
        id: RequestId,
        requested_at: Minutes,
        pickup_time: Minutes,
        dropoff_time: Minutes,
        pickup: LocationId,
        dropoff: LocationId,
    ) -> Self {
        Self {
            id,
            requested_at,
            pickup_time,
            dropoff_time,
            pickup,
            dropoff,
            status: RequestStatus::Waiting,
            actual_pickup: None,
            actual_dropoff: None,
            vehicle: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.requested_at <= self.pickup_time && self.pickup_time <= self.dropoff_time) {
            return Err(ModelError::InvalidInput(format!(
                "request {}: expected t_r <= t_p <= t_d, got {} / {} / {}",
                self.id, self.requested_at, self.pickup_time, self.dropoff_time
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteStop {
    pub location: LocationId,
    pub request_id: RequestId,
    pub kind: StopKind,
    pub t_est: Minutes,
}

impl RouteStop {
    pub fn new(location: LocationId, request_id: RequestId, kind: StopKind) -> Self {
        Self { location, request_id, kind, t_est: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub capacity: u32,
    /// Passengers currently on board.
    pub occupancy: u32,
    /// Where the vehicle is, or the stop it is committed to reach next.
    pub location: LocationId,
    /// Time at which the vehicle is at `location`.
    pub available_at: Minutes,
    pub route: Vec<RouteStop>,
    pub assigned: Vec<RequestId>,
    /// Remaining driving range in minutes, when fuel is modelled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<f64>,
}

impl Vehicle {
    pub fn new(id: VehicleId, capacity: u32, location: LocationId) -> Self {
        Self {
            id,
            name: None,
            capacity,
            occupancy: 0,
            location,
            available_at: 0,
            route: Vec::new(),
            assigned: Vec::new(),
            fuel: None,
        }
    }

    /// Time from which the first leg of the route is driven.
    pub fn departure(&self, now: Minutes) -> Minutes {
        now.max(self.available_at)
    }

    pub fn stop_index(&self, request_id: RequestId, kind: StopKind) -> Option<usize> {
        self.route.iter().position(|s| s.request_id == request_id && s.kind == kind)
    }

    pub fn label(&self) -> String {
        match &self.name {
            Some(name) => name.clone(),
            None => format!("vehicle {}", self.id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Maximum en-route (ride) time.
    #[serde(rename = "T_max", default = "defaults::t_max")]
    pub t_max: Minutes,
    /// Allowed window around requested times.
    #[serde(rename = "t_a", default = "defaults::t_a")]
    pub t_a: Minutes,
    #[serde(default = "defaults::minutes_per_unit")]
    pub minutes_per_unit: f64,
    #[serde(default = "defaults::gamma1")]
    pub gamma1: f64,
    #[serde(default = "defaults::gamma2")]
    pub gamma2: f64,
    #[serde(default = "defaults::gamma3")]
    pub gamma3: f64,
    #[serde(default = "defaults::discount")]
    pub discount: f64,
    /// Expected requests per hour.
    #[serde(default = "defaults::arrival_rate")]
    pub arrival_rate: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: Minutes,
}

mod defaults {
    use super::Minutes;
    pub fn t_max() -> Minutes {
        45
    }
    pub fn t_a() -> Minutes {
        10
    }
    pub fn minutes_per_unit() -> f64 {
        1.0
    }
    pub fn gamma1() -> f64 {
        1.0
    }
    pub fn gamma2() -> f64 {
        0.1
    }
    pub fn gamma3() -> f64 {
        0.1
    }
    pub fn discount() -> f64 {
        0.95
    }
    pub fn arrival_rate() -> f64 {
        6.0
    }
    pub fn horizon() -> Minutes {
        480
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            t_max: defaults::t_max(),
            t_a: defaults::t_a(),
            minutes_per_unit: defaults::minutes_per_unit(),
            gamma1: defaults::gamma1(),
            gamma2: defaults::gamma2(),
            gamma3: defaults::gamma3(),
            discount: defaults::discount(),
            arrival_rate: defaults::arrival_rate(),
            horizon: defaults::horizon(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("T_max", self.t_max as f64),
            ("t_a", self.t_a as f64),
            ("minutes_per_unit", self.minutes_per_unit),
            ("discount", self.discount),
            ("arrival_rate", self.arrival_rate),
            ("horizon", self.horizon as f64),
        ];
        for (name, value) in positive {
            if value.is_nan() || value <= 0.0 || !value.is_finite() {
                return Err(ModelError::InvalidInput(format!("config.{name} must be positive")));
            }
        }
        for (name, value) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma3", self.gamma3)] {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidInput(format!("config.{name} must be non-negative")));
            }
        }
        if self.discount > 1.0 {
            return Err(ModelError::InvalidInput("config.discount must be <= 1".into()));
        }
        Ok(())
    }
}

/// Road network plus model parameters; the context every model operation runs in.
#[derive(Clone, Debug)]
pub struct TransitModel {
    pub network: Network,
    pub config: ModelConfig,
}

impl TransitModel {
    pub fn new(network: Network, config: ModelConfig) -> Self {
        Self { network, config }
    }

    pub fn travel_time(&self, a: LocationId, b: LocationId) -> Result<Minutes> {
        self.network.travel_time(a, b, &self.config)
    }
}

/// Insertion of an outstanding request into one vehicle's route. Indices are
/// positions in the route before insertion: the pickup goes before stop
/// `pickup_index`, the drop-off before stop `dropoff_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub request_id: RequestId,
    pub vehicle_id: VehicleId,
    pub pickup_index: usize,
    pub dropoff_index: usize,
}

/// One decision-epoch snapshot of the system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub time: Minutes,
    /// Vehicles ordered by id; each carries its route plan and assignment list.
    pub vehicles: Vec<Vehicle>,
    pub outstanding: Option<Request>,
    /// Every request assigned during the episode, keyed by id.
    pub requests: BTreeMap<RequestId, Request>,
    pub next_request_id: RequestId,
    pub terminal: bool,
}

impl State {
    pub fn new(time: Minutes, mut vehicles: Vec<Vehicle>) -> Self {
        vehicles.sort_by_key(|v| v.id);
        Self { time, vehicles, outstanding: None, requests: BTreeMap::new(), next_request_id: 1, terminal: false }
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub(crate) fn vehicle_mut(&mut self, id: VehicleId) -> Option<&mut Vehicle> {
        self.vehicles.iter_mut().find(|v| v.id == id)
    }

    /// Looks a request up among assigned requests and the outstanding one.
    pub fn request(&self, id: RequestId) -> Option<&Request> {
        self.requests.get(&id).or_else(|| self.outstanding.as_ref().filter(|r| r.id == id))
    }

    /// The vehicle whose plan currently carries the request, if any.
    pub fn serving_vehicle(&self, request_id: RequestId) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.assigned.contains(&request_id))
    }

    /// Number of requests assigned over the episode so far.
    pub fn total_assigned(&self) -> usize {
        self.requests.len()
    }

    pub fn set_outstanding(&mut self, request: Request) {
        self.next_request_id = self.next_request_id.max(request.id + 1);
        self.outstanding = Some(request);
    }
}
