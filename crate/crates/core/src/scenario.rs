//! Scenario documents: network, fleet, scripted requests and parameters.

use crate::mcts::{LabelConstants, SearchParams};
use crate::model::{
    Location, LocationId, Minutes, ModelConfig, Network, Request, RequestId, State, TransitModel, TravelEntry, Vehicle,
    VehicleId,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleDef {
    pub id: VehicleId,
    pub capacity: u32,
    pub location: LocationId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Driving range in minutes; enables the fuel formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestDef {
    pub id: RequestId,
    pub t_r: Minutes,
    pub t_p: Minutes,
    pub t_d: Minutes,
    pub l_p: LocationId,
    pub l_d: LocationId,
}

impl RequestDef {
    pub fn to_request(&self) -> Request {
        Request::new(self.id, self.t_r, self.t_p, self.t_d, self.l_p, self.l_d)
    }
}

/// Explanation-layer parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    /// Reasonable number of intermediate stops before a drop-off.
    pub theta_d: i64,
    /// Reasonable ride time; `T_max` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_rt: Option<Minutes>,
    pub t3_budget: u64,
    pub contrastive_budget: u64,
    /// Clock time of minute 0, in minutes after midnight.
    pub start_of_day: Minutes,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            theta_d: LabelConstants::DEFAULT_THETA_D,
            v_rt: None,
            t3_budget: 74,
            contrastive_budget: 25,
            start_of_day: 12 * 60,
        }
    }
}

impl ExplainSettings {
    pub fn constants(&self, cfg: &ModelConfig) -> LabelConstants {
        LabelConstants { t_a: cfg.t_a, v_rt: self.v_rt.unwrap_or(cfg.t_max), theta_d: self.theta_d }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub locations: Vec<Location>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub travel_matrix: Vec<TravelEntry>,
    pub vehicles: Vec<VehicleDef>,
    #[serde(default)]
    pub requests: Vec<RequestDef>,
    #[serde(default)]
    pub config: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub search: SearchParams,
    #[serde(default)]
    pub explain: ExplainSettings,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    /// Location of the problem inside the document.
    pub fn field(&self) -> &str {
        match self {
            ScenarioError::Io { .. } => "",
            ScenarioError::Schema { path, .. } => path,
            ScenarioError::Invalid { field, .. } => field,
        }
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::Schema { path, message: e.into_inner().to_string() }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, ScenarioError> {
        Self::from_json(&value.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.locations.is_empty() {
            return Err(invalid("locations", "at least one location is required"));
        }
        let network = self.network()?;
        if self.vehicles.is_empty() {
            return Err(invalid("vehicles", "at least one vehicle is required"));
        }
        let mut seen = BTreeSet::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            if !seen.insert(v.id) {
                return Err(invalid(format!("vehicles[{i}].id"), format!("duplicate vehicle id {}", v.id)));
            }
            if v.capacity == 0 {
                return Err(invalid(format!("vehicles[{i}].capacity"), "capacity must be positive"));
            }
            if !network.contains(v.location) {
                return Err(invalid(format!("vehicles[{i}].location"), format!("unknown location {}", v.location)));
            }
            if v.fuel.is_some_and(|f| !(f >= 0.0 && f.is_finite())) {
                return Err(invalid(format!("vehicles[{i}].fuel"), "fuel must be non-negative"));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, r) in self.requests.iter().enumerate() {
            if !seen.insert(r.id) {
                return Err(invalid(format!("requests[{i}].id"), format!("duplicate request id {}", r.id)));
            }
            for (name, loc) in [("l_p", r.l_p), ("l_d", r.l_d)] {
                if !network.contains(loc) {
                    return Err(invalid(format!("requests[{i}].{name}"), format!("unknown location {loc}")));
                }
            }
            if !(0 <= r.t_r && r.t_r <= r.t_p && r.t_p <= r.t_d) {
                return Err(invalid(format!("requests[{i}]"), "expected 0 <= t_r <= t_p <= t_d"));
            }
        }
        self.config.validate().map_err(|e| invalid("config", e.to_string()))?;
        self.search.validate().map_err(|e| invalid("search", e.to_string()))?;
        if self.explain.theta_d < 0 {
            return Err(invalid("explain.theta_d", "must be non-negative"));
        }
        Ok(())
    }

    pub fn network(&self) -> Result<Network, ScenarioError> {
        Network::new(self.locations.iter().copied(), &self.travel_matrix).map_err(|e| {
            let field = if e.to_string().contains("travel") { "travel_matrix" } else { "locations" };
            invalid(field, e.to_string())
        })
    }

    pub fn model(&self) -> Result<TransitModel, ScenarioError> {
        Ok(TransitModel::new(self.network()?, self.config.clone()))
    }

    /// Fleet at minute 0 with no requests.
    pub fn initial_state(&self) -> State {
        let vehicles = self
            .vehicles
            .iter()
            .map(|def| {
                let mut v = Vehicle::new(def.id, def.capacity, def.location);
                v.name = def.name.clone();
                v.fuel = def.fuel;
                v
            })
            .collect();
        let mut state = State::new(0, vehicles);
        state.next_request_id = self.requests.iter().map(|r| r.id + 1).max().unwrap_or(1);
        state
    }

    pub fn fuel_modeled(&self) -> bool {
        self.vehicles.iter().any(|v| v.fuel.is_some())
    }

    /// Vehicle id by numeric id or (case-insensitive) name.
    pub fn resolve_vehicle(&self, key: &str) -> Option<VehicleId> {
        let key = key.trim();
        if let Ok(id) = key.parse::<VehicleId>() {
            return self.vehicles.iter().find(|v| v.id == id).map(|v| v.id);
        }
        self.vehicles.iter().find(|v| v.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case(key))).map(|v| v.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "locations": [{"id": 1, "x": 0, "y": 0}, {"id": 2, "x": 3, "y": 4}],
        "vehicles": [{"id": 1, "capacity": 4, "location": 1, "name": "red"}],
        "requests": [{"id": 1, "t_r": 0, "t_p": 10, "t_d": 30, "l_p": 1, "l_d": 2}],
        "config": {"T_max": 45, "t_a": 10, "gamma1": 1, "gamma2": 0.1, "gamma3": 0.1,
                   "discount": 0.95, "arrival_rate": 6, "horizon": 480, "minutes_per_unit": 1},
        "seed": 7
    }"#;

    #[test]
    fn loads_minimal_document() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.model().unwrap().travel_time(1, 2).unwrap(), 7);
        assert_eq!(s.resolve_vehicle("RED"), Some(1));
        assert_eq!(s.resolve_vehicle("blue"), None);
        assert_eq!(s.initial_state().next_request_id, 2);
    }

    #[test]
    fn missing_vehicles_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v.as_object_mut().unwrap().remove("vehicles");
        let err = Scenario::from_value(v).unwrap_err();
        assert!(err.to_string().contains("vehicles"), "{err}");
    }

    #[test]
    fn duplicate_locations_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["locations"][1]["id"] = 1.into();
        assert!(Scenario::from_value(v).is_err());
    }

    #[test]
    fn wrong_type_reports_path() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["vehicles"][0]["capacity"] = "four".into();
        let err = Scenario::from_value(v).unwrap_err();
        assert_eq!(err.field(), "vehicles[0].capacity");
    }
}
