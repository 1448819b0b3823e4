use crate::model::{LocationId, RequestId, State, StopKind, VehicleId};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    Factual,
    Contrastive,
    TreeExpansion,
}

impl QueryType {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryType::Factual => "factual",
            QueryType::Contrastive => "contrastive",
            QueryType::TreeExpansion => "tree_expansion",
        }
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Late,
    Early,
}

/// A query as submitted: free-form bindings still to be resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuerySubmission {
    pub qtype: QueryType,
    #[serde(default)]
    pub bindings: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    /// Epoch the query was written against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    /// Expansion budget override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl QuerySubmission {
    pub fn new(qtype: QueryType, bindings: &[(&str, Value)]) -> Self {
        Self {
            qtype,
            bindings: bindings.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            raw_text: None,
            epoch: None,
            budget: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "qtype", rename_all = "snake_case")]
pub enum QueryBindings {
    Factual {
        passenger: RequestId,
        action: StopKind,
        direction: Direction,
    },
    Contrastive {
        passenger: RequestId,
        alt_vehicle: VehicleId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        location: Option<LocationId>,
    },
    TreeExpansion {
        passenger: RequestId,
        alt_vehicle: VehicleId,
    },
}

/// A validated query with every free variable resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub bindings: QueryBindings,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl Query {
    pub fn qtype(&self) -> QueryType {
        match self.bindings {
            QueryBindings::Factual { .. } => QueryType::Factual,
            QueryBindings::Contrastive { .. } => QueryType::Contrastive,
            QueryBindings::TreeExpansion { .. } => QueryType::TreeExpansion,
        }
    }

    pub fn passenger(&self) -> RequestId {
        match self.bindings {
            QueryBindings::Factual { passenger, .. }
            | QueryBindings::Contrastive { passenger, .. }
            | QueryBindings::TreeExpansion { passenger, .. } => passenger,
        }
    }

    pub fn alt_vehicle(&self) -> Option<VehicleId> {
        match self.bindings {
            QueryBindings::Factual { .. } => None,
            QueryBindings::Contrastive { alt_vehicle, .. } | QueryBindings::TreeExpansion { alt_vehicle, .. } => {
                Some(alt_vehicle)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("invalid bindings ({}): {message}", keys.join(", "))]
pub struct QueryError {
    pub keys: Vec<String>,
    pub message: String,
}

fn as_id(value: &Value) -> Option<u32> {
    match value {
        Value::Number(n) => n.as_u64().and_then(|n| u32::try_from(n).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.trim().to_ascii_lowercase()),
        _ => None,
    }
}

fn resolve_vehicle(state: &State, value: &Value) -> Option<VehicleId> {
    if let Some(id) = as_id(value) {
        return state.vehicle(id).map(|v| v.id);
    }
    let name = as_text(value)?;
    state.vehicles.iter().find(|v| v.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case(&name))).map(|v| v.id)
}

/// Validates a submission against the planned epoch. `recommended` is the
/// vehicle the planner chose; alternatives must differ from it.
pub fn instantiate_query(
    submission: &QuerySubmission,
    state: &State,
    recommended: Option<VehicleId>,
) -> Result<Query, QueryError> {
    let allowed: &[&str] = match submission.qtype {
        QueryType::Factual => &["passenger", "action", "direction"],
        QueryType::Contrastive => &["passenger", "alt_vehicle", "location"],
        QueryType::TreeExpansion => &["passenger", "alt_vehicle"],
    };
    let mut problems: Vec<(String, String)> = submission
        .bindings
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .map(|k| (k.clone(), format!("'{k}' is not a {} binding", submission.qtype)))
        .collect();
    let get = |key: &str| submission.bindings.get(key);

    let passenger = match get("passenger") {
        None => {
            problems.push(("passenger".into(), "missing".into()));
            None
        }
        Some(v) => match as_id(v) {
            Some(id) if state.request(id).is_some() => Some(id),
            _ => {
                problems.push(("passenger".into(), format!("unknown passenger {v}")));
                None
            }
        },
    };
    if submission.qtype != QueryType::Factual {
        if let Some(id) = passenger {
            if state.outstanding.as_ref().map(|r| r.id) != Some(id) {
                problems.push(("passenger".into(), format!("passenger {id} is not the request being assigned")));
            }
        }
    }

    let bindings = match submission.qtype {
        QueryType::Factual => {
            let action = match get("action").and_then(as_text).as_deref() {
                Some("pickup" | "pick-up" | "picked up") => Some(StopKind::Pickup),
                Some("dropoff" | "drop-off" | "dropped off") => Some(StopKind::Dropoff),
                _ => {
                    problems.push(("action".into(), "expected pickup or dropoff".into()));
                    None
                }
            };
            let direction = match get("direction").and_then(as_text).as_deref() {
                Some("late") => Some(Direction::Late),
                Some("early") => Some(Direction::Early),
                _ => {
                    problems.push(("direction".into(), "expected late or early".into()));
                    None
                }
            };
            match (passenger, action, direction) {
                (Some(passenger), Some(action), Some(direction)) => {
                    Some(QueryBindings::Factual { passenger, action, direction })
                }
                _ => None,
            }
        }
        QueryType::Contrastive | QueryType::TreeExpansion => {
            let alt = match get("alt_vehicle") {
                None => {
                    problems.push(("alt_vehicle".into(), "missing".into()));
                    None
                }
                Some(v) => match resolve_vehicle(state, v) {
                    Some(id) if Some(id) == recommended => {
                        problems.push(("alt_vehicle".into(), format!("vehicle {id} is the recommended vehicle")));
                        None
                    }
                    Some(id) => Some(id),
                    None => {
                        problems.push(("alt_vehicle".into(), format!("no vehicle {v}")));
                        None
                    }
                },
            };
            let location = match get("location") {
                None | Some(Value::Null) => None,
                Some(v) => match as_id(v) {
                    Some(id) => Some(id),
                    None => {
                        problems.push(("location".into(), format!("invalid location {v}")));
                        None
                    }
                },
            };
            match (passenger, alt) {
                (Some(passenger), Some(alt_vehicle)) if submission.qtype == QueryType::Contrastive => {
                    Some(QueryBindings::Contrastive { passenger, alt_vehicle, location })
                }
                (Some(passenger), Some(alt_vehicle)) => Some(QueryBindings::TreeExpansion { passenger, alt_vehicle }),
                _ => None,
            }
        }
    };

    match bindings {
        Some(bindings) if problems.is_empty() => {
            let raw_text = submission.raw_text.clone().unwrap_or_else(|| describe(&bindings));
            Ok(Query { bindings, raw_text, budget: submission.budget })
        }
        _ => {
            let mut keys: Vec<String> = problems.iter().map(|(k, _)| k.clone()).collect();
            keys.dedup();
            let message = problems.into_iter().map(|(k, m)| format!("{k}: {m}")).collect::<Vec<_>>().join("; ");
            Err(QueryError { keys, message })
        }
    }
}

fn describe(bindings: &QueryBindings) -> String {
    match bindings {
        QueryBindings::Factual { passenger, action, direction } => {
            let event = match action {
                StopKind::Pickup => "picked up",
                StopKind::Dropoff => "dropped off",
            };
            let when = match direction {
                Direction::Late => "too late",
                Direction::Early => "too early",
            };
            format!("Will passenger {passenger} be {event} {when}?")
        }
        QueryBindings::Contrastive { passenger, alt_vehicle, .. } => {
            format!("Why is passenger {passenger} not assigned to vehicle {alt_vehicle}?")
        }
        QueryBindings::TreeExpansion { passenger, alt_vehicle } => {
            format!("What if passenger {passenger} is assigned to vehicle {alt_vehicle}?")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Request, Vehicle};
    use serde_json::json;

    fn state() -> State {
        let mut red = Vehicle::new(1, 4, 1);
        red.name = Some("red".into());
        let mut s = State::new(0, vec![red, Vehicle::new(2, 4, 1), Vehicle::new(3, 4, 1)]);
        s.set_outstanding(Request::new(1, 0, 5, 20, 1, 1));
        s
    }

    #[test]
    fn factual_query() {
        let sub = QuerySubmission::new(
            QueryType::Factual,
            &[("passenger", json!(1)), ("action", json!("dropoff")), ("direction", json!("late"))],
        );
        let q = instantiate_query(&sub, &state(), Some(1)).unwrap();
        assert_eq!(
            q.bindings,
            QueryBindings::Factual { passenger: 1, action: StopKind::Dropoff, direction: Direction::Late }
        );
    }

    #[test]
    fn unknown_vehicle_name() {
        let mut s = state();
        s.vehicles[0].name = None;
        let sub =
            QuerySubmission::new(QueryType::Contrastive, &[("passenger", json!(1)), ("alt_vehicle", json!("red"))]);
        let err = instantiate_query(&sub, &s, Some(2)).unwrap_err();
        assert_eq!(err.keys, vec!["alt_vehicle".to_string()]);
    }

    #[test]
    fn tree_expansion_by_id_and_name() {
        let sub = QuerySubmission::new(QueryType::TreeExpansion, &[("passenger", json!(1)), ("alt_vehicle", json!(2))]);
        let q = instantiate_query(&sub, &state(), Some(1)).unwrap();
        assert_eq!(q.alt_vehicle(), Some(2));
        let sub =
            QuerySubmission::new(QueryType::TreeExpansion, &[("passenger", json!(1)), ("alt_vehicle", json!("Red"))]);
        assert_eq!(instantiate_query(&sub, &state(), Some(2)).unwrap().alt_vehicle(), Some(1));
    }

    #[test]
    fn lists_every_offending_key() {
        let sub = QuerySubmission::new(QueryType::Factual, &[("passenger", json!(9)), ("speed", json!(3))]);
        let err = instantiate_query(&sub, &state(), None).unwrap_err();
        for key in ["speed", "passenger", "action", "direction"] {
            assert!(err.keys.contains(&key.to_string()), "{err}");
        }
    }
}
