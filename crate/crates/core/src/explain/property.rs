use super::query::{Direction, Query, QueryBindings};
use crate::ctl::{parse_formula, Formula};
use crate::model::StopKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    Efficiency,
    HardConstraint,
    Soundness,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyEntry {
    pub id: String,
    pub formula: Formula,
    pub kind: PropertyKind,
    /// Event that `t_est` refers to when labelling for this formula.
    pub event: StopKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyBundle {
    pub entries: Vec<PropertyEntry>,
}

fn entry(id: &str, text: &str, kind: PropertyKind, event: StopKind) -> PropertyEntry {
    let formula = parse_formula(text).expect("built-in formulas parse");
    PropertyEntry { id: id.to_string(), formula, kind, event }
}

/// Timing formula for one event and direction.
pub fn timing_entry(event: StopKind, direction: Direction) -> PropertyEntry {
    let (id, target) = match event {
        StopKind::Pickup => ("phi1", "t_p"),
        StopKind::Dropoff => ("phi2", "t_d"),
    };
    match direction {
        Direction::Late => entry(id, &format!("AG (t_est <= {target} + t_a)"), PropertyKind::Efficiency, event),
        Direction::Early => {
            entry(&format!("{id}_early"), &format!("AG (t_est >= {target} - t_a)"), PropertyKind::Efficiency, event)
        }
    }
}

fn hard_constraints(fuel_modeled: bool) -> Vec<PropertyEntry> {
    let mut out = vec![entry("phi3", "AG (v_o <= v_c)", PropertyKind::HardConstraint, StopKind::Dropoff)];
    if fuel_modeled {
        out.push(entry("phi4", "AG (v_fr <= v_ft)", PropertyKind::HardConstraint, StopKind::Dropoff));
    }
    out
}

/// Formulas answering a query, hard constraints first.
pub fn query_to_formulas(query: &Query, fuel_modeled: bool) -> PropertyBundle {
    let entries = match &query.bindings {
        QueryBindings::Factual { action, direction, .. } => vec![timing_entry(*action, *direction)],
        QueryBindings::Contrastive { .. } => {
            let mut out = hard_constraints(fuel_modeled);
            out.push(timing_entry(StopKind::Pickup, Direction::Late));
            out.push(timing_entry(StopKind::Dropoff, Direction::Late));
            out
        }
        QueryBindings::TreeExpansion { .. } => {
            let mut out = hard_constraints(fuel_modeled);
            out.push(timing_entry(StopKind::Pickup, Direction::Late));
            out.push(timing_entry(StopKind::Dropoff, Direction::Late));
            out.push(timing_entry(StopKind::Dropoff, Direction::Early));
            out.push(entry("phi5", "AG (v_tt <= v_rt)", PropertyKind::Soundness, StopKind::Dropoff));
            out.push(entry("phi6", "AG (theta_s <= theta_d)", PropertyKind::Soundness, StopKind::Dropoff));
            out.push(entry("phi7", "AF (r_cs = dropped-off)", PropertyKind::Soundness, StopKind::Dropoff));
            out
        }
    };
    PropertyBundle { entries }
}
