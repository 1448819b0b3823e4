use super::engine::ScoreComparison;
use super::query::{Direction, QueryType};
use super::templates::{format_clock, TemplateError, Templates};
use crate::ctl::QuantitativeSummary;
use crate::model::{round_minutes, Minutes, StopKind};
use serde::Serialize;
use std::collections::BTreeMap;

/// Everything a rendered explanation may mention.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenderRequest {
    pub qtype: QueryType,
    pub event: StopKind,
    /// Requested time of the event, scenario minutes.
    pub desired_time: Minutes,
    pub start_of_day: Minutes,
    pub scenario_count: u64,
    /// Stops planned before the passenger's event stop at the focus node.
    pub stop_count: Option<usize>,
    /// Violated timing formula to report; `None` when all timing formulas hold.
    pub finding: Option<(Direction, QuantitativeSummary)>,
    /// Violated hard-constraint formula, by formula id.
    pub hard: Option<(String, QuantitativeSummary)>,
    pub comparison: Option<ScoreComparison>,
    pub new_iterations: Option<u64>,
    pub alt_vehicle: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rendered {
    pub text: String,
    /// Slot values as they appear in `text`.
    pub slots: BTreeMap<String, String>,
    /// Templates used, in order.
    pub templates: Vec<String>,
}

fn event_word(event: StopKind) -> &'static str {
    match event {
        StopKind::Pickup => "pick-up",
        StopKind::Dropoff => "drop-off",
    }
}

fn whole(value: f64) -> String {
    round_minutes(value).to_string()
}

fn summary_slots(slots: &mut BTreeMap<String, String>, s: &QuantitativeSummary) {
    slots.insert("violation_pct".into(), whole(s.violation_pct));
    for (key, value) in [("avg_degree", s.avg_degree), ("min_degree", s.min_degree), ("max_degree", s.max_degree)] {
        if let Some(v) = value {
            slots.insert(key.into(), whole(v));
        }
    }
}

fn hard_names(formula_id: &str, degree: i64) -> (&'static str, &'static str) {
    match formula_id {
        "phi4" => ("fuel range", "minutes of driving"),
        _ if degree == 1 => ("capacity", "passenger"),
        _ => ("capacity", "passengers"),
    }
}

pub fn render_explanation(req: &RenderRequest, templates: &Templates) -> Result<Rendered, TemplateError> {
    let mut slots = BTreeMap::new();
    slots.insert("event".to_string(), event_word(req.event).to_string());
    slots.insert("desired_time".into(), format_clock(req.desired_time, req.start_of_day));
    slots.insert("scenario_count".into(), req.scenario_count.to_string());
    if let Some(n) = req.stop_count {
        slots.insert("stop_count".into(), n.to_string());
    }
    if let Some(n) = req.new_iterations {
        slots.insert("new_iterations".into(), n.to_string());
    }
    if let Some(alt) = &req.alt_vehicle {
        slots.insert("alt_vehicle".into(), alt.clone());
    }
    if let Some(c) = &req.comparison {
        slots.insert("recommended_score".into(), whole(c.recommended_score));
        slots.insert("alternative_score".into(), whole(c.alternative_score));
        slots.insert("recommended_visits".into(), c.recommended_visits.to_string());
        slots.insert("alternative_visits".into(), c.alternative_visits.to_string());
        if let Some(v) = c.service_rate_improvement_pct {
            slots.insert("service_improvement".into(), whole(v));
        }
        if let Some(v) = c.punctuality_improvement_pct {
            slots.insert("punctuality_improvement".into(), whole(v));
        }
    }

    let mut parts: Vec<&str> = Vec::new();
    let hard_part = |slots: &mut BTreeMap<String, String>, parts: &mut Vec<&str>| {
        if let Some((id, summary)) = &req.hard {
            let (constraint, unit) = hard_names(id, summary.max_degree.map(round_minutes).unwrap_or(0));
            slots.insert("constraint".into(), constraint.into());
            slots.insert("unit".into(), unit.into());
            summary_slots(slots, summary);
            parts.push("hard_constraint");
        }
    };

    match req.qtype {
        QueryType::Factual => {
            parts.push("factual_intro");
            match &req.finding {
                Some((direction, summary)) => {
                    summary_slots(&mut slots, summary);
                    parts.push(match direction {
                        Direction::Late => "factual_late",
                        Direction::Early => "factual_early",
                    });
                }
                None => parts.push("factual_satisfied"),
            }
        }
        QueryType::Contrastive => {
            if let Some(c) = &req.comparison {
                parts.push(if c.recommended_score >= c.alternative_score {
                    "contrastive"
                } else {
                    "contrastive_mixed"
                });
            } else if req.hard.is_none() {
                parts.push("contrastive");
            }
            if req.hard.is_some() {
                hard_part(&mut slots, &mut parts);
            } else if let Some(c) = &req.comparison {
                let service = c.service_rate_improvement_pct.is_some_and(|v| round_minutes(v) > 0);
                let punctuality = c.punctuality_improvement_pct.is_some_and(|v| round_minutes(v) > 0);
                match (service, punctuality) {
                    (true, true) => parts.push("contrastive_reasons_two"),
                    (true, false) | (false, true) => parts.push("contrastive_reasons_one"),
                    (false, false) => {}
                }
                if service {
                    parts.push("contrastive_service");
                }
                if punctuality {
                    parts.push("contrastive_punctuality");
                }
            }
        }
        QueryType::TreeExpansion => {
            parts.push("tree_expansion_intro");
            if req.hard.is_some() {
                parts.push("tree_expansion_hard");
                hard_part(&mut slots, &mut parts);
            } else {
                let competitive = req
                    .comparison
                    .as_ref()
                    .is_some_and(|c| matches!((c.alternative_mean, c.recommended_mean), (Some(a), Some(r)) if a >= r));
                let overall = if competitive { "overall_competitive" } else { "overall_not_best" };
                slots.insert("overall_result".into(), templates.render(overall, &slots)?);
                match &req.finding {
                    Some((direction, summary)) => {
                        summary_slots(&mut slots, summary);
                        parts.push(match direction {
                            Direction::Late => "tree_expansion_late",
                            Direction::Early => "tree_expansion_early",
                        });
                    }
                    None => parts.push("tree_expansion_satisfied"),
                }
            }
        }
    }

    let mut paragraphs = Vec::with_capacity(parts.len());
    for name in &parts {
        paragraphs.push(templates.render(name, &slots)?);
    }
    let mut text = paragraphs.join("\n");
    text.push('\n');
    Ok(Rendered { text, slots, templates: parts.iter().map(|s| s.to_string()).collect() })
}
