use super::property::{query_to_formulas, PropertyEntry, PropertyKind};
use super::query::{instantiate_query, Direction, Query, QueryBindings, QuerySubmission, QueryType};
use super::render::{render_explanation, RenderRequest};
use super::templates::Templates;
use crate::ctl::{check, quantify_violations, CtlError, QuantitativeSummary};
use crate::mcts::{export_labeled_tree, node_labels, LabelConstants, LabelContext, MctsError, SearchTree};
use crate::model::{RequestId, StopKind, TransitModel, VehicleId};
use crate::scenario::ExplainSettings;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    /// Not evaluated because a hard constraint already failed.
    Skipped,
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Verdict::Satisfied => s.serialize_bool(true),
            Verdict::Violated => s.serialize_bool(false),
            Verdict::Skipped => s.serialize_str("skipped"),
        }
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Bool(true) => Ok(Verdict::Satisfied),
            Value::Bool(false) => Ok(Verdict::Violated),
            Value::String(s) if s == "skipped" => Ok(Verdict::Skipped),
            other => Err(serde::de::Error::custom(format!("invalid verdict {other}"))),
        }
    }
}

/// Compact summary as published in explanations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryView {
    pub applicable: usize,
    pub violating: usize,
    pub pct: f64,
    pub avg: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub scenarios: u64,
}

impl From<&QuantitativeSummary> for SummaryView {
    fn from(s: &QuantitativeSummary) -> Self {
        Self {
            applicable: s.applicable_nodes,
            violating: s.violating_nodes,
            pct: s.violation_pct,
            avg: s.avg_degree,
            min: s.min_degree,
            max: s.max_degree,
            scenarios: s.scenario_count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreComparison {
    pub recommended_vehicle: VehicleId,
    pub alternative_vehicle: VehicleId,
    /// Total value of each root child.
    pub recommended_score: f64,
    pub alternative_score: f64,
    pub recommended_mean: Option<f64>,
    pub alternative_mean: Option<f64>,
    pub recommended_visits: u64,
    pub alternative_visits: u64,
    pub service_rate_improvement_pct: Option<f64>,
    pub punctuality_improvement_pct: Option<f64>,
}

/// `100 * (rec - alt) / |alt|`; equals `100 * (rec / alt - 1)` for a
/// positive baseline and keeps its sign meaning for a negative one.
pub fn improvement_pct(recommended: f64, alternative: f64) -> Option<f64> {
    let value = 100.0 * (recommended - alternative) / alternative.abs();
    (alternative != 0.0 && value.is_finite()).then_some(value)
}

/// Scores of two root children and the relative gain of the recommended one
/// in each reward component. Improvements need visits on both sides.
pub fn compare_actions(
    tree: &SearchTree,
    recommended: VehicleId,
    alternative: VehicleId,
) -> Result<ScoreComparison, MctsError> {
    let root = tree.root;
    let find = |v| tree.child_for_vehicle(root, v).ok_or(MctsError::UnknownNode(usize::MAX));
    let rec = &tree.nodes[find(recommended)?];
    let alt = &tree.nodes[find(alternative)?];
    let gain = |r: Option<f64>, a: Option<f64>| match (r, a) {
        (Some(r), Some(a)) => improvement_pct(r, a),
        _ => None,
    };
    Ok(ScoreComparison {
        recommended_vehicle: recommended,
        alternative_vehicle: alternative,
        recommended_score: rec.total_value,
        alternative_score: alt.total_value,
        recommended_mean: rec.mean_value(),
        alternative_mean: alt.mean_value(),
        recommended_visits: rec.visits,
        alternative_visits: alt.visits,
        service_rate_improvement_pct: gain(rec.mean_service(), alt.mean_service()),
        punctuality_improvement_pct: gain(rec.mean_punctuality(), alt.mean_punctuality()),
    })
}

/// Which part of the tree a query is about.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QueryContext {
    pub request_id: RequestId,
    pub vehicle_id: Option<VehicleId>,
    /// Root of the subtree the formulas are checked on.
    pub focus: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeViolation {
    pub node: usize,
    pub degree: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormulaOutcome {
    pub id: String,
    pub formula: String,
    pub kind: PropertyKind,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<QuantitativeSummary>,
    /// Violations with ids of the full search tree.
    pub violations: Vec<NodeViolation>,
}

/// Checks one formula on the focus subtree and quantifies its violations.
pub fn exp_gen(
    tree: &SearchTree,
    entry: &PropertyEntry,
    ctx: &QueryContext,
    constants: LabelConstants,
    model: &TransitModel,
) -> Result<FormulaOutcome, ExplainError> {
    let label_ctx =
        LabelContext { request_id: ctx.request_id, vehicle_id: ctx.vehicle_id, event: entry.event, constants };
    let labeled = export_labeled_tree(tree, &label_ctx, model).map_err(ExplainError::search)?;
    let (sub, ids) = labeled.subtree(ctx.focus);
    let result = check(&sub, &entry.formula).map_err(ExplainError::check)?;
    let mut summary = quantify_violations(&sub, &entry.formula).map_err(ExplainError::check)?;
    summary.scenario_count = tree.iterations_run;
    let violations = summary.violations.iter().map(|v| NodeViolation { node: ids[v.node], degree: v.degree }).collect();
    // A formula is reported violated when the checker refutes it or any
    // applicable node fails its atom.
    let verdict =
        if result.root_verdict && summary.violating_nodes == 0 { Verdict::Satisfied } else { Verdict::Violated };
    Ok(FormulaOutcome {
        id: entry.id.clone(),
        formula: entry.formula.to_string(),
        kind: entry.kind,
        verdict,
        summary: Some(summary),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

impl ExplainError {
    pub fn new(code: &str, message: impl Into<String>, detail: Value) -> Self {
        Self { code: code.to_string(), message: message.into(), detail }
    }

    fn search(e: MctsError) -> Self {
        Self::new("search_error", e.to_string(), Value::Null)
    }

    fn check(e: CtlError) -> Self {
        Self::new("check_error", e.to_string(), Value::Null)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Explanation {
    pub qtype: QueryType,
    pub epoch: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<Query>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub summaries: BTreeMap<String, SummaryView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ScoreComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_iterations: Option<u64>,
    pub formulas: Vec<FormulaOutcome>,
    pub text: String,
    /// Slot values shown in `text`.
    pub structured: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ExplainError>,
}

impl Explanation {
    fn failed(qtype: QueryType, epoch: u64, query: Option<Query>, error: ExplainError) -> Self {
        Self {
            qtype,
            epoch,
            query,
            verdicts: BTreeMap::new(),
            summaries: BTreeMap::new(),
            comparison: None,
            new_iterations: None,
            formulas: Vec::new(),
            text: String::new(),
            structured: BTreeMap::new(),
            error: Some(error),
        }
    }
}

/// Inputs shared by every query of one epoch.
pub struct ExplainEnv<'a> {
    pub model: &'a TransitModel,
    pub settings: &'a ExplainSettings,
    pub templates: &'a Templates,
    pub fuel_modeled: bool,
    pub epoch: u64,
    pub seed: u64,
}

/// Answers queries in order. Only tree-expanding steps (forced alternative
/// children and their extra iterations) change the tree.
pub fn handle_queries(tree: &mut SearchTree, env: &ExplainEnv, queries: &[QuerySubmission]) -> Vec<Explanation> {
    queries
        .iter()
        .map(|q| {
            if let Some(epoch) = q.epoch.filter(|&e| e != env.epoch) {
                let err = ExplainError::new(
                    "stale_epoch",
                    format!("query targets epoch {epoch}, current epoch is {}", env.epoch),
                    json!({ "query_epoch": epoch, "current_epoch": env.epoch }),
                );
                return Explanation::failed(q.qtype, env.epoch, None, err);
            }
            let recommended = tree.recommendation().map(|a| a.vehicle_id);
            let query = match instantiate_query(q, &tree.root_node().state, recommended) {
                Ok(query) => query,
                Err(e) => {
                    let err = ExplainError::new("invalid_query", e.message.clone(), json!({ "keys": e.keys }));
                    return Explanation::failed(q.qtype, env.epoch, None, err);
                }
            };
            explain_one(tree, env, &query)
                .unwrap_or_else(|err| Explanation::failed(q.qtype, env.epoch, Some(query), err))
        })
        .collect()
}

fn explain_one(tree: &mut SearchTree, env: &ExplainEnv, query: &Query) -> Result<Explanation, ExplainError> {
    let model = env.model;
    let root = tree.root;
    let recommended = tree
        .recommended_child()
        .ok_or_else(|| ExplainError::new("no_plan", "the tree has no recommendation", Value::Null))?;
    let rec_vehicle = tree.nodes[recommended].vehicle_id().expect("root children carry actions");
    let passenger = query.passenger();

    let mut new_iterations = None;
    let (focus, vehicle) = match query.bindings {
        QueryBindings::Factual { .. } => (recommended, None),
        QueryBindings::Contrastive { alt_vehicle, .. } | QueryBindings::TreeExpansion { alt_vehicle, .. } => {
            let child = tree.ensure_child(root, alt_vehicle, model).map_err(ExplainError::search)?;
            let budget = match query.qtype() {
                QueryType::TreeExpansion => Some(query.budget.unwrap_or(env.settings.t3_budget)),
                _ if tree.nodes[child].visits == 0 => Some(query.budget.unwrap_or(env.settings.contrastive_budget)),
                _ => None,
            };
            if let Some(budget) = budget {
                let n = tree.expand_alternative(child, budget, env.seed, model).map_err(ExplainError::search)?;
                if query.qtype() == QueryType::TreeExpansion {
                    new_iterations = Some(n);
                }
            }
            (child, Some(alt_vehicle))
        }
    };

    let ctx = QueryContext { request_id: passenger, vehicle_id: vehicle, focus };
    let constants = env.settings.constants(&model.config);
    let bundle = query_to_formulas(query, env.fuel_modeled);
    let mut outcomes: Vec<FormulaOutcome> = Vec::new();
    for entry in bundle.entries.iter().filter(|e| e.kind == PropertyKind::HardConstraint) {
        outcomes.push(exp_gen(tree, entry, &ctx, constants, model)?);
    }
    let hard_failed = outcomes.iter().any(|o| o.verdict == Verdict::Violated);
    for entry in bundle.entries.iter().filter(|e| e.kind != PropertyKind::HardConstraint) {
        if hard_failed && entry.kind == PropertyKind::Efficiency {
            outcomes.push(FormulaOutcome {
                id: entry.id.clone(),
                formula: entry.formula.to_string(),
                kind: entry.kind,
                verdict: Verdict::Skipped,
                summary: None,
                violations: Vec::new(),
            });
        } else {
            outcomes.push(exp_gen(tree, entry, &ctx, constants, model)?);
        }
    }

    let comparison = match vehicle {
        Some(alt) => Some(compare_actions(tree, rec_vehicle, alt).map_err(ExplainError::search)?),
        None => None,
    };

    let (event, finding) = match query.bindings {
        QueryBindings::Factual { action, direction, .. } => {
            let finding = outcomes
                .iter()
                .find(|o| o.verdict == Verdict::Violated)
                .and_then(|o| o.summary.clone())
                .filter(|s| s.violating_nodes > 0)
                .map(|s| (direction, s));
            (action, finding)
        }
        QueryBindings::TreeExpansion { .. } => {
            let pick = |id: &str| {
                outcomes.iter().find(|o| o.id == id).and_then(|o| o.summary.clone()).filter(|s| s.violating_nodes > 0)
            };
            let finding = match (pick("phi2"), pick("phi2_early")) {
                (Some(late), Some(early)) if early.violation_pct > late.violation_pct => {
                    Some((Direction::Early, early))
                }
                (Some(late), _) => Some((Direction::Late, late)),
                (None, Some(early)) => Some((Direction::Early, early)),
                (None, None) => None,
            };
            (StopKind::Dropoff, finding)
        }
        QueryBindings::Contrastive { .. } => (StopKind::Dropoff, None),
    };
    let hard = outcomes
        .iter()
        .find(|o| o.kind == PropertyKind::HardConstraint && o.verdict == Verdict::Violated)
        .and_then(|o| o.summary.clone().map(|s| (o.id.clone(), s)));

    let focus_state = &tree.nodes[focus].state;
    let request = tree.root_node().state.request(passenger).expect("validated by instantiate_query");
    let desired_time = match event {
        StopKind::Pickup => request.pickup_time,
        StopKind::Dropoff => request.dropoff_time,
    };
    let stop_count = stops_before(tree, focus, passenger, event, vehicle);
    let alt_label = vehicle.and_then(|id| focus_state.vehicle(id)).map(|v| v.label());
    let render = RenderRequest {
        qtype: query.qtype(),
        event,
        desired_time,
        start_of_day: env.settings.start_of_day,
        scenario_count: tree.iterations_run,
        stop_count,
        finding,
        hard,
        comparison: comparison.clone(),
        new_iterations,
        alt_vehicle: alt_label,
    };
    let rendered = render_explanation(&render, env.templates)
        .map_err(|e| ExplainError::new("template_error", e.to_string(), Value::Null))?;

    let verdicts = outcomes.iter().map(|o| (o.id.clone(), o.verdict)).collect();
    let summaries =
        outcomes.iter().filter_map(|o| o.summary.as_ref().map(|s| (o.id.clone(), SummaryView::from(s)))).collect();
    Ok(Explanation {
        qtype: query.qtype(),
        epoch: env.epoch,
        query: Some(query.clone()),
        verdicts,
        summaries,
        comparison,
        new_iterations,
        formulas: outcomes,
        text: rendered.text,
        structured: rendered.slots,
        error: None,
    })
}

/// Planned stops ahead of the passenger's event stop at the focus node,
/// not counting the passenger's own pickup.
fn stops_before(
    tree: &SearchTree,
    focus: usize,
    passenger: RequestId,
    event: StopKind,
    vehicle: Option<VehicleId>,
) -> Option<usize> {
    let state = &tree.nodes[focus].state;
    let request = state.request(passenger)?;
    let v = state.vehicle(vehicle.or(request.vehicle)?)?;
    let end = v.stop_index(passenger, event)?;
    Some(v.route[..end].iter().filter(|s| s.request_id != passenger).count())
}

/// Labels of the focus node, for callers that want to show raw values.
pub fn focus_labels(
    tree: &SearchTree,
    ctx: &QueryContext,
    event: StopKind,
    constants: LabelConstants,
    model: &TransitModel,
) -> Option<crate::ctl::Labels> {
    let label_ctx = LabelContext { request_id: ctx.request_id, vehicle_id: ctx.vehicle_id, event, constants };
    node_labels(&tree.nodes.get(ctx.focus)?.state, &label_ctx, model).ok()
}

impl From<Direction> for &'static str {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Late => "late",
            Direction::Early => "early",
        }
    }
}
