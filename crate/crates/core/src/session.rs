//! One dispatcher session: a scenario played epoch by epoch with planning,
//! queries and apply steps. Every successful call is recorded so a session
//! can be rebuilt by replaying its log.

use crate::explain::{handle_queries, ExplainEnv, Explanation, QuerySubmission, Templates};
use crate::mcts::{
    export_labeled_tree, mix_seed, plan, Infeasibility, LabelContext, MctsError, SearchParams, SearchTree, TreeDump,
};
use crate::model::{
    advance, apply_action, apply_action_forced, audit_vehicle, best_insertion, transition, Action, ConstraintViolation,
    Location, Minutes, ModelError, Request, RequestId, State, StopKind, TransitModel, Vehicle, VehicleId,
};
use crate::scenario::{Scenario, ScenarioError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const ARRIVAL_SALT: u64 = 0xA7;
const PLAN_SALT: u64 = 0x9A;
const EXPLAIN_SALT: u64 = 0xE1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingPlan,
    Planned,
    Terminal,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SessionError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("action violates hard constraints")]
    Constraint(Vec<ConstraintViolation>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(MctsError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Scenario(_) => "invalid_scenario",
            SessionError::Conflict(_) => "conflict",
            SessionError::NotFound(_) => "not_found",
            SessionError::Invalid(_) => "invalid_request",
            SessionError::Constraint(_) => "constraint_violation",
            SessionError::Model(_) | SessionError::Search(_) => "internal",
        }
    }

    pub fn detail(&self) -> Value {
        match self {
            SessionError::Scenario(e) => json!({ "field": e.field() }),
            SessionError::Constraint(v) => json!({ "violations": v }),
            _ => Value::Null,
        }
    }
}

impl From<MctsError> for SessionError {
    fn from(e: MctsError) -> Self {
        match e {
            MctsError::Model(m) => SessionError::Model(m),
            MctsError::InvalidParams(m) => SessionError::Invalid(m),
            other => SessionError::Search(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, SessionError>;

/// Per-call overrides of the scenario's search parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rollout_depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApplyOptions {
    /// Vehicle to use instead of the recommendation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleId>,
    /// Apply the override even if it breaks a hard constraint.
    pub force: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SessionEvent {
    Plan {
        #[serde(default)]
        options: PlanOptions,
    },
    Queries {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epoch: Option<u64>,
        queries: Vec<QuerySubmission>,
    },
    Apply {
        #[serde(default)]
        options: ApplyOptions,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateView {
    pub vehicle_id: VehicleId,
    pub action: Action,
    pub feasible: bool,
    pub violations: Vec<ConstraintViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChildStats {
    pub vehicle_id: VehicleId,
    pub visits: u64,
    pub total_value: f64,
    pub mean_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanReport {
    pub epoch: u64,
    pub request_id: RequestId,
    pub recommended_vehicle: Option<VehicleId>,
    pub recommendation: Option<Action>,
    pub iterations_run: u64,
    pub node_count: usize,
    pub candidates: Vec<CandidateView>,
    pub children: Vec<ChildStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<Infeasibility>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApplyReport {
    /// Epoch that was closed.
    pub epoch: u64,
    pub request_id: RequestId,
    pub applied: Option<Action>,
    pub forced: bool,
    /// Constraint violations of the applied action, empty unless forced.
    pub violations: Vec<ConstraintViolation>,
    pub skipped: bool,
    pub next_epoch: u64,
    pub status: SessionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VehicleView {
    #[serde(flatten)]
    pub vehicle: Vehicle,
    pub violations: Vec<ConstraintViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateView {
    pub epoch: u64,
    pub status: SessionStatus,
    pub time: Minutes,
    pub locations: Vec<Location>,
    pub vehicles: Vec<VehicleView>,
    pub outstanding: Option<Request>,
    pub requests: Vec<Request>,
    pub skipped: Vec<Request>,
    pub recommendation: Option<Action>,
    pub candidates: Vec<CandidateView>,
    pub iterations_run: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Session {
    scenario: Scenario,
    model: TransitModel,
    templates: Templates,
    epoch: u64,
    status: SessionStatus,
    state: State,
    tree: Option<SearchTree>,
    last_tree: Option<SearchTree>,
    recommendation: Option<Action>,
    candidates: Vec<CandidateView>,
    infeasibility: Option<Infeasibility>,
    script_pos: usize,
    skipped: Vec<Request>,
    log: Vec<SessionEvent>,
}

impl Session {
    pub fn new(scenario: Scenario) -> Result<Self> {
        Self::with_templates(scenario, Templates::builtin())
    }

    pub fn with_templates(scenario: Scenario, templates: Templates) -> Result<Self> {
        scenario.validate()?;
        let model = scenario.model()?;
        let state = scenario.initial_state();
        let mut session = Self {
            scenario,
            model,
            templates,
            epoch: 0,
            status: SessionStatus::AwaitingPlan,
            state,
            tree: None,
            last_tree: None,
            recommendation: None,
            candidates: Vec::new(),
            infeasibility: None,
            script_pos: 0,
            skipped: Vec::new(),
            log: Vec::new(),
        };
        session.next_request()?;
        Ok(session)
    }

    /// Rebuilds a session from its scenario and event log.
    pub fn replay(scenario: Scenario, events: &[SessionEvent]) -> Result<Self> {
        let mut session = Self::new(scenario)?;
        for event in events {
            session.dispatch(event.clone())?;
        }
        Ok(session)
    }

    /// Runs one logged operation; the JSON result is what the operation returns.
    pub fn dispatch(&mut self, event: SessionEvent) -> Result<Value> {
        let value = match event {
            SessionEvent::Plan { options } => to_value(&self.plan(options)?),
            SessionEvent::Queries { epoch, queries } => to_value(&self.submit_queries(epoch, &queries)?),
            SessionEvent::Apply { options } => to_value(&self.apply(options)?),
        };
        Ok(value)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn model(&self) -> &TransitModel {
        &self.model
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn tree(&self) -> Option<&SearchTree> {
        self.tree.as_ref().or(self.last_tree.as_ref())
    }

    pub fn recommendation(&self) -> Option<Action> {
        self.recommendation
    }

    pub fn infeasibility(&self) -> Option<&Infeasibility> {
        self.infeasibility.as_ref()
    }

    pub fn skipped(&self) -> &[Request] {
        &self.skipped
    }

    pub fn log(&self) -> &[SessionEvent] {
        &self.log
    }

    fn search_params(&self, options: &PlanOptions) -> SearchParams {
        let base = &self.scenario.search;
        SearchParams {
            iterations: options.iterations.unwrap_or(base.iterations),
            exploration_c: options.exploration_c.unwrap_or(base.exploration_c),
            rollout_depth: options.rollout_depth.unwrap_or(base.rollout_depth),
            seed: mix_seed(options.seed.unwrap_or(base.seed) ^ mix_seed(self.scenario.seed, PLAN_SALT), self.epoch),
        }
    }

    fn next_request(&mut self) -> Result<()> {
        let horizon = self.model.config.horizon;
        if let Some(next) = self.scenario.requests.get(self.script_pos) {
            self.script_pos += 1;
            if next.t_r > horizon {
                self.state = advance(&self.state, horizon, &self.model)?;
                self.state.terminal = true;
            } else {
                self.state = advance(&self.state, next.t_r.max(self.state.time), &self.model)?;
                self.state.set_outstanding(next.to_request());
            }
        } else {
            let seed = mix_seed(mix_seed(self.scenario.seed, ARRIVAL_SALT), self.epoch);
            self.state = transition(&self.state, seed, &self.model)?;
        }
        self.status = if self.state.terminal { SessionStatus::Terminal } else { SessionStatus::AwaitingPlan };
        Ok(())
    }

    fn require(&self, status: SessionStatus, what: &str) -> Result<()> {
        if self.status == status {
            Ok(())
        } else {
            Err(SessionError::Conflict(format!("cannot {what} while {}", status_name(self.status))))
        }
    }

    pub fn plan(&mut self, options: PlanOptions) -> Result<PlanReport> {
        self.require(SessionStatus::AwaitingPlan, "plan")?;
        let params = self.search_params(&options);
        let request_id = self.state.outstanding.as_ref().map(|r| r.id).expect("awaiting a plan implies a request");
        let report = match plan(&self.state, &params, &self.model) {
            Ok(outcome) => {
                self.candidates = outcome.candidates.iter().map(candidate_view).collect();
                self.recommendation = Some(outcome.action);
                self.infeasibility = None;
                self.tree = Some(outcome.tree);
                self.plan_report(request_id)
            }
            Err(MctsError::Infeasible { request_id, violations }) => {
                self.candidates =
                    crate::model::candidate_actions(&self.state, &self.model)?.iter().map(candidate_view).collect();
                self.recommendation = None;
                self.infeasibility = Some(Infeasibility { request_id, violations });
                self.tree = None;
                self.plan_report(request_id)
            }
            Err(e) => return Err(e.into()),
        };
        self.status = SessionStatus::Planned;
        self.log.push(SessionEvent::Plan { options });
        Ok(report)
    }

    fn plan_report(&self, request_id: RequestId) -> PlanReport {
        let tree = self.tree.as_ref();
        let children = tree
            .map(|t| {
                t.root_node()
                    .children
                    .iter()
                    .map(|&c| {
                        let n = &t.nodes[c];
                        ChildStats {
                            vehicle_id: n.vehicle_id().expect("root children carry actions"),
                            visits: n.visits,
                            total_value: n.total_value,
                            mean_value: n.mean_value(),
                        }
                    })
                    .collect()
            })
            .unwrap_or_default();
        PlanReport {
            epoch: self.epoch,
            request_id,
            recommended_vehicle: self.recommendation.map(|a| a.vehicle_id),
            recommendation: self.recommendation,
            iterations_run: tree.map_or(0, |t| t.iterations_run),
            node_count: tree.map_or(0, SearchTree::len),
            candidates: self.candidates.clone(),
            children,
            infeasibility: self.infeasibility.clone(),
        }
    }

    /// Answers queries about the current plan. A request-level epoch that
    /// does not match is a conflict; per-query epochs fail only that query.
    pub fn submit_queries(&mut self, epoch: Option<u64>, queries: &[QuerySubmission]) -> Result<Vec<Explanation>> {
        self.require(SessionStatus::Planned, "answer queries")?;
        if let Some(e) = epoch.filter(|&e| e != self.epoch) {
            return Err(SessionError::Conflict(format!("stale epoch {e}, current epoch is {}", self.epoch)));
        }
        let tree =
            self.tree.as_mut().ok_or_else(|| SessionError::Conflict("epoch has no feasible plan to explain".into()))?;
        let env = ExplainEnv {
            model: &self.model,
            settings: &self.scenario.explain,
            templates: &self.templates,
            fuel_modeled: self.scenario.fuel_modeled(),
            epoch: self.epoch,
            seed: mix_seed(tree.params.seed, EXPLAIN_SALT),
        };
        let out = handle_queries(tree, &env, queries);
        self.log.push(SessionEvent::Queries { epoch, queries: queries.to_vec() });
        Ok(out)
    }

    /// Commits the recommendation, an override, or (when nothing is
    /// feasible and no override is given) drops the request.
    pub fn apply(&mut self, options: ApplyOptions) -> Result<ApplyReport> {
        self.require(SessionStatus::Planned, "apply")?;
        if let Some(e) = options.epoch.filter(|&e| e != self.epoch) {
            return Err(SessionError::Conflict(format!("stale epoch {e}, current epoch is {}", self.epoch)));
        }
        let request = self.state.outstanding.clone().expect("planned epochs have a request");
        let (next, applied, violations) = match options.vehicle {
            Some(id) => {
                let vehicle =
                    self.state.vehicle(id).ok_or_else(|| SessionError::Invalid(format!("no vehicle {id}")))?;
                let action = best_insertion(vehicle, &request, self.state.time, &self.model)?.action;
                let (next, violations) = apply_action_forced(&self.state, &action, &self.model)?;
                if !violations.is_empty() && !options.force {
                    return Err(SessionError::Constraint(violations));
                }
                (Some(next), Some(action), violations)
            }
            None => match self.recommendation {
                Some(action) => (Some(apply_action(&self.state, &action, &self.model)?), Some(action), Vec::new()),
                None => (None, None, Vec::new()),
            },
        };
        let skipped = next.is_none();
        match next {
            Some(next) => self.state = next,
            None => {
                self.state.outstanding = None;
                self.skipped.push(request.clone());
            }
        }
        let closed = self.epoch;
        self.epoch += 1;
        self.last_tree = self.tree.take();
        self.recommendation = None;
        self.infeasibility = None;
        self.candidates.clear();
        self.next_request()?;
        self.log.push(SessionEvent::Apply { options: options.clone() });
        Ok(ApplyReport {
            epoch: closed,
            request_id: request.id,
            applied,
            forced: options.force && !violations.is_empty(),
            violations,
            skipped,
            next_epoch: self.epoch,
            status: self.status,
        })
    }

    /// Dump of the current tree, or of the last epoch's tree after apply.
    /// Labels refer to the tree's outstanding request and its drop-off.
    pub fn tree_dump(&self) -> Result<TreeDump> {
        let tree = self.tree().ok_or_else(|| SessionError::NotFound("no search tree yet".into()))?;
        let request_id = tree.root_node().state.outstanding.as_ref().map(|r| r.id).expect("trees root at a request");
        let ctx = LabelContext {
            request_id,
            vehicle_id: None,
            event: StopKind::Dropoff,
            constants: self.scenario.explain.constants(&self.model.config),
        };
        let labeled = export_labeled_tree(tree, &ctx, &self.model)?;
        Ok(TreeDump::new(tree, Some(&labeled), Some(ctx)))
    }

    pub fn state_view(&self) -> StateView {
        let vehicles = self
            .state
            .vehicles
            .iter()
            .map(|v| VehicleView { vehicle: v.clone(), violations: audit_vehicle(v, &self.state, &self.model) })
            .collect();
        StateView {
            epoch: self.epoch,
            status: self.status,
            time: self.state.time,
            locations: self.model.network.locations().copied().collect(),
            vehicles,
            outstanding: self.state.outstanding.clone(),
            requests: self.state.requests.values().cloned().collect(),
            skipped: self.skipped.clone(),
            recommendation: self.recommendation,
            candidates: self.candidates.clone(),
            iterations_run: self.tree.as_ref().map(|t| t.iterations_run),
        }
    }
}

fn status_name(status: SessionStatus) -> &'static str {
    match status {
        SessionStatus::AwaitingPlan => "awaiting a plan",
        SessionStatus::Planned => "planned",
        SessionStatus::Terminal => "terminal",
    }
}

fn candidate_view((action, violations): &(Action, Vec<ConstraintViolation>)) -> CandidateView {
    CandidateView {
        vehicle_id: action.vehicle_id,
        action: *action,
        feasible: violations.is_empty(),
        violations: violations.clone(),
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("session payloads serialize")
}
