//! Reference implementations written from the definitions, sharing no code
//! with the library beyond its data types.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use xmcts::ctl::{Atom, Comparator, Formula, LabeledTree, Labels, LinExpr, TemporalOp, Truth, Var};
use xmcts::model::{
    Action, Location, ModelConfig, Network, Request, RequestStatus, RouteStop, State, StopKind, TransitModel, Vehicle,
};

// ---------------------------------------------------------------- CTL

const TREE_VARS: [Var; 5] = [Var::TEst, Var::TD, Var::TA, Var::VO, Var::VC];
const STATUSES: [RequestStatus; 4] =
    [RequestStatus::Waiting, RequestStatus::Assigned, RequestStatus::InTransit, RequestStatus::DroppedOff];

pub fn random_labels(rng: &mut impl Rng) -> Labels {
    let mut labels = Labels::default();
    for var in TREE_VARS {
        if rng.random_bool(0.15) {
            labels.mark_not_applicable(var);
        } else {
            labels.set(var, rng.random_range(0..=12) as f64);
        }
    }
    if rng.random_bool(0.15) {
        labels.mark_not_applicable(Var::RCs);
        labels
    } else {
        labels.with_status(STATUSES[rng.random_range(0..4)])
    }
}

/// Random recursive tree: node `i` hangs below a uniformly chosen earlier node.
pub fn random_tree(rng: &mut impl Rng, max_nodes: usize) -> LabeledTree {
    let n = rng.random_range(1..=max_nodes);
    let parents: Vec<Option<usize>> =
        (0..n).map(|i| if i == 0 { None } else { Some(rng.random_range(0..i)) }).collect();
    let labels = (0..n).map(|_| random_labels(rng)).collect();
    LabeledTree::from_parents(&parents, labels)
}

fn random_expr(rng: &mut impl Rng) -> LinExpr {
    let var = TREE_VARS[rng.random_range(0..TREE_VARS.len())];
    match rng.random_range(0..4) {
        0 => LinExpr::constant(rng.random_range(0..=12) as f64),
        1 => LinExpr::var(var).plus(TREE_VARS[rng.random_range(0..TREE_VARS.len())]),
        2 => LinExpr::var(var).minus(TREE_VARS[rng.random_range(0..TREE_VARS.len())]),
        _ => LinExpr::var(var),
    }
}

pub fn random_atom(rng: &mut impl Rng) -> Atom {
    const CMPS: [Comparator; 6] =
        [Comparator::Le, Comparator::Lt, Comparator::Ge, Comparator::Gt, Comparator::Eq, Comparator::Ne];
    if rng.random_bool(0.2) {
        let op = if rng.random_bool(0.5) { Comparator::Eq } else { Comparator::Ne };
        Atom::Status { op, status: STATUSES[rng.random_range(0..4)] }
    } else {
        Atom::compare(random_expr(rng), CMPS[rng.random_range(0..6)], random_expr(rng))
    }
}

/// Random formula of depth at most `depth` (an atom has depth 1).
pub fn random_formula(rng: &mut impl Rng, depth: usize) -> Formula {
    if depth <= 1 || rng.random_bool(0.2) {
        return match rng.random_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(random_atom(rng)),
        };
    }
    let sub = depth - 1;
    match rng.random_range(0..9) {
        0 => Formula::not(random_formula(rng, sub)),
        1 => Formula::and(random_formula(rng, sub), random_formula(rng, sub)),
        2 => Formula::or(random_formula(rng, sub), random_formula(rng, sub)),
        k => Formula::temporal(TemporalOp::ALL[k - 3], random_formula(rng, sub)),
    }
}

/// Three-valued truth, kept separate from the library's enum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tv {
    T,
    F,
    Na,
}

impl Tv {
    pub fn matches(self, t: Truth) -> bool {
        matches!((self, t), (Tv::T, Truth::True) | (Tv::F, Truth::False) | (Tv::Na, Truth::NotApplicable))
    }
}

fn lookup(labels: &Labels, var: Var) -> Option<f64> {
    if labels.not_applicable.contains(&var) {
        None
    } else {
        Some(*labels.values.get(&var).expect("generated labels are complete"))
    }
}

fn eval_expr(expr: &LinExpr, labels: &Labels) -> Option<f64> {
    let mut total = expr.constant;
    for &(coef, var) in &expr.terms {
        total += coef * lookup(labels, var)?;
    }
    Some(total)
}

fn oracle_atom(labels: &Labels, atom: &Atom) -> Tv {
    match atom {
        Atom::Compare { lhs, op, rhs } => match (eval_expr(lhs, labels), eval_expr(rhs, labels)) {
            (Some(l), Some(r)) => {
                let holds = match op {
                    Comparator::Le => l <= r,
                    Comparator::Lt => l < r,
                    Comparator::Ge => l >= r,
                    Comparator::Gt => l > r,
                    Comparator::Eq => l == r,
                    Comparator::Ne => l != r,
                };
                if holds {
                    Tv::T
                } else {
                    Tv::F
                }
            }
            _ => Tv::Na,
        },
        Atom::Status { op, status } => {
            if labels.not_applicable.contains(&Var::RCs) {
                return Tv::Na;
            }
            let current = labels.status.expect("generated labels carry a status");
            let eq = current == *status;
            let holds = if *op == Comparator::Eq { eq } else { !eq };
            if holds {
                Tv::T
            } else {
                Tv::F
            }
        }
    }
}

/// Brute force over maximal paths, memoised per (subformula, node).
pub struct PathOracle<'t> {
    tree: &'t LabeledTree,
    cache: HashMap<(usize, usize), Tv>,
}

impl<'t> PathOracle<'t> {
    pub fn new(tree: &'t LabeledTree) -> Self {
        Self { tree, cache: HashMap::new() }
    }

    /// Every maximal path starting at `node`.
    pub fn paths(&self, node: usize) -> Vec<Vec<usize>> {
        let children = &self.tree.nodes[node].children;
        if children.is_empty() {
            return vec![vec![node]];
        }
        let mut out = Vec::new();
        for &c in children {
            for mut p in self.paths(c) {
                p.insert(0, node);
                out.push(p);
            }
        }
        out
    }

    pub fn eval(&mut self, f: &Formula, node: usize) -> Tv {
        let key = (f as *const Formula as usize, node);
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        let v = match f {
            Formula::True => Tv::T,
            Formula::False => Tv::F,
            Formula::Atom(a) => oracle_atom(&self.tree.nodes[node].labels, a),
            Formula::Not(g) => match self.eval(g, node) {
                Tv::T => Tv::F,
                Tv::F => Tv::T,
                Tv::Na => Tv::Na,
            },
            Formula::And(a, b) => match (self.eval(a, node), self.eval(b, node)) {
                (Tv::F, _) | (_, Tv::F) => Tv::F,
                (Tv::T, Tv::T) => Tv::T,
                _ => Tv::Na,
            },
            Formula::Or(a, b) => match (self.eval(a, node), self.eval(b, node)) {
                (Tv::T, _) | (_, Tv::T) => Tv::T,
                (Tv::F, Tv::F) => Tv::F,
                _ => Tv::Na,
            },
            Formula::Temporal(op, g) => {
                // Not-applicable operands count as satisfied under A-safety
                // and EG, as unsatisfied under the reachability operators.
                let na_as = matches!(op, TemporalOp::AX | TemporalOp::AG | TemporalOp::EG);
                let paths = self.paths(node);
                let sat = |oracle: &mut Self, n: usize| match oracle.eval(g, n) {
                    Tv::T => true,
                    Tv::F => false,
                    Tv::Na => na_as,
                };
                let result = match op {
                    TemporalOp::AX => paths.iter().filter(|p| p.len() > 1).all(|p| sat(self, p[1])),
                    TemporalOp::EX => paths.iter().filter(|p| p.len() > 1).any(|p| sat(self, p[1])),
                    TemporalOp::AG => paths.iter().all(|p| p.iter().all(|&n| sat(self, n))),
                    TemporalOp::EG => paths.iter().any(|p| p.iter().all(|&n| sat(self, n))),
                    TemporalOp::AF => paths.iter().all(|p| p.iter().any(|&n| sat(self, n))),
                    TemporalOp::EF => paths.iter().any(|p| p.iter().any(|&n| sat(self, n))),
                };
                if result {
                    Tv::T
                } else {
                    Tv::F
                }
            }
        };
        self.cache.insert(key, v);
        v
    }
}

// ---------------------------------------------------------------- model

pub fn manhattan(a: &Location, b: &Location) -> i64 {
    ((a.x - b.x).abs() + (a.y - b.y).abs()).round() as i64
}

pub fn grid_model(points: &[(u32, f64, f64)], cfg: ModelConfig) -> TransitModel {
    TransitModel::new(Network::grid(points).expect("valid grid"), cfg)
}

pub fn random_points(rng: &mut impl Rng, n: u32) -> Vec<(u32, f64, f64)> {
    (1..=n).map(|id| (id, rng.random_range(0..=12) as f64, rng.random_range(0..=12) as f64)).collect()
}

/// Random route over `locations` with `len` stops of made-up requests.
pub fn random_route(rng: &mut impl Rng, locations: u32, len: usize) -> Vec<RouteStop> {
    (0..len)
        .map(|k| {
            let kind = if rng.random_bool(0.5) { StopKind::Pickup } else { StopKind::Dropoff };
            RouteStop::new(rng.random_range(1..=locations), 500 + k as u32, kind)
        })
        .collect()
}

/// `(pickup_index, dropoff_index, added_minutes)` of the cheapest insertion
/// by exhaustive enumeration, ties to the smallest pair.
pub fn exhaustive_insertion(vehicle: &Vehicle, request: &Request, locs: &[Location]) -> (usize, usize, i64) {
    let at = |id: u32| locs.iter().find(|l| l.id == id).expect("known location");
    let cost = |stops: &[u32]| {
        let mut here = vehicle.location;
        let mut total = 0;
        for &s in stops {
            total += manhattan(at(here), at(s));
            here = s;
        }
        total
    };
    let old: Vec<u32> = vehicle.route.iter().map(|s| s.location).collect();
    let base = cost(&old);
    let mut best: Option<(i64, usize, usize)> = None;
    for i in 0..=old.len() {
        for j in i..=old.len() {
            let route = with_insertion(&old, i, j, request.pickup, request.dropoff);
            let added = cost(&route) - base;
            if best.is_none_or(|(c, _, _)| added < c) {
                best = Some((added, i, j));
            }
        }
    }
    let (added, i, j) = best.expect("non-empty enumeration");
    (i, j, added)
}

/// Route with `p` placed before old stop `i` and `d` before old stop `j`.
pub fn with_insertion<T: Clone>(old: &[T], i: usize, j: usize, p: T, d: T) -> Vec<T> {
    let mut out = Vec::with_capacity(old.len() + 2);
    for k in 0..=old.len() {
        if k == i {
            out.push(p.clone());
        }
        if k == j {
            out.push(d.clone());
        }
        if k < old.len() {
            out.push(old[k].clone());
        }
    }
    out
}

/// A small random episode snapshot with an outstanding request.
pub fn random_state(rng: &mut impl Rng) -> (State, TransitModel) {
    let n_locs = rng.random_range(3..=6);
    let points = random_points(rng, n_locs);
    let cfg = ModelConfig {
        gamma1: rng.random_range(0.0..2.0),
        gamma2: rng.random_range(0.0..2.0),
        gamma3: rng.random_range(0.0..2.0),
        t_max: 1000,
        ..ModelConfig::default()
    };
    let model = grid_model(&points, cfg);
    let now = rng.random_range(0..30);
    let n_vehicles = rng.random_range(1..=3);
    let mut vehicles: Vec<Vehicle> = (1..=n_vehicles)
        .map(|id| {
            let mut v = Vehicle::new(id, 6, rng.random_range(1..=n_locs));
            v.available_at = now + rng.random_range(-5..=5);
            v
        })
        .collect();
    let mut requests = Vec::new();
    for id in 1..=rng.random_range(0..=5u32) {
        let mut r = Request::new(
            id,
            0,
            rng.random_range(0..60),
            rng.random_range(20..90),
            rng.random_range(1..=n_locs),
            rng.random_range(1..=n_locs),
        );
        let v = &mut vehicles[rng.random_range(0..n_vehicles as usize)];
        match rng.random_range(0..3) {
            0 => {
                r.status = RequestStatus::DroppedOff;
                r.actual_pickup = Some(rng.random_range(0..40));
                r.actual_dropoff = Some(rng.random_range(10..80));
            }
            1 => {
                r.status = RequestStatus::InTransit;
                r.actual_pickup = Some(rng.random_range(0..40));
                let at = rng.random_range(0..=v.route.len());
                v.route.insert(at, RouteStop::new(r.dropoff, id, StopKind::Dropoff));
                v.occupancy += 1;
                v.assigned.push(id);
            }
            _ => {
                r.status = RequestStatus::Assigned;
                let i = rng.random_range(0..=v.route.len());
                let j = rng.random_range(i..=v.route.len());
                let p = RouteStop::new(r.pickup, id, StopKind::Pickup);
                let d = RouteStop::new(r.dropoff, id, StopKind::Dropoff);
                v.route = with_insertion(&v.route, i, j, p, d);
                v.assigned.push(id);
            }
        }
        r.vehicle = Some(v.id);
        requests.push(r);
    }
    for v in &mut vehicles {
        let mut clock = now + rng.random_range(0..10);
        for stop in &mut v.route {
            clock += rng.random_range(0..15);
            stop.t_est = clock;
        }
    }
    let mut state = State::new(now, vehicles);
    for r in requests {
        state.requests.insert(r.id, r);
    }
    let next = state.requests.len() as u32 + 1;
    let (p, d) = (rng.random_range(1..=n_locs), rng.random_range(1..=n_locs));
    state.set_outstanding(Request::new(next, now, now + rng.random_range(0..30), now + rng.random_range(20..70), p, d));
    (state, model)
}

pub fn random_action(rng: &mut impl Rng, state: &State) -> Action {
    let v = &state.vehicles[rng.random_range(0..state.vehicles.len())];
    let i = rng.random_range(0..=v.route.len());
    let j = rng.random_range(i..=v.route.len());
    Action { request_id: state.outstanding.as_ref().unwrap().id, vehicle_id: v.id, pickup_index: i, dropoff_index: j }
}

/// Weighted service and timing terms over the state after `action`:
/// `g1 * served / assigned + g2 * sum(t_p - pickup) + g3 * sum(t_d - dropoff)`,
/// using realised times when known and route estimates otherwise.
pub fn reward_oracle(state: &State, action: &Action, model: &TransitModel) -> f64 {
    let cfg = &model.config;
    let locs: Vec<Location> = model.network.locations().copied().collect();
    let at = |id: u32| *locs.iter().find(|l| l.id == id).unwrap();
    let request = state.outstanding.clone().unwrap();

    let mut routes: Vec<(u32, Vec<RouteStop>)> = state.vehicles.iter().map(|v| (v.id, v.route.clone())).collect();
    let vehicle = state.vehicles.iter().find(|v| v.id == action.vehicle_id).unwrap();
    let p = RouteStop::new(request.pickup, request.id, StopKind::Pickup);
    let d = RouteStop::new(request.dropoff, request.id, StopKind::Dropoff);
    let mut new_route = with_insertion(&vehicle.route, action.pickup_index, action.dropoff_index, p, d);
    let mut clock = state.time.max(vehicle.available_at);
    let mut here = vehicle.location;
    for stop in &mut new_route {
        clock += manhattan(&at(here), &at(stop.location));
        stop.t_est = clock;
        here = stop.location;
    }
    routes.iter_mut().find(|(id, _)| *id == vehicle.id).unwrap().1 = new_route;

    let mut all: Vec<Request> = state.requests.values().cloned().collect();
    let mut assigned = request.clone();
    assigned.status = RequestStatus::Assigned;
    all.push(assigned);
    let est = |rid: u32, kind: StopKind| {
        routes.iter().flat_map(|(_, r)| r.iter()).find(|s| s.request_id == rid && s.kind == kind).map(|s| s.t_est)
    };
    let served =
        all.iter().filter(|r| matches!(r.status, RequestStatus::InTransit | RequestStatus::DroppedOff)).count();
    let mut sum_p = 0.0;
    let mut sum_d = 0.0;
    for r in &all {
        if let Some(t) = r.actual_pickup.or_else(|| est(r.id, StopKind::Pickup)) {
            sum_p += (r.pickup_time - t) as f64;
        }
        if let Some(t) = r.actual_dropoff.or_else(|| est(r.id, StopKind::Dropoff)) {
            sum_d += (r.dropoff_time - t) as f64;
        }
    }
    cfg.gamma1 * served as f64 / all.len() as f64 + cfg.gamma2 * sum_p + cfg.gamma3 * sum_d
}

/// Decision problem whose horizon is the current time: every assignment
/// leads straight to a terminal state, so the expectimax value of a vehicle
/// is the reward of its best insertion. Vehicles start idle away from the
/// pickup so nothing is served at the horizon.
pub fn horizon_scenario(seed: u64) -> (State, TransitModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = random_points(&mut rng, 6);
    let cfg = ModelConfig { horizon: 0, t_max: 1000, ..ModelConfig::default() };
    let model = grid_model(&points, cfg);
    let pickup = 1;
    let dropoff = rng.random_range(2..=6);
    let vehicles: Vec<Vehicle> = (1..=rng.random_range(2..=3))
        .map(|id| {
            let loc = loop {
                let l = rng.random_range(1..=6);
                if points[l as usize - 1].1 != points[0].1 || points[l as usize - 1].2 != points[0].2 {
                    break l;
                }
            };
            let mut v = Vehicle::new(id, 4, loc);
            v.available_at = rng.random_range(0..10);
            v
        })
        .collect();
    let mut state = State::new(0, vehicles);
    state.set_outstanding(Request::new(1, 0, rng.random_range(0..20), rng.random_range(10..40), pickup, dropoff));
    (state, model)
}

/// Expectimax value of assigning the outstanding request to each vehicle,
/// using its cheapest insertion. Returns the strictly dominant vehicle.
pub fn expectimax_choice(state: &State, model: &TransitModel) -> Option<u32> {
    let locs: Vec<Location> = model.network.locations().copied().collect();
    let request = state.outstanding.as_ref().unwrap();
    let mut values: Vec<(f64, u32)> = state
        .vehicles
        .iter()
        .map(|v| {
            let (i, j, _) = exhaustive_insertion(v, request, &locs);
            let action = Action { request_id: request.id, vehicle_id: v.id, pickup_index: i, dropoff_index: j };
            (reward_oracle(state, &action, model), v.id)
        })
        .collect();
    values.sort_by(|a, b| b.0.total_cmp(&a.0));
    (values.len() == 1 || values[0].0 > values[1].0 + 1e-9).then_some(values[0].1)
}
