//! One function per acceptance criterion. Each returns a short summary on
//! success and a description of the first failure otherwise.

use super::oracle::*;
use super::{fixture, golden_path};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::time::Instant;
use xmcts::ctl::{check, parse_formula, quantify_violations, Formula, LabeledTree, Labels, TemporalOp, Var};
use xmcts::explain::{
    handle_queries, render_explanation, Direction, ExplainEnv, QuerySubmission, QueryType, RenderRequest,
    ScoreComparison, Templates,
};
use xmcts::mcts::{plan, SearchParams};
use xmcts::model::{best_insertion, reward, Location, Request, StopKind, Vehicle};
use xmcts::session::{PlanOptions, Session};
use xmcts::sim::simulate;

pub type Outcome = Result<String, String>;
pub type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

pub const CTL_CASES: u64 = 1000;

pub fn ctl_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut nodes = 0;
    for case in 0..CTL_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let tree = random_tree(&mut rng, 100);
        let formula = random_formula(&mut rng, 4);
        let result = check(&tree, &formula).map_err(|e| format!("case {case}: {e}"))?;
        let mut oracle = PathOracle::new(&tree);
        for id in 0..tree.len() {
            let want = oracle.eval(&formula, id);
            ensure!(
                want.matches(result.top()[id]),
                "case {case}: node {id} of {formula}: checker {:?}, oracle {want:?}",
                result.top()[id]
            );
        }
        nodes += tree.len();
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "suite took {secs:.1}s");
    Ok(format!("{CTL_CASES} trees, {nodes} nodes agree in {secs:.2}s"))
}

fn dual(op: TemporalOp, phi: &Formula) -> Formula {
    let partner = match op {
        TemporalOp::AG => TemporalOp::EF,
        TemporalOp::AF => TemporalOp::EG,
        TemporalOp::AX => TemporalOp::EX,
        TemporalOp::EF => TemporalOp::AG,
        TemporalOp::EG => TemporalOp::AF,
        TemporalOp::EX => TemporalOp::AX,
    };
    Formula::not(Formula::temporal(partner, Formula::not(phi.clone())))
}

pub fn ctl_dualities() -> Outcome {
    let mut compared = 0;
    for case in 0..CTL_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let tree = random_tree(&mut rng, 100);
        let phi = random_formula(&mut rng, 3);
        for op in [TemporalOp::AG, TemporalOp::AF, TemporalOp::AX] {
            let direct = check(&tree, &Formula::temporal(op, phi.clone())).map_err(|e| e.to_string())?;
            let via = check(&tree, &dual(op, &phi)).map_err(|e| e.to_string())?;
            ensure!(direct.top() == via.top(), "case {case}: {} disagrees with its dual on {phi}", op.keyword());
            compared += tree.len();
        }
    }
    Ok(format!("AG/AF/AX against their duals on {compared} node values"))
}

/// Star of 31 nodes: a root with no drop-off estimate and 30 applicable
/// leaves, three of them late by 19, 23 and 27 minutes.
pub fn running_example_tree() -> LabeledTree {
    let base = Labels::default().with(Var::TD, 333.0).with(Var::TA, 10.0);
    let mut root = base.clone();
    root.mark_not_applicable(Var::TEst);
    let mut labels = vec![root];
    let late = [(4, 19.0), (11, 23.0), (25, 27.0)];
    for k in 1..=30 {
        let est = match late.iter().find(|(n, _)| *n == k) {
            Some((_, degree)) => 343.0 + degree,
            None => 333.0 + (k % 7) as f64,
        };
        labels.push(base.clone().with(Var::TEst, est));
    }
    let parents: Vec<Option<usize>> = (0..=30).map(|i| if i == 0 { None } else { Some(0) }).collect();
    let mut tree = LabeledTree::from_parents(&parents, labels);
    tree.iterations_run = 150;
    tree
}

pub fn quantitative_golden() -> Outcome {
    let tree = running_example_tree();
    let f = parse_formula("AG (t_est <= t_d + t_a)").map_err(|e| e.to_string())?;
    let s = quantify_violations(&tree, &f).map_err(|e| e.to_string())?;
    ensure!(s.applicable_nodes == 30, "applicable {}", s.applicable_nodes);
    ensure!(s.violating_nodes == 3, "violating {}", s.violating_nodes);
    ensure!(s.violation_pct == 10.0, "pct {}", s.violation_pct);
    ensure!(s.avg_degree == Some(23.0), "avg {:?}", s.avg_degree);
    ensure!(s.min_degree == Some(19.0), "min {:?}", s.min_degree);
    ensure!(s.max_degree == Some(27.0), "max {:?}", s.max_degree);
    Ok("pct 10, avg 23, min 19, max 27".into())
}

fn summary(pct: f64, degrees: &[f64], applicable: usize) -> xmcts::ctl::QuantitativeSummary {
    let n = degrees.len();
    xmcts::ctl::QuantitativeSummary {
        formula: String::new(),
        applicable_nodes: applicable,
        violating_nodes: n,
        violation_pct: pct,
        avg_degree: Some(degrees.iter().sum::<f64>() / n as f64),
        min_degree: degrees.iter().copied().reduce(f64::min),
        max_degree: degrees.iter().copied().reduce(f64::max),
        scenario_count: 150,
        violations: vec![],
    }
}

fn base_request(qtype: QueryType) -> RenderRequest {
    RenderRequest {
        qtype,
        event: StopKind::Dropoff,
        desired_time: 333,
        start_of_day: 720,
        scenario_count: 150,
        stop_count: Some(4),
        finding: None,
        hard: None,
        comparison: None,
        new_iterations: None,
        alt_vehicle: Some("vehicle 2".into()),
    }
}

fn comparison(rec: f64, alt: f64, service: f64, punctuality: f64) -> ScoreComparison {
    ScoreComparison {
        recommended_vehicle: 1,
        alternative_vehicle: 2,
        recommended_score: rec,
        alternative_score: alt,
        recommended_mean: Some(rec / 120.0),
        alternative_mean: Some(alt / 30.0),
        recommended_visits: 120,
        alternative_visits: 30,
        service_rate_improvement_pct: Some(service),
        punctuality_improvement_pct: Some(punctuality),
    }
}

/// Slot sets of the three worked examples.
pub fn golden_requests() -> Vec<(&'static str, RenderRequest)> {
    let mut q1 = base_request(QueryType::Factual);
    q1.finding = Some((Direction::Late, summary(10.0, &[19.0, 23.0, 27.0], 30)));

    let mut q2 = base_request(QueryType::Contrastive);
    q2.stop_count = None;
    q2.comparison = Some(comparison(192.0, 35.0, 400.0, 450.0));

    let mut q3 = base_request(QueryType::TreeExpansion);
    q3.scenario_count = 224;
    q3.new_iterations = Some(74);
    q3.finding = Some((Direction::Early, summary(84.0, &[30.0, 33.0, 36.0], 50)));
    q3.comparison = Some(comparison(192.0, 35.0, 400.0, 450.0));
    vec![("q1.txt", q1), ("q2.txt", q2), ("q3.txt", q3)]
}

pub fn explanation_goldens() -> Outcome {
    let templates = Templates::builtin();
    for (file, req) in golden_requests() {
        let want = std::fs::read_to_string(golden_path(file)).map_err(|e| format!("{file}: {e}"))?;
        let got = render_explanation(&req, &templates).map_err(|e| format!("{file}: {e}"))?;
        ensure!(got.text == want, "{file} differs:\n--- got\n{}\n--- want\n{}", got.text, want);
    }
    Ok("Q1, Q2, Q3 byte-exact".into())
}

pub fn reward_oracle_match() -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
        let (state, model) = random_state(&mut rng);
        let action = random_action(&mut rng, &state);
        let got = reward(&state, &action, &model).map_err(|e| format!("case {case}: {e}"))?;
        let want = reward_oracle(&state, &action, &model);
        let delta = (got - want).abs();
        ensure!(delta <= 1e-9, "case {case}: reward {got}, oracle {want}");
        worst = worst.max(delta);
    }
    Ok(format!("50 states, max |delta| {worst:e}"))
}

pub fn hard_constraint_safety() -> Outcome {
    let scenario = fixture("tight.json");
    let (mut applied, mut infeasible) = (0, 0);
    for seed in 0..100 {
        let sim = simulate(&scenario, 5, Some(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        for r in &sim.records {
            if r.infeasible {
                infeasible += 1;
                ensure!(r.applied.is_none(), "seed {seed} epoch {}: infeasible epoch was assigned", r.epoch);
                ensure!(
                    !r.infeasible_violations.is_empty() && r.infeasible_violations.iter().all(|(_, v)| !v.is_empty()),
                    "seed {seed} epoch {}: infeasible without per-vehicle violations",
                    r.epoch
                );
            } else {
                ensure!(r.applied.is_some(), "seed {seed} epoch {}: feasible epoch left unassigned", r.epoch);
                ensure!(
                    r.violations.is_empty(),
                    "seed {seed} epoch {}: applied action violates {:?}",
                    r.epoch,
                    r.violations
                );
                applied += 1;
            }
        }
    }
    ensure!(infeasible > 0, "no infeasible epoch was exercised");
    Ok(format!("{applied} applied actions clean, {infeasible} infeasible epochs reported"))
}

pub fn treeexp_accounting() -> Outcome {
    let mut session = Session::new(fixture("fixture.json")).map_err(|e| e.to_string())?;
    session.plan(PlanOptions::default()).map_err(|e| e.to_string())?;
    let base = session.tree().unwrap().clone();
    let model = session.model().clone();
    let rec = base.recommendation().unwrap().vehicle_id;
    let alt =
        base.root_node().children.iter().map(|&c| base.nodes[c].vehicle_id().unwrap()).find(|&v| v != rec).unwrap();
    let scenario = session.scenario().clone();
    for budget in [0u64, 1, 25, 74] {
        let mut tree = base.clone();
        let child = tree.ensure_child(tree.root, alt, &model).map_err(|e| e.to_string())?;
        let (visits, runs) = (tree.nodes[child].visits, tree.iterations_run);
        let n = tree.expand_alternative(child, budget, 5, &model).map_err(|e| e.to_string())?;
        ensure!(n == budget, "B={budget}: reported {n}");
        ensure!(
            tree.nodes[child].visits == visits + budget,
            "B={budget}: visits grew by {}",
            tree.nodes[child].visits - visits
        );
        ensure!(
            tree.iterations_run == runs + budget,
            "B={budget}: iterations_run grew by {}",
            tree.iterations_run - runs
        );

        let mut tree = base.clone();
        let mut q =
            QuerySubmission::new(QueryType::TreeExpansion, &[("passenger", json!(1)), ("alt_vehicle", json!(alt))]);
        q.budget = Some(budget);
        let templates = Templates::builtin();
        let env = ExplainEnv {
            model: &model,
            settings: &scenario.explain,
            templates: &templates,
            fuel_modeled: false,
            epoch: 0,
            seed: 3,
        };
        let out = handle_queries(&mut tree, &env, &[q]);
        ensure!(out[0].error.is_none(), "B={budget}: {:?}", out[0].error);
        ensure!(out[0].new_iterations == Some(budget), "B={budget}: explanation reports {:?}", out[0].new_iterations);
        let phrase = format!("looked at {budget} new");
        ensure!(out[0].text.contains(&phrase), "B={budget}: text lacks '{phrase}'");
    }
    Ok("B in {0, 1, 25, 74}: visits, iterations_run and T3 text all +B".into())
}

/// Two vehicles on a line. Vehicle 1 already carries a passenger to the far
/// end at full capacity; the new trip lies on its way, so its cheapest
/// insertion overloads it. Vehicle 2 is empty but far away.
pub fn capacity_trap() -> (xmcts::model::State, xmcts::model::TransitModel) {
    let model = grid_model(
        &[(1, 0.0, 0.0), (2, 1.0, 0.0), (3, 2.0, 0.0), (4, 40.0, 0.0)],
        xmcts::model::ModelConfig::default(),
    );
    let mut carried = Request::new(100, 0, 0, 40, 1, 4);
    carried.status = xmcts::model::RequestStatus::InTransit;
    carried.actual_pickup = Some(0);
    carried.vehicle = Some(1);
    let mut v1 = Vehicle::new(1, 1, 1);
    v1.occupancy = 1;
    v1.assigned = vec![100];
    let mut stop = xmcts::model::RouteStop::new(4, 100, StopKind::Dropoff);
    stop.t_est = 40;
    v1.route = vec![stop];
    let v2 = Vehicle::new(2, 4, 4);
    let mut state = xmcts::model::State::new(0, vec![v1, v2]);
    state.requests.insert(100, carried);
    state.set_outstanding(Request::new(1, 0, 2, 3, 2, 3));
    (state, model)
}

pub fn mcts_sanity() -> Outcome {
    let (state, model) = capacity_trap();
    for seed in 0..100 {
        let params = SearchParams { seed, ..SearchParams::default() };
        let out = plan(&state, &params, &model).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(out.action.vehicle_id == 2, "seed {seed}: recommended the overloaded vehicle");
    }

    let (mut matched, mut scenarios, mut seed) = (0, 0, 0u64);
    while scenarios < 100 {
        let (state, model) = horizon_scenario(seed);
        seed += 1;
        let Some(best) = expectimax_choice(&state, &model) else { continue };
        scenarios += 1;
        let params = SearchParams { iterations: 500, seed, ..SearchParams::default() };
        let out = plan(&state, &params, &model).map_err(|e| format!("scenario {seed}: {e}"))?;
        if out.action.vehicle_id == best {
            matched += 1;
        }
    }
    ensure!(matched >= 95, "matched the expectimax oracle in {matched}/100");
    Ok(format!("capacity trap 100/100, expectimax {matched}/100"))
}

pub fn insertion_oracle() -> Outcome {
    for case in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + case);
        let n_locs = rng.random_range(2..=7);
        let points = random_points(&mut rng, n_locs);
        let model = grid_model(&points, xmcts::model::ModelConfig::default());
        let locs: Vec<Location> = model.network.locations().copied().collect();
        let mut v = Vehicle::new(1, 4, rng.random_range(1..=n_locs));
        let len = rng.random_range(0..=6);
        v.route = random_route(&mut rng, n_locs, len);
        let r = Request::new(1, 0, 10, 40, rng.random_range(1..=n_locs), rng.random_range(1..=n_locs));
        let got = best_insertion(&v, &r, 0, &model).map_err(|e| e.to_string())?;
        let want = exhaustive_insertion(&v, &r, &locs);
        let got = (got.action.pickup_index, got.action.dropoff_index, got.added_minutes);
        ensure!(got == want, "case {case}: best_insertion {got:?}, enumeration {want:?}");
    }
    Ok("200 routes match exhaustive enumeration".into())
}

pub fn determinism() -> Outcome {
    let scenario = fixture("fixture.json");
    let run = || -> Result<(String, String), String> {
        let sim = simulate(&scenario, 5, Some(42)).map_err(|e| e.to_string())?;
        Ok((serde_json::to_string(&sim.dumps).unwrap(), serde_json::to_string(&sim.metrics).unwrap()))
    };
    let (a, b) = (run()?, run()?);
    ensure!(a.0 == b.0, "tree dumps differ between runs");
    ensure!(a.1 == b.1, "metrics differ between runs");
    Ok(format!("{} bytes of dumps identical", a.0.len()))
}

pub fn all() -> Vec<Criterion> {
    vec![
        ("ctl_oracle_equivalence", ctl_oracle_equivalence as fn() -> Outcome),
        ("ctl_dualities", ctl_dualities),
        ("quantitative_summary_golden", quantitative_golden),
        ("explanation_goldens", explanation_goldens),
        ("reward_oracle", reward_oracle_match),
        ("hard_constraint_safety", hard_constraint_safety),
        ("treeexp_accounting", treeexp_accounting),
        ("mcts_sanity", mcts_sanity),
        ("insertion_oracle", insertion_oracle),
        ("determinism", determinism),
    ]
}
