use crate::failure::{Failure, Outcome};
use crate::ScenarioDir;
use serde_json::Value;
use std::fmt::Display;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use xmcts::ctl::{check as check_formula, parse_formula, quantify_violations, Truth};
use xmcts::explain::{QuerySubmission, QueryType, Verdict};
use xmcts::mcts::TreeDump;
use xmcts::scenario::Scenario;
use xmcts::session::{ApplyOptions, PlanOptions, Session, SessionStatus};
use xmcts::sim::simulate as run_simulation;
use xmcts_service::{AppState, ServiceConfig};

fn opt(value: Option<impl Display>) -> String {
    value.map_or_else(|| "na".to_string(), |v| v.to_string())
}

/// A path if it exists, else `<dir>/<name>` or `<dir>/<name>.json`.
fn load_scenario(name: &str, dir: &ScenarioDir) -> Result<Scenario, Failure> {
    let direct = PathBuf::from(name);
    let mut tried = vec![direct.clone()];
    if let Some(dir) = &dir.scenario_dir {
        tried.push(dir.join(name));
        tried.push(dir.join(format!("{name}.json")));
    }
    match tried.iter().find(|p| p.is_file()) {
        Some(path) => Ok(Scenario::load(path)?),
        None => Err(Failure::user("not_found", format!("no scenario file '{name}'"))),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(Failure::internal)?;
    fs::write(path, text + "\n").map_err(|e| Failure::user("io", format!("{}: {e}", path.display())))
}

pub fn simulate(name: &str, dir: &ScenarioDir, epochs: u64, seed: Option<u64>, out: Option<&Path>) -> Outcome {
    let scenario = load_scenario(name, dir)?;
    let sim = run_simulation(&scenario, epochs, seed)?;
    if let Some(out) = out {
        fs::create_dir_all(out).map_err(|e| Failure::user("io", format!("{}: {e}", out.display())))?;
        for (epoch, dump) in &sim.dumps {
            write_json(&out.join(format!("tree-epoch-{epoch:04}.json")), dump)?;
        }
        write_json(&out.join("epochs.json"), &sim.records)?;
        write_json(&out.join("metrics.json"), &sim.metrics)?;
    }
    for r in &sim.records {
        if r.infeasible {
            let detail: Vec<String> = r
                .infeasible_violations
                .iter()
                .map(|(v, vs)| format!("{v}:{}", vs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")))
                .collect();
            eprintln!("infeasible epoch={} request={} {}", r.epoch, r.request_id, serde_json::json!(detail));
            println!("epoch={} time={} request={} infeasible=true", r.epoch, r.time, r.request_id);
        } else {
            println!(
                "epoch={} time={} request={} vehicle={} iterations={} nodes={}",
                r.epoch,
                r.time,
                r.request_id,
                opt(r.recommended),
                r.iterations_run,
                r.node_count
            );
        }
    }
    let m = &sim.metrics;
    println!("epochs_run={}", m.epochs_run);
    println!("infeasible_epochs={}", m.infeasible_epochs);
    println!("requests_assigned={}", m.requests_assigned);
    println!("requests_skipped={}", m.requests_skipped);
    println!("requests_served={}", m.requests_served);
    println!("service_rate={}", m.service_rate);
    println!("mean_pickup_deviation={}", opt(m.mean_pickup_deviation));
    println!("mean_dropoff_deviation={}", opt(m.mean_dropoff_deviation));
    println!("final_time={}", m.final_time);
    println!("terminal={}", m.terminal);
    Ok(())
}

fn truth(t: Truth) -> &'static str {
    match t {
        Truth::True => "true",
        Truth::False => "false",
        Truth::NotApplicable => "na",
    }
}

pub fn check(path: &Path, text: &str) -> Outcome {
    let formula = parse_formula(text).map_err(|e| Failure::user("parse_error", &e.message).with("offset", e.offset))?;
    let raw = fs::read_to_string(path).map_err(|e| Failure::user("io", format!("{}: {e}", path.display())))?;
    let dump: TreeDump = serde_json::from_str(&raw).map_err(|e| Failure::user("invalid_dump", e))?;
    let tree = dump.to_labeled_tree().map_err(|e| Failure::user("invalid_dump", e))?;
    let result = check_formula(&tree, &formula).map_err(|e| Failure::user("check_error", e))?;

    let values = result.top();
    println!("{:>6} {:>6} {:>8}  {}", "node", "parent", "visits", formula);
    for node in &dump.nodes {
        let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
        println!("{:>6} {:>6} {:>8}  {}", node.id, parent, node.visits, truth(values[node.id]));
    }
    println!();
    println!("formula={formula}");
    println!("verdict={}", result.root_verdict);
    if formula.as_quantifiable().is_some() {
        let s = quantify_violations(&tree, &formula).map_err(|e| Failure::user("check_error", e))?;
        println!("applicable={}", s.applicable_nodes);
        println!("violating={}", s.violating_nodes);
        println!("pct={}", s.violation_pct);
        println!("avg={}", opt(s.avg_degree));
        println!("min={}", opt(s.min_degree));
        println!("max={}", opt(s.max_degree));
        println!("scenarios={}", dump.iterations_run);
        let nodes: Vec<String> = s.violations.iter().map(|v| v.node.to_string()).collect();
        println!("violating_nodes={}", nodes.join(","));
    }
    Ok(())
}

/// `type:key=value,...` with numeric values passed as numbers.
fn parse_query(text: &str) -> Result<QuerySubmission, Failure> {
    let bad = |message: String| Failure::user("invalid_query", message);
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| bad(e.to_string()));
    }
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let qtype = match kind.trim() {
        "factual" => QueryType::Factual,
        "contrastive" => QueryType::Contrastive,
        "tree_expansion" | "treeexp" => QueryType::TreeExpansion,
        other => return Err(bad(format!("unknown query type '{other}'"))),
    };
    let mut query = QuerySubmission::new(qtype, &[]);
    for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{pair}'")))?;
        let value = value.trim();
        let value = value.parse::<u64>().map(Value::from).unwrap_or_else(|_| Value::from(value));
        query.bindings.insert(key.trim().to_string(), value);
    }
    Ok(query)
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Satisfied => "true",
        Verdict::Violated => "false",
        Verdict::Skipped => "skipped",
    }
}

pub fn explain(name: &str, dir: &ScenarioDir, text: &str, budget: Option<u64>, epoch: u64) -> Outcome {
    let mut query = parse_query(text)?;
    if budget.is_some() {
        query.budget = budget;
    }
    let mut session = Session::new(load_scenario(name, dir)?)?;
    while session.epoch() < epoch {
        if session.status() != SessionStatus::AwaitingPlan {
            return Err(Failure::user("not_found", format!("the scenario ends before epoch {epoch}")));
        }
        session.plan(PlanOptions::default())?;
        session.apply(ApplyOptions::default())?;
    }
    if session.status() != SessionStatus::AwaitingPlan {
        return Err(Failure::user("not_found", format!("the scenario ends before epoch {epoch}")));
    }
    let report = session.plan(PlanOptions::default())?;
    if let Some(inf) = &report.infeasibility {
        return Err(Failure::user("infeasible", format!("no vehicle can take request {}", inf.request_id))
            .with("epoch", report.epoch));
    }
    let explanation = session.submit_queries(None, &[query])?.pop().ok_or_else(|| Failure::internal("no answer"))?;
    if let Some(err) = &explanation.error {
        return Err(Failure::user(&err.code, &err.message));
    }

    println!("{}", explanation.text.trim_end());
    println!();
    println!("qtype={}", explanation.qtype);
    println!("epoch={}", explanation.epoch);
    println!("request={}", report.request_id);
    println!("recommended_vehicle={}", opt(report.recommended_vehicle));
    for (id, v) in &explanation.verdicts {
        println!("verdict.{id}={}", verdict(*v));
    }
    for (id, s) in &explanation.summaries {
        println!("summary.{id}.applicable={}", s.applicable);
        println!("summary.{id}.violating={}", s.violating);
        println!("summary.{id}.pct={}", s.pct);
        println!("summary.{id}.avg={}", opt(s.avg));
    }
    if let Some(c) = &explanation.comparison {
        println!("recommended_score={}", c.recommended_score);
        println!("alternative_score={}", c.alternative_score);
    }
    if let Some(n) = explanation.new_iterations {
        println!("new_iterations={n}");
    }
    for (k, v) in &explanation.structured {
        println!("slot.{k}={v}");
    }
    Ok(())
}

/// Resolves on SIGINT or SIGTERM. Handlers are registered on call, so
/// signals arriving before the first poll are not lost.
#[cfg(unix)]
fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut int = signal(SignalKind::interrupt())?;
    let mut term = signal(SignalKind::terminate())?;
    Ok(async move {
        tokio::select! {
            _ = int.recv() => {}
            _ = term.recv() => {}
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}

pub fn serve(host: &str, port: u16, store_dir: Option<PathBuf>, dir: ScenarioDir) -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::internal)?;
    runtime.block_on(async {
        let config = ServiceConfig { scenario_dir: dir.scenario_dir, store_dir };
        let state = AppState::new(config).map_err(|e| Failure::user("store_error", e))?;
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(|e| match e.kind() {
            ErrorKind::AddrInUse => Failure::user("port_busy", e).with("port", port),
            _ => Failure::user("bind_failed", e).with("port", port),
        })?;
        let addr = listener.local_addr().map_err(Failure::internal)?;
        let shutdown = shutdown_signal().map_err(Failure::internal)?;
        println!("listening={addr}");
        println!("sessions={}", state.session_ids().len());
        let _ = std::io::stdout().flush();
        xmcts_service::serve(listener, Arc::new(state), shutdown).await.map_err(Failure::internal)?;
        let _ = writeln!(std::io::stdout(), "stopped=true");
        Ok(())
    })
}
