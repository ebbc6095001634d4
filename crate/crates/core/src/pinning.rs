//! Reference values frozen into the regression tests.
//!
//! Entries marked `oracle` come straight from the dense simulator. Entries
//! marked `engine` are strategy traces too large for the oracle; they are only
//! written after the same strategy has been replayed through the oracle on a
//! smaller instance of the scenario.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{linear_cluster, Graph};
use crate::oracle::{graph_basis_diagonal, oracle_lep_candidate, oracle_prepare, oracle_tcp_step, DenseState};
use crate::presets;
use crate::protocols::SubProtocol;
use crate::state::NoiseSpec;
use crate::strategies::{
    format_steps, run_c_alpha, run_strategy, virtual_best_target, Scenario, Step, StopRule, StrategyKind,
    StrategyTrace, TraceEnd,
};

const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinnedEntry {
    pub scenario: String,
    /// SHA-256 of `scenario`, so a silently changed scenario shows up as a
    /// hash mismatch rather than a numeric one.
    pub hash: String,
    pub source: String,
    pub values: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PinnedTable {
    pub entries: BTreeMap<String, PinnedEntry>,
}

impl PinnedTable {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&PinnedEntry> {
        self.entries.get(name).ok_or_else(|| Error::Config(format!("no pinned entry '{name}'")))
    }

    fn insert(&mut self, name: &str, scenario: String, source: &str, values: Value) {
        let hash = scenario_hash(&scenario);
        self.entries.insert(name.into(), PinnedEntry { scenario, hash, source: source.into(), values });
    }
}

pub fn scenario_hash(description: &str) -> String {
    Sha256::digest(description.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Serialized form of a strategy trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinnedTrace {
    pub steps: Vec<String>,
    pub fidelity: Vec<f64>,
    pub resources: Vec<f64>,
    pub end: TraceEnd,
}

impl From<&StrategyTrace> for PinnedTrace {
    fn from(t: &StrategyTrace) -> Self {
        Self {
            steps: t.rounds.iter().map(|r| format_steps(&r.steps)).collect(),
            fidelity: t.rounds.iter().map(|r| r.fidelity).collect(),
            resources: t.rounds.iter().map(|r| r.resources).collect(),
            end: t.end,
        }
    }
}

/// Stop rule of every pinned trace.
pub fn pinned_stop() -> StopRule {
    StopRule::rounds(40)
}

pub fn describe(scenario: &Scenario, extra: &str) -> String {
    format!("{} | {} | {extra}", scenario.graph, scenario.noise.describe())
}

fn disagree(what: &str, a: f64, b: f64) -> Error {
    Error::InvalidState(format!("engine and oracle disagree on {what}: {a} vs {b}"))
}

fn check(what: &str, engine: f64, oracle: f64) -> Result<()> {
    if (engine - oracle).abs() <= AGREEMENT_TOL {
        Ok(())
    } else {
        Err(disagree(what, engine, oracle))
    }
}

fn oracle_lambdas(rho: &DenseState, g: &Graph) -> Result<Vec<f64>> {
    let (diag, residual) = graph_basis_diagonal(rho, g)?;
    if residual > 1e-12 {
        return Err(Error::InvalidState(format!("oracle state not graph-diagonal ({residual:e})")));
    }
    Ok(diag)
}

fn tcp_edge(table: &mut PinnedTable) -> Result<()> {
    let g = linear_cluster(2)?;
    let noise = NoiseSpec::uniform(1.0, 0.99).with_dephasing(1, 0.9);
    let rho = oracle_prepare(&g, &noise)?;
    let out = oracle_tcp_step(&rho, &rho, &g, SubProtocol::P1, noise.gate)?;
    let lambdas = oracle_lambdas(&out.state, &g)?;
    let s = Scenario::new(g, noise)?;
    table.insert(
        "tcp_edge",
        describe(&s, "one P1 round"),
        "oracle",
        json!({ "success_prob": out.success_prob, "lambdas": lambdas }),
    );
    Ok(())
}

fn lep_chain4(table: &mut PinnedTable) -> Result<()> {
    let g = linear_cluster(4)?;
    let noise = NoiseSpec::uniform(0.95, 0.99).with_dephasing(1, 0.8).with_dephasing(3, 0.9);
    let rho = oracle_prepare(&g, &noise)?;
    let out = oracle_lep_candidate(&rho, &g, &noise, 2, 1)?;
    let lambdas = oracle_lambdas(&out.state, &g)?;
    let s = Scenario::new(g, noise)?;
    table.insert(
        "lep_chain4",
        describe(&s, "localized step on 2, one pre-purification round"),
        "oracle",
        json!({ "success_prob": out.success_prob, "lambdas": lambdas }),
    );
    Ok(())
}

fn grid_initial(table: &mut PinnedTable) -> Result<()> {
    let s = presets::corner_dephased_grid();
    let f = oracle_prepare(&s.graph, &s.noise)?.graph_fidelity(&s.graph)?;
    check("grid initial fidelity", s.initial_state()?.fidelity(), f)?;
    table.insert("grid_initial_fidelity", describe(&s, "initial state"), "oracle", json!({ "fidelity": f }));
    Ok(())
}

/// Replays a strategy trace through the oracle step by step.
pub fn oracle_replay(scenario: &Scenario, trace: &StrategyTrace) -> Result<Vec<f64>> {
    let g = &scenario.graph;
    let alpha = trace.strategy.alpha();
    let mut rho = oracle_prepare(g, &scenario.noise)?;
    let mut out = vec![rho.graph_fidelity(g)?];
    for r in &trace.rounds[1..] {
        for step in &r.steps {
            rho = match *step {
                Step::Lep(t) => oracle_lep_candidate(&rho, g, &scenario.noise, t, alpha)?.state,
                Step::Tcp(sub) => oracle_tcp_step(&rho, &rho, g, sub, scenario.noise.gate)?.state,
            };
        }
        out.push(rho.graph_fidelity(g)?);
    }
    Ok(out)
}

fn checked_replay(name: &str, scenario: &Scenario, kind: StrategyKind, stop: StopRule) -> Result<Value> {
    let trace = run_strategy(scenario, kind, stop)?;
    let oracle = oracle_replay(scenario, &trace)?;
    for (r, f) in trace.rounds.iter().zip(&oracle) {
        check(&format!("{name} {kind} round {}", r.round), r.fidelity, *f)?;
    }
    Ok(json!({ "trace": PinnedTrace::from(&trace), "oracle_fidelity": oracle }))
}

fn traces(scenario: &Scenario, kinds: &[StrategyKind]) -> Result<Value> {
    let mut map = serde_json::Map::new();
    for &kind in kinds {
        let t = run_strategy(scenario, kind, pinned_stop())?;
        map.insert(kind.to_string(), serde_json::to_value(PinnedTrace::from(&t)).unwrap());
    }
    Ok(Value::Object(map))
}

pub fn leaf_chain_kinds() -> Vec<StrategyKind> {
    ["tcp", "s-0", "s-1", "s-5"].iter().map(|s| s.parse().unwrap()).collect()
}

fn leaf_chain(table: &mut PinnedTable) -> Result<()> {
    // the same noise on a chain of four, small enough for the oracle
    let small = Scenario::new(linear_cluster(4)?, NoiseSpec::uniform(1.0, 1.0).with_dephasing(1, 0.7))?;
    let mut replays = serde_json::Map::new();
    for kind in ["tcp", "s-0", "s-1"] {
        let kind: StrategyKind = kind.parse().unwrap();
        replays.insert(kind.to_string(), checked_replay("chain4", &small, kind, StopRule::rounds(4))?);
    }
    table.insert("leaf_chain4_replay", describe(&small, "rounds<=4"), "oracle", Value::Object(replays));

    let s = presets::leaf_dephased_chain();
    table.insert("leaf_chain_traces", describe(&s, "rounds<=40"), "engine", traces(&s, &leaf_chain_kinds())?);
    Ok(())
}

fn three_dephased(table: &mut PinnedTable) -> Result<()> {
    let noise = NoiseSpec::uniform(0.95, 0.998).with_dephasing(1, 0.81).with_dephasing(3, 0.9);
    let small = Scenario::new(linear_cluster(5)?, noise)?;
    let mut replays = serde_json::Map::new();
    for kind in ["tcp", "s-1"] {
        let kind: StrategyKind = kind.parse().unwrap();
        replays.insert(kind.to_string(), checked_replay("chain5", &small, kind, StopRule::rounds(3))?);
    }
    // independent first-target scan
    let main = small.initial_state()?;
    let engine = virtual_best_target(&main, &small.noise, 1)?.expect("chain has edges");
    let rho = oracle_prepare(&small.graph, &small.noise)?;
    let mut best = (0, f64::NEG_INFINITY);
    for t in small.graph.vertices() {
        let f = oracle_lep_candidate(&rho, &small.graph, &small.noise, t, 1)?.state.graph_fidelity(&small.graph)?;
        if f > best.1 {
            best = (t, f);
        }
    }
    if best.0 != engine.target {
        return Err(Error::InvalidState(format!("first target: engine {} oracle {}", engine.target, best.0)));
    }
    check("chain5 first target fidelity", engine.outcome.state.fidelity(), best.1)?;
    replays.insert("first_target_alpha1".into(), json!({ "target": best.0, "fidelity": best.1 }));
    table.insert("three_dephased_chain5", describe(&small, "rounds<=3"), "oracle", Value::Object(replays));

    let s = presets::three_dephased_chain();
    let first = virtual_best_target(&s.initial_state()?, &s.noise, 1)?.expect("chain has edges");
    let mut values = traces(&s, &["tcp", "s-0", "s-1", "s-5"].map(|k| k.parse().unwrap()))?;
    values["first_target_alpha1"] = json!({ "target": first.target, "fidelity": first.outcome.state.fidelity() });
    table.insert("three_dephased_traces", describe(&s, "rounds<=40"), "engine", values);
    Ok(())
}

fn look_ahead_pair(table: &mut PinnedTable) -> Result<()> {
    let s = Scenario::new(
        linear_cluster(4)?,
        NoiseSpec::uniform(1.0, 0.999).with_dephasing(1, 0.8).with_dephasing(3, 0.8),
    )?;
    let trace = run_c_alpha(&s, 0, StopRule::rounds(1))?;
    let g = &s.graph;
    let rho = oracle_prepare(g, &s.noise)?;
    let mut best: (Vec<usize>, f64) = (Vec::new(), f64::NEG_INFINITY);
    let mut best_single = f64::NEG_INFINITY;
    for t1 in g.vertices() {
        let first = oracle_lep_candidate(&rho, g, &s.noise, t1, 0)?;
        best_single = best_single.max(first.state.graph_fidelity(g)?);
        for t2 in g.vertices() {
            let f = oracle_lep_candidate(&first.state, g, &s.noise, t2, 0)?.state.graph_fidelity(g)?;
            if f > best.1 {
                best = (vec![t1, t2], f);
            }
        }
    }
    let oracle_steps = if best.1 > best_single + 1e-12 { best.0.clone() } else { Vec::new() };
    let engine_steps: Vec<usize> = trace.rounds[1]
        .steps
        .iter()
        .map(|s| match s {
            Step::Lep(t) => *t,
            Step::Tcp(_) => 0,
        })
        .collect();
    if engine_steps.len() == 2 && engine_steps != oracle_steps {
        return Err(Error::InvalidState(format!("look-ahead pair: engine {engine_steps:?} oracle {oracle_steps:?}")));
    }
    if engine_steps.len() == 2 {
        check("look-ahead pair fidelity", trace.rounds[1].fidelity, best.1)?;
    }
    table.insert(
        "look_ahead_chain4",
        describe(&s, "one combined round, no pre-purification"),
        "oracle",
        json!({ "pair": best.0, "pair_fidelity": best.1, "single_fidelity": best_single, "committed": engine_steps }),
    );
    Ok(())
}

/// Recomputes every pinned entry. Fails if engine and oracle disagree.
pub fn compute_pins() -> Result<PinnedTable> {
    let mut table = PinnedTable::default();
    tcp_edge(&mut table)?;
    lep_chain4(&mut table)?;
    grid_initial(&mut table)?;
    leaf_chain(&mut table)?;
    three_dephased(&mut table)?;
    look_ahead_pair(&mut table)?;
    Ok(table)
}

/// Engine-only subset of [`compute_pins`], cheap enough for every test run.
pub fn engine_traces() -> Result<(Value, Value)> {
    let leaf = traces(&presets::leaf_dephased_chain(), &leaf_chain_kinds())?;
    let three = traces(&presets::three_dephased_chain(), &["tcp", "s-0", "s-1", "s-5"].map(|k| k.parse().unwrap()))?;
    Ok((leaf, three))
}
