use std::path::Path;
use std::sync::Arc;

use lep_core::pinning::{describe, engine_traces, scenario_hash, PinnedTable, PinnedTrace};
use lep_core::presets;
use lep_core::strategies::{run_c_alpha, AuxBank, Step};
use lep_core::{
    linear_cluster, prepare_initial, run_strategy, tcp_step, NoiseSpec, Scenario, StopRule, StrategyKind, SubProtocol,
};
use serde_json::Value;

const TOL: f64 = 1e-10;

fn table() -> PinnedTable {
    PinnedTable::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/pinned.json")).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn assert_close(what: &str, got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len(), "{what}: length");
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        assert!((a - b).abs() <= TOL, "{what}[{i}]: {a} vs {b}");
    }
}

fn checked<'a>(t: &'a PinnedTable, name: &str, scenario: &Scenario, extra: &str) -> &'a Value {
    let e = t.get(name).unwrap();
    assert_eq!(e.scenario, describe(scenario, extra), "{name}: scenario drifted");
    assert_eq!(e.hash, scenario_hash(&e.scenario), "{name}: hash");
    &e.values
}

#[test]
fn hashes_match_descriptions() {
    for (name, e) in &table().entries {
        assert_eq!(e.hash, scenario_hash(&e.scenario), "{name}");
    }
}

#[test]
fn tcp_edge_matches_oracle() {
    let t = table();
    let s = Scenario::new(linear_cluster(2).unwrap(), NoiseSpec::uniform(1.0, 0.99).with_dephasing(1, 0.9)).unwrap();
    let v = checked(&t, "tcp_edge", &s, "one P1 round");
    let out = tcp_step(&s.initial_state().unwrap(), SubProtocol::P1, s.noise.gate).unwrap();
    assert!((out.success_prob - v["success_prob"].as_f64().unwrap()).abs() <= TOL);
    assert_close("tcp_edge", out.state.lambdas(), &floats(&v["lambdas"]));
}

#[test]
fn localized_step_matches_oracle() {
    let t = table();
    let noise = NoiseSpec::uniform(0.95, 0.99).with_dephasing(1, 0.8).with_dephasing(3, 0.9);
    let s = Scenario::new(linear_cluster(4).unwrap(), noise).unwrap();
    let v = checked(&t, "lep_chain4", &s, "localized step on 2, one pre-purification round");
    let bank = AuxBank::new(&s.graph, &s.noise, 1).unwrap();
    let c = bank.step(&s.initial_state().unwrap(), 2).unwrap();
    assert!((c.outcome.success_prob - v["success_prob"].as_f64().unwrap()).abs() <= TOL);
    assert_close("lep_chain4", c.outcome.state.lambdas(), &floats(&v["lambdas"]));
}

#[test]
fn grid_initial_fidelity_matches_oracle() {
    let t = table();
    let s = presets::corner_dephased_grid();
    let v = checked(&t, "grid_initial_fidelity", &s, "initial state");
    let f = prepare_initial(Arc::clone(&s.graph), &s.noise).unwrap().fidelity();
    assert!((f - v["fidelity"].as_f64().unwrap()).abs() <= TOL);
}

fn replays_match(name: &str, s: &Scenario, extra: &str, rounds: usize) {
    let t = table();
    let v = checked(&t, name, s, extra);
    for (kind, entry) in v.as_object().unwrap() {
        let Ok(kind) = kind.parse::<StrategyKind>() else { continue };
        let trace = run_strategy(s, kind, StopRule::rounds(rounds)).unwrap();
        let got: Vec<f64> = trace.rounds.iter().map(|r| r.fidelity).collect();
        assert_close(&format!("{name} {kind} oracle"), &got, &floats(&entry["oracle_fidelity"]));
    }
}

#[test]
fn short_traces_match_oracle_replays() {
    let leaf = Scenario::new(linear_cluster(4).unwrap(), NoiseSpec::uniform(1.0, 1.0).with_dephasing(1, 0.7)).unwrap();
    replays_match("leaf_chain4_replay", &leaf, "rounds<=4", 4);
    let noise = NoiseSpec::uniform(0.95, 0.998).with_dephasing(1, 0.81).with_dephasing(3, 0.9);
    let three = Scenario::new(linear_cluster(5).unwrap(), noise).unwrap();
    replays_match("three_dephased_chain5", &three, "rounds<=3", 3);
}

fn traces_match(name: &str, pinned: &Value, fresh: &Value) {
    for (kind, want) in pinned.as_object().unwrap() {
        if kind.parse::<StrategyKind>().is_err() {
            continue;
        }
        let want: PinnedTrace = serde_json::from_value(want.clone()).unwrap();
        let got: PinnedTrace = serde_json::from_value(fresh[kind].clone()).unwrap();
        assert_eq!(got.steps, want.steps, "{name} {kind} steps");
        assert_eq!(got.end, want.end, "{name} {kind} end");
        assert_close(&format!("{name} {kind} fidelity"), &got.fidelity, &want.fidelity);
        let rel: Vec<f64> = got.resources.iter().zip(&want.resources).map(|(a, b)| a / b).collect();
        assert_close(&format!("{name} {kind} resources"), &rel, &vec![1.0; rel.len()]);
    }
}

#[test]
fn long_traces_are_reproduced() {
    let t = table();
    let leaf = checked(&t, "leaf_chain_traces", &presets::leaf_dephased_chain(), "rounds<=40");
    let three = checked(&t, "three_dephased_traces", &presets::three_dephased_chain(), "rounds<=40");
    let (fresh_leaf, fresh_three) = engine_traces().unwrap();
    traces_match("leaf_chain_traces", leaf, &fresh_leaf);
    traces_match("three_dephased_traces", three, &fresh_three);
}

#[test]
fn look_ahead_pair_matches_oracle() {
    let t = table();
    let noise = NoiseSpec::uniform(1.0, 0.999).with_dephasing(1, 0.8).with_dephasing(3, 0.8);
    let s = Scenario::new(linear_cluster(4).unwrap(), noise).unwrap();
    let v = checked(&t, "look_ahead_chain4", &s, "one combined round, no pre-purification");
    let trace = run_c_alpha(&s, 0, StopRule::rounds(1)).unwrap();
    let committed: Vec<u64> = trace.rounds[1]
        .steps
        .iter()
        .map(|s| match s {
            Step::Lep(t) => *t as u64,
            Step::Tcp(_) => 0,
        })
        .collect();
    let want: Vec<u64> = v["pair"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(committed, want);
    assert!((trace.rounds[1].fidelity - v["pair_fidelity"].as_f64().unwrap()).abs() <= TOL);
}
