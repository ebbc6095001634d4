//! Fixtures shared by the benchmarks.

use lep_core::graph::partition_for_target;
use lep_core::graph::TargetPartition;
use lep_core::state::prepare_auxiliary;
use lep_core::{ghz_star, linear_cluster, DiagonalState, NoiseSpec, Scenario};

/// Chain of `n` qubits with white noise and two dephased qubits.
pub fn noisy_chain(n: usize) -> Scenario {
    let noise = NoiseSpec::uniform(0.95, 0.998).with_dephasing(1, 0.85).with_dephasing(n / 2 + 1, 0.9);
    Scenario::new(linear_cluster(n).unwrap(), noise).unwrap()
}

/// Main state, partition and raw auxiliary for a localized step on `target`.
pub fn lep_inputs(scenario: &Scenario, target: usize) -> (DiagonalState, TargetPartition, DiagonalState) {
    let main = scenario.initial_state().unwrap();
    let part = partition_for_target(&scenario.graph, target).unwrap();
    let aux = prepare_auxiliary(&ghz_star(target, &part.neighbors).unwrap(), &scenario.noise).unwrap();
    (main, part, aux)
}
