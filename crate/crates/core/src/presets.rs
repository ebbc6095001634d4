//! Named scenarios used by the bundled experiments, the pinned tables and
//! the acceptance suite.

use crate::graph::{grid_cluster, linear_cluster};
use crate::state::NoiseSpec;
use crate::strategies::Scenario;

/// Eight-qubit chain, end qubit dephased with `p_z = 0.7`, otherwise noiseless.
pub fn leaf_dephased_chain() -> Scenario {
    Scenario::new(linear_cluster(8).unwrap(), NoiseSpec::uniform(1.0, 1.0).with_dephasing(1, 0.7)).unwrap()
}

/// Eight-qubit chain with white noise, gate noise and three dephased qubits.
pub fn three_dephased_chain() -> Scenario {
    let noise = NoiseSpec::uniform(0.95, 0.998).with_dephasing(1, 0.81).with_dephasing(3, 0.9).with_dephasing(6, 0.85);
    Scenario::new(linear_cluster(8).unwrap(), noise).unwrap()
}

/// 3x4 cluster with dephased corners.
pub fn corner_dephased_grid() -> Scenario {
    let noise = NoiseSpec::uniform(0.98, 0.998)
        .with_dephasing(1, 0.9)
        .with_dephasing(4, 0.85)
        .with_dephasing(9, 0.95)
        .with_dephasing(12, 0.98);
    Scenario::new(grid_cluster(3, 4).unwrap(), noise).unwrap()
}

/// Chain of length 8 with `p_z` on qubits 1 and 6, the sweep cell at `(p_w, p_z)`.
pub fn sweep_cell(p_w: f64, p_z: f64, p_g: f64) -> Scenario {
    let noise = NoiseSpec::uniform(p_w, p_g).with_dephasing(1, p_z).with_dephasing(6, p_z);
    Scenario::new(linear_cluster(8).unwrap(), noise).unwrap()
}
