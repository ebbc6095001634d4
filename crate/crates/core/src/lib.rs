//! Exact simulation of graph-state purification under Pauli-diagonal noise.
//!
//! States are kept diagonal in the graph-state basis, so an `n`-qubit state is
//! a probability vector of length `2^n` and each purification step is a
//! permutation plus post-selection on the joint vector of two states. On top
//! of the single steps sit the strategies (recurrence, greedy and look-ahead
//! localized purification, and hybrids), expected resource accounting, and a
//! dense density-matrix oracle used to validate all of it.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod oracle;
pub mod pinning;
pub mod presets;
pub mod protocols;
pub mod resources;
pub mod state;
pub mod strategies;
pub mod validation;

pub use error::{Error, Result};
pub use graph::{ghz_star, grid_cluster, linear_cluster, two_coloring, GhzStar, Graph};
pub use protocols::{lep_step, prepurify_aux, tcp_step, StepOutcome, SubProtocol};
pub use resources::{interpolate_to_fidelity, interpolate_to_resources, relative_gain, ResourceLedger};
pub use state::{prepare_initial, DiagonalState, NoiseSpec, WhiteNoise};
pub use strategies::{run_strategy, Scenario, StopRule, StrategyKind, StrategyTrace};
