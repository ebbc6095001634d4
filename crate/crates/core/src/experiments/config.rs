//! Experiment configuration files.
//!
//! ```toml
//! name = "tf090"
//! strategies = ["tcp", "s-0", "s-1", "c-0"]
//! mode = "fixed_fidelity"        # trace | fixed_fidelity | fixed_resources
//! target_fidelity = 0.9
//!
//! [graph]
//! kind = "linear"                # linear | grid | ghz | explicit
//! n = 8
//!
//! [noise]
//! white = 0.95                   # or a table keyed by vertex
//! gate = 0.998
//! z = { 1 = 0.81, 3 = 0.9 }
//!
//! [sweep]
//! pw = { start = 0.8, stop = 1.0, steps = 5 }
//! pz = [0.8, 0.85, 0.9, 0.95, 1.0]
//! z_qubits = [1, 6]
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ghz_star, grid_cluster, linear_cluster, Graph};
use crate::protocols::SubProtocol;
use crate::resources::DEFAULT_RESOURCE_CAP;
use crate::state::{NoiseSpec, WhiteNoise};
use crate::strategies::{Scenario, StopRule, StrategyKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Linear { n: usize },
    Grid { rows: usize, cols: usize },
    Ghz { center: usize, leaves: Vec<usize> },
    Explicit { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Linear { n } => linear_cluster(*n),
            GraphSpec::Grid { rows, cols } => grid_cluster(*rows, *cols),
            GraphSpec::Ghz { center, leaves } => {
                ghz_star(*center, leaves)?;
                let edges: Vec<(usize, usize)> = leaves.iter().map(|&l| (*center, l)).collect();
                Graph::new(leaves.len() + 1, &edges)
            }
            GraphSpec::Explicit { n, edges } => Graph::new(*n, edges),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WhiteSpec {
    Uniform(f64),
    PerQubit(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "one")]
    pub white: WhiteSpec,
    #[serde(default = "unit")]
    pub gate: f64,
    #[serde(default)]
    pub z: BTreeMap<String, f64>,
}

fn one() -> WhiteSpec {
    WhiteSpec::Uniform(1.0)
}

fn unit() -> f64 {
    1.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { white: one(), gate: 1.0, z: BTreeMap::new() }
    }
}

fn vertex_key(field: &str, key: &str) -> Result<usize> {
    key.parse().map_err(|_| Error::Config(format!("{field}.{key}: expected a vertex number")))
}

impl NoiseConfig {
    pub fn build(&self) -> Result<NoiseSpec> {
        let white = match &self.white {
            WhiteSpec::Uniform(p) => WhiteNoise::Uniform(*p),
            WhiteSpec::PerQubit(map) => WhiteNoise::PerQubit(
                map.iter().map(|(k, &p)| Ok((vertex_key("noise.white", k)?, p))).collect::<Result<_>>()?,
            ),
        };
        let dephasing = self.z.iter().map(|(k, &p)| Ok((vertex_key("noise.z", k)?, p))).collect::<Result<_>>()?;
        Ok(NoiseSpec { white, dephasing, gate: self.gate })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Trace,
    FixedFidelity,
    FixedResources,
}

/// Explicit list of values or an evenly spaced range including both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, steps } => match steps {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*steps).map(|k| start + (stop - start) * k as f64 / (*steps - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pw: Axis,
    pub pz: Axis,
    pub z_qubits: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub graph: GraphSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub strategies: Vec<String>,
    #[serde(default = "trace_mode")]
    pub mode: Mode,
    pub target_fidelity: Option<f64>,
    pub total_resources: Option<f64>,
    #[serde(default = "default_cap")]
    pub cap: f64,
    pub max_rounds: Option<usize>,
    pub tcp_first: Option<String>,
    pub sweep: Option<SweepConfig>,
}

fn trace_mode() -> Mode {
    Mode::Trace
}

fn default_cap() -> f64 {
    DEFAULT_RESOURCE_CAP
}

const BUNDLED: &[(&str, &str)] = &[
    ("leaf-chain", include_str!("../../configs/leaf-chain.toml")),
    ("dephased-chain", include_str!("../../configs/dephased-chain.toml")),
    ("dephased-grid", include_str!("../../configs/dephased-grid.toml")),
    ("tf090", include_str!("../../configs/tf090.toml")),
    ("tr1000", include_str!("../../configs/tr1000.toml")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the line or field at fault.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::Config(format!("{name}: {e}"));
        let graph = self.graph.build().map_err(|e| field("graph", e))?;
        self.noise.build()?.validate(&graph).map_err(|e| field("noise", e))?;
        if self.strategies.is_empty() {
            return Err(Error::Config("strategies: list is empty".into()));
        }
        self.strategy_kinds()?;
        if let Some(sub) = &self.tcp_first {
            sub.parse::<SubProtocol>().map_err(|e| field("tcp_first", e))?;
        }
        if !(self.cap > 0.0) {
            return Err(Error::Config(format!("cap: must be positive, got {}", self.cap)));
        }
        match self.mode {
            Mode::Trace => {}
            Mode::FixedFidelity => match self.target_fidelity {
                Some(f) if (0.0..=1.0).contains(&f) => {}
                Some(f) => return Err(Error::Config(format!("target_fidelity: {f} outside [0, 1]"))),
                None => return Err(Error::Config("target_fidelity: required by mode fixed_fidelity".into())),
            },
            Mode::FixedResources => match self.total_resources {
                Some(r) if r >= graph.edge_count() as f64 => {}
                Some(r) => {
                    return Err(Error::Config(format!(
                        "total_resources: {r} is below the {} channel uses of one copy",
                        graph.edge_count()
                    )))
                }
                None => return Err(Error::Config("total_resources: required by mode fixed_resources".into())),
            },
        }
        if let Some(sweep) = &self.sweep {
            for (name, axis) in [("sweep.pw", &sweep.pw), ("sweep.pz", &sweep.pz)] {
                let values = axis.values();
                if values.is_empty() {
                    return Err(Error::Config(format!("{name}: empty axis")));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::Config(format!("{name}: value {v} outside [0, 1]")));
                }
            }
            if sweep.z_qubits.is_empty() {
                return Err(Error::Config("sweep.z_qubits: list is empty".into()));
            }
            for &q in &sweep.z_qubits {
                graph.check_vertex(q).map_err(|e| field("sweep.z_qubits", e))?;
            }
        }
        Ok(())
    }

    pub fn strategy_kinds(&self) -> Result<Vec<StrategyKind>> {
        self.strategies
            .iter()
            .enumerate()
            .map(|(i, s)| s.parse().map_err(|e| Error::Config(format!("strategies[{i}]: {e}"))))
            .collect()
    }

    pub fn tcp_first(&self) -> SubProtocol {
        self.tcp_first.as_deref().and_then(|s| s.parse().ok()).unwrap_or(SubProtocol::P1)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(self.graph.build()?, self.noise.build()?)
    }

    /// Scenario of one sweep cell: uniform white noise `p_w` and dephasing
    /// `p_z` on the sweep qubits, replacing the configured initial noise.
    pub fn cell_scenario(&self, p_w: f64, p_z: f64) -> Result<Scenario> {
        let sweep = self.sweep.as_ref().ok_or_else(|| Error::Config("sweep: section missing".into()))?;
        let mut noise = NoiseSpec::uniform(p_w, self.noise.gate);
        for &q in &sweep.z_qubits {
            noise = noise.with_dephasing(q, p_z);
        }
        Scenario::new(self.graph.build()?, noise)
    }

    pub fn stop_rule(&self) -> StopRule {
        match self.mode {
            Mode::Trace => StopRule::rounds(self.max_rounds.unwrap_or(40)).with_cap(self.cap),
            Mode::FixedFidelity => StopRule::rounds(self.max_rounds.unwrap_or(200))
                .with_cap(self.cap)
                .with_target(self.target_fidelity.unwrap_or(1.0)),
            // a fixed budget is spent even when rounds stop paying off
            Mode::FixedResources => StopRule::rounds(self.max_rounds.unwrap_or(5000))
                .with_cap(self.cap)
                .with_budget(self.total_resources.unwrap_or(self.cap))
                .without_stagnation(),
        }
    }
}
