//! States diagonal in the graph-state basis, stored as dense probability
//! vectors over syndrome bit strings, and the Pauli channels acting on them.
//!
//! A Pauli operator maps a graph basis state to another basis state (up to a
//! phase that cancels in a diagonal mixture), so every Pauli channel becomes
//! a stochastic relabelling `lambda'[mu] = sum_k w_k * lambda[mu ^ m_k]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bit_string, pauli_flip_mask, GhzStar, Graph, Pauli};

/// Tolerance on `sum(lambda) == 1` accepted when building a state from data.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default upper bound on the joint index width (`2^26` doubles, 512 MiB).
pub const DEFAULT_JOINT_BIT_CAP: usize = 26;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterRange { name, value })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalState {
    graph: Arc<Graph>,
    lambdas: Vec<f64>,
}

impl DiagonalState {
    /// Ideal graph state: all weight on the all-zero syndrome.
    pub fn pure(graph: Arc<Graph>) -> Self {
        let mut lambdas = vec![0.0; 1 << graph.n()];
        lambdas[0] = 1.0;
        Self { graph, lambdas }
    }

    /// Uniform mixture over every syndrome.
    pub fn uniform(graph: Arc<Graph>) -> Self {
        let len = 1usize << graph.n();
        Self { graph, lambdas: vec![1.0 / len as f64; len] }
    }

    pub fn from_lambdas(graph: Arc<Graph>, lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() != 1 << graph.n() {
            return Err(Error::InvalidState(format!("length {} does not match 2^{}", lambdas.len(), graph.n())));
        }
        if let Some(bad) = lambdas.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::InvalidState(format!("negative or NaN entry {bad}")));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("entries sum to {sum}")));
        }
        Ok(Self { graph, lambdas })
    }

    pub(crate) fn from_raw(graph: Arc<Graph>, lambdas: Vec<f64>) -> Self {
        debug_assert_eq!(lambdas.len(), 1 << graph.n());
        Self { graph, lambdas }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Overlap with the ideal graph state, `lambda_0`.
    pub fn fidelity(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn total(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Mixture of relabellings: `lambda'[mu] = sum_k w_k * lambda[mu ^ m_k]`.
    pub fn apply_flip_mixture(&self, terms: &[(u64, f64)]) -> Self {
        let mut out = vec![0.0; self.lambdas.len()];
        for &(mask, w) in terms {
            if w == 0.0 {
                continue;
            }
            let mask = mask as usize;
            for (idx, o) in out.iter_mut().enumerate() {
                *o += w * self.lambdas[idx ^ mask];
            }
        }
        Self { graph: Arc::clone(&self.graph), lambdas: out }
    }

    /// Local dephasing `p rho + (1 - p) Z rho Z` on `qubit`.
    pub fn apply_dephasing(&self, qubit: usize, p_z: f64) -> Result<Self> {
        check_unit("p_z", p_z)?;
        let z = pauli_flip_mask(&self.graph, qubit, Pauli::Z)?.mask;
        Ok(self.apply_flip_mixture(&[(0, p_z), (z, 1.0 - p_z)]))
    }

    /// Local depolarizing noise `p rho + (1 - p)/4 sum_P P rho P` on `qubit`.
    pub fn apply_white_noise(&self, qubit: usize, p_w: f64) -> Result<Self> {
        check_unit("p_w", p_w)?;
        let q = (1.0 - p_w) / 4.0;
        let mut terms = vec![(0, p_w + q)];
        for pauli in Pauli::ALL {
            terms.push((pauli_flip_mask(&self.graph, qubit, pauli)?.mask, q));
        }
        Ok(self.apply_flip_mixture(&terms))
    }

    /// Depolarizing noise with the same parameter on each listed qubit.
    pub fn apply_white_noise_on(&self, qubits: &[usize], p_w: f64) -> Result<Self> {
        check_unit("p_w", p_w)?;
        if p_w == 1.0 {
            return Ok(self.clone());
        }
        qubits.iter().try_fold(self.clone(), |s, &q| s.apply_white_noise(q, p_w))
    }

    /// Relabels vertices: vertex `v` of `self` becomes vertex `perm[v - 1]` of
    /// `target`. `target` must be the image graph under `perm`.
    pub fn relabel(&self, perm: &[usize], target: Arc<Graph>) -> Result<Self> {
        let n = self.n();
        if perm.len() != n || target.n() != n {
            return Err(Error::InvalidArgument("permutation size mismatch".into()));
        }
        let mut out = vec![0.0; self.lambdas.len()];
        for (idx, &w) in self.lambdas.iter().enumerate() {
            let mut j = 0usize;
            for (bit, &image) in perm.iter().enumerate() {
                if idx >> bit & 1 == 1 {
                    j |= 1 << (image - 1);
                }
            }
            out[j] = w;
        }
        Ok(Self { graph: target, lambdas: out })
    }

    /// Text dump: one `bitstring coefficient` line per nonzero entry.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (idx, &w) in self.lambdas.iter().enumerate() {
            if w != 0.0 {
                let _ = writeln!(s, "{} {:.17e}", bit_string(idx as u64, self.n()), w);
            }
        }
        s
    }
}

/// Per-qubit depolarizing parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WhiteNoise {
    Uniform(f64),
    /// Keyed by physical vertex; missing vertices are noiseless.
    PerQubit(BTreeMap<usize, f64>),
}

impl WhiteNoise {
    pub fn at(&self, qubit: usize) -> f64 {
        match self {
            WhiteNoise::Uniform(p) => *p,
            WhiteNoise::PerQubit(map) => map.get(&qubit).copied().unwrap_or(1.0),
        }
    }
}

/// Initial-state and gate noise of a scenario.
///
/// `dephasing` maps a physical vertex to its `p_z`; absent vertices are not
/// dephased. `gate` is the depolarizing parameter of every CNOT.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub white: WhiteNoise,
    pub dephasing: BTreeMap<usize, f64>,
    pub gate: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::uniform(1.0, 1.0)
    }
}

impl NoiseSpec {
    pub fn uniform(p_w: f64, p_g: f64) -> Self {
        Self { white: WhiteNoise::Uniform(p_w), dephasing: BTreeMap::new(), gate: p_g }
    }

    pub fn with_dephasing(mut self, qubit: usize, p_z: f64) -> Self {
        self.dephasing.insert(qubit, p_z);
        self
    }

    pub fn white_at(&self, qubit: usize) -> f64 {
        self.white.at(qubit)
    }

    pub fn dephasing_at(&self, qubit: usize) -> f64 {
        self.dephasing.get(&qubit).copied().unwrap_or(1.0)
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        check_unit("p_g", self.gate)?;
        match &self.white {
            WhiteNoise::Uniform(p) => check_unit("p_w", *p)?,
            WhiteNoise::PerQubit(map) => {
                for (&q, &p) in map {
                    g.check_vertex(q)?;
                    check_unit("p_w", p)?;
                }
            }
        }
        for (&q, &p) in &self.dephasing {
            g.check_vertex(q)?;
            check_unit("p_z", p)?;
        }
        Ok(())
    }

    /// Compact description used in trace metadata, e.g. `pw=0.95 pg=0.998 z{1:0.81}`.
    pub fn describe(&self) -> String {
        let white = match &self.white {
            WhiteNoise::Uniform(p) => format!("{p}"),
            WhiteNoise::PerQubit(m) => format!("{m:?}"),
        };
        let z: Vec<String> = self.dephasing.iter().map(|(q, p)| format!("{q}:{p}")).collect();
        format!("pw={white} pg={} z{{{}}}", self.gate, z.join(","))
    }
}

/// Depolarizing noise on every qubit, then dephasing on the listed qubits in
/// ascending label order.
pub fn prepare_initial(graph: Arc<Graph>, noise: &NoiseSpec) -> Result<DiagonalState> {
    noise.validate(&graph)?;
    let mut s = DiagonalState::pure(Arc::clone(&graph));
    for q in graph.vertices() {
        let p = noise.white_at(q);
        if p != 1.0 {
            s = s.apply_white_noise(q, p)?;
        }
    }
    for (&q, &p) in &noise.dephasing {
        if p != 1.0 {
            s = s.apply_dephasing(q, p)?;
        }
    }
    Ok(s)
}

/// Noisy auxiliary star, carrying the scenario noise of the physical qubits
/// it spans.
pub fn prepare_auxiliary(star: &GhzStar, noise: &NoiseSpec) -> Result<DiagonalState> {
    check_unit("p_g", noise.gate)?;
    let graph = Arc::new(star.graph.clone());
    let mut s = DiagonalState::pure(Arc::clone(&graph));
    for v in graph.vertices() {
        let p = noise.white_at(star.physical(v));
        check_unit("p_w", p)?;
        if p != 1.0 {
            s = s.apply_white_noise(v, p)?;
        }
    }
    for v in graph.vertices() {
        let p = noise.dephasing_at(star.physical(v));
        if p != 1.0 {
            s = s.apply_dephasing(v, p)?;
        }
    }
    Ok(s)
}

/// Product distribution of two diagonal states, indexed by `(mu | nu)` with
/// the main block in the low bits.
#[derive(Clone, Debug)]
pub struct JointState {
    main_graph: Arc<Graph>,
    aux_graph: Arc<Graph>,
    lambdas: Vec<f64>,
}

pub fn joint(main: &DiagonalState, aux: &DiagonalState) -> Result<JointState> {
    joint_with_cap(main, aux, DEFAULT_JOINT_BIT_CAP)
}

pub fn joint_with_cap(main: &DiagonalState, aux: &DiagonalState, cap: usize) -> Result<JointState> {
    let bits = main.n() + aux.n();
    if bits > cap {
        return Err(Error::TooLarge { bits, cap });
    }
    let mut lambdas = Vec::with_capacity(1 << bits);
    for &eta in aux.lambdas() {
        lambdas.extend(main.lambdas().iter().map(|&l| l * eta));
    }
    Ok(JointState { main_graph: Arc::clone(main.graph_arc()), aux_graph: Arc::clone(aux.graph_arc()), lambdas })
}

impl JointState {
    pub fn main_n(&self) -> usize {
        self.main_graph.n()
    }

    pub fn aux_n(&self) -> usize {
        self.aux_graph.n()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn index(&self, mu: u64, nu: u64) -> u64 {
        mu | nu << self.main_n()
    }

    /// Applies an index bijection `x -> f(x)` to the probability vector.
    pub fn permute(&self, f: impl Fn(u64) -> u64) -> JointState {
        let mut out = vec![0.0; self.lambdas.len()];
        for (x, &w) in self.lambdas.iter().enumerate() {
            out[f(x as u64) as usize] += w;
        }
        JointState { main_graph: Arc::clone(&self.main_graph), aux_graph: Arc::clone(&self.aux_graph), lambdas: out }
    }

    /// Keeps entries whose auxiliary `zero_bits` are all zero and sums out the
    /// auxiliary `drop_bits`. Bits are 0-based positions inside the auxiliary
    /// block and together must cover it. Returns the renormalized main state
    /// and the kept mass.
    pub fn post_select_and_marginalize(
        &self,
        zero_bits: &[usize],
        drop_bits: &[usize],
    ) -> Result<(DiagonalState, f64)> {
        self.post_select_mapped(|x| x, zero_bits, drop_bits)
    }

    /// [`Self::post_select_and_marginalize`] applied to the image of the
    /// bijection `f`, without materializing the permuted vector.
    pub fn post_select_mapped(
        &self,
        f: impl Fn(u64) -> u64,
        zero_bits: &[usize],
        drop_bits: &[usize],
    ) -> Result<(DiagonalState, f64)> {
        let aux_n = self.aux_n();
        let mut zero_mask = 0u64;
        let mut drop_mask = 0u64;
        for &b in zero_bits {
            if b >= aux_n {
                return Err(Error::InvalidArgument(format!("bit {b} outside auxiliary block")));
            }
            zero_mask |= 1 << b;
        }
        for &b in drop_bits {
            if b >= aux_n {
                return Err(Error::InvalidArgument(format!("bit {b} outside auxiliary block")));
            }
            drop_mask |= 1 << b;
        }
        if zero_mask & drop_mask != 0 {
            return Err(Error::InvalidArgument("zero and drop bits overlap".into()));
        }
        if (zero_mask | drop_mask) != (1u64 << aux_n) - 1 {
            return Err(Error::InvalidArgument("zero and drop bits must cover the auxiliary block".into()));
        }
        let main_n = self.main_n();
        let main_mask = (1u64 << main_n) - 1;
        let mut out = vec![0.0; 1 << main_n];
        for (x, &w) in self.lambdas.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let y = f(x as u64);
            if (y >> main_n) & zero_mask == 0 {
                out[(y & main_mask) as usize] += w;
            }
        }
        let kept: f64 = out.iter().sum();
        if kept <= 0.0 {
            return Err(Error::ImpossiblePostSelection);
        }
        for v in &mut out {
            *v /= kept;
        }
        Ok((DiagonalState::from_raw(Arc::clone(&self.main_graph), out), kept))
    }
}
