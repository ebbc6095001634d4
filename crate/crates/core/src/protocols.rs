//! Single purification steps: the two-colorable recurrence sub-protocols
//! P1/P2 and the localized step that consumes a star-shaped auxiliary.
//!
//! A layer of CNOTs between two copies maps a product of graph basis states
//! to another product of basis states, i.e. it acts on the joint syndrome
//! index as an invertible XOR map. Each noisy CNOT carries depolarizing noise
//! on its two qubits before the ideal gate. Within one layer the CNOTs act on
//! disjoint qubit pairs, so all of those noise maps commute to the front and
//! are applied as one layer of single-qubit channels before the permutation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ghz_star, two_coloring, Graph, TargetPartition, TwoColoring};
use crate::state::{check_unit, joint, DiagonalState};

/// GF(2)-linear map on joint indices built from bit transfers
/// `bit[dst] ^= bit[src]`. No source is ever a destination, so the transfers
/// commute and the map is its own inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorMap {
    bits: usize,
    pairs: Vec<(u32, u32)>,
}

impl XorMap {
    fn new(bits: usize, pairs: Vec<(u32, u32)>) -> Self {
        debug_assert!(pairs.iter().all(|&(s, _)| pairs.iter().all(|&(_, d)| d != s)));
        Self { bits, pairs }
    }

    /// Width of the joint index.
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `(src, dst)` bit transfers.
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        self.pairs.iter().fold(x, |acc, &(s, d)| acc ^ ((x >> s & 1) << d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubProtocol {
    P1,
    P2,
}

impl SubProtocol {
    pub fn other(self) -> Self {
        match self {
            SubProtocol::P1 => SubProtocol::P2,
            SubProtocol::P2 => SubProtocol::P1,
        }
    }
}

impl fmt::Display for SubProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubProtocol::P1 => "P1",
            SubProtocol::P2 => "P2",
        })
    }
}

impl FromStr for SubProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" | "p1" => Ok(SubProtocol::P1),
            "P2" | "p2" => Ok(SubProtocol::P2),
            _ => Err(Error::InvalidArgument(format!("unknown sub-protocol {s:?}"))),
        }
    }
}

/// Retained main state after a successful step, and the step's success
/// probability.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: DiagonalState,
    pub success_prob: f64,
}

/// MCNOT layer of a recurrence step between two copies of `g`.
///
/// P1: A-qubits use the second copy as control, B-qubits the first, giving
/// `mu_B ^= nu_B` and `nu_A ^= mu_A`. P2 reverses every gate:
/// `mu_A ^= nu_A` and `nu_B ^= mu_B`.
pub fn mcnot_map_tcp(g: &Graph, coloring: &TwoColoring, sub: SubProtocol) -> XorMap {
    let n = g.n() as u32;
    let (into_main, into_aux) = match sub {
        SubProtocol::P1 => (&coloring.set_b, &coloring.set_a),
        SubProtocol::P2 => (&coloring.set_a, &coloring.set_b),
    };
    let mut pairs = Vec::with_capacity(g.n());
    for &v in into_main {
        let b = v as u32 - 1;
        pairs.push((n + b, b));
    }
    for &v in into_aux {
        let b = v as u32 - 1;
        pairs.push((b, n + b));
    }
    XorMap::new(2 * g.n(), pairs)
}

/// MCNOT layer of a localized step: the auxiliary target controls the main
/// target, each main neighbor controls its auxiliary partner. On syndromes:
/// `mu_N ^= nu_N` and `nu_T ^= mu_T`; the rest of the main graph is untouched.
///
/// The auxiliary is `ghz_star(target, neighbors)`, its bits in ascending
/// physical order.
pub fn mcnot_map_lep(g_main: &Graph, part: &TargetPartition) -> Result<XorMap> {
    g_main.check_vertex(part.target)?;
    if g_main.neighbors(part.target) != part.neighbors.as_slice() {
        return Err(Error::AuxMismatch(format!(
            "partition neighbors {:?} differ from N({})",
            part.neighbors, part.target
        )));
    }
    let star = ghz_star(part.target, &part.neighbors).map_err(|e| Error::AuxMismatch(e.to_string()))?;
    let n = g_main.n() as u32;
    let aux = |v: usize| n + star.bit_of(v).expect("star vertex") as u32;
    let mut pairs = Vec::with_capacity(part.neighbors.len() + 1);
    for &v in &part.neighbors {
        pairs.push((aux(v), v as u32 - 1));
    }
    pairs.push((part.target as u32 - 1, aux(part.target)));
    Ok(XorMap::new(g_main.n() + part.neighbors.len() + 1, pairs))
}

/// One recurrence round on two identical copies of `s`.
///
/// The second copy is measured (P1: A in X, B in Z; P2 swapped); the step
/// succeeds when every measured stabilizer of the purified color reads +1.
/// The remaining outcomes carry no condition and are summed out.
pub fn tcp_step(s: &DiagonalState, sub: SubProtocol, p_g: f64) -> Result<StepOutcome> {
    check_unit("p_g", p_g)?;
    let g = s.graph();
    let coloring = two_coloring(g)?;
    let all: Vec<usize> = g.vertices().collect();
    let noisy = s.apply_white_noise_on(&all, p_g)?;
    // Gate noise on the product of both copies factorizes per copy.
    let j = joint(&noisy, &noisy)?;
    let map = mcnot_map_tcp(g, &coloring, sub);
    let (checked, summed) = match sub {
        SubProtocol::P1 => (&coloring.set_a, &coloring.set_b),
        SubProtocol::P2 => (&coloring.set_b, &coloring.set_a),
    };
    let zero: Vec<usize> = checked.iter().map(|v| v - 1).collect();
    let drop: Vec<usize> = summed.iter().map(|v| v - 1).collect();
    let (state, success_prob) = j.post_select_mapped(|x| map.apply(x), &zero, &drop)?;
    Ok(StepOutcome { state, success_prob })
}

/// One localized step: purifies the syndrome of `part.target` of `main` with
/// the star auxiliary `aux`, post-selecting on `nu_T ^ mu_T = 0`.
pub fn lep_step(main: &DiagonalState, aux: &DiagonalState, part: &TargetPartition, p_g: f64) -> Result<StepOutcome> {
    check_unit("p_g", p_g)?;
    let star = ghz_star(part.target, &part.neighbors).map_err(|e| Error::AuxMismatch(e.to_string()))?;
    if !aux.graph().same_structure(&star.graph) {
        return Err(Error::AuxMismatch(format!(
            "auxiliary has {} vertices, star around {} needs {}",
            aux.n(),
            part.target,
            star.graph.n()
        )));
    }
    let map = mcnot_map_lep(main.graph(), part)?;
    let touched: Vec<usize> = std::iter::once(part.target).chain(part.neighbors.iter().copied()).collect();
    let main_noisy = main.apply_white_noise_on(&touched, p_g)?;
    let aux_all: Vec<usize> = aux.graph().vertices().collect();
    let aux_noisy = aux.apply_white_noise_on(&aux_all, p_g)?;
    let j = joint(&main_noisy, &aux_noisy)?;
    let c = star.center_bit();
    let drop: Vec<usize> = (0..aux.n()).filter(|&k| k != c).collect();
    let (state, success_prob) = j.post_select_mapped(|x| map.apply(x), &[c], &drop)?;
    Ok(StepOutcome { state, success_prob })
}

/// Auxiliary after `alpha` recurrence rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepurified {
    pub state: DiagonalState,
    /// `prod_k 2 / q_k`, the expected number of raw auxiliaries consumed.
    pub cost_multiplier: f64,
    pub success_probs: Vec<f64>,
}

/// `alpha` alternating recurrence rounds (P1 first) on a fresh auxiliary.
pub fn prepurify_aux(aux_initial: &DiagonalState, alpha: usize, p_g: f64) -> Result<Prepurified> {
    let mut state = aux_initial.clone();
    let mut cost_multiplier = 1.0;
    let mut success_probs = Vec::with_capacity(alpha);
    let mut sub = SubProtocol::P1;
    for _ in 0..alpha {
        let out = tcp_step(&state, sub, p_g)?;
        cost_multiplier *= 2.0 / out.success_prob;
        success_probs.push(out.success_prob);
        state = out.state;
        sub = sub.other();
    }
    Ok(Prepurified { state, cost_multiplier, success_probs })
}
