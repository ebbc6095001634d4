//! Brute-force reference simulator on full density matrices.
//!
//! Nothing here uses the syndrome representation: graph states are built
//! from `|+>` and CZ gates, noise is applied as Kraus maps, every CNOT of a
//! purification layer is preceded by its own depolarizing maps on control and
//! target, and the measured copy is projectively measured qubit by qubit.
//! Agreement with the diagonal engine is therefore evidence rather than a
//! restatement of the same algebra.
//!
//! Memory grows as `4^n`; the steps accept at most [`MAX_STEP_QUBITS`] qubits.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::graph::{ghz_star, two_coloring, GhzStar, Graph};
use crate::protocols::SubProtocol;
use crate::state::{check_unit, NoiseSpec};

pub const MAX_GRAPH_QUBITS: usize = 13;
pub const MAX_STEP_QUBITS: usize = 10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Density matrix on `n` qubits, row-major. Qubit `q` (vertex `q + 1`) is bit
/// `q` of the computational basis index.
#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    dim: usize,
    data: Vec<C64>,
}

/// Operator acting on the listed qubits; local basis bit `k` is `qubits[k]`.
#[derive(Clone, Debug)]
pub struct LocalOp {
    pub qubits: Vec<usize>,
    pub matrix: Vec<C64>,
}

impl LocalOp {
    fn dim(&self) -> usize {
        1 << self.qubits.len()
    }
}

/// Kraus operators on a fixed set of qubits.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    pub operators: Vec<LocalOp>,
}

impl KrausChannel {
    /// Validates `sum K^dagger K = 1` to 1e-12.
    pub fn new(operators: Vec<LocalOp>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let d = first.dim();
        let mut acc = vec![ZERO; d * d];
        for k in &operators {
            if k.qubits != first.qubits || k.matrix.len() != d * d {
                return Err(Error::InvalidArgument("Kraus operators act on different qubits".into()));
            }
            for i in 0..d {
                for j in 0..d {
                    acc[i * d + j] += (0..d).map(|r| k.matrix[r * d + i].conj() * k.matrix[r * d + j]).sum::<C64>();
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { ONE } else { ZERO };
                if (acc[i * d + j] - want).norm() > 1e-12 {
                    return Err(Error::InvalidArgument("Kraus operators are not complete".into()));
                }
            }
        }
        Ok(Self { operators })
    }
}

fn pauli_matrix(which: usize) -> [C64; 4] {
    let i = C64::new(0.0, 1.0);
    match which {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -i, i, ZERO],
        _ => [ONE, ZERO, ZERO, -ONE],
    }
}

fn scaled(m: [C64; 4], s: f64) -> Vec<C64> {
    m.iter().map(|x| x * s).collect()
}

/// `p rho + (1-p)/4 sum_{I,X,Y,Z} P rho P` on `qubit`.
pub fn depolarizing(qubit: usize, p: f64) -> Result<KrausChannel> {
    check_unit("p_w", p)?;
    let rest = ((1.0 - p) / 4.0).sqrt();
    let mut ops = vec![LocalOp { qubits: vec![qubit], matrix: scaled(pauli_matrix(0), (p + (1.0 - p) / 4.0).sqrt()) }];
    for k in 1..4 {
        ops.push(LocalOp { qubits: vec![qubit], matrix: scaled(pauli_matrix(k), rest) });
    }
    KrausChannel::new(ops)
}

/// `p rho + (1-p) Z rho Z` on `qubit`.
pub fn dephasing(qubit: usize, p: f64) -> Result<KrausChannel> {
    check_unit("p_z", p)?;
    KrausChannel::new(vec![
        LocalOp { qubits: vec![qubit], matrix: scaled(pauli_matrix(0), p.sqrt()) },
        LocalOp { qubits: vec![qubit], matrix: scaled(pauli_matrix(3), (1.0 - p).sqrt()) },
    ])
}

pub fn cnot(control: usize, target: usize) -> LocalOp {
    // local index = c | t << 1
    let mut m = vec![ZERO; 16];
    for input in 0..4usize {
        let (c, t) = (input & 1, input >> 1);
        let output = c | (t ^ c) << 1;
        m[output * 4 + input] = ONE;
    }
    LocalOp { qubits: vec![control, target], matrix: m }
}

pub fn hadamard(qubit: usize) -> LocalOp {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    LocalOp {
        qubits: vec![qubit],
        matrix: vec![C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)],
    }
}

/// Real amplitudes of `prod_E CZ |+>^n`.
pub fn graph_state_vector(g: &Graph) -> Result<Vec<f64>> {
    if g.n() > MAX_GRAPH_QUBITS {
        return Err(Error::TooLarge { bits: g.n(), cap: MAX_GRAPH_QUBITS });
    }
    let dim = 1usize << g.n();
    let amp = (dim as f64).sqrt().recip();
    Ok((0..dim)
        .map(|x| {
            let parity = g.edges().iter().filter(|&&(a, b)| x >> (a - 1) & 1 == 1 && x >> (b - 1) & 1 == 1).count();
            if parity % 2 == 0 {
                amp
            } else {
                -amp
            }
        })
        .collect())
}

/// Projector onto the ideal graph state.
pub fn dense_graph_state(g: &Graph) -> Result<DenseState> {
    let v = graph_state_vector(g)?;
    Ok(DenseState::from_pure(g.n(), &v))
}

/// `sum_mu lambda_mu |mu><mu|` with `|mu> = prod Z^{mu_l} |G>`.
pub fn dense_from_graph_diagonal(g: &Graph, lambdas: &[f64]) -> Result<DenseState> {
    let v = graph_state_vector(g)?;
    let dim = v.len();
    if lambdas.len() != dim {
        return Err(Error::InvalidArgument("lambda length mismatch".into()));
    }
    let mut rho = DenseState::zeros(g.n());
    let mut basis = vec![0.0; dim];
    for (mu, &w) in lambdas.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (x, b) in basis.iter_mut().enumerate() {
            let sign = if (mu & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            *b = sign * v[x];
        }
        for r in 0..dim {
            for c in 0..dim {
                rho.data[r * dim + c] += w * basis[r] * basis[c];
            }
        }
    }
    Ok(rho)
}

impl DenseState {
    fn zeros(n: usize) -> Self {
        let dim = 1 << n;
        Self { n, dim, data: vec![ZERO; dim * dim] }
    }

    fn from_pure(n: usize, v: &[f64]) -> Self {
        let mut s = Self::zeros(n);
        for r in 0..s.dim {
            for c in 0..s.dim {
                s.data[r * s.dim + c] = C64::new(v[r] * v[c], 0.0);
            }
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// `<psi| rho |psi>` for a real vector.
    pub fn expectation_real(&self, v: &[f64]) -> f64 {
        let mut acc = ZERO;
        for r in 0..self.dim {
            if v[r] == 0.0 {
                continue;
            }
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            let inner: C64 = row.iter().zip(v).map(|(x, &b)| x * b).sum();
            acc += inner * v[r];
        }
        acc.re
    }

    /// Overlap with the ideal graph state of `g`.
    pub fn graph_fidelity(&self, g: &Graph) -> Result<f64> {
        if g.n() != self.n {
            return Err(Error::InvalidArgument("graph size mismatch".into()));
        }
        Ok(self.expectation_real(&graph_state_vector(g)?))
    }

    /// Tensor product with `self` on the low qubits.
    pub fn kron(&self, high: &DenseState) -> Result<DenseState> {
        let n = self.n + high.n;
        if n > MAX_STEP_QUBITS {
            return Err(Error::TooLarge { bits: n, cap: MAX_STEP_QUBITS });
        }
        let mut out = DenseState::zeros(n);
        let dim = out.dim;
        for hr in 0..high.dim {
            for hc in 0..high.dim {
                let h = high.get(hr, hc);
                if h == ZERO {
                    continue;
                }
                for lr in 0..self.dim {
                    let r = lr | hr << self.n;
                    for lc in 0..self.dim {
                        out.data[r * dim + (lc | hc << self.n)] = self.get(lr, lc) * h;
                    }
                }
            }
        }
        Ok(out)
    }

    fn local_layout(&self, qubits: &[usize]) -> (usize, Vec<usize>) {
        let mask = qubits.iter().fold(0usize, |m, &q| m | 1 << q);
        let offsets = (0..1usize << qubits.len())
            .map(|l| qubits.iter().enumerate().fold(0usize, |o, (k, &q)| o | ((l >> k) & 1) << q))
            .collect();
        (mask, offsets)
    }

    /// `K rho K^dagger`.
    fn sandwich(&self, op: &LocalOp) -> DenseState {
        let (mask, offsets) = self.local_layout(&op.qubits);
        let k = op.dim();
        let dim = self.dim;
        let mut tmp = vec![ZERO; self.data.len()];
        let mut buf = vec![ZERO; k];
        // left multiplication: each output row mixes k input rows
        for base in (0..dim).filter(|b| b & mask == 0) {
            for (i, off_i) in offsets.iter().enumerate() {
                let out_row = &mut tmp[(base | off_i) * dim..][..dim];
                for (j, off_j) in offsets.iter().enumerate() {
                    let m = op.matrix[i * k + j];
                    if m == ZERO {
                        continue;
                    }
                    let in_row = &self.data[(base | off_j) * dim..][..dim];
                    for (o, x) in out_row.iter_mut().zip(in_row) {
                        *o += m * x;
                    }
                }
            }
        }
        let mut out = vec![ZERO; tmp.len()];
        // right multiplication by K^dagger, row by row
        for row in 0..dim {
            let r = row * dim;
            for base in (0..dim).filter(|b| b & mask == 0) {
                for (j, off) in offsets.iter().enumerate() {
                    buf[j] = tmp[r + (base | off)];
                }
                for (i, off) in offsets.iter().enumerate() {
                    out[r + (base | off)] = (0..k).map(|j| buf[j] * op.matrix[i * k + j].conj()).sum();
                }
            }
        }
        DenseState { n: self.n, dim, data: out }
    }

    /// `p rho + (1-p) Tr_q(rho) (x) I/2`, the same map as [`depolarizing`]
    /// in one pass.
    pub fn depolarize(&self, qubit: usize, p: f64) -> Result<DenseState> {
        check_unit("p_w", p)?;
        if qubit >= self.n {
            return Err(Error::InvalidArgument(format!("qubit {qubit} outside {} qubits", self.n)));
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        let bit = 1usize << qubit;
        let dim = self.dim;
        let half = C64::new((1.0 - p) / 2.0, 0.0);
        let keep = C64::new(p, 0.0);
        let mut out = self.data.clone();
        for r in (0..dim).filter(|r| r & bit == 0) {
            for c in (0..dim).filter(|c| c & bit == 0) {
                let traced = self.get(r, c) + self.get(r | bit, c | bit);
                for (rr, cc) in [(r, c), (r | bit, c | bit)] {
                    out[rr * dim + cc] = keep * self.get(rr, cc) + half * traced;
                }
                for (rr, cc) in [(r | bit, c), (r, c | bit)] {
                    out[rr * dim + cc] = keep * self.get(rr, cc);
                }
            }
        }
        Ok(DenseState { n: self.n, dim, data: out })
    }

    pub fn apply_unitary(&self, op: &LocalOp) -> DenseState {
        self.sandwich(op)
    }

    pub fn apply_channel(&self, channel: &KrausChannel) -> DenseState {
        let mut acc = DenseState::zeros(self.n);
        for k in &channel.operators {
            let term = self.sandwich(k);
            for (a, t) in acc.data.iter_mut().zip(term.data) {
                *a += t;
            }
        }
        acc
    }

    /// Measures `measured` (X basis where flagged, Z otherwise), keeps the
    /// outcome patterns accepted by `accept`, and traces the measured qubits
    /// out. Outcome bit 0 is the +1 eigenvalue. Returns the normalized state of
    /// the remaining qubits (ascending order) and the accepted probability.
    pub fn measure_post_select(
        &self,
        measured: &[(usize, bool)],
        accept: impl Fn(&[u8]) -> bool,
    ) -> Result<(DenseState, f64)> {
        let mut rotated = self.clone();
        for &(q, x_basis) in measured {
            if x_basis {
                rotated = rotated.apply_unitary(&hadamard(q));
            }
        }
        let mmask = measured.iter().fold(0usize, |m, &(q, _)| m | 1 << q);
        let kept: Vec<usize> = (0..self.n).filter(|q| mmask >> q & 1 == 0).collect();
        let mut out = DenseState::zeros(kept.len());
        let spread = |l: usize, qs: &[usize]| qs.iter().enumerate().fold(0usize, |o, (k, &q)| o | ((l >> k) & 1) << q);
        let qs: Vec<usize> = measured.iter().map(|&(q, _)| q).collect();
        let mut outcome = vec![0u8; qs.len()];
        for pattern in 0..1usize << qs.len() {
            for (k, o) in outcome.iter_mut().enumerate() {
                *o = (pattern >> k & 1) as u8;
            }
            if !accept(&outcome) {
                continue;
            }
            let moff = spread(pattern, &qs);
            for r in 0..out.dim {
                let rr = spread(r, &kept) | moff;
                for c in 0..out.dim {
                    let cc = spread(c, &kept) | moff;
                    out.data[r * out.dim + c] += rotated.get(rr, cc);
                }
            }
        }
        let p = out.trace().re;
        if p <= 0.0 {
            return Err(Error::ImpossiblePostSelection);
        }
        for v in &mut out.data {
            *v /= p;
        }
        Ok((out, p))
    }
}

/// Graph-basis diagonal of `rho` and the Frobenius norm of everything else.
///
/// With `|mu>` = `Z^mu |G>`, `<mu|rho|nu> = sum_xy g_x g_y (-1)^{mu.x + nu.y} rho_xy`,
/// i.e. a Walsh-Hadamard transform of `g_x rho_xy g_y` along both indices.
pub fn graph_basis_diagonal(rho: &DenseState, g: &Graph) -> Result<(Vec<f64>, f64)> {
    if g.n() != rho.n {
        return Err(Error::InvalidArgument("graph size mismatch".into()));
    }
    let v = graph_state_vector(g)?;
    let dim = rho.dim;
    let mut m = rho.data.clone();
    for r in 0..dim {
        for c in 0..dim {
            m[r * dim + c] *= v[r] * v[c];
        }
    }
    for r in 0..dim {
        walsh_hadamard(&mut m[r * dim..(r + 1) * dim]);
    }
    let mut col = vec![ZERO; dim];
    for c in 0..dim {
        for r in 0..dim {
            col[r] = m[r * dim + c];
        }
        walsh_hadamard(&mut col);
        for r in 0..dim {
            m[r * dim + c] = col[r];
        }
    }
    let mut diag = vec![0.0; dim];
    let mut off = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let x = m[r * dim + c];
            if r == c {
                diag[r] = x.re;
                off += x.im * x.im;
            } else {
                off += x.norm_sqr();
            }
        }
    }
    Ok((diag, off.sqrt()))
}

fn walsh_hadamard(v: &mut [C64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Initial noisy state: depolarizing on every qubit, then dephasing.
pub fn oracle_prepare(g: &Graph, noise: &NoiseSpec) -> Result<DenseState> {
    let mut rho = dense_graph_state(g)?;
    for v in g.vertices() {
        rho = rho.apply_channel(&depolarizing(v - 1, noise.white_at(v))?);
    }
    for v in g.vertices() {
        let p = noise.dephasing_at(v);
        if p != 1.0 {
            rho = rho.apply_channel(&dephasing(v - 1, p)?);
        }
    }
    Ok(rho)
}

/// Noisy auxiliary star carrying the noise of its physical qubits.
pub fn oracle_prepare_aux(star: &GhzStar, noise: &NoiseSpec) -> Result<DenseState> {
    let mut rho = dense_graph_state(&star.graph)?;
    for v in star.graph.vertices() {
        rho = rho.apply_channel(&depolarizing(v - 1, noise.white_at(star.physical(v)))?);
    }
    for v in star.graph.vertices() {
        let p = noise.dephasing_at(star.physical(v));
        if p != 1.0 {
            rho = rho.apply_channel(&dephasing(v - 1, p)?);
        }
    }
    Ok(rho)
}

fn noisy_cnot(rho: DenseState, control: usize, target: usize, p_g: f64) -> Result<DenseState> {
    let rho = rho.depolarize(control, p_g)?.depolarize(target, p_g)?;
    Ok(rho.apply_unitary(&cnot(control, target)))
}

/// Outcome of an oracle step.
#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub state: DenseState,
    pub success_prob: f64,
}

/// Recurrence round with explicit gates, measurements and post-selection.
///
/// Both copies live on `g`; the second is measured. For P1 its A-qubits are
/// measured in X and B-qubits in Z, and each stabilizer `K_a = X_a Z_{N(a)}`
/// must read +1. P2 swaps the colors.
pub fn oracle_tcp_step(
    rho_main: &DenseState,
    rho_second: &DenseState,
    g: &Graph,
    sub: SubProtocol,
    p_g: f64,
) -> Result<OracleOutcome> {
    let n = g.n();
    if rho_main.n != n || rho_second.n != n {
        return Err(Error::InvalidArgument("state size mismatch".into()));
    }
    let coloring = two_coloring(g)?;
    let mut rho = rho_main.kron(rho_second)?;
    let second = |v: usize| n + v - 1;
    let main = |v: usize| v - 1;
    // P1: second -> main on A, main -> second on B.
    let (aux_controls, main_controls) = match sub {
        SubProtocol::P1 => (&coloring.set_a, &coloring.set_b),
        SubProtocol::P2 => (&coloring.set_b, &coloring.set_a),
    };
    for &v in aux_controls {
        rho = noisy_cnot(rho, second(v), main(v), p_g)?;
    }
    for &v in main_controls {
        rho = noisy_cnot(rho, main(v), second(v), p_g)?;
    }
    let x_measured = aux_controls.clone();
    let measured: Vec<(usize, bool)> = g.vertices().map(|v| (second(v), x_measured.contains(&v))).collect();
    let accept = |out: &[u8]| {
        x_measured.iter().all(|&v| {
            let parity = g.neighbors(v).iter().fold(out[v - 1], |acc, &w| acc ^ out[w - 1]);
            parity == 0
        })
    };
    let (state, success_prob) = rho.measure_post_select(&measured, accept)?;
    Ok(OracleOutcome { state, success_prob })
}

/// Localized step: `rho_aux` lives on `star` (vertex 1 = target, then the
/// neighbors ascending). The auxiliary target controls the main target, each
/// main neighbor controls its auxiliary partner; the auxiliary target is
/// measured in X, its leaves in Z, and `K_T` of the auxiliary must read +1.
pub fn oracle_lep_step(
    rho_main: &DenseState,
    g_main: &Graph,
    rho_aux: &DenseState,
    star: &GhzStar,
    p_g: f64,
) -> Result<OracleOutcome> {
    let n = g_main.n();
    if g_main.neighbors(star.center) != star.leaves.as_slice() {
        return Err(Error::AuxMismatch("star does not span the target neighborhood".into()));
    }
    let mut rho = rho_main.kron(rho_aux)?;
    let c = star.center_bit();
    rho = noisy_cnot(rho, n + c, star.center - 1, p_g)?;
    for &leaf in &star.leaves {
        rho = noisy_cnot(rho, leaf - 1, n + star.bit_of(leaf).unwrap(), p_g)?;
    }
    let measured: Vec<(usize, bool)> = (0..star.graph.n()).map(|k| (n + k, k == c)).collect();
    let accept = |out: &[u8]| out.iter().fold(0u8, |a, b| a ^ b) == 0;
    let (state, success_prob) = rho.measure_post_select(&measured, accept)?;
    Ok(OracleOutcome { state, success_prob })
}

/// `alpha` alternating recurrence rounds (P1 first) on two identical copies;
/// returns the state and `prod 2 / q_k`.
pub fn oracle_prepurify(rho: &DenseState, g: &Graph, alpha: usize, p_g: f64) -> Result<(DenseState, f64)> {
    let mut rho = rho.clone();
    let mut multiplier = 1.0;
    let mut sub = SubProtocol::P1;
    for _ in 0..alpha {
        let out = oracle_tcp_step(&rho, &rho, g, sub, p_g)?;
        multiplier *= 2.0 / out.success_prob;
        rho = out.state;
        sub = sub.other();
    }
    Ok((rho, multiplier))
}

/// Localized step on `target` with a freshly prepared, pre-purified star.
pub fn oracle_lep_candidate(
    rho_main: &DenseState,
    g_main: &Graph,
    noise: &NoiseSpec,
    target: usize,
    alpha: usize,
) -> Result<OracleOutcome> {
    let star = ghz_star(target, g_main.neighbors(target))?;
    let raw = oracle_prepare_aux(&star, noise)?;
    let (aux, _) = oracle_prepurify(&raw, &star.graph, alpha, noise.gate)?;
    oracle_lep_step(rho_main, g_main, &aux, &star, noise.gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::linear_cluster;
    use approx::assert_abs_diff_eq;

    #[test]
    fn graph_state_examples() {
        let single = Graph::new(1, &[]).unwrap();
        let rho = dense_graph_state(&single).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(rho.get(r, c).re, 0.5, epsilon = 1e-15);
            }
        }
        let edge = linear_cluster(2).unwrap();
        let v = graph_state_vector(&edge).unwrap();
        assert_eq!(v, vec![0.5, 0.5, 0.5, -0.5]);
        let rho = dense_graph_state(&edge).unwrap();
        assert_abs_diff_eq!(rho.graph_fidelity(&edge).unwrap(), 1.0, epsilon = 1e-15);
        assert!(dense_graph_state(&linear_cluster(14).unwrap()).is_err());
    }

    #[test]
    fn basis_diagonal_examples() {
        let g = linear_cluster(3).unwrap();
        let rho = dense_graph_state(&g).unwrap();
        let (d, res) = graph_basis_diagonal(&rho, &g).unwrap();
        assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-14);
        assert!(res <= 1e-14);

        let z1 = LocalOp { qubits: vec![0], matrix: pauli_matrix(3).to_vec() };
        let (d, _) = graph_basis_diagonal(&rho.apply_unitary(&z1), &g).unwrap();
        assert_abs_diff_eq!(d[1], 1.0, epsilon = 1e-14);

        let noise = NoiseSpec::uniform(0.9, 1.0).with_dephasing(2, 0.8);
        let (d, res) = graph_basis_diagonal(&oracle_prepare(&g, &noise).unwrap(), &g).unwrap();
        assert!(res <= 1e-12);
        assert_abs_diff_eq!(d.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn direct_depolarizing_matches_kraus_form() {
        let g = Graph::new(3, &[(1, 2), (2, 3)]).unwrap();
        let rho = oracle_prepare(&g, &NoiseSpec::uniform(0.9, 1.0).with_dephasing(2, 0.7)).unwrap();
        let rho = rho.apply_unitary(&hadamard(1));
        for (q, p) in [(0, 0.8), (1, 0.35), (2, 0.0), (2, 1.0)] {
            let a = rho.depolarize(q, p).unwrap();
            let b = rho.apply_channel(&depolarizing(q, p).unwrap());
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).norm() <= 1e-15);
            }
        }
        assert!(rho.depolarize(3, 0.5).is_err());
    }

    #[test]
    fn basis_diagonal_matches_direct_projection() {
        let g = Graph::new(3, &[(1, 2), (1, 3)]).unwrap();
        let noise = NoiseSpec::uniform(0.8, 1.0).with_dephasing(1, 0.7);
        let rho = oracle_prepare(&g, &noise).unwrap();
        let (d, _) = graph_basis_diagonal(&rho, &g).unwrap();
        let v = graph_state_vector(&g).unwrap();
        for mu in 0..8usize {
            let basis: Vec<f64> = (0..8).map(|x| if (mu & x).count_ones() % 2 == 0 { v[x] } else { -v[x] }).collect();
            assert_abs_diff_eq!(d[mu], rho.expectation_real(&basis), epsilon = 1e-14);
        }
    }

    #[test]
    fn channels_are_complete_and_trace_preserving() {
        let g = linear_cluster(3).unwrap();
        let mut rho = dense_graph_state(&g).unwrap();
        for q in 0..3 {
            rho = rho.apply_channel(&depolarizing(q, 0.7).unwrap());
            assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
            rho = rho.apply_channel(&dephasing(q, 0.6).unwrap());
            assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
            assert!(rho.hermiticity_error() <= 1e-12);
        }
        let bad = LocalOp { qubits: vec![0], matrix: scaled(pauli_matrix(0), 0.5) };
        assert!(KrausChannel::new(vec![bad]).is_err());
    }

    #[test]
    fn pure_steps_are_trivial() {
        let g = linear_cluster(3).unwrap();
        let rho = dense_graph_state(&g).unwrap();
        let out = oracle_tcp_step(&rho, &rho, &g, SubProtocol::P1, 1.0).unwrap();
        assert_abs_diff_eq!(out.success_prob, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.graph_fidelity(&g).unwrap(), 1.0, epsilon = 1e-12);

        let star = ghz_star(2, &[1, 3]).unwrap();
        let aux = dense_graph_state(&star.graph).unwrap();
        let out = oracle_lep_step(&rho, &g, &aux, &star, 1.0).unwrap();
        assert_abs_diff_eq!(out.success_prob, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.graph_fidelity(&g).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_leaf_dephasing_closed_form() {
        let g = linear_cluster(4).unwrap();
        let noise = NoiseSpec::uniform(1.0, 1.0).with_dephasing(1, 0.7);
        let rho = oracle_prepare(&g, &noise).unwrap();
        let out = oracle_tcp_step(&rho, &rho, &g, SubProtocol::P1, 1.0).unwrap();
        assert_abs_diff_eq!(out.success_prob, 0.58, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.graph_fidelity(&g).unwrap(), 0.49 / 0.58, epsilon = 1e-12);

        let star = ghz_star(1, &[2]).unwrap();
        let aux = oracle_prepare_aux(&star, &noise).unwrap();
        let out = oracle_lep_step(&rho, &g, &aux, &star, 1.0).unwrap();
        assert_abs_diff_eq!(out.success_prob, 0.58, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.graph_fidelity(&g).unwrap(), 0.49 / 0.58, epsilon = 1e-12);
    }
}
