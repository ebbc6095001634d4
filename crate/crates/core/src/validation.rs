//! Randomized comparison of the diagonal engine against the dense oracle.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{ghz_star, grid_cluster, linear_cluster, partition_for_target, Graph};
use crate::oracle::{
    dense_from_graph_diagonal, graph_basis_diagonal, oracle_lep_step, oracle_prepare, oracle_prepare_aux,
    oracle_prepurify, oracle_tcp_step, DenseState,
};
use crate::protocols::{lep_step, prepurify_aux, tcp_step, SubProtocol};
use crate::state::{prepare_auxiliary, prepare_initial, DiagonalState, NoiseSpec, WhiteNoise};

pub const ORACLE_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CaseStep {
    Tcp(SubProtocol),
    Lep { target: usize, alpha: usize },
}

#[derive(Clone, Debug)]
pub struct ValidationCase {
    pub graph: Graph,
    pub noise: NoiseSpec,
    pub steps: Vec<CaseStep>,
}

impl ValidationCase {
    pub fn describe(&self) -> String {
        format!("{} {} {:?}", self.graph.label(), self.noise.describe(), self.steps)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub description: String,
    /// Largest deviation over all probabilities of every step.
    pub max_lambda_error: f64,
    pub max_prob_error: f64,
    /// Largest off-diagonal weight of any oracle state in the graph basis.
    pub max_residual: f64,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.max_lambda_error <= ORACLE_TOL && self.max_prob_error <= ORACLE_TOL && self.max_residual <= RESIDUAL_TOL
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub cases: Vec<CaseReport>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.passed())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn worst(&self) -> (f64, f64, f64) {
        self.cases.iter().fold((0.0, 0.0, 0.0), |acc, c| {
            (acc.0.max(c.max_lambda_error), acc.1.max(c.max_prob_error), acc.2.max(c.max_residual))
        })
    }
}

fn star(leaves: usize) -> Graph {
    let leaves: Vec<usize> = (2..=leaves + 1).collect();
    ghz_star(1, &leaves).unwrap().graph
}

/// Small graphs whose oracle steps stay within the dense size limit.
pub fn small_graphs() -> Vec<Graph> {
    vec![
        linear_cluster(2).unwrap(),
        linear_cluster(3).unwrap(),
        linear_cluster(4).unwrap(),
        linear_cluster(5).unwrap(),
        grid_cluster(2, 2).unwrap(),
        star(3),
        star(4),
    ]
}

fn random_noise(rng: &mut ChaCha8Rng, g: &Graph) -> NoiseSpec {
    let gate = if rng.gen_bool(0.5) { 1.0 } else { 0.99 };
    let white = if rng.gen_bool(0.2) {
        WhiteNoise::PerQubit(g.vertices().map(|v| (v, rng.gen_range(0.8..=1.0))).collect())
    } else {
        WhiteNoise::Uniform(rng.gen_range(0.8..=1.0))
    };
    let mut noise = NoiseSpec { white, dephasing: Default::default(), gate };
    for v in g.vertices() {
        if rng.gen_bool(0.4) {
            noise.dephasing.insert(v, rng.gen_range(0.6..=1.0));
        }
    }
    noise
}

/// Deterministic pseudo-random cases, each with two consecutive steps.
pub fn random_cases(count: usize, seed: u64) -> Vec<ValidationCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graphs = small_graphs();
    (0..count)
        .map(|_| {
            let graph = graphs.choose(&mut rng).unwrap().clone();
            let noise = random_noise(&mut rng, &graph);
            let steps = (0..2)
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        CaseStep::Tcp(if rng.gen_bool(0.5) { SubProtocol::P1 } else { SubProtocol::P2 })
                    } else {
                        let target = rng.gen_range(1..=graph.n());
                        let alpha = if graph.degree(target) <= 2 { rng.gen_range(0..=1) } else { 0 };
                        CaseStep::Lep { target, alpha }
                    }
                })
                .collect();
            ValidationCase { graph, noise, steps }
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs one case through both simulators, step by step.
pub fn check_case(case: &ValidationCase) -> Result<CaseReport> {
    let g = Arc::new(case.graph.clone());
    let p_g = case.noise.gate;
    let mut engine = prepare_initial(Arc::clone(&g), &case.noise)?;
    let mut dense = oracle_prepare(&g, &case.noise)?;
    let (diag, residual) = graph_basis_diagonal(&dense, &g)?;
    let mut report = CaseReport {
        description: case.describe(),
        max_lambda_error: max_diff(engine.lambdas(), &diag),
        max_prob_error: 0.0,
        max_residual: residual,
    };
    for step in &case.steps {
        let (next, p_engine, next_dense, p_oracle) = match *step {
            CaseStep::Tcp(sub) => {
                let e = tcp_step(&engine, sub, p_g)?;
                let o = oracle_tcp_step(&dense, &dense, &g, sub, p_g)?;
                (e.state, e.success_prob, o.state, o.success_prob)
            }
            CaseStep::Lep { target, alpha } => {
                let part = partition_for_target(&g, target)?;
                let star = ghz_star(target, &part.neighbors)?;
                let aux = prepurify_aux(&prepare_auxiliary(&star, &case.noise)?, alpha, p_g)?;
                let e = lep_step(&engine, &aux.state, &part, p_g)?;
                let raw = oracle_prepare_aux(&star, &case.noise)?;
                let (aux_dense, multiplier) = oracle_prepurify(&raw, &star.graph, alpha, p_g)?;
                report.max_prob_error = report.max_prob_error.max((multiplier - aux.cost_multiplier).abs());
                let (aux_diag, aux_res) = graph_basis_diagonal(&aux_dense, &star.graph)?;
                report.max_lambda_error = report.max_lambda_error.max(max_diff(aux.state.lambdas(), &aux_diag));
                report.max_residual = report.max_residual.max(aux_res);
                let o = oracle_lep_step(&dense, &g, &aux_dense, &star, p_g)?;
                (e.state, e.success_prob, o.state, o.success_prob)
            }
        };
        let (diag, residual) = graph_basis_diagonal(&next_dense, &g)?;
        report.max_lambda_error = report.max_lambda_error.max(max_diff(next.lambdas(), &diag));
        report.max_prob_error = report.max_prob_error.max((p_engine - p_oracle).abs());
        report.max_residual = report.max_residual.max(residual);
        engine = next;
        dense = next_dense;
    }
    Ok(report)
}

/// Oracle equivalence over `count` random cases.
pub fn validate_oracle(count: usize, seed: u64) -> Result<ValidationReport> {
    let cases = random_cases(count, seed);
    let reports = cases.iter().map(check_case).collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport { seed, cases: reports })
}

/// Dense copy of an engine state, for feeding engine results to the oracle.
pub fn densify(s: &DiagonalState) -> Result<DenseState> {
    dense_from_graph_diagonal(s.graph(), s.lambdas())
}

/// Outcome of one invariant check.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn invariant(name: &'static str, worst: f64, tol: f64, what: &str) -> InvariantCheck {
    InvariantCheck { name, passed: worst <= tol, detail: format!("{what}: worst {worst:.3e} (tolerance {tol:.0e})") }
}

fn normalization(rng: &mut ChaCha8Rng) -> Result<InvariantCheck> {
    let graphs = small_graphs();
    let mut worst = 0.0f64;
    let mut ops = 0;
    for _ in 0..50 {
        let g = Arc::new(graphs.choose(rng).unwrap().clone());
        let noise = random_noise(rng, &g);
        let mut s = prepare_initial(Arc::clone(&g), &noise)?;
        for _ in 0..6 {
            let q = rng.gen_range(1..=g.n());
            s = match rng.gen_range(0..4) {
                0 => s.apply_dephasing(q, rng.gen_range(0.0..=1.0))?,
                1 => s.apply_white_noise(q, rng.gen_range(0.0..=1.0))?,
                2 => tcp_step(&s, SubProtocol::P1, noise.gate)?.state,
                _ => {
                    let part = partition_for_target(&g, q)?;
                    let aux = prepare_auxiliary(&ghz_star(q, &part.neighbors)?, &noise)?;
                    lep_step(&s, &aux, &part, noise.gate)?.state
                }
            };
            worst = worst.max((s.total() - 1.0).abs());
            ops += 1;
        }
    }
    Ok(invariant("normalization", worst, 1e-12, &format!("{ops} operations")))
}

fn semigroup(rng: &mut ChaCha8Rng) -> Result<InvariantCheck> {
    let g = Arc::new(linear_cluster(5)?);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let base = prepare_initial(Arc::clone(&g), &random_noise(rng, &g))?;
        let q = rng.gen_range(1..=5);
        let (a, b) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let twice = base.apply_dephasing(q, a)?.apply_dephasing(q, b)?;
        let once = base.apply_dephasing(q, a * b + (1.0 - a) * (1.0 - b))?;
        worst = worst.max(max_diff(twice.lambdas(), once.lambdas()));
    }
    Ok(invariant("dephasing semigroup", worst, 1e-12, "1000 random triples"))
}

fn is_permutation(map: &crate::protocols::XorMap) -> bool {
    let size = 1usize << map.bits();
    let mut seen = vec![false; size];
    (0..size as u64).all(|x| {
        let y = map.apply(x) as usize;
        y < size && !std::mem::replace(&mut seen[y], true)
    })
}

fn bijectivity() -> Result<InvariantCheck> {
    use crate::graph::two_coloring;
    use crate::protocols::{mcnot_map_lep, mcnot_map_tcp};
    let mut graphs: Vec<Graph> = (1..=9).map(linear_cluster).collect::<Result<_>>()?;
    for (r, c) in [(2, 2), (2, 3), (3, 3), (2, 4)] {
        graphs.push(grid_cluster(r, c)?);
    }
    graphs.extend([star(3), star(4), star(5)]);
    let (mut checked, mut failed) = (0, 0);
    for g in &graphs {
        if 2 * g.n() <= 12 {
            let coloring = two_coloring(g)?;
            for sub in [SubProtocol::P1, SubProtocol::P2] {
                checked += 1;
                failed += usize::from(!is_permutation(&mcnot_map_tcp(g, &coloring, sub)));
            }
        }
        for t in g.vertices() {
            if g.degree(t) > 0 && g.n() + g.degree(t) < 12 {
                checked += 1;
                failed += usize::from(!is_permutation(&mcnot_map_lep(g, &partition_for_target(g, t)?)?));
            }
        }
    }
    Ok(InvariantCheck {
        name: "mcnot bijectivity",
        passed: failed == 0,
        detail: format!("{checked} layers up to 12 bits, {failed} not bijective"),
    })
}

fn ledger_product(rng: &mut ChaCha8Rng) -> Result<InvariantCheck> {
    use crate::resources::ResourceLedger;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let base = rng.gen_range(1..20) as f64;
        let probs: Vec<f64> = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(0.3..=1.0)).collect();
        let mut tcp = ResourceLedger::new(base);
        for &p in &probs {
            tcp.tcp_round(p)?;
        }
        let closed = base * 2f64.powi(probs.len() as i32) / probs.iter().product::<f64>();
        worst = worst.max((tcp.current() - closed).abs() / closed);

        let edges: Vec<usize> = probs.iter().map(|_| rng.gen_range(1..5)).collect();
        let mut lep = ResourceLedger::new(base);
        for (&p, &m) in probs.iter().zip(&edges) {
            lep.lep_round(m, 1.0, p)?;
        }
        let mut closed = base / probs.iter().product::<f64>();
        for j in 0..probs.len() {
            closed += edges[j] as f64 / probs[j..].iter().product::<f64>();
        }
        worst = worst.max((lep.current() - closed).abs() / closed);
    }
    Ok(invariant("resource recurrence vs product", worst, 1e-12, "200 random ledgers, relative error"))
}

fn interpolation(rng: &mut ChaCha8Rng) -> Result<InvariantCheck> {
    use crate::resources::{interpolate_to_fidelity, interpolate_to_resources};
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let mut f = rng.gen_range(0.3..0.9);
        let mut r = rng.gen_range(1.0..20.0);
        let mut curve = vec![(f, r)];
        for _ in 0..rng.gen_range(1..10) {
            f += rng.gen_range(1e-4..0.05);
            r *= rng.gen_range(1.1..3.0);
            curve.push((f, r));
        }
        let target = rng.gen_range(curve[0].0..f);
        let at_f = interpolate_to_fidelity(curve.as_slice(), target)?;
        let back = interpolate_to_resources(curve.as_slice(), at_f.value)?;
        worst = worst.max((back.value - target).abs());
    }
    Ok(invariant("interpolation round trip", worst, 1e-10, "500 random monotone curves"))
}

fn virtual_purity_and_replay() -> Result<Vec<InvariantCheck>> {
    use crate::presets::three_dephased_chain;
    use crate::strategies::{replay, run_strategy, virtual_best_target, StopRule, StrategyKind};
    let s = three_dephased_chain();
    let main = s.initial_state()?;
    let before = main.lambdas().to_vec();
    for alpha in 0..3 {
        virtual_best_target(&main, &s.noise, alpha)?;
    }
    let pure = before.iter().zip(main.lambdas()).all(|(a, b)| a.to_bits() == b.to_bits());
    let mut worst = 0.0f64;
    for kind in ["tcp", "s-1", "c-0", "hybrid-1:2"] {
        let kind: StrategyKind = kind.parse()?;
        let t = run_strategy(&s, kind, StopRule::rounds(8))?;
        let fids: Vec<f64> = t.rounds.iter().map(|r| r.fidelity).collect();
        worst = worst.max(max_diff(&fids, &replay(&s, &t)?));
    }
    Ok(vec![
        InvariantCheck {
            name: "virtual evaluation purity",
            passed: pure,
            detail: "main state bit-identical after candidate scans".into(),
        },
        invariant("trace replay", worst, 1e-12, "four strategies, eight rounds"),
    ])
}

/// The property suite: normalization, dephasing semigroup, MCNOT
/// bijectivity, resource recurrence, interpolation round trip, virtual
/// evaluation purity and trace replay.
pub fn invariant_suite(seed: u64) -> Result<Vec<InvariantCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![
        normalization(&mut rng)?,
        semigroup(&mut rng)?,
        bijectivity()?,
        ledger_product(&mut rng)?,
        interpolation(&mut rng)?,
    ];
    out.extend(virtual_purity_and_replay()?);
    Ok(out)
}
