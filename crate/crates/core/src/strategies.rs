//! Purification strategies as round-generating procedures.
//!
//! Every strategy repeatedly picks an action by evaluating candidates
//! virtually (on copies of the current state), commits one, updates the
//! resource ledger and appends a round to its trace.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ghz_star, partition_for_target, Graph, TargetPartition};
use crate::protocols::{lep_step, prepurify_aux, tcp_step, StepOutcome, SubProtocol};
use crate::resources::{FidelityResourceCurve, ResourceLedger, DEFAULT_RESOURCE_CAP};
use crate::state::{prepare_auxiliary, prepare_initial, DiagonalState, NoiseSpec};

/// Minimum fidelity gain that counts as an improvement.
pub const STAGNATION_TOL: f64 = 1e-12;

/// Noisy graph state to be purified.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub graph: Arc<Graph>,
    pub noise: NoiseSpec,
}

impl Scenario {
    pub fn new(graph: Graph, noise: NoiseSpec) -> Result<Self> {
        noise.validate(&graph)?;
        Ok(Self { graph: Arc::new(graph), noise })
    }

    pub fn initial_state(&self) -> Result<DiagonalState> {
        prepare_initial(Arc::clone(&self.graph), &self.noise)
    }

    /// Channel uses of one raw copy: one per edge.
    pub fn base_resources(&self) -> f64 {
        self.graph.edge_count() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LepRounds {
    Fixed(usize),
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyKind {
    Tcp,
    /// Greedy single-target localized steps.
    Single {
        alpha: usize,
    },
    /// Localized steps with two-round look-ahead.
    Combined {
        alpha: usize,
    },
    /// Localized steps followed by one recurrence round per composite round.
    Hybrid {
        alpha: usize,
        lep_rounds: LepRounds,
    },
}

impl StrategyKind {
    pub fn alpha(&self) -> usize {
        match *self {
            StrategyKind::Tcp => 0,
            StrategyKind::Single { alpha } | StrategyKind::Combined { alpha } | StrategyKind::Hybrid { alpha, .. } => {
                alpha
            }
        }
    }

    pub fn needs_two_coloring(&self) -> bool {
        matches!(self, StrategyKind::Tcp | StrategyKind::Hybrid { .. })
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Tcp => write!(f, "tcp"),
            StrategyKind::Single { alpha } => write!(f, "s-{alpha}"),
            StrategyKind::Combined { alpha } => write!(f, "c-{alpha}"),
            StrategyKind::Hybrid { alpha, lep_rounds: LepRounds::Auto } => write!(f, "hybrid-{alpha}:auto"),
            StrategyKind::Hybrid { alpha, lep_rounds: LepRounds::Fixed(k) } => write!(f, "hybrid-{alpha}:{k}"),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown strategy '{s}'"));
        let lower = s.trim().to_ascii_lowercase();
        if lower == "tcp" {
            return Ok(StrategyKind::Tcp);
        }
        let number = |x: &str| x.parse::<usize>().map_err(|_| bad());
        if let Some(rest) = lower.strip_prefix("hybrid-") {
            let (a, rounds) = match rest.split_once(':') {
                Some((a, r)) => (a, r),
                None => (rest, "auto"),
            };
            let lep_rounds = if rounds == "auto" { LepRounds::Auto } else { LepRounds::Fixed(number(rounds)?) };
            return Ok(StrategyKind::Hybrid { alpha: number(a)?, lep_rounds });
        }
        if let Some(a) = lower.strip_prefix("s-") {
            return Ok(StrategyKind::Single { alpha: number(a)? });
        }
        if let Some(a) = lower.strip_prefix("c-") {
            return Ok(StrategyKind::Combined { alpha: number(a)? });
        }
        Err(bad())
    }
}

impl TryFrom<String> for StrategyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyKind> for String {
    fn from(k: StrategyKind) -> String {
        k.to_string()
    }
}

/// When a strategy stops producing rounds. All set conditions apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub max_rounds: usize,
    /// Stop after the first round reaching this fidelity.
    pub target_fidelity: Option<f64>,
    /// Stop after the first round whose resources reach this budget.
    pub budget: Option<f64>,
    /// Rounds above this many channel uses are discarded and end the trace.
    pub cap: f64,
    /// Stop when no action improves the fidelity.
    pub halt_on_stagnation: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_rounds: 50,
            target_fidelity: None,
            budget: None,
            cap: DEFAULT_RESOURCE_CAP,
            halt_on_stagnation: true,
        }
    }
}

impl StopRule {
    pub fn rounds(max_rounds: usize) -> Self {
        Self { max_rounds, ..Self::default() }
    }

    pub fn with_target(mut self, fidelity: f64) -> Self {
        self.target_fidelity = Some(fidelity);
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    /// Keep committing the best available action even if it loses fidelity.
    pub fn without_stagnation(mut self) -> Self {
        self.halt_on_stagnation = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEnd {
    MaxRounds,
    TargetReached,
    BudgetReached,
    Saturated,
    /// The next round would exceed the resource cap; the trace is unsuccessful.
    ResourceCap,
}

/// One committed protocol step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Lep(usize),
    Tcp(SubProtocol),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Lep(t) => write!(f, "lep{t}"),
            Step::Tcp(sub) => write!(f, "tcp{sub}"),
        }
    }
}

impl FromStr for Step {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(t) = s.strip_prefix("lep") {
            return t.parse().map(Step::Lep).map_err(|_| Error::InvalidArgument(format!("bad step '{s}'")));
        }
        if let Some(sub) = s.strip_prefix("tcp") {
            return sub.parse().map(Step::Tcp);
        }
        Err(Error::InvalidArgument(format!("bad step '{s}'")))
    }
}

/// `initial` for round 0, otherwise the steps joined by `+`.
pub fn format_steps(steps: &[Step]) -> String {
    if steps.is_empty() {
        return "initial".into();
    }
    steps.iter().map(Step::to_string).collect::<Vec<_>>().join("+")
}

pub fn parse_steps(s: &str) -> Result<Vec<Step>> {
    if s == "initial" {
        return Ok(Vec::new());
    }
    s.split('+').map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub steps: Vec<Step>,
    pub fidelity: f64,
    /// Product of the success probabilities of the round's steps.
    pub success_prob: f64,
    /// Cumulative expected channel uses.
    pub resources: f64,
}

#[derive(Clone, Debug)]
pub struct StrategyTrace {
    pub strategy: StrategyKind,
    pub graph: String,
    pub noise: String,
    pub rounds: Vec<RoundRecord>,
    pub end: TraceEnd,
    pub final_state: DiagonalState,
}

impl StrategyTrace {
    pub fn initial_fidelity(&self) -> f64 {
        self.rounds[0].fidelity
    }

    pub fn final_fidelity(&self) -> f64 {
        self.rounds.last().map(|r| r.fidelity).unwrap_or(f64::NAN)
    }

    pub fn max_fidelity(&self) -> f64 {
        self.rounds.iter().map(|r| r.fidelity).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_resources(&self) -> f64 {
        self.rounds.last().map(|r| r.resources).unwrap_or(f64::NAN)
    }

    /// Number of committed rounds (round 0 excluded).
    pub fn calls(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn successful(&self) -> bool {
        self.end != TraceEnd::ResourceCap
    }
}

impl FidelityResourceCurve for StrategyTrace {
    fn points(&self) -> Vec<(f64, f64)> {
        self.rounds.iter().map(|r| (r.fidelity, r.resources)).collect()
    }
}

/// Localized candidate evaluated on the current state.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub target: usize,
    pub outcome: StepOutcome,
    /// Channel uses of one consumed auxiliary: its edges times the
    /// pre-purification multiplier.
    pub aux_cost: f64,
}

struct AuxEntry {
    part: TargetPartition,
    aux: DiagonalState,
    multiplier: f64,
}

/// Pre-purified auxiliaries for every usable target. They depend only on the
/// noise model, never on the main state, so they are built once per run.
pub struct AuxBank {
    entries: Vec<AuxEntry>,
    gate: f64,
}

impl AuxBank {
    pub fn new(graph: &Graph, noise: &NoiseSpec, alpha: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for t in graph.vertices() {
            if graph.degree(t) == 0 {
                continue;
            }
            let part = partition_for_target(graph, t)?;
            let star = ghz_star(t, &part.neighbors)?;
            let raw = prepare_auxiliary(&star, noise)?;
            let pre = prepurify_aux(&raw, alpha, noise.gate)?;
            entries.push(AuxEntry { part, aux: pre.state, multiplier: pre.cost_multiplier });
        }
        Ok(Self { entries, gate: noise.gate })
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.part.target)
    }

    fn entry(&self, target: usize) -> Result<&AuxEntry> {
        self.entries
            .iter()
            .find(|e| e.part.target == target)
            .ok_or_else(|| Error::InvalidArgument(format!("vertex {target} has no auxiliary")))
    }

    pub fn aux_edges(&self, target: usize) -> Result<usize> {
        Ok(self.entry(target)?.part.neighbors.len())
    }

    pub fn multiplier(&self, target: usize) -> Result<f64> {
        Ok(self.entry(target)?.multiplier)
    }

    pub fn step(&self, main: &DiagonalState, target: usize) -> Result<Candidate> {
        let e = self.entry(target)?;
        let outcome = lep_step(main, &e.aux, &e.part, self.gate)?;
        Ok(Candidate { target, outcome, aux_cost: e.part.neighbors.len() as f64 * e.multiplier })
    }

    /// Every candidate, in ascending target order.
    pub fn evaluate_all(&self, main: &DiagonalState) -> Result<Vec<Candidate>> {
        let targets: Vec<usize> = self.targets().collect();
        targets.par_iter().map(|&t| self.step(main, t)).collect()
    }

    /// Highest resulting fidelity; the lowest label wins ties.
    pub fn best(&self, main: &DiagonalState) -> Result<Option<Candidate>> {
        Ok(pick_best(self.evaluate_all(main)?))
    }
}

fn pick_best(candidates: Vec<Candidate>) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| c.outcome.state.fidelity() > b.outcome.state.fidelity()) {
            best = Some(c);
        }
    }
    best
}

/// Evaluates a localized step on every vertex and returns the best one, or
/// `None` when the graph has no edges. `main` is not modified.
pub fn virtual_best_target(main: &DiagonalState, noise: &NoiseSpec, alpha: usize) -> Result<Option<Candidate>> {
    AuxBank::new(main.graph(), noise, alpha)?.best(main)
}

struct Recorder {
    stop: StopRule,
    rounds: Vec<RoundRecord>,
    ledger: ResourceLedger,
    best: f64,
    stale: usize,
}

impl Recorder {
    fn new(initial: &DiagonalState, base: f64, stop: StopRule) -> Self {
        let f0 = initial.fidelity();
        let rounds =
            vec![RoundRecord { round: 0, steps: Vec::new(), fidelity: f0, success_prob: 1.0, resources: base }];
        Self { stop, rounds, ledger: ResourceLedger::new(base), best: f0, stale: 0 }
    }

    fn fidelity(&self) -> f64 {
        self.rounds.last().unwrap().fidelity
    }

    fn before_first(&self) -> Option<TraceEnd> {
        if self.stop.target_fidelity.is_some_and(|t| self.fidelity() >= t) {
            return Some(TraceEnd::TargetReached);
        }
        if self.stop.budget.is_some_and(|b| self.ledger.current() >= b) {
            return Some(TraceEnd::BudgetReached);
        }
        if self.stop.max_rounds == 0 {
            return Some(TraceEnd::MaxRounds);
        }
        None
    }

    /// Appends a round whose resources are in `ledger`; returns why the
    /// trace ends, if it does.
    fn commit(
        &mut self,
        steps: Vec<Step>,
        fidelity: f64,
        success_prob: f64,
        ledger: ResourceLedger,
    ) -> Option<TraceEnd> {
        if !(ledger.current() <= self.stop.cap) {
            return Some(TraceEnd::ResourceCap);
        }
        let resources = ledger.current();
        self.ledger = ledger;
        self.rounds.push(RoundRecord { round: self.rounds.len(), steps, fidelity, success_prob, resources });
        if self.stop.target_fidelity.is_some_and(|t| fidelity >= t) {
            return Some(TraceEnd::TargetReached);
        }
        if self.stop.budget.is_some_and(|b| resources >= b) {
            return Some(TraceEnd::BudgetReached);
        }
        if fidelity > self.best + STAGNATION_TOL {
            self.best = fidelity;
            self.stale = 0;
        } else {
            self.stale += 1;
            // Alternating recurrence rounds may lose fidelity once before
            // the other color catches up; two misses in a row is a plateau.
            if self.stop.halt_on_stagnation && self.stale >= 2 {
                return Some(TraceEnd::Saturated);
            }
        }
        if self.rounds.len() > self.stop.max_rounds {
            return Some(TraceEnd::MaxRounds);
        }
        None
    }

    fn finish(self, scenario: &Scenario, strategy: StrategyKind, end: TraceEnd, state: DiagonalState) -> StrategyTrace {
        StrategyTrace {
            strategy,
            graph: scenario.graph.to_string(),
            noise: scenario.noise.describe(),
            rounds: self.rounds,
            end,
            final_state: state,
        }
    }
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate > current + STAGNATION_TOL
}

/// Greedy localized purification: one auxiliary per round on the target that
/// yields the highest fidelity.
pub fn run_s_alpha(scenario: &Scenario, alpha: usize, stop: StopRule) -> Result<StrategyTrace> {
    let kind = StrategyKind::Single { alpha };
    let mut state = scenario.initial_state()?;
    let bank = AuxBank::new(&scenario.graph, &scenario.noise, alpha)?;
    let mut rec = Recorder::new(&state, scenario.base_resources(), stop);
    let mut end = rec.before_first();
    while end.is_none() {
        let Some(best) = bank.best(&state)? else {
            end = Some(TraceEnd::Saturated);
            break;
        };
        let f = best.outcome.state.fidelity();
        if stop.halt_on_stagnation && !improves(f, rec.fidelity()) {
            end = Some(TraceEnd::Saturated);
            break;
        }
        let mut ledger = rec.ledger.clone();
        ledger.lep_round(bank.aux_edges(best.target)?, bank.multiplier(best.target)?, best.outcome.success_prob)?;
        end = rec.commit(vec![Step::Lep(best.target)], f, best.outcome.success_prob, ledger);
        if end != Some(TraceEnd::ResourceCap) {
            state = best.outcome.state;
        }
    }
    Ok(rec.finish(scenario, kind, end.unwrap(), state))
}

/// Localized purification with two-round look-ahead: the best ordered pair
/// of targets is committed as one round when it beats the best single step.
pub fn run_c_alpha(scenario: &Scenario, alpha: usize, stop: StopRule) -> Result<StrategyTrace> {
    let kind = StrategyKind::Combined { alpha };
    let mut state = scenario.initial_state()?;
    let bank = AuxBank::new(&scenario.graph, &scenario.noise, alpha)?;
    let mut rec = Recorder::new(&state, scenario.base_resources(), stop);
    let mut end = rec.before_first();
    while end.is_none() {
        let singles = bank.evaluate_all(&state)?;
        if singles.is_empty() {
            end = Some(TraceEnd::Saturated);
            break;
        }
        let pairs: Vec<(usize, Candidate)> = singles
            .par_iter()
            .enumerate()
            .map(|(i, first)| bank.best(&first.outcome.state).map(|c| (i, c.expect("nonempty bank"))))
            .collect::<Result<_>>()?;
        // lexicographic tie-break: first target, then second
        let mut best_pair: Option<&(usize, Candidate)> = None;
        for p in &pairs {
            if best_pair.is_none_or(|b| p.1.outcome.state.fidelity() > b.1.outcome.state.fidelity()) {
                best_pair = Some(p);
            }
        }
        let (first_idx, second) = best_pair.unwrap();
        let best_single = pick_best(singles.clone()).unwrap();
        let f1 = best_single.outcome.state.fidelity();
        let f2 = second.outcome.state.fidelity();
        let current = rec.fidelity();
        if stop.halt_on_stagnation && !improves(f1, current) && !improves(f2, current) {
            end = Some(TraceEnd::Saturated);
            break;
        }
        let mut ledger = rec.ledger.clone();
        let (steps, next, prob) = if f2 > f1 + STAGNATION_TOL {
            let first = &singles[*first_idx];
            for c in [first, second] {
                ledger.lep_round(bank.aux_edges(c.target)?, bank.multiplier(c.target)?, c.outcome.success_prob)?;
            }
            let prob = first.outcome.success_prob * second.outcome.success_prob;
            (vec![Step::Lep(first.target), Step::Lep(second.target)], second.outcome.state.clone(), prob)
        } else {
            let c = &best_single;
            ledger.lep_round(bank.aux_edges(c.target)?, bank.multiplier(c.target)?, c.outcome.success_prob)?;
            (vec![Step::Lep(c.target)], c.outcome.state.clone(), c.outcome.success_prob)
        };
        end = rec.commit(steps, next.fidelity(), prob, ledger);
        if end != Some(TraceEnd::ResourceCap) {
            state = next;
        }
    }
    Ok(rec.finish(scenario, kind, end.unwrap(), state))
}

/// Recurrence purification alternating P1 and P2, starting with P1.
pub fn run_tcp(scenario: &Scenario, stop: StopRule) -> Result<StrategyTrace> {
    run_tcp_from(scenario, SubProtocol::P1, stop)
}

pub fn run_tcp_from(scenario: &Scenario, first: SubProtocol, stop: StopRule) -> Result<StrategyTrace> {
    crate::graph::two_coloring(&scenario.graph)?;
    let mut state = scenario.initial_state()?;
    let mut rec = Recorder::new(&state, scenario.base_resources(), stop);
    let mut end = rec.before_first();
    let mut sub = first;
    while end.is_none() {
        let out = tcp_step(&state, sub, scenario.noise.gate)?;
        let mut ledger = rec.ledger.clone();
        ledger.tcp_round(out.success_prob)?;
        end = rec.commit(vec![Step::Tcp(sub)], out.state.fidelity(), out.success_prob, ledger);
        if end != Some(TraceEnd::ResourceCap) {
            state = out.state;
        }
        sub = sub.other();
    }
    Ok(rec.finish(scenario, StrategyKind::Tcp, end.unwrap(), state))
}

fn best_tcp(state: &DiagonalState, p_g: f64) -> Result<(SubProtocol, StepOutcome)> {
    let p1 = tcp_step(state, SubProtocol::P1, p_g)?;
    let p2 = tcp_step(state, SubProtocol::P2, p_g)?;
    Ok(if p2.state.fidelity() > p1.state.fidelity() { (SubProtocol::P2, p2) } else { (SubProtocol::P1, p1) })
}

/// Composite rounds of localized steps followed by one recurrence round.
///
/// With a fixed count the localized part takes up to that many greedy steps
/// (fewer if they stop improving). In auto mode it keeps going while the best
/// localized step buys more fidelity per channel use than the recurrence
/// round would. The recurrence round takes the better of P1 and P2 and
/// doubles the cost accumulated so far, since its second copy is another run
/// of the same preparation. With zero localized steps the plain alternating
/// recurrence schedule is used.
pub fn run_hybrid(scenario: &Scenario, alpha: usize, lep_rounds: LepRounds, stop: StopRule) -> Result<StrategyTrace> {
    let kind = StrategyKind::Hybrid { alpha, lep_rounds };
    if lep_rounds == LepRounds::Fixed(0) {
        let mut trace = run_tcp(scenario, stop)?;
        trace.strategy = kind;
        return Ok(trace);
    }
    crate::graph::two_coloring(&scenario.graph)?;
    let p_g = scenario.noise.gate;
    let mut state = scenario.initial_state()?;
    let bank = AuxBank::new(&scenario.graph, &scenario.noise, alpha)?;
    let mut rec = Recorder::new(&state, scenario.base_resources(), stop);
    let mut end = rec.before_first();
    let auto_limit = 4 * scenario.graph.n();
    while end.is_none() {
        let mut ledger = rec.ledger.clone();
        let mut steps = Vec::new();
        let mut prob = 1.0;
        let mut current = state.clone();
        let limit = match lep_rounds {
            LepRounds::Fixed(k) => k,
            LepRounds::Auto => auto_limit,
        };
        for _ in 0..limit {
            let Some(best) = bank.best(&current)? else { break };
            let f_now = current.fidelity();
            let f_lep = best.outcome.state.fidelity();
            let lep_cost = (ledger.current() + best.aux_cost) / best.outcome.success_prob - ledger.current();
            let take = match lep_rounds {
                LepRounds::Fixed(_) => !stop.halt_on_stagnation || improves(f_lep, f_now),
                LepRounds::Auto => {
                    let (_, tcp) = best_tcp(&current, p_g)?;
                    let tcp_cost = 2.0 * ledger.current() / tcp.success_prob - ledger.current();
                    let lep_rate = (f_lep - f_now) / lep_cost;
                    let tcp_rate = (tcp.state.fidelity() - f_now) / tcp_cost;
                    improves(f_lep, f_now) && lep_rate > tcp_rate
                }
            };
            if !take {
                break;
            }
            ledger.lep_round(bank.aux_edges(best.target)?, bank.multiplier(best.target)?, best.outcome.success_prob)?;
            prob *= best.outcome.success_prob;
            steps.push(Step::Lep(best.target));
            current = best.outcome.state;
        }
        let (sub, tcp) = best_tcp(&current, p_g)?;
        ledger.tcp_round(tcp.success_prob)?;
        prob *= tcp.success_prob;
        steps.push(Step::Tcp(sub));
        end = rec.commit(steps, tcp.state.fidelity(), prob, ledger);
        if end != Some(TraceEnd::ResourceCap) {
            state = tcp.state;
        }
    }
    Ok(rec.finish(scenario, kind, end.unwrap(), state))
}

pub fn run_strategy(scenario: &Scenario, kind: StrategyKind, stop: StopRule) -> Result<StrategyTrace> {
    match kind {
        StrategyKind::Tcp => run_tcp(scenario, stop),
        StrategyKind::Single { alpha } => run_s_alpha(scenario, alpha, stop),
        StrategyKind::Combined { alpha } => run_c_alpha(scenario, alpha, stop),
        StrategyKind::Hybrid { alpha, lep_rounds } => run_hybrid(scenario, alpha, lep_rounds, stop),
    }
}

/// Re-applies the recorded steps of `trace` from the initial state and
/// returns the fidelity after every round, round 0 first.
pub fn replay(scenario: &Scenario, trace: &StrategyTrace) -> Result<Vec<f64>> {
    let mut state = scenario.initial_state()?;
    let needs_bank = trace.rounds.iter().flat_map(|r| &r.steps).any(|s| matches!(s, Step::Lep(_)));
    let bank =
        if needs_bank { Some(AuxBank::new(&scenario.graph, &scenario.noise, trace.strategy.alpha())?) } else { None };
    let mut out = vec![state.fidelity()];
    for r in &trace.rounds[1..] {
        for step in &r.steps {
            state = match *step {
                Step::Lep(t) => bank.as_ref().unwrap().step(&state, t)?.outcome.state,
                Step::Tcp(sub) => tcp_step(&state, sub, scenario.noise.gate)?.state,
            };
        }
        out.push(state.fidelity());
    }
    Ok(out)
}
