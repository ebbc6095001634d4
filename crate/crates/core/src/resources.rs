//! Expected channel-use accounting and the fidelity/resource interpolation
//! used to compare strategies at a fixed target fidelity or a fixed budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on expected channel uses; traces exceeding it are unsuccessful.
pub const DEFAULT_RESOURCE_CAP: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    Tcp,
    Lep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Channel uses of the consumed auxiliary including its pre-purification
    /// multiplier; for recurrence rounds the full copy, i.e. the previous total.
    pub m_eff: f64,
    pub success_prob: f64,
    pub rule: UpdateRule,
}

/// Cumulative expected channel uses of the retained main state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceLedger {
    base: f64,
    current: f64,
    history: Vec<LedgerEntry>,
}

fn check_prob(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::ZeroProbability(p))
    }
}

impl ResourceLedger {
    /// `base` is the number of edges of the main graph.
    pub fn new(base: f64) -> Self {
        Self { base, current: base, history: Vec::new() }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn history(&self) -> &[LedgerEntry] {
        &self.history
    }

    /// Recurrence round: two copies in, one out with probability `p`,
    /// `R <- 2 R / p`.
    pub fn tcp_round(&mut self, success_prob: f64) -> Result<f64> {
        check_prob(success_prob)?;
        self.history.push(LedgerEntry { m_eff: self.current, success_prob, rule: UpdateRule::Tcp });
        self.current = 2.0 * self.current / success_prob;
        Ok(self.current)
    }

    /// Localized round: `R <- (R + M * multiplier) / p` with `M` the edge
    /// count of the auxiliary star.
    pub fn lep_round(&mut self, aux_edges: usize, prepurify_multiplier: f64, success_prob: f64) -> Result<f64> {
        check_prob(success_prob)?;
        if aux_edges == 0 {
            return Err(Error::InvalidArgument("auxiliary needs at least one edge".into()));
        }
        if !(prepurify_multiplier >= 1.0) {
            return Err(Error::InvalidArgument(format!("multiplier {prepurify_multiplier} below 1")));
        }
        let m_eff = aux_edges as f64 * prepurify_multiplier;
        self.history.push(LedgerEntry { m_eff, success_prob, rule: UpdateRule::Lep });
        self.current = (self.current + m_eff) / success_prob;
        Ok(self.current)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationStatus {
    Interpolated,
    /// Initial fidelity already meets the target.
    Same,
    /// The target is never bracketed by the trace.
    Unreachable,
    /// The trace ends before the budget; its final fidelity is reported.
    Capped,
}

/// Mixture of rounds `n` and `n + 1` with weight `p` on round `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    pub p: f64,
    /// Resources (fixed fidelity) or fidelity (fixed resources).
    pub value: f64,
    pub bracket: Option<(usize, usize)>,
    pub status: InterpolationStatus,
}

/// One `(fidelity, resources)` point per round, round 0 first.
pub trait FidelityResourceCurve {
    fn points(&self) -> Vec<(f64, f64)>;
}

impl FidelityResourceCurve for [(f64, f64)] {
    fn points(&self) -> Vec<(f64, f64)> {
        self.to_vec()
    }
}

/// Cheapest mixture of two consecutive rounds reaching fidelity `target`.
///
/// Uses the first consecutive pair with `F_n <= target <= F_{n+1}`.
pub fn interpolate_to_fidelity<C: FidelityResourceCurve + ?Sized>(
    trace: &C,
    target: f64,
) -> Result<InterpolationResult> {
    let pts = trace.points();
    let &(f0, r0) = pts.first().ok_or_else(|| Error::InvalidArgument("empty trace".into()))?;
    if f0 >= target {
        return Ok(InterpolationResult { p: 1.0, value: r0, bracket: None, status: InterpolationStatus::Same });
    }
    for (n, w) in pts.windows(2).enumerate() {
        let ((fa, ra), (fb, rb)) = (w[0], w[1]);
        if fa <= target && target <= fb {
            let p = if fb == fa { 1.0 } else { (fb - target) / (fb - fa) };
            return Ok(InterpolationResult {
                p,
                value: p * ra + (1.0 - p) * rb,
                bracket: Some((n, n + 1)),
                status: InterpolationStatus::Interpolated,
            });
        }
    }
    Ok(InterpolationResult { p: f64::NAN, value: f64::NAN, bracket: None, status: InterpolationStatus::Unreachable })
}

/// Best fidelity obtainable from a mixture of two consecutive rounds whose
/// expected resources equal `budget`.
pub fn interpolate_to_resources<C: FidelityResourceCurve + ?Sized>(
    trace: &C,
    budget: f64,
) -> Result<InterpolationResult> {
    let pts = trace.points();
    let &(_, r0) = pts.first().ok_or_else(|| Error::InvalidArgument("empty trace".into()))?;
    if budget < r0 {
        return Err(Error::BelowBaseCost { requested: budget, base: r0 });
    }
    for (n, w) in pts.windows(2).enumerate() {
        let ((fa, ra), (fb, rb)) = (w[0], w[1]);
        if ra <= budget && budget <= rb {
            let p = if rb == ra { 1.0 } else { (rb - budget) / (rb - ra) };
            return Ok(InterpolationResult {
                p,
                value: p * fa + (1.0 - p) * fb,
                bracket: Some((n, n + 1)),
                status: InterpolationStatus::Interpolated,
            });
        }
    }
    let &(f_last, _) = pts.last().unwrap();
    Ok(InterpolationResult { p: 1.0, value: f_last, bracket: None, status: InterpolationStatus::Capped })
}

/// Relative gain in percent, `(F_l - F_k) / F_k * 100`.
pub fn relative_gain(f_k: f64, f_l: f64) -> Result<f64> {
    if f_k == 0.0 {
        return Err(Error::InvalidArgument("relative gain from zero".into()));
    }
    Ok((f_l - f_k) / f_k * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn tcp_updates() {
        let mut l = ResourceLedger::new(7.0);
        assert_abs_diff_eq!(l.tcp_round(0.58).unwrap(), 14.0 / 0.58, epsilon = 1e-12);
        assert_abs_diff_eq!(l.current(), 24.137931034482758, epsilon = 1e-12);

        let mut l = ResourceLedger::new(7.0);
        l.tcp_round(1.0).unwrap();
        assert_eq!(l.tcp_round(1.0).unwrap(), 28.0);

        let mut l = ResourceLedger::new(11.0);
        for p in [0.5, 0.8, 1.0] {
            l.tcp_round(p).unwrap();
        }
        assert_abs_diff_eq!(l.current(), 220.0, epsilon = 1e-12);
        assert!(l.tcp_round(0.0).is_err());
    }

    #[test]
    fn lep_updates() {
        let mut l = ResourceLedger::new(7.0);
        assert_abs_diff_eq!(l.lep_round(1, 1.0, 0.58).unwrap(), 8.0 / 0.58, epsilon = 1e-12);

        let mut l = ResourceLedger::new(12.5);
        assert_eq!(l.lep_round(3, 1.0, 1.0).unwrap(), 15.5);

        // One pre-purification round costs 2/q raw auxiliaries on average, so
        // the expected spend before the main step is 7 + 1 * 2/0.58.
        let mut l = ResourceLedger::new(7.0);
        let mult = 2.0 / 0.58;
        let by_hand = (7.0 + 2.0 / 0.58) / 0.58;
        assert_abs_diff_eq!(l.lep_round(1, mult, 0.58).unwrap(), by_hand, epsilon = 1e-12);
        assert_abs_diff_eq!(l.current(), 18.014_268_727_705_11, epsilon = 1e-9);
        assert!(l.lep_round(1, 1.0, 0.0).is_err());
        assert!(l.lep_round(0, 1.0, 0.5).is_err());
    }

    #[test]
    fn fidelity_interpolation_examples() {
        let trace = [(0.80, 7.0), (0.88, 100.0), (0.92, 200.0)];
        let r = interpolate_to_fidelity(&trace[..], 0.90).unwrap();
        assert_eq!(r.status, InterpolationStatus::Interpolated);
        assert_abs_diff_eq!(r.p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, 150.0, epsilon = 1e-9);
        assert_eq!(r.bracket, Some((1, 2)));

        let r = interpolate_to_fidelity(&[(0.95, 7.0), (0.97, 20.0)][..], 0.90).unwrap();
        assert_eq!(r.status, InterpolationStatus::Same);
        assert_eq!(r.value, 7.0);

        let r = interpolate_to_fidelity(&[(0.7, 7.0), (0.85, 20.0), (0.85, 30.0)][..], 0.90).unwrap();
        assert_eq!(r.status, InterpolationStatus::Unreachable);

        let r = interpolate_to_fidelity(&[(0.7, 7.0), (0.9, 20.0), (0.9, 30.0)][..], 0.90).unwrap();
        assert_eq!(r.p, 0.0);
        assert_eq!(r.value, 20.0);
    }

    #[test]
    fn first_bracket_wins_on_non_monotone_traces() {
        let trace = [(0.5, 7.0), (0.95, 50.0), (0.6, 90.0), (0.99, 400.0)];
        let r = interpolate_to_fidelity(&trace[..], 0.9).unwrap();
        assert_eq!(r.bracket, Some((0, 1)));
    }

    #[test]
    fn resource_interpolation_examples() {
        let trace = [(0.7, 7.0), (0.8, 800.0), (0.9, 1200.0)];
        let r = interpolate_to_resources(&trace[..], 1000.0).unwrap();
        assert_abs_diff_eq!(r.p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, 0.85, epsilon = 1e-12);

        let r = interpolate_to_resources(&[(0.7, 7.0), (1.0, 50.0)][..], 1000.0).unwrap();
        assert_eq!(r.status, InterpolationStatus::Capped);
        assert_eq!(r.value, 1.0);
        assert!(matches!(interpolate_to_resources(&trace[..], 5.0), Err(Error::BelowBaseCost { .. })));
    }

    #[test]
    fn relative_gain_examples() {
        assert_abs_diff_eq!(relative_gain(0.8, 0.9).unwrap(), 12.5, epsilon = 1e-12);
        assert_eq!(relative_gain(0.6, 0.6).unwrap(), 0.0);
        assert!(relative_gain(0.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn recurrence_matches_product(base in 1.0f64..50.0, ps in proptest::collection::vec(0.01f64..=1.0, 0..20)) {
            let mut l = ResourceLedger::new(base);
            for &p in &ps {
                l.tcp_round(p).unwrap();
            }
            let product = ps.iter().fold(base, |acc, p| acc * 2.0 / p);
            prop_assert!((l.current() - product).abs() <= 1e-12 * product);
        }

        #[test]
        fn lep_ledger_matches_expansion(base in 1.0f64..50.0, steps in proptest::collection::vec((1usize..5, 1.0f64..10.0, 0.05f64..=1.0), 0..15)) {
            let mut l = ResourceLedger::new(base);
            for &(m, mult, p) in &steps {
                l.lep_round(m, mult, p).unwrap();
            }
            // R_K = L / prod p + sum_n M_n / prod_{k >= n} p_k
            let all: f64 = steps.iter().map(|s| s.2).product();
            let mut expected = base / all;
            for (n, &(m, mult, _)) in steps.iter().enumerate() {
                let tail: f64 = steps[n..].iter().map(|s| s.2).product();
                expected += m as f64 * mult / tail;
            }
            prop_assert!((l.current() - expected).abs() <= 1e-10 * expected);
        }

        #[test]
        fn interpolation_round_trip(f0 in 0.1f64..0.5, steps in proptest::collection::vec((0.001f64..0.1, 1.0f64..100.0), 1..10), t in 0.0f64..1.0) {
            let mut pts = vec![(f0, 7.0)];
            for (df, dr) in steps {
                let &(f, r) = pts.last().unwrap();
                pts.push((f + df, r + dr));
            }
            let target = f0 + t * (pts.last().unwrap().0 - f0);
            prop_assume!(target > f0);
            let a = interpolate_to_fidelity(&pts[..], target).unwrap();
            prop_assert_eq!(a.status, InterpolationStatus::Interpolated);
            prop_assert!((0.0..=1.0).contains(&a.p));
            let b = interpolate_to_resources(&pts[..], a.value).unwrap();
            prop_assert!((0.0..=1.0).contains(&b.p));
            prop_assert!((b.value - target).abs() <= 1e-10);
        }
    }
}
