//! Return gaps, clipping thresholds and surplus clipping.
//!
//! Everything here is built on the stopping time `B`, the first step at which
//! the policy takes an action with positive gap, and on the event
//! `B(s,a) = {B <= layer(s), S_layer(s) = s, A_layer(s) = a}`. A forward DP
//! over `(state, mistake flag)` gives the probability of that event and the
//! expected gap sum accumulated on it, exactly.

use crate::error::{Error, Result};
use crate::mdp::{LayeredMdp, Policy};
use crate::solver::{evaluate, is_positive_gap, pair_table, ExactSolution, PairTable};

/// Threshold value meaning "never met".
pub const NEVER: f64 = f64::INFINITY;

/// Event probabilities at or below this are treated as zero.
pub const EVENT_TOL: f64 = 1e-12;

/// Default cap on the number of enumerated policies.
pub const DEFAULT_POLICY_CAP: u128 = 100_000;

/// `a` if `a >= b`, else 0. An infinite threshold always clips to 0.
pub fn clip(a: f64, b: f64) -> f64 {
    if b.is_finite() && a >= b {
        a
    } else {
        0.0
    }
}

/// Result of checking an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-9,
        }
    }
}

/// Probability mass and gap mass of one `(state, flag)` cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cell {
    pub prob: f64,
    /// `E[sum of gaps so far * 1{in this cell}]`.
    pub gap_mass: f64,
}

/// Forward DP over `(state, mistake flag)` for a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MistakeDp {
    /// Cells on arrival at each state, before acting: `[clean, mistake]`.
    pub arrival: Vec<[Cell; 2]>,
    /// `P_pi(B(s,a))`.
    pub event_prob: PairTable,
    /// `E_pi[sum_{h <= layer(s)} gap(S_h, A_h) * 1{B(s,a)}]`.
    pub prefix_gap_mass: PairTable,
}

impl MistakeDp {
    /// Total arrival probability of layer `h`.
    pub fn layer_mass(&self, mdp: &LayeredMdp, h: usize) -> f64 {
        mdp.states_in_layer(h)
            .iter()
            .map(|&s| self.arrival[s][0].prob + self.arrival[s][1].prob)
            .sum()
    }
}

pub fn mistake_dp(mdp: &LayeredMdp, sol: &ExactSolution, policy: &Policy) -> MistakeDp {
    let mut arrival = vec![[Cell::default(); 2]; mdp.num_states()];
    arrival[mdp.start()][0].prob = 1.0;
    let mut event_prob = pair_table(mdp, 0.0);
    let mut prefix_gap_mass = pair_table(mdp, 0.0);

    for h in 1..=mdp.horizon() {
        for &s in mdp.states_in_layer(h) {
            let [clean, dirty] = arrival[s];
            if clean.prob == 0.0 && dirty.prob == 0.0 {
                continue;
            }
            let a = policy.action(s);
            let g = sol.gaps[s][a];
            let after = if is_positive_gap(g) {
                let prob = clean.prob + dirty.prob;
                [
                    Cell::default(),
                    Cell {
                        prob,
                        gap_mass: clean.gap_mass + dirty.gap_mass + g * prob,
                    },
                ]
            } else {
                [clean, dirty]
            };
            event_prob[s][a] = after[1].prob;
            prefix_gap_mass[s][a] = after[1].gap_mass;
            for &(t, p) in mdp.transitions(s, a) {
                for f in 0..2 {
                    arrival[t][f].prob += p * after[f].prob;
                    arrival[t][f].gap_mass += p * after[f].gap_mass;
                }
            }
        }
    }

    MistakeDp {
        arrival,
        event_prob,
        prefix_gap_mass,
    }
}

/// Expected gaps collected from `s` (inclusive) to the end under `policy`.
pub fn future_gaps(mdp: &LayeredMdp, sol: &ExactSolution, policy: &Policy) -> Vec<f64> {
    let mut out = vec![0.0; mdp.num_states()];
    for h in (1..=mdp.horizon()).rev() {
        for &s in mdp.states_in_layer(h) {
            let a = policy.action(s);
            out[s] = sol.gaps[s][a] + mdp.expect(s, a, &out);
        }
    }
    out
}

/// `E_pi[sum_{h=1}^H gap * 1{B(s,a)}]`, per pair.
fn full_gap_mass(mdp: &LayeredMdp, sol: &ExactSolution, policy: &Policy, dp: &MistakeDp) -> PairTable {
    let later = future_gaps(mdp, sol, policy);
    let mut out = pair_table(mdp, 0.0);
    for (s, a) in mdp.pairs() {
        let p = dp.event_prob[s][a];
        if p > 0.0 {
            out[s][a] = dp.prefix_gap_mass[s][a] + p * mdp.expect(s, a, &later);
        }
    }
    out
}

/// Clipping thresholds proportional to the average expected gap under the
/// policy, given that `B(s,a)` occurred: `(1/2H) E[sum_h gap | B(s,a)]`, or
/// [`NEVER`] when the event has (numerically) zero probability.
pub fn epsilon_threshold(mdp: &LayeredMdp, sol: &ExactSolution, policy: &Policy) -> PairTable {
    let dp = mistake_dp(mdp, sol, policy);
    let mass = full_gap_mass(mdp, sol, policy, &dp);
    let two_h = 2.0 * mdp.horizon() as f64;
    let mut out = pair_table(mdp, NEVER);
    for (s, a) in mdp.pairs() {
        let p = dp.event_prob[s][a];
        if p > EVENT_TOL {
            out[s][a] = mass[s][a] / p / two_h;
        }
    }
    out
}

/// `E_pi[sum_{h=B}^H eps(S_h, A_h)] <= 1/2 E_pi[sum_{h=1}^H gap(S_h, A_h)]`
/// for the thresholds of [`epsilon_threshold`].
pub fn check_threshold_condition(
    mdp: &LayeredMdp,
    sol: &ExactSolution,
    policy: &Policy,
) -> InequalityCheck {
    let dp = mistake_dp(mdp, sol, policy);
    let eps = epsilon_threshold(mdp, sol, policy);
    // for h >= B the event B(S_h, A_h) holds, so the left side is a sum over
    // pairs weighted by the event probability
    let lhs: f64 = mdp
        .pairs()
        .filter(|&(s, a)| dp.event_prob[s][a] > EVENT_TOL)
        .map(|(s, a)| dp.event_prob[s][a] * eps[s][a])
        .sum();
    let eval = evaluate(mdp, policy);
    let total_gap: f64 = mdp
        .pairs()
        .map(|(s, a)| eval.occupancy[s][a] * sol.gaps[s][a])
        .sum();
    InequalityCheck::new(lhs, 0.5 * total_gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnGapMethod {
    /// Deterministic DP when transitions are point masses, otherwise
    /// enumeration under the default cap.
    Auto,
    BruteForce { cap: u128 },
    DeterministicDp,
}

impl ReturnGapMethod {
    pub fn brute_force() -> Self {
        ReturnGapMethod::BruteForce {
            cap: DEFAULT_POLICY_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    BruteForce,
    DeterministicDp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// Return gap per pair; 0 where no policy realizes `B(s,a)`.
    pub return_gap: PairTable,
    pub method: MethodTag,
}

/// Best reward prefix reaching each state, split by whether a positive-gap
/// action was taken on the prefix. Requires point-mass transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixDp {
    /// `[clean, mistake]`; `-inf` when no such path exists.
    pub best: Vec<[f64; 2]>,
}

pub fn prefix_dp(mdp: &LayeredMdp, sol: &ExactSolution) -> Result<PrefixDp> {
    if !mdp.is_deterministic() {
        return Err(Error::Inapplicable(
            "transitions are not deterministic".into(),
        ));
    }
    let mut best = vec![[f64::NEG_INFINITY; 2]; mdp.num_states()];
    best[mdp.start()][0] = 0.0;
    for h in 1..mdp.horizon() {
        for &s in mdp.states_in_layer(h) {
            for a in 0..mdp.num_actions(s) {
                let Some(t) = mdp.successor(s, a) else { continue };
                let r = mdp.mean_reward(s, a);
                let positive = is_positive_gap(sol.gaps[s][a]);
                for f in 0..2 {
                    let v = best[s][f];
                    if v == f64::NEG_INFINITY {
                        continue;
                    }
                    let nf = if positive { 1 } else { f };
                    best[t][nf] = best[t][nf].max(v + r);
                }
            }
        }
    }
    Ok(PrefixDp { best })
}

impl PrefixDp {
    fn continuation(mdp: &LayeredMdp, sol: &ExactSolution, s: usize, a: usize) -> f64 {
        mdp.mean_reward(s, a) + mdp.successor(s, a).map_or(0.0, |t| sol.vstar[t])
    }

    /// Best return among policies that visit `(s,a)` after (or at) a
    /// positive-gap action; `None` when no such policy exists.
    pub fn best_mistake_return(&self, mdp: &LayeredMdp, sol: &ExactSolution, s: usize, a: usize) -> Option<f64> {
        let positive = is_positive_gap(sol.gaps[s][a]);
        let prefix = if positive {
            self.best[s][0].max(self.best[s][1])
        } else {
            self.best[s][1]
        };
        (prefix > f64::NEG_INFINITY).then(|| prefix + Self::continuation(mdp, sol, s, a))
    }

    /// Best return among all policies visiting `(s,a)`.
    pub fn best_visiting_return(&self, mdp: &LayeredMdp, sol: &ExactSolution, s: usize, a: usize) -> Option<f64> {
        let prefix = self.best[s][0].max(self.best[s][1]);
        (prefix > f64::NEG_INFINITY).then(|| prefix + Self::continuation(mdp, sol, s, a))
    }
}

pub fn return_gap(mdp: &LayeredMdp, sol: &ExactSolution, method: ReturnGapMethod) -> Result<GapProfile> {
    match method {
        ReturnGapMethod::Auto if mdp.is_deterministic() => return_gap_dp(mdp, sol),
        ReturnGapMethod::Auto => return_gap_enumerate(mdp, sol, DEFAULT_POLICY_CAP),
        ReturnGapMethod::DeterministicDp => return_gap_dp(mdp, sol),
        ReturnGapMethod::BruteForce { cap } => return_gap_enumerate(mdp, sol, cap),
    }
}

fn return_gap_dp(mdp: &LayeredMdp, sol: &ExactSolution) -> Result<GapProfile> {
    let dp = prefix_dp(mdp, sol)?;
    let v_opt = sol.v_opt(mdp);
    let h = mdp.horizon() as f64;
    let mut out = pair_table(mdp, 0.0);
    for (s, a) in mdp.pairs() {
        if let Some(v) = dp.best_mistake_return(mdp, sol, s, a) {
            out[s][a] = sol.gaps[s][a].max((v_opt - v) / h);
        }
    }
    Ok(GapProfile {
        return_gap: out,
        method: MethodTag::DeterministicDp,
    })
}

fn return_gap_enumerate(mdp: &LayeredMdp, sol: &ExactSolution, cap: u128) -> Result<GapProfile> {
    let count = mdp.policy_count();
    if count > cap {
        return Err(Error::Capacity {
            policies: count,
            cap,
        });
    }
    let h = mdp.horizon() as f64;
    let mut best = pair_table(mdp, f64::INFINITY);
    for pi in Policy::enumerate(mdp) {
        let dp = mistake_dp(mdp, sol, &pi);
        for s in 0..mdp.num_states() {
            let a = pi.action(s);
            let p = dp.event_prob[s][a];
            if p > EVENT_TOL {
                let avg = dp.prefix_gap_mass[s][a] / p / h;
                best[s][a] = best[s][a].min(avg);
            }
        }
    }
    let mut out = pair_table(mdp, 0.0);
    for (s, a) in mdp.pairs() {
        if best[s][a].is_finite() {
            out[s][a] = sol.gaps[s][a].max(best[s][a]);
        }
    }
    Ok(GapProfile {
        return_gap: out,
        method: MethodTag::BruteForce,
    })
}

/// `E(s,a) = Qbar(s,a) - r(s,a) - <P(.|s,a), Vbar>` under the true model.
pub fn surplus(mdp: &LayeredMdp, qbar: &PairTable, vbar: &[f64]) -> PairTable {
    let mut out = pair_table(mdp, 0.0);
    for (s, a) in mdp.pairs() {
        out[s][a] = qbar[s][a] - mdp.mean_reward(s, a) - mdp.expect(s, a, vbar);
    }
    out
}

/// `V*(s1) - V^pi(s1) <= 4 sum w^pi(s,a) clip[E(s,a) | gap(s,a)/4 v eps(s,a)]`.
pub fn check_clipping_bound(
    mdp: &LayeredMdp,
    sol: &ExactSolution,
    policy: &Policy,
    surpluses: &PairTable,
    thresholds: &PairTable,
) -> InequalityCheck {
    let eval = evaluate(mdp, policy);
    let lhs = sol.v_opt(mdp) - eval.return_value;
    let rhs: f64 = mdp
        .pairs()
        .filter(|&(s, a)| eval.occupancy[s][a] > 0.0)
        .map(|(s, a)| {
            let threshold = (0.25 * sol.gaps[s][a]).max(thresholds[s][a]);
            eval.occupancy[s][a] * clip(surpluses[s][a], threshold)
        })
        .sum();
    InequalityCheck::new(lhs, 4.0 * rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MdpBuilder, RewardSpec};
    use crate::presets::build_fig1;
    use crate::solver::solve;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig1() -> (LayeredMdp, ExactSolution) {
        let m = build_fig1(0.5, 0.1).unwrap();
        let sol = solve(&m);
        (m, sol)
    }

    fn named(m: &LayeredMdp, sol: &ExactSolution, choices: &[(&str, &str)]) -> Policy {
        Policy::from_named(m, choices, &sol.canonical_policy()).unwrap()
    }

    fn at(m: &LayeredMdp, t: &PairTable, s: &str, a: &str) -> f64 {
        let si = m.state_index(s).unwrap();
        t[si][m.action_index(si, a).unwrap()]
    }

    #[test]
    fn clip_cases() {
        assert_eq!(clip(5.0, 3.0), 5.0);
        assert_eq!(clip(2.0, 3.0), 0.0);
        assert_eq!(clip(3.0, 3.0), 3.0);
        assert_eq!(clip(3.0, NEVER), 0.0);
        assert_eq!(clip(0.7, 0.0), 0.7);
        assert_eq!(0.3f64.max(NEVER), NEVER);
    }

    #[test]
    fn mistake_dp_fig1_pi1() {
        let (m, sol) = fig1();
        let pi1 = named(&m, &sol, &[("s1", "a2"), ("s2", "a3")]);
        let dp = mistake_dp(&m, &sol, &pi1);
        assert_eq!(at(&m, &dp.event_prob, "s2", "a3"), 1.0);
        assert!((at(&m, &dp.prefix_gap_mass, "s2", "a3") - 0.5).abs() < 1e-15);
        for h in 1..=3 {
            assert!((dp.layer_mass(&m, h) - 1.0).abs() < 1e-12);
        }
        let opt = sol.canonical_policy();
        let dp = mistake_dp(&m, &sol, &opt);
        assert!(dp.event_prob.iter().flatten().all(|&p| p == 0.0));
    }

    #[test]
    fn thresholds_fig1() {
        let (m, sol) = fig1();
        let pi1 = named(&m, &sol, &[("s1", "a2"), ("s2", "a3")]);
        let eps = epsilon_threshold(&m, &sol, &pi1);
        let expected = 0.5 / 6.0;
        for (s, a) in [("s1", "a2"), ("s2", "a3"), ("t_blue", "u")] {
            assert!((at(&m, &eps, s, a) - expected).abs() < 1e-15);
        }
        for (s, a) in [("s1", "a1"), ("s2", "a4"), ("t_red", "u"), ("s_red", "u")] {
            assert_eq!(at(&m, &eps, s, a), NEVER);
        }
        let check = check_threshold_condition(&m, &sol, &pi1);
        assert!((check.lhs - 0.25).abs() < 1e-15);
        assert!((check.rhs - 0.25).abs() < 1e-15);
        assert!(check.holds);

        let opt = sol.canonical_policy();
        assert!(epsilon_threshold(&m, &sol, &opt).iter().flatten().all(|&e| e == NEVER));
        let check = check_threshold_condition(&m, &sol, &opt);
        assert_eq!((check.lhs, check.rhs), (0.0, 0.0));
    }

    #[test]
    fn fig1_return_gaps() {
        let (m, sol) = fig1();
        for method in [ReturnGapMethod::brute_force(), ReturnGapMethod::DeterministicDp] {
            let g = return_gap(&m, &sol, method).unwrap().return_gap;
            assert!((at(&m, &g, "s2", "a4") - 0.2).abs() < 1e-15);
            assert!((at(&m, &g, "s1", "a2") - 0.5).abs() < 1e-15);
            assert!((at(&m, &g, "s2", "a3") - 0.5 / 3.0).abs() < 1e-15);
            assert_eq!(at(&m, &g, "s1", "a1"), 0.0);
            assert_eq!(at(&m, &g, "t_red", "u"), 0.0);
        }
        assert_eq!(
            return_gap(&m, &sol, ReturnGapMethod::Auto).unwrap().method,
            MethodTag::DeterministicDp
        );
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let (m, sol) = fig1();
        match return_gap(&m, &sol, ReturnGapMethod::BruteForce { cap: 3 }) {
            Err(Error::Capacity { policies, cap }) => assert_eq!((policies, cap), (4, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dp_method_rejects_stochastic() {
        let mut b = MdpBuilder::new(2);
        b.start("s").state("s", 1).state("x", 2).state("y", 2);
        b.action("s", "a")
            .transition("s", "a", "x", 0.5)
            .transition("s", "a", "y", 0.5);
        b.action("x", "u");
        b.action("y", "u");
        let m = b.build_validated().unwrap();
        let sol = solve(&m);
        assert!(matches!(
            return_gap(&m, &sol, ReturnGapMethod::DeterministicDp),
            Err(Error::Inapplicable(_))
        ));
        assert_eq!(
            return_gap(&m, &sol, ReturnGapMethod::Auto).unwrap().method,
            MethodTag::BruteForce
        );
    }

    #[test]
    fn surplus_of_exact_values_is_zero_and_shift_telescopes() {
        let (m, sol) = fig1();
        let e = surplus(&m, &sol.qstar, &sol.vstar);
        assert!(e.iter().flatten().all(|&x| x.abs() < 1e-15));
        let delta = 0.3;
        let q: PairTable = sol.qstar.iter().map(|r| r.iter().map(|q| q + delta).collect()).collect();
        let v: Vec<f64> = sol.vstar.iter().map(|v| v + delta).collect();
        let e = surplus(&m, &q, &v);
        for (s, a) in m.pairs() {
            let expected = if m.layer(s) == m.horizon() { delta } else { 0.0 };
            assert!((e[s][a] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn clipping_bound_trivial_and_bonus_cases() {
        let (m, sol) = fig1();
        let opt = sol.canonical_policy();
        let zero = surplus(&m, &sol.qstar, &sol.vstar);
        let eps = epsilon_threshold(&m, &sol, &opt);
        let c = check_clipping_bound(&m, &sol, &opt, &zero, &eps);
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.holds);

        // exact model plus a uniform bonus of 1.0, clamped at the reward-to-go
        let mut qbar = pair_table(&m, 0.0);
        let mut vbar = vec![0.0; m.num_states()];
        for h in (1..=3).rev() {
            for &s in m.states_in_layer(h) {
                for a in 0..m.num_actions(s) {
                    qbar[s][a] = (m.mean_reward(s, a) + m.expect(s, a, &vbar) + 1.0).min(m.range(s));
                }
                vbar[s] = qbar[s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let pi1 = named(&m, &sol, &[("s1", "a2"), ("s2", "a3")]);
        let e = surplus(&m, &qbar, &vbar);
        let c = check_clipping_bound(&m, &sol, &pi1, &e, &epsilon_threshold(&m, &sol, &pi1));
        assert!((c.lhs - 0.5).abs() < 1e-15);
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn stochastic_mistake_dp_matches_monte_carlo() {
        // two-branch instance: s chooses a (random mix of x/y) or b
        let mut b = MdpBuilder::new(3);
        b.start("s")
            .state("s", 1)
            .state("x", 2)
            .state("y", 2)
            .state("t1", 3)
            .state("t2", 3);
        b.action("s", "a")
            .transition("s", "a", "x", 0.3)
            .transition("s", "a", "y", 0.7);
        b.action("s", "b").transition("s", "b", "y", 1.0);
        b.action("x", "good").transition("x", "good", "t1", 1.0);
        b.action("x", "bad").transition("x", "bad", "t2", 1.0);
        b.action("y", "c")
            .transition("y", "c", "t1", 0.4)
            .transition("y", "c", "t2", 0.6);
        b.action("y", "d").transition("y", "d", "t2", 1.0);
        b.action("t1", "u").reward("t1", "u", RewardSpec::Deterministic(0.9));
        b.action("t2", "u").reward("t2", "u", RewardSpec::Deterministic(0.2));
        b.reward("s", "b", RewardSpec::Deterministic(0.05));
        let m = b.build_validated().unwrap();
        let sol = solve(&m);
        let pi = named(&m, &sol, &[("s", "a"), ("x", "bad"), ("y", "c")]);
        let dp = mistake_dp(&m, &sol, &pi);
        let eps = epsilon_threshold(&m, &sol, &pi);

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let runs = 1_000_000usize;
        let pairs: Vec<_> = m.pairs().collect();
        let mut hits = vec![0usize; pairs.len()];
        let mut prefix_sum = vec![0.0; pairs.len()];
        let mut prefix_sq = vec![0.0; pairs.len()];
        let mut total_sum = vec![0.0; pairs.len()];
        let idx = |s: usize, a: usize| pairs.iter().position(|&p| p == (s, a)).unwrap();
        for _ in 0..runs {
            let mut s = m.start();
            let mut acc = 0.0;
            let mut mistake = false;
            let mut visited = Vec::with_capacity(3);
            loop {
                let a = pi.action(s);
                acc += sol.gaps[s][a];
                mistake |= is_positive_gap(sol.gaps[s][a]);
                if mistake {
                    visited.push((idx(s, a), acc));
                }
                match m.sample_step(s, a, &mut rng).unwrap().next {
                    Some(t) => s = t,
                    None => break,
                }
            }
            for (i, pre) in visited {
                hits[i] += 1;
                prefix_sum[i] += pre;
                prefix_sq[i] += pre * pre;
                total_sum[i] += acc;
            }
        }
        for (i, &(s, a)) in pairs.iter().enumerate() {
            let p = dp.event_prob[s][a];
            let p_hat = hits[i] as f64 / runs as f64;
            let sd = (p * (1.0 - p) / runs as f64).sqrt();
            assert!((p_hat - p).abs() <= 3.0 * sd + 1e-12, "P(B) at {s},{a}: {p_hat} vs {p}");
            if hits[i] > 0 {
                let n = hits[i] as f64;
                let mean = prefix_sum[i] / n;
                let var = (prefix_sq[i] / n - mean * mean).max(0.0);
                let cond = dp.prefix_gap_mass[s][a] / p;
                assert!((mean - cond).abs() <= 3.0 * (var / n).sqrt() + 1e-9);
                let eps_hat = total_sum[i] / n / (2.0 * m.horizon() as f64);
                assert!((eps_hat - eps[s][a]).abs() < 5e-3, "{eps_hat} vs {}", eps[s][a]);
            }
        }
    }

    #[test]
    fn random_policy_sweep_threshold_condition() {
        use crate::random::{random_mdp, random_policy, RandomMdpParams};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = random_mdp(&mut rng, &RandomMdpParams::default());
            let sol = solve(&m);
            let pi = random_policy(&mut rng, &m);
            let dp = mistake_dp(&m, &sol, &pi);
            for h in 1..=m.horizon() {
                assert!((dp.layer_mass(&m, h) - 1.0).abs() < 1e-12);
            }
            assert!(check_threshold_condition(&m, &sol, &pi).holds);
        }
    }

    mod props {
        use super::*;
        use crate::random::{random_mdp, random_policy, RandomMdpParams};
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn clip_is_idempotent(a in 0.0f64..2.0, b in 0.0f64..2.0) {
                let once = clip(a, b);
                prop_assert_eq!(clip(once, b), once);
                prop_assert!(once == 0.0 || once == a);
                prop_assert!(clip(a, b) <= a);
            }

            #[test]
            fn dp_matches_enumeration_on_deterministic_instances(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let params = RandomMdpParams { deterministic: true, max_states: 10, ..RandomMdpParams::default() };
                let m = random_mdp(&mut rng, &params);
                prop_assume!(m.policy_count() <= 2000);
                let sol = solve(&m);
                let dp = return_gap(&m, &sol, ReturnGapMethod::DeterministicDp).unwrap();
                let bf = return_gap(&m, &sol, ReturnGapMethod::brute_force()).unwrap();
                for (s, a) in m.pairs() {
                    prop_assert!((dp.return_gap[s][a] - bf.return_gap[s][a]).abs() < 1e-10);
                    prop_assert!(dp.return_gap[s][a] >= sol.gaps[s][a]);
                }
            }

            #[test]
            fn thresholds_are_positive_or_never(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = random_mdp(&mut rng, &RandomMdpParams::default());
                let sol = solve(&m);
                let pi = random_policy(&mut rng, &m);
                let eps = epsilon_threshold(&m, &sol, &pi);
                let dp = mistake_dp(&m, &sol, &pi);
                for (s, a) in m.pairs() {
                    if dp.event_prob[s][a] > EVENT_TOL {
                        prop_assert!(eps[s][a] > 0.0 && eps[s][a].is_finite());
                    } else {
                        prop_assert_eq!(eps[s][a], NEVER);
                    }
                }
            }
        }
    }
}
