//! Seeded property sweeps over random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{check_opt_lemma, opt_weight};
use crate::error::{Error, Result};
use crate::gaps::{check_clipping_bound, check_threshold_condition, epsilon_threshold, surplus};
use crate::mdp::{LayeredMdp, Policy};
use crate::random::{random_mdp, random_policy, RandomMdpParams};
use crate::solver::{gap_decomposition_residual, pair_table, solve, PairTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Decomposition,
    Thresholds,
    Clipping,
    OptLemma,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Decomposition, Suite::Thresholds, Suite::Clipping, Suite::OptLemma];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Decomposition => "decomposition",
            Suite::Thresholds => "thresholds",
            Suite::Clipping => "clipping",
            Suite::OptLemma => "opt-lemma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: usize,
    pub total: usize,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

/// Generator for case `i` of a sweep.
fn case_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

pub fn run_suite(suite: Suite, seed: u64, count: usize) -> SuiteReport {
    let mut passed = 0;
    let mut first_failure = None;
    for i in 0..count {
        let mut rng = case_rng(seed, i);
        match run_case(suite, &mut rng) {
            Ok(()) => passed += 1,
            Err(msg) => {
                first_failure.get_or_insert(format!("case {i}: {msg}"));
            }
        }
    }
    SuiteReport {
        suite,
        passed,
        total: count,
        first_failure,
    }
}

fn run_case(suite: Suite, rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    match suite {
        Suite::Decomposition => decomposition_case(rng),
        Suite::Thresholds => thresholds_case(rng),
        Suite::Clipping => clipping_case(rng),
        Suite::OptLemma => opt_lemma_case(rng),
    }
}

fn decomposition_case(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let m = random_mdp(rng, &RandomMdpParams::default());
    let sol = solve(&m);
    let pi = random_policy(rng, &m);
    let bellman = sol.bellman_residual(&m);
    let residual = gap_decomposition_residual(&m, &sol, &pi);
    if bellman < 1e-12 && residual < 1e-10 {
        Ok(())
    } else {
        Err(format!("bellman residual {bellman:e}, decomposition residual {residual:e}"))
    }
}

fn thresholds_case(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let m = random_mdp(rng, &RandomMdpParams::default());
    let sol = solve(&m);
    let pi = random_policy(rng, &m);
    let c = check_threshold_condition(&m, &sol, &pi);
    if c.holds {
        Ok(())
    } else {
        Err(format!("lhs {} > rhs {}", c.lhs, c.rhs))
    }
}

/// Optimistic tables with random nonnegative surpluses, clamped to the
/// reward-to-go, and the policy greedy in them.
pub fn random_optimistic_tables<R: Rng + ?Sized>(rng: &mut R, m: &LayeredMdp) -> (PairTable, Vec<f64>, Policy) {
    let mut q = pair_table(m, 0.0);
    let mut v = vec![0.0; m.num_states()];
    let mut actions = vec![0; m.num_states()];
    for h in (1..=m.horizon()).rev() {
        for &s in m.states_in_layer(h) {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m.num_actions(s) {
                let extra = if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() * 0.5 };
                q[s][a] = (m.mean_reward(s, a) + m.expect(s, a, &v) + extra).min(m.range(s));
                if q[s][a] > best {
                    best = q[s][a];
                    actions[s] = a;
                }
            }
            v[s] = best;
        }
    }
    let pi = Policy::new(m, actions).expect("greedy actions are in range");
    (q, v, pi)
}

fn clipping_case(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let m = random_mdp(rng, &RandomMdpParams::default());
    let sol = solve(&m);
    let (q, v, pi) = random_optimistic_tables(rng, &m);
    let e = surplus(&m, &q, &v);
    let c = check_clipping_bound(&m, &sol, &pi, &e, &epsilon_threshold(&m, &sol, &pi));
    if c.holds {
        Ok(())
    } else {
        Err(format!("lhs {} > rhs {}", c.lhs, c.rhs))
    }
}

/// A random feasible instance of the optimisation problem with `len <= max_len`.
pub fn random_opt_instance<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let len = rng.random_range(1..=max_len);
    let mut x = vec![1.0];
    let mut eps = vec![0.0];
    let mut cum = 1.0;
    for _ in 1..len {
        let xi = if rng.random_bool(0.2) { 1.0 } else { rng.random::<f64>() };
        cum += xi;
        x.push(xi);
        let slack = if rng.random_bool(0.2) { 1.0 } else { rng.random::<f64>() };
        eps.push(slack * opt_weight(cum) * (1.0 - 1e-12));
    }
    let v = (0..len).map(|_| rng.random::<f64>() * 10.0).collect();
    (v, eps, x)
}

fn opt_lemma_case(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let (v, eps, x) = random_opt_instance(rng, 200);
    for t in 1..=v.len() {
        match check_opt_lemma(&v, &eps, &x, t) {
            Ok(c) if c.holds => {}
            Ok(c) => return Err(format!("t = {t}: objective {} > bound {}", c.objective, c.bound)),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        for suite in Suite::ALL {
            let r = run_suite(suite, 17, 60);
            assert!(r.all_passed(), "{:?}", r);
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(Suite::parse(suite.as_str()).unwrap(), suite);
        }
        assert!(Suite::parse("nope").is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        assert_eq!(run_suite(Suite::Clipping, 4, 20), run_suite(Suite::Clipping, 4, 20));
    }
}
