//! Exact dynamic programming on layered MDPs.

use crate::mdp::{LayeredMdp, Policy};

/// Gaps at or below this value count as zero everywhere in the crate.
pub const GAP_TOL: f64 = 1e-9;

/// Per-pair table indexed `[state][action]`.
pub type PairTable = Vec<Vec<f64>>;

pub(crate) fn pair_table(mdp: &LayeredMdp, fill: f64) -> PairTable {
    (0..mdp.num_states())
        .map(|s| vec![fill; mdp.num_actions(s)])
        .collect()
}

pub fn is_positive_gap(g: f64) -> bool {
    g > GAP_TOL
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub vstar: Vec<f64>,
    pub qstar: PairTable,
    /// `V*(s) - Q*(s,a)`, with values at or below [`GAP_TOL`] stored as 0.
    pub gaps: PairTable,
    /// Smallest positive gap; `f64::INFINITY` when every gap is zero.
    pub gap_min: f64,
    /// Zero-gap actions per state, ascending.
    pub optimal_actions: Vec<Vec<usize>>,
    /// `Var[R(s,a)] + Var_{s'~P(.|s,a)}[V*(s')]`.
    pub variance: PairTable,
    /// Maximum of `variance` over all pairs.
    pub vmax_variance: f64,
}

impl ExactSolution {
    pub fn v_opt(&self, mdp: &LayeredMdp) -> f64 {
        self.vstar[mdp.start()]
    }

    /// Lowest-index optimal action in every state.
    pub fn canonical_policy(&self) -> Policy {
        Policy::from_raw(self.optimal_actions.iter().map(|a| a[0]).collect())
    }

    /// `max |Q*(s,a) - r(s,a) - <P(.|s,a), V*>|`.
    pub fn bellman_residual(&self, mdp: &LayeredMdp) -> f64 {
        mdp.pairs()
            .map(|(s, a)| {
                (self.qstar[s][a] - mdp.mean_reward(s, a) - mdp.expect(s, a, &self.vstar)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Backward induction from layer `H` to layer 1.
pub fn solve(mdp: &LayeredMdp) -> ExactSolution {
    let n = mdp.num_states();
    let mut vstar = vec![0.0; n];
    let mut qstar = pair_table(mdp, 0.0);
    for h in (1..=mdp.horizon()).rev() {
        for &s in mdp.states_in_layer(h) {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.num_actions(s) {
                let q = mdp.mean_reward(s, a) + mdp.expect(s, a, &vstar);
                qstar[s][a] = q;
                best = best.max(q);
            }
            vstar[s] = best;
        }
    }

    let mut gaps = pair_table(mdp, 0.0);
    let mut optimal_actions = vec![Vec::new(); n];
    let mut gap_min = f64::INFINITY;
    for (s, a) in mdp.pairs() {
        let g = vstar[s] - qstar[s][a];
        if is_positive_gap(g) {
            gaps[s][a] = g;
            gap_min = gap_min.min(g);
        } else {
            optimal_actions[s].push(a);
        }
    }

    let mut variance = pair_table(mdp, 0.0);
    let mut vmax_variance: f64 = 0.0;
    for (s, a) in mdp.pairs() {
        let mean_next = mdp.expect(s, a, &vstar);
        let spread: f64 = mdp
            .transitions(s, a)
            .iter()
            .map(|&(t, p)| p * (vstar[t] - mean_next).powi(2))
            .sum();
        let v = mdp.reward(s, a).variance() + spread;
        variance[s][a] = v;
        vmax_variance = vmax_variance.max(v);
    }

    ExactSolution {
        vstar,
        qstar,
        gaps,
        gap_min,
        optimal_actions,
        variance,
        vmax_variance,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub vpi: Vec<f64>,
    pub qpi: PairTable,
    /// Probability that the policy visits `s` and takes `a`.
    pub occupancy: PairTable,
    /// `V^pi(s_1)`.
    pub return_value: f64,
}

impl PolicyEvaluation {
    /// Occupancy of state `s`.
    pub fn state_occupancy(&self, s: usize) -> f64 {
        self.occupancy[s].iter().sum()
    }
}

/// Backward pass for `V^pi`/`Q^pi`, forward pass for the occupancy measure.
pub fn evaluate(mdp: &LayeredMdp, policy: &Policy) -> PolicyEvaluation {
    let mut vpi = vec![0.0; mdp.num_states()];
    let mut qpi = pair_table(mdp, 0.0);
    for h in (1..=mdp.horizon()).rev() {
        for &s in mdp.states_in_layer(h) {
            for a in 0..mdp.num_actions(s) {
                qpi[s][a] = mdp.mean_reward(s, a) + mdp.expect(s, a, &vpi);
            }
            vpi[s] = qpi[s][policy.action(s)];
        }
    }

    let mut reach = vec![0.0; mdp.num_states()];
    reach[mdp.start()] = 1.0;
    let mut occupancy = pair_table(mdp, 0.0);
    for h in 1..=mdp.horizon() {
        for &s in mdp.states_in_layer(h) {
            let w = reach[s];
            if w == 0.0 {
                continue;
            }
            let a = policy.action(s);
            occupancy[s][a] = w;
            for &(t, p) in mdp.transitions(s, a) {
                reach[t] += w * p;
            }
        }
    }

    PolicyEvaluation {
        return_value: vpi[mdp.start()],
        vpi,
        qpi,
        occupancy,
    }
}

/// `|(v* - v^pi) - sum_{s,a} w^pi(s,a) gap(s,a)|`.
pub fn gap_decomposition_residual(mdp: &LayeredMdp, sol: &ExactSolution, policy: &Policy) -> f64 {
    let eval = evaluate(mdp, policy);
    let weighted: f64 = mdp
        .pairs()
        .map(|(s, a)| eval.occupancy[s][a] * sol.gaps[s][a])
        .sum();
    ((sol.v_opt(mdp) - eval.return_value) - weighted).abs()
}

/// Pairs and states reached with positive probability when only optimal
/// actions are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSupport {
    pub states: Vec<bool>,
    pub pairs: Vec<Vec<bool>>,
}

impl OptimalSupport {
    /// Pairs visited by no optimal policy.
    pub fn complement(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .enumerate()
            .flat_map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &inside)| !inside)
                    .map(move |(a, _)| (s, a))
            })
            .collect()
    }

    pub fn contains(&self, s: usize, a: usize) -> bool {
        self.pairs[s][a]
    }
}

pub fn optimal_support(mdp: &LayeredMdp, sol: &ExactSolution) -> OptimalSupport {
    let mut states = vec![false; mdp.num_states()];
    let mut pairs: Vec<Vec<bool>> = (0..mdp.num_states())
        .map(|s| vec![false; mdp.num_actions(s)])
        .collect();
    states[mdp.start()] = true;
    for h in 1..=mdp.horizon() {
        for &s in mdp.states_in_layer(h) {
            if !states[s] {
                continue;
            }
            for &a in &sol.optimal_actions[s] {
                pairs[s][a] = true;
                for &(t, p) in mdp.transitions(s, a) {
                    if p > 0.0 {
                        states[t] = true;
                    }
                }
            }
        }
    }
    OptimalSupport { states, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MdpBuilder, RewardSpec};
    use crate::presets::{build_appendix_c, build_fig1, build_opt_lb};
    use crate::random::{random_mdp, RandomMdpParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(m: &LayeredMdp, pairs: &[(usize, usize)]) -> Vec<String> {
        pairs
            .iter()
            .map(|&(s, a)| format!("{}/{}", m.state_id(s), m.action_id(s, a)))
            .collect()
    }

    #[test]
    fn fig1_gaps() {
        let m = build_fig1(0.5, 0.1).unwrap();
        let sol = solve(&m);
        let s1 = m.state_index("s1").unwrap();
        let s2 = m.state_index("s2").unwrap();
        assert!((sol.v_opt(&m) - 0.6).abs() < 1e-15);
        assert!((sol.gaps[s1][1] - 0.5).abs() < 1e-15);
        assert!((sol.gaps[s2][1] - 0.1).abs() < 1e-15);
        assert_eq!(sol.gaps[s2][0], 0.0);
        assert!((sol.gap_min - 0.1).abs() < 1e-15);
        assert!(sol.variance.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_action_mdp_has_infinite_gap_min() {
        let mut b = MdpBuilder::new(2);
        b.start("s").state("s", 1).state("t", 2);
        b.action("s", "a").transition("s", "a", "t", 1.0);
        b.action("t", "u").reward("t", "u", RewardSpec::Bernoulli(0.3));
        let m = b.build_validated().unwrap();
        let sol = solve(&m);
        assert!(sol.gaps.iter().flatten().all(|&g| g == 0.0));
        assert_eq!(sol.gap_min, f64::INFINITY);
        let sup = optimal_support(&m, &sol);
        assert!(sup.complement().is_empty());
        assert!((sol.variance[1][0] - 0.21).abs() < 1e-15);
    }

    #[test]
    fn brute_force_matches_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = RandomMdpParams {
            max_states: 8,
            max_actions: 2,
            max_horizon: 3,
            deterministic: false,
        };
        let mut checked = 0;
        while checked < 40 {
            let m = random_mdp(&mut rng, &params);
            if m.policy_count() > 1000 {
                continue;
            }
            checked += 1;
            let sol = solve(&m);
            let mut best = vec![f64::NEG_INFINITY; m.num_states()];
            for pi in Policy::enumerate(&m) {
                let ev = evaluate(&m, &pi);
                for s in 0..m.num_states() {
                    best[s] = best[s].max(ev.vpi[s]);
                }
            }
            for s in 0..m.num_states() {
                assert!((best[s] - sol.vstar[s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fig1_pi2_evaluation() {
        let m = build_fig1(0.5, 0.1).unwrap();
        let sol = solve(&m);
        let pi2 = Policy::from_named(&m, &[("s1", "a2"), ("s2", "a4")], &sol.canonical_policy())
            .unwrap();
        let ev = evaluate(&m, &pi2);
        assert_eq!(ev.return_value, 0.0);
        let s2 = m.state_index("s2").unwrap();
        assert_eq!(ev.occupancy[s2][1], 1.0);
        assert!(gap_decomposition_residual(&m, &sol, &pi2) < 1e-15);
        let opt = sol.canonical_policy();
        assert_eq!(evaluate(&m, &opt).return_value, sol.v_opt(&m));
        assert_eq!(gap_decomposition_residual(&m, &sol, &opt), 0.0);
    }

    #[test]
    fn occupancy_is_conserved_per_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let params = RandomMdpParams::default();
        for _ in 0..50 {
            let m = random_mdp(&mut rng, &params);
            let actions = (0..m.num_states())
                .map(|s| rng.random_range(0..m.num_actions(s)))
                .collect();
            let pi = Policy::new(&m, actions).unwrap();
            let ev = evaluate(&m, &pi);
            for h in 1..=m.horizon() {
                let total: f64 = m.states_in_layer(h).iter().map(|&s| ev.state_occupancy(s)).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
            let via_occupancy: f64 = m
                .pairs()
                .map(|(s, a)| ev.occupancy[s][a] * m.mean_reward(s, a))
                .sum();
            assert!((via_occupancy - ev.return_value).abs() < 1e-12);
        }
    }

    #[test]
    fn fig1_support() {
        let m = build_fig1(0.5, 0.1).unwrap();
        let sol = solve(&m);
        let sup = optimal_support(&m, &sol);
        let inside: Vec<_> = m.pairs().filter(|&(s, a)| sup.contains(s, a)).collect();
        assert_eq!(ids(&m, &inside), ["s1/a1", "s_red/u", "t_red/u"]);
        assert_eq!(
            ids(&m, &sup.complement()),
            ["s1/a2", "s2/a3", "s2/a4", "t_blue/u", "t_green/u"]
        );
    }

    #[test]
    fn opt_lb_support_intersects_both_branches() {
        let m = build_opt_lb(3, 0.05).unwrap();
        let sup = optimal_support(&m, &solve(&m));
        for id in ["s2_1", "s2_2"] {
            assert!(sup.states[m.state_index(id).unwrap()]);
        }
    }

    #[test]
    fn deterministic_instances_have_zero_variance_transitions() {
        let m = build_appendix_c(2, 0.5, 0.1).unwrap();
        let sol = solve(&m);
        for (s, a) in m.pairs() {
            assert!(sol.variance[s][a] >= 0.0);
            // rewards only on terminals, so non-terminal pairs have zero variance
            if m.layer(s) < m.horizon() {
                assert_eq!(sol.variance[s][a], 0.0);
            }
        }
        assert!((sol.vmax_variance - 0.25).abs() < 1e-15);
    }
}
