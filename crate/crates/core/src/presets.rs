//! Built-in instances.

use crate::error::{Error, Result};
use crate::mdp::{LayeredMdp, MdpBuilder, RewardSpec};

fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg.into()))
    }
}

/// Three-layer deterministic example with terminal rewards.
///
/// `s1 -a1-> s_red -> t_red` pays `c + eps`; `s1 -a2-> s2`, then `a3 -> t_blue`
/// pays `eps` and `a4 -> t_green` pays 0.
pub fn build_fig1(c: f64, eps: f64) -> Result<LayeredMdp> {
    check(c.is_finite() && c > 0.0, format!("c = {c} must be > 0"))?;
    check(eps.is_finite() && eps > 0.0, format!("eps = {eps} must be > 0"))?;
    check(c + eps <= 1.0, format!("c + eps = {} must be <= 1", c + eps))?;

    let mut b = MdpBuilder::new(3);
    b.start("s1")
        .state("s1", 1)
        .state("s_red", 2)
        .state("s2", 2)
        .state("t_red", 3)
        .state("t_blue", 3)
        .state("t_green", 3);
    b.action("s1", "a1").transition("s1", "a1", "s_red", 1.0);
    b.action("s1", "a2").transition("s1", "a2", "s2", 1.0);
    b.action("s_red", "u").transition("s_red", "u", "t_red", 1.0);
    b.action("s2", "a3").transition("s2", "a3", "t_blue", 1.0);
    b.action("s2", "a4").transition("s2", "a4", "t_green", 1.0);
    for (t, r) in [("t_red", c + eps), ("t_blue", eps), ("t_green", 0.0)] {
        b.action(t, "u").reward(t, "u", RewardSpec::Deterministic(r));
    }
    b.build_validated()
}

/// Three-layer experiment instance.
///
/// `s0` has `n + 1` actions. Action `a0` leads to `s1_1`, whose two actions
/// reach the terminals `s2_1` (Bernoulli 0.5) and `s2_2` (Bernoulli
/// `0.5 - gap`). Action `aj` (j >= 1) leads to `s1_{j+1}`, whose two actions
/// reach `s2_3` (Bernoulli 0) and `s2_4` (Bernoulli `eps`).
pub fn build_appendix_c(n: usize, gap: f64, eps: f64) -> Result<LayeredMdp> {
    check(n >= 1, "n must be >= 1")?;
    check(gap > 0.0 && gap <= 0.5, format!("gap = {gap} must be in (0, 0.5]"))?;
    check((0.0..0.5).contains(&eps), format!("eps = {eps} must be in [0, 0.5)"))?;

    let mut b = MdpBuilder::new(3);
    b.start("s0").state("s0", 1);
    for j in 1..=n + 1 {
        b.state(&format!("s1_{j}"), 2);
    }
    for j in 1..=4 {
        b.state(&format!("s2_{j}"), 3);
    }
    for j in 0..=n {
        let a = format!("a{j}");
        let mid = format!("s1_{}", j + 1);
        b.action("s0", &a).transition("s0", &a, &mid, 1.0);
        let (left, right) = if j == 0 { ("s2_1", "s2_2") } else { ("s2_3", "s2_4") };
        b.action(&mid, "a0").transition(&mid, "a0", left, 1.0);
        b.action(&mid, "a1").transition(&mid, "a1", right, 1.0);
    }
    for (t, p) in [("s2_1", 0.5), ("s2_2", 0.5 - gap), ("s2_3", 0.0), ("s2_4", eps)] {
        b.action(t, "u").reward(t, "u", RewardSpec::Bernoulli(p));
    }
    b.build_validated()
}

/// Six-layer deterministic instance on which optimistic algorithms pay
/// regret growing with `n`, while only `(s4_1, a2)` is off every optimal path.
///
/// Upper half: `s1_1 -a1-> s2_1`, which branches over `n` actions to
/// `s3_1..s3_n`, all merging into `s4_1`; `s1_1 -a2-> s2_2 -> s3_{n+1} -> s4_2`
/// collects `eps/2` twice. Lower half: `s4_1 -a1-> s5_1 -> s6_1` collects
/// `eps/2` twice; `s4_1 -a2-> s5_2` has a Bernoulli(1/12) reward; `s4_2 -> s5_2`;
/// `s5_2` branches over `n` actions to `s6_2..s6_{n+1}`. Every base reward
/// is 1/12, so `V*(s1_1) = 1/2 + eps`.
pub fn build_opt_lb(n: usize, eps: f64) -> Result<LayeredMdp> {
    check(n >= 1, "n must be >= 1")?;
    check(
        eps > 0.0 && eps <= 1.0 / 6.0,
        format!("eps = {eps} must be in (0, 1/6]"),
    )?;
    let base = 1.0 / 12.0;
    let high = base + eps / 2.0;
    let det = RewardSpec::Deterministic;

    let mut b = MdpBuilder::new(6);
    b.start("s1_1").state("s1_1", 1);
    b.state("s2_1", 2).state("s2_2", 2);
    for j in 1..=n + 1 {
        b.state(&format!("s3_{j}"), 3);
    }
    b.state("s4_1", 4).state("s4_2", 4);
    b.state("s5_1", 5).state("s5_2", 5);
    for j in 1..=n + 1 {
        b.state(&format!("s6_{j}"), 6);
    }

    let edge = |b: &mut MdpBuilder, s: &str, a: &str, to: Option<&str>, r: RewardSpec| {
        b.action(s, a).reward(s, a, r);
        if let Some(t) = to {
            b.transition(s, a, t, 1.0);
        }
    };

    edge(&mut b, "s1_1", "a1", Some("s2_1"), det(base));
    edge(&mut b, "s1_1", "a2", Some("s2_2"), det(high));
    for j in 1..=n {
        let mid = format!("s3_{j}");
        edge(&mut b, "s2_1", &format!("b{j}"), Some(&mid), det(base));
        edge(&mut b, &mid, "u", Some("s4_1"), det(base));
    }
    let right = format!("s3_{}", n + 1);
    edge(&mut b, "s2_2", "u", Some(&right), det(high));
    edge(&mut b, &right, "u", Some("s4_2"), det(base));

    edge(&mut b, "s4_1", "a1", Some("s5_1"), det(high));
    edge(&mut b, "s4_1", "a2", Some("s5_2"), RewardSpec::Bernoulli(base));
    edge(&mut b, "s4_2", "u", Some("s5_2"), det(base));
    edge(&mut b, "s5_1", "u", Some("s6_1"), det(high));
    edge(&mut b, "s6_1", "u", None, det(base));
    for j in 2..=n + 1 {
        let leaf = format!("s6_{j}");
        edge(&mut b, "s5_2", &format!("b{}", j - 1), Some(&leaf), det(base));
        edge(&mut b, &leaf, "u", None, det(base));
    }
    b.build_validated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{optimal_support, solve};

    #[test]
    fn fig1_is_valid_and_rejects_bad_params() {
        assert!(build_fig1(0.5, 0.1).unwrap().validate().is_empty());
        assert!(build_fig1(1.2, 0.1).is_err());
        assert!(build_fig1(0.5, 0.0).is_err());
        assert!(build_fig1(0.95, 0.1).is_err());
    }

    #[test]
    fn appendix_c_shape() {
        for n in [1, 3, 25] {
            let m = build_appendix_c(n, 0.5, 0.1).unwrap();
            assert_eq!(m.num_actions(m.start()), n + 1);
            assert_eq!(m.num_states(), n + 6);
            assert_eq!(m.horizon(), 3);
        }
        assert!(build_appendix_c(0, 0.5, 0.1).is_err());
        assert!(build_appendix_c(1, 0.6, 0.1).is_err());
        assert!(build_appendix_c(1, 0.5, 0.5).is_err());
    }

    #[test]
    fn appendix_c_values() {
        let m = build_appendix_c(1, 0.5, 0.25).unwrap();
        let sol = solve(&m);
        assert_eq!(sol.vstar[m.start()], 0.5);
        // pi1: s0 -a0-> s1_1 -a1-> s2_2, mean 0.5 - gap = 0
        let s11 = m.state_index("s1_1").unwrap();
        assert_eq!(sol.qstar[s11][1], 0.0);

        let m = build_appendix_c(1, 0.5, 0.0).unwrap();
        let sol = solve(&m);
        assert_eq!(sol.gap_min, 0.5);
        assert_eq!(sol.gaps[m.start()][1], 0.5);
    }

    #[test]
    fn opt_lb_counts_and_value() {
        let m = build_opt_lb(3, 0.05).unwrap();
        assert_eq!(m.num_states(), 2 * 3 + 9);
        assert_eq!(m.num_pairs(), 4 * 3 + 9);
        for n in [1, 3, 10] {
            for eps in [0.01, 0.05] {
                let m = build_opt_lb(n, eps).unwrap();
                let v = solve(&m).vstar[m.start()];
                assert!((v - (0.5 + eps)).abs() < 1e-12, "n={n} eps={eps}: {v}");
            }
        }
        assert!(build_opt_lb(1, 0.2).is_err());
    }

    #[test]
    fn opt_lb_optimal_paths() {
        for n in [1, 2, 4] {
            let m = build_opt_lb(n, 0.05).unwrap();
            let sol = solve(&m);
            let support = optimal_support(&m, &sol);
            let s22 = m.state_index("s2_2").unwrap();
            let s51 = m.state_index("s5_1").unwrap();
            assert!(support.states[s22] && support.states[s51]);
            let s41 = m.state_index("s4_1").unwrap();
            let off: Vec<_> = m.pairs().filter(|&(s, a)| !support.pairs[s][a]).collect();
            assert_eq!(off, vec![(s41, 1)]);

            // count optimal trajectories through each branch
            let count_from = |s: usize| -> usize {
                fn go(m: &LayeredMdp, sol: &crate::solver::ExactSolution, s: usize) -> usize {
                    sol.optimal_actions[s]
                        .iter()
                        .map(|&a| m.successor(s, a).map_or(1, |t| go(m, sol, t)))
                        .sum()
                }
                go(&m, &sol, s)
            };
            let through_s22 = count_from(s22);
            let total = count_from(m.start());
            assert_eq!(through_s22, n);
            assert_eq!(total - through_s22, n);
        }
    }
}
