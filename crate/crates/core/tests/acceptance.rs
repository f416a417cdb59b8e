//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gaplab_core::agents::{AgentKind, AgentSpec};
use gaplab_core::bounds::{all_bounds, lb_deterministic, ub_deterministic, ub_main_term, ub_value_gap_main};
use gaplab_core::checks::{run_suite, Suite};
use gaplab_core::gaps::{check_threshold_condition, return_gap, ReturnGapMethod};
use gaplab_core::mdp::{LayeredMdp, Policy};
use gaplab_core::presets::{build_appendix_c, build_fig1, build_opt_lb};
use gaplab_core::random::{random_mdp, random_policy, RandomMdpParams};
use gaplab_core::reproduce::{log_log_slope, Regime, RunSpec};
use gaplab_core::sim::{run_experiment, ExperimentConfig};
use gaplab_core::solver::{evaluate, gap_decomposition_residual, optimal_support, solve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn built_ins() -> Vec<(&'static str, LayeredMdp)> {
    vec![
        ("fig1", build_fig1(0.5, 0.1).unwrap()),
        ("appendix-c large gap", build_appendix_c(1, 0.5, 1.0 / 1e5f64.sqrt()).unwrap()),
        ("appendix-c small gap", build_appendix_c(25, (31.0f64 / 1e5).sqrt(), 0.05).unwrap()),
        ("opt-lb", build_opt_lb(3, 0.05).unwrap()),
    ]
}

fn exactness() -> Outcome {
    let mut worst_bellman = 0.0f64;
    let mut worst_decomp = 0.0f64;
    for (_, m) in built_ins() {
        let sol = solve(&m);
        worst_bellman = worst_bellman.max(sol.bellman_residual(&m));
        for pi in Policy::enumerate(&m).take(2000) {
            worst_decomp = worst_decomp.max(gap_decomposition_residual(&m, &sol, &pi));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let m = random_mdp(&mut rng, &RandomMdpParams::default());
        let sol = solve(&m);
        worst_bellman = worst_bellman.max(sol.bellman_residual(&m));
        let pi = random_policy(&mut rng, &m);
        worst_decomp = worst_decomp.max(gap_decomposition_residual(&m, &sol, &pi));
    }
    outcome(
        worst_bellman < 1e-12 && worst_decomp < 1e-10,
        format!("max Bellman residual {worst_bellman:.3e} (< 1e-12), max decomposition residual {worst_decomp:.3e} (< 1e-10)"),
    )
}

fn return_gap_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = RandomMdpParams {
        deterministic: true,
        ..RandomMdpParams::default()
    };
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 50 {
        let m = random_mdp(&mut rng, &params);
        if m.policy_count() > 1000 {
            continue;
        }
        instances += 1;
        let sol = solve(&m);
        let dp = return_gap(&m, &sol, ReturnGapMethod::DeterministicDp).unwrap();
        let bf = return_gap(&m, &sol, ReturnGapMethod::brute_force()).unwrap();
        for (s, a) in m.pairs() {
            worst = worst.max((dp.return_gap[s][a] - bf.return_gap[s][a]).abs());
        }
    }
    let m = build_fig1(0.5, 0.1).unwrap();
    let sol = solve(&m);
    let g = return_gap(&m, &sol, ReturnGapMethod::Auto).unwrap().return_gap;
    let s2 = m.state_index("s2").unwrap();
    let fig = g[s2][m.action_index(s2, "a4").unwrap()];
    outcome(
        worst <= 1e-10 && (fig - 0.2).abs() < 1e-15,
        format!("{instances} instances, max |dp - enumeration| {worst:.3e} (<= 1e-10); fig1 return gap (s2,a4) = {fig}"),
    )
}

fn threshold_condition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut held = 0;
    for _ in 0..200 {
        let m = random_mdp(&mut rng, &RandomMdpParams::default());
        let sol = solve(&m);
        let pi = random_policy(&mut rng, &m);
        if check_threshold_condition(&m, &sol, &pi).holds {
            held += 1;
        }
    }
    let m = build_fig1(0.5, 0.1).unwrap();
    let sol = solve(&m);
    let pi1 = Policy::from_named(&m, &[("s1", "a2"), ("s2", "a3")], &sol.canonical_policy()).unwrap();
    let c = check_threshold_condition(&m, &sol, &pi1);
    let exact = (c.lhs - 0.25).abs() < 1e-15 && (c.rhs - 0.25).abs() < 1e-15;
    outcome(
        held == 200 && exact,
        format!("{held}/200 hold within 1e-9; fig1 pi1: lhs {} rhs {}", c.lhs, c.rhs),
    )
}

fn clipping_audit() -> Outcome {
    let k = 10_000u64;
    let m = build_appendix_c(1, 0.5, 1.0 / (k as f64).sqrt()).unwrap();
    let mut spec = AgentSpec::new(AgentKind::UcbviHoeffding);
    spec.delta = 0.05;
    let mut cfg = ExperimentConfig::new("appendix-c n=1 gap=0.5", spec, k, 5, 41);
    cfg.audit_clipping = true;
    let r = run_experiment(&m, &cfg).unwrap();
    let c = r.clipping_total();
    let frac = c.fraction();
    outcome(
        r.invariants_ok() && c.checked == 5 * k && frac <= 2.0 * spec.delta,
        format!("{} of {} episodes violate the clipping bound (fraction {frac:.4}, limit {})", c.violations, c.checked, 2.0 * spec.delta),
    )
}

fn bound_relations() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut instances: Vec<LayeredMdp> = built_ins().into_iter().map(|x| x.1).collect();
    for i in 0..200 {
        let params = RandomMdpParams {
            deterministic: i % 2 == 0,
            max_states: 12,
            ..RandomMdpParams::default()
        };
        let m = random_mdp(&mut rng, &params);
        if m.is_deterministic() || m.policy_count() <= 100_000 {
            instances.push(m);
        }
    }
    let total = instances.len();
    for (i, m) in instances.iter().enumerate() {
        let sol = solve(m);
        let p = return_gap(m, &sol, ReturnGapMethod::Auto).unwrap();
        let r = all_bounds(m, &sol, &p);
        if ub_main_term(m, &sol, &p).value > ub_value_gap_main(m, &sol).value + 1e-9 {
            problems.push(format!("instance {i}: upper main term above value-gap term"));
        }
        if r[1].applicable && r[1].value > r[4].value + 1e-9 {
            problems.push(format!("instance {i}: deterministic lower bound above upper"));
        }
    }

    let m = build_fig1(0.5, 0.1).unwrap();
    let sol = solve(&m);
    let p = return_gap(&m, &sol, ReturnGapMethod::brute_force()).unwrap();
    let lb = lb_deterministic(&m, &sol, &p).value;
    let ub = ub_deterministic(&m, &sol).value;
    // oracle: enumerate every policy, keep the best one visiting each pair in Z
    let mut oracle = 0.0;
    for (s, a) in optimal_support(&m, &sol).complement() {
        if p.return_gap[s][a] <= 0.0 {
            continue;
        }
        let best = Policy::enumerate(&m)
            .map(|pi| evaluate(&m, &pi))
            .filter(|e| e.occupancy[s][a] > 0.0)
            .map(|e| e.return_value)
            .fold(f64::NEG_INFINITY, f64::max);
        oracle += 1.0 / (3.0 * (sol.v_opt(&m) - best));
    }

    let grid: Vec<f64> = [1e-4, 1e-3, 1e-2, 1e-1]
        .iter()
        .map(|&eps| {
            let m = build_fig1(0.5, eps).unwrap();
            let sol = solve(&m);
            let p = return_gap(&m, &sol, ReturnGapMethod::Auto).unwrap();
            lb_deterministic(&m, &sol, &p).value
        })
        .collect();
    let hi = grid.iter().cloned().fold(f64::MIN, f64::max);
    let lo = grid.iter().cloned().fold(f64::MAX, f64::min);
    let change = (hi - lo) / lo;

    let fig_ok = (lb - 28.0 / 9.0).abs() <= 1e-9 && (oracle - 28.0 / 9.0).abs() <= 1e-9 && (ub - 28.0).abs() < 1e-9;
    outcome(
        problems.is_empty() && fig_ok && change < 0.2,
        format!(
            "{total} instances, {} relation failures; fig1 lower {lb:.12} (oracle {oracle:.12}, 28/9 = {:.12}), upper {ub}; eps-grid relative change {change:.4} (< 0.2){}",
            problems.len(),
            28.0 / 9.0,
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

fn desk_reproduction() -> Outcome {
    let agent = AgentSpec::new(AgentKind::UcbviHoeffding);
    let seed = 2021;
    let mut large = Vec::new();
    for p in 0..=2 {
        let r = RunSpec::new(Regime::LargeGap, 1, p, 100_000).run(agent, seed, 5).unwrap();
        large.push(r.mean_final_regret());
    }
    let hi = large.iter().cloned().fold(f64::MIN, f64::max);
    let lo = large.iter().cloned().fold(f64::MAX, f64::min);
    let band = hi / lo;

    let mut pts = Vec::new();
    for k in [10_000u64, 40_000, 100_000] {
        let r = RunSpec::new(Regime::SmallGap, 1, 0, k).run(agent, seed, 5).unwrap();
        pts.push((k as f64, r.mean_final_regret()));
    }
    let slope = log_log_slope(&pts);
    outcome(
        band <= 5.0 && (slope - 0.5).abs() <= 0.15,
        format!(
            "large gap final regret over p=0..2: {:?} (max/min {band:.3} <= 5); small gap K-sweep {:?}, log-log slope {slope:.3} (0.5 +- 0.15)",
            large.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>(),
            pts.iter().map(|(k, v)| format!("K={k}: {v:.1}")).collect::<Vec<_>>()
        ),
    )
}

fn opt_lemma() -> Outcome {
    let r = run_suite(Suite::OptLemma, 7, 1000);
    outcome(
        r.all_passed(),
        format!("{}/{} random feasible sequences hold for every t{}", r.passed, r.total, r.first_failure.map(|f| format!("; {f}")).unwrap_or_default()),
    )
}

fn opt_lb_instance() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1, 3, 10] {
        for eps in [0.01, 0.05] {
            let m = build_opt_lb(n, eps).unwrap();
            let v = solve(&m).v_opt(&m);
            worst = worst.max((v - (0.5 + eps)).abs());
        }
    }
    let agent = AgentSpec::new(AgentKind::UcbviHoeffding);
    let mut finals = Vec::new();
    for n in [2, 4, 8] {
        let m = build_opt_lb(n, 0.05).unwrap();
        let cfg = ExperimentConfig::new(format!("opt-lb n={n} eps=0.05"), agent, 50_000, 5, 77);
        finals.push(run_experiment(&m, &cfg).unwrap().mean_final_regret());
    }
    let monotone = finals.windows(2).all(|w| w[0] < w[1]);
    outcome(
        worst <= 1e-12 && monotone,
        format!(
            "max |v* - (1/2 + eps)| {worst:.3e}; final regret for n = 2, 4, 8: {:?} (monotone: {monotone})",
            finals.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Duration, Check); 8] = [
        ("exactness", Duration::from_secs(10), exactness),
        ("return-gap oracle equivalence", Duration::from_secs(30), return_gap_oracle),
        ("threshold condition", Duration::from_secs(10), threshold_condition),
        ("surplus-clipping audit", Duration::from_secs(120), clipping_audit),
        ("bound-formula relations", Duration::from_secs(5), bound_relations),
        ("desk reproduction", Duration::from_secs(600), desk_reproduction),
        ("optimization-lemma sweep", Duration::from_secs(10), opt_lemma),
        ("opt-lb self-consistency", Duration::from_secs(600), opt_lb_instance),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && took <= *limit;
        if !pass {
            failures += 1;
        }
        println!(
            "{} [{}] {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
