//! Seeded multi-trial regret experiments with exact per-episode regret.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agents::{Agent, AgentSpec, Transition};
use crate::error::{Error, Result};
use crate::gaps::{check_clipping_bound, epsilon_threshold};
use crate::mdp::{LayeredMdp, Policy};
use crate::solver::{evaluate, solve, ExactSolution};

/// Name of the generator, as written into CSV headers.
pub const RNG_NAME: &str = "ChaCha8Rng(key=seed, stream=trial, word_pos=episode<<32)";

/// Flagged episodes kept per trial for each audit.
const MAX_FLAGGED: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Human-readable description of the instance, echoed in CSV headers.
    pub source: String,
    pub agent: AgentSpec,
    pub episodes: u64,
    pub trials: usize,
    pub seed: u64,
    pub stride: u64,
    pub audit_clipping: bool,
    pub audit_optimism: bool,
}

impl ExperimentConfig {
    pub fn new(source: impl Into<String>, agent: AgentSpec, episodes: u64, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            source: source.into(),
            agent,
            episodes,
            trials,
            seed,
            stride: default_stride(episodes),
            audit_clipping: false,
            audit_optimism: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.episodes == 0 || self.trials == 0 || self.stride == 0 {
            return Err(Error::Parameter("episodes, trials and stride must all be >= 1".into()));
        }
        self.agent.check()
    }

    fn header(&self) -> String {
        let mut out = String::new();
        let a = &self.agent;
        let _ = writeln!(out, "# config: source={}", self.source);
        let _ = writeln!(
            out,
            "# config: agent={} delta={} bonus_scale={}",
            a.kind.as_str(),
            a.delta,
            a.bonus_scale
        );
        let _ = writeln!(
            out,
            "# config: episodes={} trials={} seed={} stride={}",
            self.episodes, self.trials, self.seed, self.stride
        );
        let _ = writeln!(
            out,
            "# config: audit_clipping={} audit_optimism={}",
            self.audit_clipping, self.audit_optimism
        );
        let _ = writeln!(out, "# config: rng={RNG_NAME}");
        out
    }
}

pub fn default_stride(episodes: u64) -> u64 {
    (episodes / 1000).max(1)
}

/// One flagged audit episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flag {
    pub episode: u64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditCounter {
    pub checked: u64,
    pub violations: u64,
    /// First flagged episodes (capped).
    pub flagged: Vec<Flag>,
}

impl AuditCounter {
    fn record(&mut self, episode: u64, lhs: f64, rhs: f64, violated: bool) {
        self.checked += 1;
        if violated {
            self.violations += 1;
            if self.flagged.len() < MAX_FLAGGED {
                self.flagged.push(Flag { episode, lhs, rhs });
            }
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violations as f64 / self.checked as f64
        }
    }

    fn merge(&mut self, other: &AuditCounter) {
        self.checked += other.checked;
        self.violations += other.violations;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialTrace {
    pub trial: usize,
    /// `(episode, cumulative regret)` every `stride` episodes and at the end.
    pub points: Vec<(u64, f64)>,
    pub final_regret: f64,
    pub clipping: AuditCounter,
    pub optimism: AuditCounter,
    /// Hard invariant failures; empty on a healthy run.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub episode: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub trials: Vec<TrialTrace>,
    pub aggregate: Vec<AggregatePoint>,
}

impl RegretTrace {
    pub fn invariants_ok(&self) -> bool {
        self.trials.iter().all(|t| t.failures.is_empty())
    }

    pub fn mean_final_regret(&self) -> f64 {
        self.aggregate.last().map_or(0.0, |p| p.mean)
    }

    pub fn clipping_total(&self) -> AuditCounter {
        let mut out = AuditCounter::default();
        for t in &self.trials {
            out.merge(&t.clipping);
        }
        out
    }

    pub fn optimism_total(&self) -> AuditCounter {
        let mut out = AuditCounter::default();
        for t in &self.trials {
            out.merge(&t.optimism);
        }
        out
    }
}

/// Generator for a given trial and episode (episodes are 1-based).
pub fn episode_rng(seed: u64, trial: usize, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng.set_word_pos((episode as u128) << 32);
    rng
}

/// Samples one episode of `policy` from the true model.
pub fn rollout(mdp: &LayeredMdp, policy: &Policy, rng: &mut ChaCha8Rng) -> Vec<Transition> {
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut s = mdp.start();
    loop {
        let a = policy.action(s);
        let step = mdp
            .sample_step(s, a, rng)
            .expect("validated MDPs have proper transition rows");
        out.push(Transition {
            state: s,
            action: a,
            reward: step.reward,
            next: step.next,
        });
        match step.next {
            Some(t) => s = t,
            None => return out,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub policy: Policy,
    pub trajectory: Vec<Transition>,
    /// `v* - v^{pi_k}`, computed exactly.
    pub regret: f64,
}

/// Plans, rolls out and updates once. Instantaneous regret comes from exact
/// evaluation of the planned policy, not from sampled rewards.
pub fn run_episode(
    mdp: &LayeredMdp,
    sol: &ExactSolution,
    agent: &mut Agent,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeOutcome> {
    let policy = agent.plan(mdp, rng);
    finish_episode(mdp, sol, agent, policy, rng)
}

fn finish_episode(
    mdp: &LayeredMdp,
    sol: &ExactSolution,
    agent: &mut Agent,
    policy: Policy,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeOutcome> {
    let trajectory = rollout(mdp, &policy, rng);
    agent.update(mdp, &trajectory)?;
    let raw = sol.v_opt(mdp) - evaluate(mdp, &policy).return_value;
    let regret = if raw < 0.0 && raw > -1e-12 { 0.0 } else { raw };
    Ok(EpisodeOutcome {
        policy,
        trajectory,
        regret,
    })
}

pub fn run_trial(mdp: &LayeredMdp, sol: &ExactSolution, config: &ExperimentConfig, trial: usize) -> Result<TrialTrace> {
    let mut agent = Agent::new(&config.agent, mdp, sol)?;
    let v_opt = sol.v_opt(mdp);
    let start = mdp.start();
    let mut trace = TrialTrace {
        trial,
        points: Vec::with_capacity((config.episodes / config.stride) as usize + 1),
        final_regret: 0.0,
        clipping: AuditCounter::default(),
        optimism: AuditCounter::default(),
        failures: Vec::new(),
    };
    let mut cum = 0.0;
    for k in 1..=config.episodes {
        let mut rng = episode_rng(config.seed, trial, k);
        let policy = agent.plan(mdp, &mut rng);

        if config.audit_optimism {
            if let Some((_, vbar)) = agent.optimistic_tables() {
                let lhs = vbar[start];
                trace.optimism.record(k, lhs, v_opt, lhs < v_opt - 1e-12);
            }
        }
        if config.audit_clipping {
            if let Some(e) = agent.surpluses_of(mdp) {
                let thresholds = epsilon_threshold(mdp, sol, &policy);
                let c = check_clipping_bound(mdp, sol, &policy, &e, &thresholds);
                trace.clipping.record(k, c.lhs, c.rhs, !c.holds);
            }
        }

        let out = finish_episode(mdp, sol, &mut agent, policy, &mut rng)?;
        if !(out.regret >= 0.0 && out.regret <= v_opt + 1e-12) && trace.failures.len() < MAX_FLAGGED {
            trace
                .failures
                .push(format!("episode {k}: instantaneous regret {} outside [0, {v_opt}]", out.regret));
        }
        let next = cum + out.regret;
        if next < cum && trace.failures.len() < MAX_FLAGGED {
            trace.failures.push(format!("episode {k}: cumulative regret decreased"));
        }
        cum = next;
        if k % config.stride == 0 || k == config.episodes {
            trace.points.push((k, cum));
        }
    }
    trace.final_regret = cum;
    Ok(trace)
}

/// Runs all trials (in parallel on the current rayon pool) and aggregates
/// them in trial order, so output does not depend on scheduling.
pub fn run_experiment(mdp: &LayeredMdp, config: &ExperimentConfig) -> Result<RegretTrace> {
    config.check()?;
    let sol = solve(mdp);
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(mdp, &sol, config, t))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&trials);
    Ok(RegretTrace { trials, aggregate })
}

/// Per-episode mean and sample standard deviation across trials.
pub fn aggregate(trials: &[TrialTrace]) -> Vec<AggregatePoint> {
    let Some(first) = trials.first() else {
        return Vec::new();
    };
    let n = trials.len() as f64;
    (0..first.points.len())
        .map(|i| {
            let episode = first.points[i].0;
            let values: Vec<f64> = trials.iter().map(|t| t.points[i].1).collect();
            let mean = values.iter().sum::<f64>() / n;
            let std = if trials.len() > 1 {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            AggregatePoint { episode, mean, std }
        })
        .collect()
}

pub fn trace_csv(config: &ExperimentConfig, trace: &RegretTrace) -> String {
    let mut out = config.header();
    out.push_str("trial,episode,cum_regret\n");
    for t in &trace.trials {
        for &(k, r) in &t.points {
            let _ = writeln!(out, "{},{},{}", t.trial, k, r);
        }
    }
    out
}

pub fn aggregate_csv(config: &ExperimentConfig, trace: &RegretTrace) -> String {
    let mut out = config.header();
    out.push_str("episode,mean_cum_regret,std_cum_regret\n");
    for p in &trace.aggregate {
        let _ = writeln!(out, "{},{},{}", p.episode, p.mean, p.std);
    }
    out
}
