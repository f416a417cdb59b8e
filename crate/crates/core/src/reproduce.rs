//! Run grid for the three-layer experiment instance.
//!
//! Two regimes: a large fixed gap of 0.5, and a small gap `sqrt(S/K)`. Each
//! regime sweeps the small reward `eps = 4^p / sqrt(K)` for
//! `p = 0..=floor(log_4(K) / 2)`, dropping powers with `eps >= 1/2`, and two
//! values of `n`.

use crate::agents::{AgentKind, AgentSpec};
use crate::error::Result;
use crate::mdp::LayeredMdp;
use crate::presets::build_appendix_c;
use crate::sim::{run_experiment, ExperimentConfig, RegretTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn episodes(self) -> u64 {
        match self {
            Scale::Desk => 100_000,
            Scale::Paper => 500_000,
        }
    }

    pub fn branches(self) -> [usize; 2] {
        match self {
            Scale::Desk => [1, 25],
            Scale::Paper => [1, 250],
        }
    }

    pub const TRIALS: usize = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LargeGap,
    SmallGap,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LargeGap => "large-gap",
            Regime::SmallGap => "small-gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub regime: Regime,
    pub n: usize,
    pub p: u32,
    pub episodes: u64,
    pub gap: f64,
    pub eps: f64,
}

impl RunSpec {
    pub fn new(regime: Regime, n: usize, p: u32, episodes: u64) -> Self {
        let k = episodes as f64;
        let states = (n + 6) as f64;
        let gap = match regime {
            Regime::LargeGap => 0.5,
            Regime::SmallGap => (states / k).sqrt().min(0.5),
        };
        RunSpec {
            regime,
            n,
            p,
            episodes,
            gap,
            eps: 4f64.powi(p as i32) / k.sqrt(),
        }
    }

    pub fn build(&self) -> Result<LayeredMdp> {
        build_appendix_c(self.n, self.gap, self.eps)
    }

    pub fn label(&self) -> String {
        format!("{}_n{}_p{}", self.regime.as_str(), self.n, self.p)
    }

    pub fn config(&self, agent: AgentSpec, seed: u64, trials: usize) -> ExperimentConfig {
        let source = format!(
            "appendix-c n={} gap={} eps={} regime={}",
            self.n,
            self.gap,
            self.eps,
            self.regime.as_str()
        );
        ExperimentConfig::new(source, agent, self.episodes, trials, seed)
    }

    pub fn run(&self, agent: AgentSpec, seed: u64, trials: usize) -> Result<RegretTrace> {
        run_experiment(&self.build()?, &self.config(agent, seed, trials))
    }
}

/// Largest `p <= floor(log_4(K) / 2)` with `4^p / sqrt(K) < 1/2`.
pub fn max_power(episodes: u64) -> u32 {
    let mut p = 0;
    while 4f64.powi(p as i32 + 1) / (episodes as f64).sqrt() < 0.5 {
        p += 1;
    }
    p.min(((episodes as f64).log(4.0) / 2.0).floor() as u32)
}

pub fn grid(scale: Scale) -> Vec<RunSpec> {
    grid_at(scale, scale.episodes())
}

/// The grid of `scale` with a different episode count.
pub fn grid_at(scale: Scale, k: u64) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for regime in [Regime::LargeGap, Regime::SmallGap] {
        for n in scale.branches() {
            for p in 0..=max_power(k) {
                out.push(RunSpec::new(regime, n, p, k));
            }
        }
    }
    out
}

pub fn default_agent() -> AgentSpec {
    AgentSpec::new(AgentKind::UcbviHoeffding)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
