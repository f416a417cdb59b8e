//! Learning agents: model-based optimistic value iteration with Hoeffding or
//! Bernstein bonuses, plus uniform-random and exact-optimal baselines.
//!
//! Agents see the MDP's layout (states, layers, actions) but learn rewards and
//! transitions only from observed trajectories.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaps::surplus;
use crate::mdp::{LayeredMdp, Policy};
use crate::solver::{pair_table, ExactSolution, PairTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BonusKind {
    Hoeffding,
    Bernstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    UcbviHoeffding,
    UcbviBernstein,
    Random,
    Oracle,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::UcbviHoeffding => "ucbvi-hoeffding",
            AgentKind::UcbviBernstein => "ucbvi-bernstein",
            AgentKind::Random => "random",
            AgentKind::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ucbvi-hoeffding" => Ok(AgentKind::UcbviHoeffding),
            "ucbvi-bernstein" => Ok(AgentKind::UcbviBernstein),
            "random" => Ok(AgentKind::Random),
            "oracle" => Ok(AgentKind::Oracle),
            _ => Err(Error::Usage(format!("unknown agent `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub delta: f64,
    pub bonus_scale: f64,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        AgentSpec {
            kind,
            delta: 0.05,
            bonus_scale: 1.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!("delta = {} must be in (0, 1)", self.delta)));
        }
        if !(self.bonus_scale >= 0.0 && self.bonus_scale.is_finite()) {
            return Err(Error::Parameter(format!("bonus scale = {} must be >= 0", self.bonus_scale)));
        }
        Ok(())
    }
}

/// Everything needed to evaluate a bonus apart from the per-pair statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusParams {
    pub kind: BonusKind,
    pub scale: f64,
    pub delta: f64,
    pub num_states: usize,
    pub max_actions: usize,
    pub horizon: usize,
}

impl BonusParams {
    pub fn for_mdp(mdp: &LayeredMdp, kind: BonusKind, scale: f64, delta: f64) -> Self {
        BonusParams {
            kind,
            scale,
            delta,
            num_states: mdp.num_states(),
            max_actions: mdp.max_actions(),
            horizon: mdp.horizon(),
        }
    }

    /// `ln(2 S A H max(k, 2) / delta)`.
    pub fn log_term(&self, k: u64) -> f64 {
        let sah = (self.num_states * self.max_actions * self.horizon) as f64;
        (2.0 * sah * k.max(2) as f64 / self.delta).ln()
    }

    /// Bonus for a pair seen `n` times; `range` is the reward-to-go bound.
    pub fn bonus(&self, n: u64, range: f64, k: u64, variance: f64) -> f64 {
        if n == 0 {
            return range;
        }
        let l = self.log_term(k);
        let n = n as f64;
        match self.kind {
            BonusKind::Hoeffding => self.scale * range * (l / n).sqrt(),
            BonusKind::Bernstein => self.scale * ((2.0 * variance.max(0.0) * l / n).sqrt() + range * l / n),
        }
    }
}

/// One step of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next: Option<usize>,
}

/// Sufficient statistics for one state-action pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairStats {
    pub n: u64,
    pub reward_sum: f64,
    pub reward_sq_sum: f64,
    /// Successor counts. Stored as floats so an exact model can be injected.
    pub next: Vec<(usize, f64)>,
}

impl PairStats {
    pub fn mean_reward(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.reward_sum / self.n as f64
        }
    }

    pub fn reward_variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = self.mean_reward();
        (self.reward_sq_sum / self.n as f64 - m * m).max(0.0)
    }

    /// `P_hat(t | s,a)`; zero for unseen pairs.
    pub fn p_hat(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.n as f64;
        self.next.iter().map(move |&(t, c)| (t, c / n))
    }

    fn record(&mut self, reward: f64, next: Option<usize>) {
        self.n += 1;
        self.reward_sum += reward;
        self.reward_sq_sum += reward * reward;
        if let Some(t) = next {
            match self.next.iter_mut().find(|(u, _)| *u == t) {
                Some((_, c)) => *c += 1.0,
                None => self.next.push((t, 1.0)),
            }
        }
    }
}

/// Optimistic model-based agent.
#[derive(Debug, Clone)]
pub struct UcbviAgent {
    layout: LayeredMdp,
    params: BonusParams,
    stats: Vec<Vec<PairStats>>,
    qbar: PairTable,
    vbar: Vec<f64>,
    /// Episodes completed so far.
    episodes: u64,
}

impl UcbviAgent {
    pub fn new(mdp: &LayeredMdp, params: BonusParams) -> Self {
        UcbviAgent {
            layout: mdp.clone(),
            params,
            stats: (0..mdp.num_states())
                .map(|s| vec![PairStats::default(); mdp.num_actions(s)])
                .collect(),
            qbar: pair_table(mdp, 0.0),
            vbar: vec![0.0; mdp.num_states()],
            episodes: 0,
        }
    }

    pub fn stats(&self, s: usize, a: usize) -> &PairStats {
        &self.stats[s][a]
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn qbar(&self) -> &PairTable {
        &self.qbar
    }

    pub fn vbar(&self) -> &[f64] {
        &self.vbar
    }

    /// Replaces the statistics with the true model as if every pair had been
    /// seen `n` times with exactly average outcomes.
    pub fn inject_model(&mut self, mdp: &LayeredMdp, n: u64) {
        let nf = n as f64;
        for (s, a) in mdp.pairs() {
            let r = mdp.reward(s, a);
            let m = r.mean();
            self.stats[s][a] = PairStats {
                n,
                reward_sum: m * nf,
                reward_sq_sum: (r.variance() + m * m) * nf,
                next: mdp.transitions(s, a).iter().map(|&(t, p)| (t, p * nf)).collect(),
            };
        }
    }

    /// Backward induction on the empirical model plus bonuses.
    pub fn plan(&mut self) -> Policy {
        let m = &self.layout;
        let k = self.episodes + 1;
        let mut actions = vec![0; m.num_states()];
        for h in (1..=m.horizon()).rev() {
            for &s in m.states_in_layer(h) {
                let range = m.range(s);
                let mut best = f64::NEG_INFINITY;
                for a in 0..m.num_actions(s) {
                    let st = &self.stats[s][a];
                    let q = if st.n == 0 {
                        range
                    } else {
                        let mut ev = 0.0;
                        let mut ev2 = 0.0;
                        for (t, p) in st.p_hat() {
                            ev += p * self.vbar[t];
                            ev2 += p * self.vbar[t] * self.vbar[t];
                        }
                        let variance = st.reward_variance() + (ev2 - ev * ev).max(0.0);
                        let b = self.params.bonus(st.n, range, k, variance);
                        (st.mean_reward() + ev + b).min(range)
                    };
                    self.qbar[s][a] = q;
                    if q > best {
                        best = q;
                        actions[s] = a;
                    }
                }
                self.vbar[s] = best;
            }
        }
        Policy::from_raw(actions)
    }

    pub fn update(&mut self, trajectory: &[Transition]) -> Result<()> {
        check_trajectory(&self.layout, trajectory)?;
        for step in trajectory {
            self.stats[step.state][step.action].record(step.reward, step.next);
        }
        self.episodes += 1;
        Ok(())
    }

    /// Surpluses of the current optimistic tables under the true model.
    pub fn surpluses_of(&self, mdp: &LayeredMdp) -> PairTable {
        surplus(mdp, &self.qbar, &self.vbar)
    }
}

fn check_trajectory(mdp: &LayeredMdp, trajectory: &[Transition]) -> Result<()> {
    let bad = |msg: String| Err(Error::Parameter(format!("malformed trajectory: {msg}")));
    if trajectory.len() != mdp.horizon() {
        return bad(format!("length {} but horizon is {}", trajectory.len(), mdp.horizon()));
    }
    if trajectory[0].state != mdp.start() {
        return bad("does not begin at the start state".into());
    }
    for (i, step) in trajectory.iter().enumerate() {
        if step.state >= mdp.num_states() || mdp.layer(step.state) != i + 1 {
            return bad(format!("step {} is not in layer {}", i + 1, i + 1));
        }
        if step.action >= mdp.num_actions(step.state) {
            return bad(format!("step {} has an invalid action", i + 1));
        }
        let expected = trajectory.get(i + 1).map(|t| t.state);
        if step.next != expected {
            return bad(format!("step {} does not chain into the next step", i + 1));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Agent {
    Ucbvi(UcbviAgent),
    /// Plays a fresh uniformly drawn deterministic policy each episode.
    Random { episodes: u64 },
    /// Plays a fixed optimal policy.
    Oracle { policy: Policy, episodes: u64 },
}

impl Agent {
    pub fn new(spec: &AgentSpec, mdp: &LayeredMdp, sol: &ExactSolution) -> Result<Self> {
        spec.check()?;
        let ucbvi = |kind| Agent::Ucbvi(UcbviAgent::new(mdp, BonusParams::for_mdp(mdp, kind, spec.bonus_scale, spec.delta)));
        Ok(match spec.kind {
            AgentKind::UcbviHoeffding => ucbvi(BonusKind::Hoeffding),
            AgentKind::UcbviBernstein => ucbvi(BonusKind::Bernstein),
            AgentKind::Random => Agent::Random { episodes: 0 },
            AgentKind::Oracle => Agent::Oracle {
                policy: sol.canonical_policy(),
                episodes: 0,
            },
        })
    }

    pub fn plan<R: Rng + ?Sized>(&mut self, mdp: &LayeredMdp, rng: &mut R) -> Policy {
        match self {
            Agent::Ucbvi(u) => u.plan(),
            Agent::Random { .. } => Policy::from_raw(
                (0..mdp.num_states())
                    .map(|s| rng.random_range(0..mdp.num_actions(s)))
                    .collect(),
            ),
            Agent::Oracle { policy, .. } => policy.clone(),
        }
    }

    pub fn update(&mut self, mdp: &LayeredMdp, trajectory: &[Transition]) -> Result<()> {
        match self {
            Agent::Ucbvi(u) => u.update(trajectory),
            Agent::Random { episodes } | Agent::Oracle { episodes, .. } => {
                check_trajectory(mdp, trajectory)?;
                *episodes += 1;
                Ok(())
            }
        }
    }

    /// Current `(Qbar, Vbar)` for optimistic agents.
    pub fn optimistic_tables(&self) -> Option<(&PairTable, &[f64])> {
        match self {
            Agent::Ucbvi(u) => Some((u.qbar(), u.vbar())),
            _ => None,
        }
    }

    pub fn surpluses_of(&self, mdp: &LayeredMdp) -> Option<PairTable> {
        match self {
            Agent::Ucbvi(u) => Some(u.surpluses_of(mdp)),
            _ => None,
        }
    }
}
