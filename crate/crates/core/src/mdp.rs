//! Layered episodic MDPs: the model, its invariants, the file format and
//! one-step sampling.
//!
//! States and actions carry string identifiers; everything else in the crate
//! works with the dense indices assigned at construction time. An action is
//! addressed by `(state index, position in that state's action list)`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on per-pair probability normalization.
pub const PROB_TOL: f64 = 1e-12;

/// Reward distribution of one state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardSpec {
    Deterministic(f64),
    Bernoulli(f64),
    Gaussian { mean: f64, stddev: f64 },
}

impl RewardSpec {
    pub fn mean(&self) -> f64 {
        match *self {
            RewardSpec::Deterministic(v) => v,
            RewardSpec::Bernoulli(p) => p,
            RewardSpec::Gaussian { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            RewardSpec::Deterministic(_) => 0.0,
            RewardSpec::Bernoulli(p) => p * (1.0 - p),
            RewardSpec::Gaussian { stddev, .. } => stddev * stddev,
        }
    }

    fn check(&self) -> Option<String> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        match *self {
            RewardSpec::Deterministic(v) if !unit(v) => {
                Some(format!("deterministic reward {v} outside [0,1]"))
            }
            RewardSpec::Bernoulli(p) if !unit(p) => Some(format!("bernoulli p {p} outside [0,1]")),
            RewardSpec::Gaussian { mean, .. } if !unit(mean) => {
                Some(format!("gaussian mean {mean} outside [0,1]"))
            }
            RewardSpec::Gaussian { stddev, .. } if !(stddev > 0.0 && stddev.is_finite()) => {
                Some(format!("gaussian stddev {stddev} must be positive"))
            }
            _ => None,
        }
    }

    /// Draws one reward. Deterministic rewards consume no randomness,
    /// Bernoulli consumes one uniform `f64`, Gaussian one standard normal.
    /// Gaussian samples are not clamped to [0,1].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RewardSpec::Deterministic(v) => v,
            RewardSpec::Bernoulli(p) => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardSpec::Gaussian { mean, stddev } => Normal::new(mean, stddev)
                .expect("validated stddev")
                .sample(rng),
        }
    }
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec::Deterministic(0.0)
    }
}

/// A deterministic policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(mdp: &LayeredMdp, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != mdp.num_states() {
            return Err(Error::Usage(format!(
                "policy covers {} states, MDP has {}",
                actions.len(),
                mdp.num_states()
            )));
        }
        for (s, &a) in actions.iter().enumerate() {
            if a >= mdp.num_actions(s) {
                return Err(Error::Usage(format!(
                    "action index {a} not available at state {}",
                    mdp.state_id(s)
                )));
            }
        }
        Ok(Policy(actions))
    }

    pub(crate) fn from_raw(actions: Vec<usize>) -> Self {
        Policy(actions)
    }

    /// Policy taking the first listed action everywhere.
    pub fn first_actions(mdp: &LayeredMdp) -> Self {
        Policy(vec![0; mdp.num_states()])
    }

    /// Builds a policy from `(state id, action id)` choices; unnamed states
    /// take `fallback`'s action.
    pub fn from_named(mdp: &LayeredMdp, choices: &[(&str, &str)], fallback: &Policy) -> Result<Self> {
        let mut actions = fallback.0.clone();
        for (sid, aid) in choices {
            let s = mdp
                .state_index(sid)
                .ok_or_else(|| Error::Usage(format!("unknown state `{sid}`")))?;
            let a = mdp
                .action_index(s, aid)
                .ok_or_else(|| Error::Usage(format!("unknown action `{aid}` at state `{sid}`")))?;
            actions[s] = a;
        }
        Policy::new(mdp, actions)
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    /// All deterministic policies in mixed-radix order (state 0 varies fastest).
    pub fn enumerate(mdp: &LayeredMdp) -> impl Iterator<Item = Policy> + '_ {
        let radix: Vec<usize> = (0..mdp.num_states()).map(|s| mdp.num_actions(s)).collect();
        let empty = radix.contains(&0);
        let mut next = if empty { None } else { Some(vec![0usize; radix.len()]) };
        std::iter::from_fn(move || {
            let current = next.take()?;
            let mut succ = current.clone();
            let mut i = 0;
            loop {
                if i == succ.len() {
                    break;
                }
                succ[i] += 1;
                if succ[i] < radix[i] {
                    next = Some(succ);
                    break;
                }
                succ[i] = 0;
                i += 1;
            }
            Some(Policy(current))
        })
    }
}

/// Which invariant a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    LayerRange,
    LayerSkip,
    TerminalTransition,
    MissingTransition,
    NegativeProbability,
    ProbabilitySum,
    StartLayer,
    EmptyActions,
    Unreachable,
    RewardRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    /// `state` or `state/action`.
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reward: f64,
    /// `None` when the episode ends (layer-H state).
    pub next: Option<usize>,
}

/// A layered episodic MDP with horizon `H`.
///
/// Immutable once built. Construction through [`MdpBuilder`] only checks that
/// identifiers resolve; the model invariants are checked by
/// [`LayeredMdp::validate`], which [`parse_mdp`] and the preset builders run.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredMdp {
    horizon: usize,
    state_ids: Vec<String>,
    layers: Vec<usize>,
    start: usize,
    action_ids: Vec<Vec<String>>,
    transitions: Vec<Vec<Vec<(usize, f64)>>>,
    rewards: Vec<Vec<RewardSpec>>,
    by_layer: Vec<Vec<usize>>,
}

impl LayeredMdp {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.state_ids.len()
    }

    pub fn num_actions(&self, s: usize) -> usize {
        self.action_ids[s].len()
    }

    pub fn max_actions(&self) -> usize {
        self.action_ids.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_pairs(&self) -> usize {
        self.action_ids.iter().map(Vec::len).sum()
    }

    /// 1-based layer of `s`.
    pub fn layer(&self, s: usize) -> usize {
        self.layers[s]
    }

    /// States of layer `h` (1-based), in index order.
    pub fn states_in_layer(&self, h: usize) -> &[usize] {
        h.checked_sub(1)
            .and_then(|i| self.by_layer.get(i))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Reward-to-go range `H - layer(s) + 1`.
    pub fn range(&self, s: usize) -> f64 {
        (self.horizon + 1 - self.layers[s]) as f64
    }

    pub fn state_id(&self, s: usize) -> &str {
        &self.state_ids[s]
    }

    pub fn action_id(&self, s: usize, a: usize) -> &str {
        &self.action_ids[s][a]
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.state_ids.iter().position(|x| x == id)
    }

    pub fn action_index(&self, s: usize, id: &str) -> Option<usize> {
        self.action_ids[s].iter().position(|x| x == id)
    }

    pub fn transitions(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s][a]
    }

    pub fn reward(&self, s: usize, a: usize) -> &RewardSpec {
        &self.rewards[s][a]
    }

    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s][a].mean()
    }

    /// All `(state, action)` pairs in index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_states()).flat_map(move |s| (0..self.num_actions(s)).map(move |a| (s, a)))
    }

    /// `⟨P(·|s,a), values⟩`; zero for terminal pairs.
    pub fn expect(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        self.transitions[s][a].iter().map(|&(t, p)| p * values[t]).sum()
    }

    /// True when every non-terminal pair transitions to a single successor.
    pub fn is_deterministic(&self) -> bool {
        self.transitions
            .iter()
            .flatten()
            .all(|succ| succ.iter().filter(|&&(_, p)| p > 0.0).count() <= 1)
    }

    /// The single successor of a point-mass pair.
    pub fn successor(&self, s: usize, a: usize) -> Option<usize> {
        self.transitions[s][a]
            .iter()
            .find(|&&(_, p)| p > 0.0)
            .map(|&(t, _)| t)
    }

    /// Number of deterministic policies (saturating).
    pub fn policy_count(&self) -> u128 {
        self.action_ids
            .iter()
            .fold(1u128, |acc, acts| acc.saturating_mul(acts.len() as u128))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let mut push = |rule, location: String, detail: String| {
            out.push(Violation {
                rule,
                location,
                detail,
            })
        };
        let h_max = self.horizon;

        for s in 0..self.num_states() {
            let sid = &self.state_ids[s];
            let layer = self.layers[s];
            if layer < 1 || layer > h_max {
                push(
                    Rule::LayerRange,
                    sid.clone(),
                    format!("layer {layer} outside [1, {h_max}]"),
                );
            }
            if self.action_ids[s].is_empty() {
                push(Rule::EmptyActions, sid.clone(), "no actions".into());
            }
            for a in 0..self.num_actions(s) {
                let loc = format!("{sid}/{}", self.action_ids[s][a]);
                let succ = &self.transitions[s][a];
                if layer == h_max {
                    if !succ.is_empty() {
                        push(
                            Rule::TerminalTransition,
                            loc.clone(),
                            "layer-H pair has transitions".into(),
                        );
                    }
                } else if succ.is_empty() {
                    push(
                        Rule::MissingTransition,
                        loc.clone(),
                        "non-terminal pair has no transitions".into(),
                    );
                }
                if !succ.is_empty() {
                    let mut sum = 0.0;
                    for &(t, p) in succ {
                        if p < 0.0 || !p.is_finite() {
                            push(
                                Rule::NegativeProbability,
                                loc.clone(),
                                format!("probability {p} to {}", self.state_ids[t]),
                            );
                        }
                        if self.layers[t] != layer + 1 {
                            push(
                                Rule::LayerSkip,
                                loc.clone(),
                                format!(
                                    "layer skip: layer {layer} -> {} (layer {})",
                                    self.state_ids[t], self.layers[t]
                                ),
                            );
                        }
                        sum += p;
                    }
                    if (sum - 1.0).abs() > PROB_TOL {
                        push(Rule::ProbabilitySum, loc.clone(), format!("probability sum {sum}"));
                    }
                }
                if let Some(msg) = self.rewards[s][a].check() {
                    push(Rule::RewardRange, loc, msg);
                }
            }
        }

        if self.layers[self.start] != 1 {
            push(
                Rule::StartLayer,
                self.state_ids[self.start].clone(),
                format!("start state has layer {}", self.layers[self.start]),
            );
        }

        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(s) = queue.pop_front() {
            for succ in &self.transitions[s] {
                for &(t, p) in succ {
                    if p > 0.0 && !seen[t] {
                        seen[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        for (s, ok) in seen.iter().enumerate() {
            if !ok {
                push(
                    Rule::Unreachable,
                    self.state_ids[s].clone(),
                    "not reachable from the start state".into(),
                );
            }
        }

        ValidationReport { violations: out }
    }

    /// Copy with each non-empty transition list rescaled to sum to one.
    pub fn renormalized(&self) -> LayeredMdp {
        let mut m = self.clone();
        for succ in m.transitions.iter_mut().flatten() {
            let sum: f64 = succ.iter().map(|&(_, p)| p).sum();
            if sum > 0.0 {
                for (_, p) in succ.iter_mut() {
                    *p /= sum;
                }
            }
        }
        m
    }

    /// Samples `(reward, next state)` for action `a` at state `s`.
    ///
    /// Randomness consumed: one uniform `f64` for the successor unless the
    /// pair has at most one listed successor, then whatever the reward kind
    /// needs (see [`RewardSpec::sample`]).
    pub fn sample_step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Result<Step> {
        if s >= self.num_states() || a >= self.num_actions(s) {
            return Err(Error::Usage(format!("no pair ({s}, {a}) in this MDP")));
        }
        let succ = &self.transitions[s][a];
        let next = match succ.len() {
            0 => None,
            1 => Some(succ[0].0),
            _ => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = succ[succ.len() - 1].0;
                for &(t, p) in succ {
                    acc += p;
                    if u < acc {
                        pick = t;
                        break;
                    }
                }
                Some(pick)
            }
        };
        let reward = self.rewards[s][a].sample(rng);
        Ok(Step { reward, next })
    }
}

/// Incremental constructor addressing states and actions by id.
#[derive(Debug, Clone, Default)]
pub struct MdpBuilder {
    horizon: usize,
    start: Option<String>,
    states: Vec<(String, usize)>,
    actions: HashMap<String, Vec<String>>,
    transitions: Vec<(String, String, String, f64)>,
    rewards: Vec<(String, String, RewardSpec)>,
}

impl MdpBuilder {
    pub fn new(horizon: usize) -> Self {
        MdpBuilder {
            horizon,
            ..Default::default()
        }
    }

    pub fn start(&mut self, id: &str) -> &mut Self {
        self.start = Some(id.to_string());
        self
    }

    pub fn state(&mut self, id: &str, layer: usize) -> &mut Self {
        self.states.push((id.to_string(), layer));
        self
    }

    pub fn action(&mut self, state: &str, action: &str) -> &mut Self {
        self.actions
            .entry(state.to_string())
            .or_default()
            .push(action.to_string());
        self
    }

    pub fn transition(&mut self, state: &str, action: &str, to: &str, p: f64) -> &mut Self {
        self.transitions
            .push((state.to_string(), action.to_string(), to.to_string(), p));
        self
    }

    pub fn reward(&mut self, state: &str, action: &str, spec: RewardSpec) -> &mut Self {
        self.rewards
            .push((state.to_string(), action.to_string(), spec));
        self
    }

    /// Resolves identifiers. Does not check model invariants.
    pub fn build(&self) -> Result<LayeredMdp> {
        let schema = |field: &str, message: String| Error::Schema {
            field: field.to_string(),
            message,
        };
        if self.horizon == 0 {
            return Err(schema("horizon", "must be positive".into()));
        }
        let mut index = HashMap::new();
        for (i, (id, _)) in self.states.iter().enumerate() {
            if index.insert(id.as_str(), i).is_some() {
                return Err(schema("states", format!("duplicate state id `{id}`")));
            }
        }
        let n = self.states.len();
        for key in self.actions.keys() {
            if !index.contains_key(key.as_str()) {
                return Err(schema("actions", format!("unknown state `{key}`")));
            }
        }
        let mut action_ids = vec![Vec::new(); n];
        for (i, (id, _)) in self.states.iter().enumerate() {
            if let Some(list) = self.actions.get(id) {
                for (j, a) in list.iter().enumerate() {
                    if list[..j].contains(a) {
                        return Err(schema(
                            "actions",
                            format!("duplicate action `{a}` at state `{id}`"),
                        ));
                    }
                }
                action_ids[i] = list.clone();
            }
        }
        let resolve = |field: &str, sid: &str, aid: &str| -> Result<(usize, usize)> {
            let s = *index
                .get(sid)
                .ok_or_else(|| schema(field, format!("unknown state `{sid}`")))?;
            let a = action_ids[s]
                .iter()
                .position(|x| x == aid)
                .ok_or_else(|| schema(field, format!("unknown action `{aid}` at state `{sid}`")))?;
            Ok((s, a))
        };

        let mut transitions: Vec<Vec<Vec<(usize, f64)>>> =
            action_ids.iter().map(|a| vec![Vec::new(); a.len()]).collect();
        for (sid, aid, to, p) in &self.transitions {
            let (s, a) = resolve("transitions", sid, aid)?;
            let t = *index
                .get(to.as_str())
                .ok_or_else(|| schema("transitions", format!("unknown state `{to}`")))?;
            transitions[s][a].push((t, *p));
        }
        let mut rewards: Vec<Vec<RewardSpec>> = action_ids
            .iter()
            .map(|a| vec![RewardSpec::default(); a.len()])
            .collect();
        for (sid, aid, spec) in &self.rewards {
            let (s, a) = resolve("rewards", sid, aid)?;
            rewards[s][a] = *spec;
        }
        let start_id = self
            .start
            .as_deref()
            .ok_or_else(|| schema("start", "missing start state".into()))?;
        let start = *index
            .get(start_id)
            .ok_or_else(|| schema("start", format!("unknown state `{start_id}`")))?;

        let layers: Vec<usize> = self.states.iter().map(|&(_, l)| l).collect();
        let mut by_layer = vec![Vec::new(); self.horizon];
        for (s, &l) in layers.iter().enumerate() {
            if (1..=self.horizon).contains(&l) {
                by_layer[l - 1].push(s);
            }
        }
        Ok(LayeredMdp {
            horizon: self.horizon,
            state_ids: self.states.iter().map(|(id, _)| id.clone()).collect(),
            layers,
            start,
            action_ids,
            transitions,
            rewards,
            by_layer,
        })
    }

    /// [`build`](Self::build) followed by validation.
    pub fn build_validated(&self) -> Result<LayeredMdp> {
        let mdp = self.build()?;
        let report = mdp.validate();
        if report.is_empty() {
            Ok(mdp)
        } else {
            Err(Error::Invalid(report))
        }
    }
}

// File format.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDoc {
    horizon: usize,
    start: String,
    states: Vec<StateDoc>,
    actions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    transitions: Vec<TransitionDoc>,
    #[serde(default)]
    rewards: Vec<RewardDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    id: String,
    layer: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    from: String,
    action: String,
    to: String,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardDoc {
    state: String,
    action: String,
    dist: DistDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stddev: Option<f64>,
}

impl DistDoc {
    fn from_spec(spec: &RewardSpec) -> Self {
        let mut d = DistDoc {
            kind: String::new(),
            value: None,
            p: None,
            mean: None,
            stddev: None,
        };
        match *spec {
            RewardSpec::Deterministic(v) => {
                d.kind = "deterministic".into();
                d.value = Some(v);
            }
            RewardSpec::Bernoulli(p) => {
                d.kind = "bernoulli".into();
                d.p = Some(p);
            }
            RewardSpec::Gaussian { mean, stddev } => {
                d.kind = "gaussian".into();
                d.mean = Some(mean);
                d.stddev = Some(stddev);
            }
        }
        d
    }

    fn to_spec(&self, field: &str) -> Result<RewardSpec> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Schema {
                field: format!("{field}.{name}"),
                message: format!("missing for kind \"{}\"", self.kind),
            })
        };
        match self.kind.as_str() {
            "deterministic" => Ok(RewardSpec::Deterministic(need(self.value, "value")?)),
            "bernoulli" => Ok(RewardSpec::Bernoulli(need(self.p, "p")?)),
            "gaussian" => Ok(RewardSpec::Gaussian {
                mean: need(self.mean, "mean")?,
                stddev: need(self.stddev, "stddev")?,
            }),
            other => Err(Error::Schema {
                field: format!("{field}.kind"),
                message: format!(
                    "unknown reward kind \"{other}\" (expected deterministic, bernoulli or gaussian)"
                ),
            }),
        }
    }
}

/// Parses an MDP document and validates it.
pub fn parse_mdp(text: &str) -> Result<LayeredMdp> {
    let doc: MdpDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut b = MdpBuilder::new(doc.horizon);
    b.start(&doc.start);
    for st in &doc.states {
        b.state(&st.id, st.layer);
    }
    for (sid, acts) in &doc.actions {
        for a in acts {
            b.action(sid, a);
        }
    }
    for t in &doc.transitions {
        b.transition(&t.from, &t.action, &t.to, t.p);
    }
    for (i, r) in doc.rewards.iter().enumerate() {
        let spec = r.dist.to_spec(&format!("rewards[{i}].dist"))?;
        b.reward(&r.state, &r.action, spec);
    }
    b.build_validated()
}

/// Serializes to the JSON document format. Deterministic-zero rewards are
/// omitted, matching the format's default.
pub fn serialize_mdp(mdp: &LayeredMdp) -> String {
    let states = (0..mdp.num_states())
        .map(|s| StateDoc {
            id: mdp.state_ids[s].clone(),
            layer: mdp.layers[s],
        })
        .collect();
    let actions = (0..mdp.num_states())
        .map(|s| (mdp.state_ids[s].clone(), mdp.action_ids[s].clone()))
        .collect();
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for (s, a) in mdp.pairs() {
        for &(t, p) in &mdp.transitions[s][a] {
            transitions.push(TransitionDoc {
                from: mdp.state_ids[s].clone(),
                action: mdp.action_ids[s][a].clone(),
                to: mdp.state_ids[t].clone(),
                p,
            });
        }
        let spec = &mdp.rewards[s][a];
        if *spec != RewardSpec::Deterministic(0.0) {
            rewards.push(RewardDoc {
                state: mdp.state_ids[s].clone(),
                action: mdp.action_ids[s][a].clone(),
                dist: DistDoc::from_spec(spec),
            });
        }
    }
    let doc = MdpDoc {
        horizon: mdp.horizon,
        start: mdp.state_ids[mdp.start].clone(),
        states,
        actions,
        transitions,
        rewards,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}
