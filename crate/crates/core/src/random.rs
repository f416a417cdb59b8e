//! Seeded random instance generator used by property sweeps.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::mdp::{LayeredMdp, MdpBuilder, Policy, RewardSpec};

#[derive(Debug, Clone)]
pub struct RandomMdpParams {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    /// Point-mass transitions only.
    pub deterministic: bool,
}

impl Default for RandomMdpParams {
    fn default() -> Self {
        RandomMdpParams {
            max_states: 20,
            max_actions: 4,
            max_horizon: 5,
            deterministic: false,
        }
    }
}

fn random_reward<R: Rng + ?Sized>(rng: &mut R) -> RewardSpec {
    match rng.random_range(0..3) {
        0 => RewardSpec::Deterministic(rng.random()),
        1 => RewardSpec::Bernoulli(rng.random()),
        _ => RewardSpec::Gaussian {
            mean: rng.random(),
            stddev: rng.random_range(0.1..1.0),
        },
    }
}

/// Draws a valid layered MDP within the size limits.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, params: &RandomMdpParams) -> LayeredMdp {
    let horizon = rng.random_range(1..=params.max_horizon.max(1));
    let max_states = params.max_states.max(horizon);
    let mut b = MdpBuilder::new(horizon);

    // layer sizes and action counts, chosen layer by layer
    let mut layers: Vec<Vec<(String, usize)>> = Vec::new();
    let mut used = 0;
    for h in 1..=horizon {
        let remaining_layers = horizon - h;
        let size = if h == 1 {
            1
        } else {
            let prev_pairs: usize = layers[h - 2].iter().map(|(_, k)| k).sum();
            let budget = max_states - used - remaining_layers;
            let cap = budget.min(6);
            let cap = if params.deterministic { cap.min(prev_pairs) } else { cap };
            rng.random_range(1..=cap.max(1))
        };
        used += size;
        let layer = (0..size)
            .map(|i| {
                let id = format!("s{h}_{i}");
                (id, rng.random_range(1..=params.max_actions.max(1)))
            })
            .collect();
        layers.push(layer);
    }

    b.start("s1_0");
    for (h, layer) in layers.iter().enumerate() {
        for (id, k) in layer {
            b.state(id, h + 1);
            for a in 0..*k {
                let aid = format!("a{a}");
                b.action(id, &aid).reward(id, &aid, random_reward(rng));
            }
        }
    }

    for h in 0..horizon.saturating_sub(1) {
        let pairs: Vec<(String, String)> = layers[h]
            .iter()
            .flat_map(|(id, k)| (0..*k).map(move |a| (id.clone(), format!("a{a}"))))
            .collect();
        let next: Vec<&String> = layers[h + 1].iter().map(|(id, _)| id).collect();
        if params.deterministic {
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.shuffle(rng);
            for (i, &pi) in order.iter().enumerate() {
                let target = if i < next.len() {
                    next[i]
                } else {
                    next[rng.random_range(0..next.len())]
                };
                b.transition(&pairs[pi].0, &pairs[pi].1, target, 1.0);
            }
        } else {
            let mut supports: Vec<Vec<usize>> = pairs
                .iter()
                .map(|_| {
                    let k = rng.random_range(1..=next.len().min(3));
                    let mut idx: Vec<usize> = (0..next.len()).collect();
                    idx.shuffle(rng);
                    idx.truncate(k);
                    idx
                })
                .collect();
            for t in 0..next.len() {
                if !supports.iter().any(|sup| sup.contains(&t)) {
                    let pi = rng.random_range(0..pairs.len());
                    supports[pi].push(t);
                }
            }
            for (pi, sup) in supports.iter().enumerate() {
                let weights: Vec<f64> = sup.iter().map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = weights.iter().sum();
                for (&t, w) in sup.iter().zip(&weights) {
                    b.transition(&pairs[pi].0, &pairs[pi].1, next[t], w / total);
                }
            }
        }
    }
    b.build_validated().expect("generator produces valid MDPs")
}

/// Uniformly random deterministic policy.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, mdp: &LayeredMdp) -> Policy {
    let actions = (0..mdp.num_states())
        .map(|s| rng.random_range(0..mdp.num_actions(s)))
        .collect();
    Policy::new(mdp, actions).expect("in range")
}
