//! Closed-form regret bound coefficients.
//!
//! Every value is the coefficient of `log K` with absolute constants dropped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaps::{prefix_dp, GapProfile};
use crate::mdp::{LayeredMdp, RewardSpec};
use crate::solver::{is_positive_gap, optimal_support, ExactSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundName {
    /// Lower bound for instances whose optimal policies visit every state.
    LowerFullSupport,
    /// Lower bound for deterministic transitions.
    LowerDeterministic,
    /// Upper bound main term with return gaps.
    UpperReturnGap,
    /// Upper bound main term with value-function gaps.
    UpperValueGap,
    /// Upper bound for deterministic transitions.
    UpperDeterministic,
}

impl BoundName {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::LowerFullSupport => "lower-full-support",
            BoundName::LowerDeterministic => "lower-deterministic",
            BoundName::UpperReturnGap => "upper-return-gap",
            BoundName::UpperValueGap => "upper-value-gap",
            BoundName::UpperDeterministic => "upper-deterministic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub state: usize,
    pub action: usize,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: BoundName,
    /// Sum of the term contributions; NaN when not applicable.
    pub value: f64,
    pub terms: Vec<Term>,
    pub applicable: bool,
    pub reason: Option<String>,
    pub warnings: Vec<String>,
    /// Weaker companion form, where one is defined.
    pub secondary: Option<f64>,
}

impl BoundReport {
    fn from_terms(name: BoundName, terms: Vec<Term>) -> Self {
        BoundReport {
            name,
            // start from +0 so an empty sum is not reported as -0
            value: terms.iter().fold(0.0, |acc, t| acc + t.contribution),
            terms,
            applicable: true,
            reason: None,
            warnings: Vec::new(),
            secondary: None,
        }
    }

    fn inapplicable(name: BoundName, reason: impl Into<String>) -> Self {
        BoundReport {
            name,
            value: f64::NAN,
            terms: Vec::new(),
            applicable: false,
            reason: Some(reason.into()),
            warnings: Vec::new(),
            secondary: None,
        }
    }

    /// Value at a given number of episodes: `value * ln K`.
    pub fn at_k(&self, k: f64) -> f64 {
        self.value * k.ln()
    }
}

fn gaussian_warning(mdp: &LayeredMdp) -> Option<String> {
    let all_gaussian = mdp.pairs().all(|(s, a)| {
        matches!(mdp.reward(s, a), RewardSpec::Gaussian { stddev, .. } if (stddev * stddev - 0.5).abs() < 1e-12)
    });
    (!all_gaussian).then(|| {
        "rewards are not all Gaussian with variance 1/2; the lower bound is stated for that family".to_string()
    })
}

pub fn lb_full_support(mdp: &LayeredMdp, sol: &ExactSolution) -> BoundReport {
    let name = BoundName::LowerFullSupport;
    let support = optimal_support(mdp, sol);
    if let Some(s) = (0..mdp.num_states()).find(|&s| !support.states[s]) {
        return BoundReport::inapplicable(name, format!("state {} not optimally reachable", mdp.state_id(s)));
    }
    let terms = mdp
        .pairs()
        .filter(|&(s, a)| is_positive_gap(sol.gaps[s][a]))
        .map(|(s, a)| Term {
            state: s,
            action: a,
            contribution: 1.0 / sol.gaps[s][a],
        })
        .collect();
    let mut report = BoundReport::from_terms(name, terms);
    report.warnings.extend(gaussian_warning(mdp));
    report
}

/// Best return of a policy that visits `(s,a)`.
pub fn best_visiting_return(mdp: &LayeredMdp, sol: &ExactSolution, s: usize, a: usize) -> Result<f64> {
    let dp = prefix_dp(mdp, sol)?;
    dp.best_visiting_return(mdp, sol, s, a)
        .ok_or_else(|| Error::Inapplicable(format!("({}, {}) is unreachable", mdp.state_id(s), mdp.action_id(s, a))))
}

pub fn lb_deterministic(mdp: &LayeredMdp, sol: &ExactSolution, profile: &GapProfile) -> BoundReport {
    let name = BoundName::LowerDeterministic;
    let dp = match prefix_dp(mdp, sol) {
        Ok(dp) => dp,
        Err(e) => return BoundReport::inapplicable(name, e.to_string()),
    };
    let v_opt = sol.v_opt(mdp);
    let h = mdp.horizon() as f64;
    let z = optimal_support(mdp, sol).complement();
    let mut terms = Vec::new();
    let mut weak = 0.0;
    for &(s, a) in &z {
        let g = profile.return_gap[s][a];
        if g <= 0.0 {
            continue;
        }
        let Some(v) = dp.best_visiting_return(mdp, sol, s, a) else { continue };
        terms.push(Term {
            state: s,
            action: a,
            contribution: 1.0 / (h * (v_opt - v)),
        });
        weak += 1.0 / (h * h * g);
    }
    let mut report = BoundReport::from_terms(name, terms);
    report.secondary = Some(weak);
    report.warnings.extend(gaussian_warning(mdp));
    report
}

pub fn ub_main_term(mdp: &LayeredMdp, sol: &ExactSolution, profile: &GapProfile) -> BoundReport {
    let terms = mdp
        .pairs()
        .filter(|&(s, a)| profile.return_gap[s][a] > 0.0)
        .map(|(s, a)| Term {
            state: s,
            action: a,
            contribution: sol.variance[s][a] / profile.return_gap[s][a],
        })
        .collect();
    BoundReport::from_terms(BoundName::UpperReturnGap, terms)
}

/// Earlier main term in which zero-gap pairs pay `H * max variance / gap_min`.
pub fn ub_value_gap_main(mdp: &LayeredMdp, sol: &ExactSolution) -> BoundReport {
    let h = mdp.horizon() as f64;
    let terms = mdp
        .pairs()
        .map(|(s, a)| {
            let g = sol.gaps[s][a];
            let contribution = if is_positive_gap(g) {
                h * sol.variance[s][a] / g
            } else if sol.gap_min.is_finite() {
                h * sol.vmax_variance / sol.gap_min
            } else {
                0.0
            };
            Term {
                state: s,
                action: a,
                contribution,
            }
        })
        .filter(|t| t.contribution != 0.0)
        .collect();
    BoundReport::from_terms(BoundName::UpperValueGap, terms)
}

/// `sum H / (v* - v*_{s,a})` over pairs reachable after a positive-gap action.
pub fn ub_deterministic(mdp: &LayeredMdp, sol: &ExactSolution) -> BoundReport {
    let name = BoundName::UpperDeterministic;
    let dp = match prefix_dp(mdp, sol) {
        Ok(dp) => dp,
        Err(e) => return BoundReport::inapplicable(name, e.to_string()),
    };
    let v_opt = sol.v_opt(mdp);
    let h = mdp.horizon() as f64;
    let terms = mdp
        .pairs()
        .filter_map(|(s, a)| {
            dp.best_mistake_return(mdp, sol, s, a).map(|v| Term {
                state: s,
                action: a,
                contribution: h / (v_opt - v),
            })
        })
        .collect();
    BoundReport::from_terms(name, terms)
}

/// All five reports, in a fixed order.
pub fn all_bounds(mdp: &LayeredMdp, sol: &ExactSolution, profile: &GapProfile) -> Vec<BoundReport> {
    vec![
        lb_full_support(mdp, sol),
        lb_deterministic(mdp, sol, profile),
        ub_main_term(mdp, sol, profile),
        ub_value_gap_main(mdp, sol),
        ub_deterministic(mdp, sol),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptLemmaCheck {
    pub objective: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `sqrt(ln x / x)`, the per-step weight of the optimisation problem.
pub fn opt_weight(x: f64) -> f64 {
    (x.ln() / x).sqrt()
}

fn capped_log(n: usize, eps: f64) -> f64 {
    let cap = if eps > 0.0 { 1.0 + 1.0 / (eps * eps) } else { f64::INFINITY };
    (n as f64).min(cap).ln()
}

/// Evaluates the objective at `x` and the closed-form bound for split point
/// `t` (1-based).
pub fn check_opt_lemma(v: &[f64], eps: &[f64], x: &[f64], t: usize) -> Result<OptLemmaCheck> {
    let k_total = v.len();
    if k_total == 0 || eps.len() != k_total || x.len() != k_total {
        return Err(Error::Parameter("v, eps and x must be nonempty and of equal length".into()));
    }
    if !(1..=k_total).contains(&t) {
        return Err(Error::Parameter(format!("t = {t} must be in [1, {k_total}]")));
    }
    if v.iter().chain(eps).any(|&y| !(y >= 0.0 && y.is_finite())) {
        return Err(Error::Parameter("v and eps must be finite and nonnegative".into()));
    }

    let mut cum = 0.0;
    let mut objective = 0.0;
    for k in 0..k_total {
        let lower = if k == 0 { 1.0 } else { 0.0 };
        if !(x[k] >= lower && x[k] <= 1.0) {
            return Err(Error::Infeasible {
                k: k + 1,
                message: format!("x = {} outside [{lower}, 1]", x[k]),
            });
        }
        cum += x[k];
        let w = opt_weight(cum);
        if w + 1e-15 < eps[k] {
            return Err(Error::Infeasible {
                k: k + 1,
                message: format!("sqrt(ln X)/sqrt(X) = {w} < eps = {}", eps[k]),
            });
        }
        objective += v[k] * x[k] * w;
    }

    let vbar = v[..t].iter().cloned().fold(0.0, f64::max);
    let vstar = v[t - 1..].iter().cloned().fold(0.0, f64::max);
    let head_log = capped_log(t, eps[t - 1]);
    let head = if vbar == 0.0 || head_log == 0.0 {
        0.0
    } else {
        4.0 * vbar / eps[t - 1] * head_log
    };
    let tail = 4.0 * vstar * (capped_log(k_total, eps[k_total - 1]) * (k_total - t) as f64).sqrt();
    let bound = head + tail;
    Ok(OptLemmaCheck {
        objective,
        bound,
        holds: objective <= bound + 1e-9,
    })
}
