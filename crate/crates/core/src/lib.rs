//! Exact gap analysis for layered episodic MDPs.
//!
//! The crate computes value-function gaps, return gaps and clipping
//! thresholds exactly, evaluates closed-form regret bound formulas, and runs
//! seeded optimistic-learning experiments whose instantaneous regret is
//! computed from the true model.

pub mod agents;
pub mod bounds;
pub mod checks;
pub mod error;
pub mod gaps;
pub mod mdp;
pub mod presets;
pub mod random;
pub mod reproduce;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use mdp::{parse_mdp, serialize_mdp, LayeredMdp, MdpBuilder, Policy, RewardSpec};
pub use solver::{evaluate, solve, ExactSolution, PolicyEvaluation};
