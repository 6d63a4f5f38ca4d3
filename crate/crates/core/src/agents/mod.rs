//! Human demonstration models (literal, pedagogic, mixtures) and the
//! Bayesian robots that invert them.

mod belief;
mod demo;
mod environment;
mod inference;
mod pedagogic;
mod policy;

pub use belief::Belief;
pub use demo::{read_jsonl, sample_demonstration, write_jsonl, Demonstration, Generator};
pub use environment::{Catalog, Environment};
pub use inference::{
    infer, literal_belief_update, mixture_belief_update, observations, pedagogic_belief_update,
    Observation, RobotKind,
};
pub use pedagogic::{HypothesisQ, PedagogicPlanner};
pub use policy::{literal_policy, mixture_policy, softmax};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Action, Cell};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("posterior has zero total mass")]
    ZeroPosterior,
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("transition {from:?} --{action}--> {to:?} is inconsistent with the grid dynamics")]
    InconsistentTransition { from: Cell, action: Action, to: Cell },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Demonstrator model parameters shared by humans and the robots that
/// model them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanParams {
    pub tau_literal: f64,
    pub tau_pedagogic: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// Lookahead depth of the pedagogic planner.
    pub plan_horizon: usize,
}

impl Default for HumanParams {
    fn default() -> Self {
        Self {
            tau_literal: 1.0,
            tau_pedagogic: 1.0,
            kappa: 5.0,
            alpha: 0.5,
            plan_horizon: DEFAULT_PLAN_HORIZON,
        }
    }
}

pub const DEFAULT_PLAN_HORIZON: usize = 6;

impl HumanParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidParams(m.to_string()));
        if !(self.tau_literal > 0.0 && self.tau_literal.is_finite()) {
            return bad("tau_literal must be positive");
        }
        if !(self.tau_pedagogic > 0.0 && self.tau_pedagogic.is_finite()) {
            return bad("tau_pedagogic must be positive");
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.plan_horizon == 0 {
            return bad("plan_horizon must be at least 1");
        }
        Ok(())
    }
}
