use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::grid::{RewardHypothesis, NUM_HYPOTHESES};

/// Resolution of the planner's memo key.
const KEY_QUANTUM: f64 = 1e-9;

/// Probability vector over the eight reward hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief([f64; NUM_HYPOTHESES]);

impl Default for Belief {
    fn default() -> Self {
        Self::uniform()
    }
}

impl Belief {
    pub fn uniform() -> Self {
        Self([1.0 / NUM_HYPOTHESES as f64; NUM_HYPOTHESES])
    }

    pub fn new(probs: [f64; NUM_HYPOTHESES]) -> Result<Self, AgentError> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(AgentError::InvalidBelief("negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AgentError::InvalidBelief(format!("sums to {total}")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64; NUM_HYPOTHESES] {
        &self.0
    }

    pub fn prob(&self, r: RewardHypothesis) -> f64 {
        self.0[r.index()]
    }

    /// Posterior mode; ties go to the lowest index.
    pub fn mode(&self) -> RewardHypothesis {
        let mut best = 0;
        for i in 1..NUM_HYPOTHESES {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        RewardHypothesis::new(best).unwrap()
    }

    /// Bayes' rule with a per-hypothesis likelihood vector.
    pub fn bayes(&self, likelihood: &[f64; NUM_HYPOTHESES]) -> Result<Self, AgentError> {
        let mut out = [0.0; NUM_HYPOTHESES];
        let mut total = 0.0;
        for i in 0..NUM_HYPOTHESES {
            out[i] = self.0[i] * likelihood[i];
            total += out[i];
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(AgentError::ZeroPosterior);
        }
        for p in &mut out {
            *p /= total;
        }
        Ok(Self(out))
    }

    pub(crate) fn key(&self) -> [i64; NUM_HYPOTHESES] {
        self.0.map(|p| (p / KEY_QUANTUM).round() as i64)
    }
}
