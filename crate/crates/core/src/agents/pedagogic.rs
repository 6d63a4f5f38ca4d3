//! Planning for the pedagogic demonstrator.
//!
//! The pedagogic human maximizes the shaped reward
//! `r'(s, a, s') = r(s, a, s') + kappa * (b'(r) - b(r))`, where `b` is the
//! literal robot's belief before the step and `b'` after it. The shaping
//! term depends on history only through `b`, so planning runs on the
//! deterministic augmented MDP over `(cell, b)`. Values are computed by
//! depth-limited backward induction (`plan_horizon` steps) with the literal
//! optimal value `V*_r` as the leaf value; at `kappa = 0` this reproduces the
//! converged literal Q-values exactly.
//!
//! The literal belief transition does not depend on the true reward, so a
//! single search yields Q for all eight hypotheses at once.

use std::collections::HashMap;

use super::{policy::softmax, AgentError, Belief, Environment, HumanParams};
use crate::grid::{Action, Cell, RewardHypothesis, NUM_HYPOTHESES};

/// Augmented Q-values at one `(cell, belief, remaining)` node,
/// indexed `[hypothesis][action]`.
pub type HypothesisQ = [[f64; 4]; NUM_HYPOTHESES];

type MemoKey = (u32, u32, [i64; NUM_HYPOTHESES]);

pub struct PedagogicPlanner<'e> {
    env: &'e Environment,
    kappa: f64,
    tau: f64,
    horizon: usize,
    memo: HashMap<MemoKey, HypothesisQ>,
}

impl<'e> PedagogicPlanner<'e> {
    pub fn new(env: &'e Environment, params: &HumanParams) -> Result<Self, AgentError> {
        params.validate()?;
        Ok(Self {
            env,
            kappa: params.kappa,
            tau: params.tau_pedagogic,
            horizon: params.plan_horizon,
            memo: HashMap::new(),
        })
    }

    pub fn env(&self) -> &'e Environment {
        self.env
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn clear(&mut self) {
        self.memo.clear();
    }

    /// Augmented Q with `remaining` steps of lookahead, for every hypothesis.
    pub fn q(&mut self, cell: Cell, belief: &Belief, remaining: usize) -> HypothesisQ {
        let grid = self.env.grid();
        if remaining == 0 || cell == grid.goal() {
            return [[0.0; 4]; NUM_HYPOTHESES];
        }
        let key = (grid.index_of(cell) as u32, remaining as u32, belief.key());
        if let Some(q) = self.memo.get(&key) {
            return *q;
        }

        let mut out = [[0.0; 4]; NUM_HYPOTHESES];
        let gamma = grid.discount();
        for a in Action::ALL {
            let (next, done) = grid.step(cell, a);
            let next_belief = belief
                .bayes(self.env.literal_likelihoods(cell, a))
                .expect("softmax likelihoods are strictly positive");
            let cont: [f64; NUM_HYPOTHESES] = if done {
                [0.0; NUM_HYPOTHESES]
            } else if remaining == 1 {
                let ni = grid.index_of(next);
                std::array::from_fn(|r| self.env.value_by_index(r, ni))
            } else {
                let child = self.q(next, &next_belief, remaining - 1);
                child.map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            };
            let tile = grid.tile(next);
            for (r, hyp) in RewardHypothesis::all().enumerate() {
                let gain = self.kappa * (next_belief.probs()[r] - belief.probs()[r]);
                out[r][a.index()] = hyp.tile_value(tile) + gain + gamma * cont[r];
            }
        }
        self.memo.insert(key, out);
        out
    }

    /// Augmented Q at full lookahead for a single hypothesis.
    pub fn q_for(&mut self, cell: Cell, belief: &Belief, r: RewardHypothesis) -> [f64; 4] {
        self.q(cell, belief, self.horizon)[r.index()]
    }

    /// `H_P(. | cell, belief, r)`.
    pub fn policy(&mut self, cell: Cell, belief: &Belief, r: RewardHypothesis) -> [f64; 4] {
        softmax(&self.q_for(cell, belief, r), self.tau)
    }

    /// `H_P(action | cell, belief, r)` for every hypothesis.
    pub fn likelihoods(
        &mut self,
        cell: Cell,
        belief: &Belief,
        action: Action,
    ) -> [f64; NUM_HYPOTHESES] {
        let q = self.q(cell, belief, self.horizon);
        q.map(|row| softmax(&row, self.tau)[action.index()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::load_grid;

    fn env(text: &str) -> Environment {
        Environment::new(load_grid(text).unwrap(), 1.0)
    }

    #[test]
    fn zero_kappa_reduces_to_literal_q() {
        let e = env("S.o\np.c\n..G");
        let params = HumanParams {
            kappa: 0.0,
            ..Default::default()
        };
        let mut planner = PedagogicPlanner::new(&e, &params).unwrap();
        // walk a few beliefs that actually occur
        let mut b = Belief::uniform();
        let mut cell = e.grid().start();
        for a in [Action::East, Action::South, Action::East, Action::South] {
            for r in RewardHypothesis::all() {
                let q = planner.q_for(cell, &b, r);
                let lit = e.q_table(r).row(cell);
                for i in 0..4 {
                    assert!((q[i] - lit[i]).abs() < 1e-6, "{q:?} vs {lit:?}");
                }
            }
            b = b.bayes(e.literal_likelihoods(cell, a)).unwrap();
            cell = e.grid().step(cell, a).0;
        }
    }

    #[test]
    fn pedagogue_prefers_signalling_tiles() {
        // orange path on top, neutral path below; orange safe
        let e = env("Sooo\n...G");
        let params = HumanParams::default();
        let mut planner = PedagogicPlanner::new(&e, &params).unwrap();
        let r = RewardHypothesis::new(0).unwrap();
        let p = planner.policy((0, 0), &Belief::uniform(), r);
        assert!(p[Action::East.index()] > p[Action::South.index()]);
    }

    #[test]
    fn rejects_zero_horizon() {
        let e = env("SG");
        let params = HumanParams {
            plan_horizon: 0,
            ..Default::default()
        };
        assert!(PedagogicPlanner::new(&e, &params).is_err());
    }
}
