use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AgentError, Belief, Environment, PedagogicPlanner};
use crate::grid::{Action, Cell, NUM_HYPOTHESES};

/// Which demonstrator model a robot inverts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RobotKind {
    Literal,
    Pedagogic,
    /// Action-mixture demonstrator with the given alpha.
    Mixture(f64),
}

impl RobotKind {
    pub fn needs_planner(self) -> bool {
        match self {
            RobotKind::Literal => false,
            RobotKind::Pedagogic => true,
            RobotKind::Mixture(alpha) => alpha > 0.0,
        }
    }
}

impl fmt::Display for RobotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobotKind::Literal => f.write_str("literal"),
            RobotKind::Pedagogic => f.write_str("pedagogic"),
            RobotKind::Mixture(a) => write!(f, "mixture({a})"),
        }
    }
}

impl FromStr for RobotKind {
    type Err = String;

    /// Accepts `literal`, `pedagogic` and `mixture(0.5)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "literal" => return Ok(RobotKind::Literal),
            "pedagogic" => return Ok(RobotKind::Pedagogic),
            _ => {}
        }
        let alpha = s
            .strip_prefix("mixture(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("unknown robot {s:?}"))?
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("{s:?}: {e}"))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(format!("mixture weight {alpha} outside [0, 1]"));
        }
        Ok(RobotKind::Mixture(alpha))
    }
}

/// One observed step together with the literal robot's belief before it,
/// which is the history the pedagogic model conditions on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub cell: Cell,
    pub action: Action,
    pub next: Cell,
    pub literal_belief: Belief,
}

fn check_transition(env: &Environment, cell: Cell, action: Action, next: Cell) -> Result<(), AgentError> {
    if !env.grid().is_open(cell) || env.grid().step(cell, action).0 != next {
        return Err(AgentError::InconsistentTransition {
            from: cell,
            action,
            to: next,
        });
    }
    Ok(())
}

pub fn literal_belief_update(
    env: &Environment,
    belief: &Belief,
    cell: Cell,
    action: Action,
    next: Cell,
) -> Result<Belief, AgentError> {
    check_transition(env, cell, action, next)?;
    belief.bayes(env.literal_likelihoods(cell, action))
}

pub fn pedagogic_belief_update(
    planner: &mut PedagogicPlanner<'_>,
    belief: &Belief,
    obs: &Observation,
) -> Result<Belief, AgentError> {
    check_transition(planner.env(), obs.cell, obs.action, obs.next)?;
    belief.bayes(&planner.likelihoods(obs.cell, &obs.literal_belief, obs.action))
}

pub fn mixture_belief_update(
    planner: &mut PedagogicPlanner<'_>,
    belief: &Belief,
    obs: &Observation,
    alpha: f64,
) -> Result<Belief, AgentError> {
    check_transition(planner.env(), obs.cell, obs.action, obs.next)?;
    belief.bayes(&mixture_likelihoods(planner, obs, alpha))
}

fn mixture_likelihoods(
    planner: &mut PedagogicPlanner<'_>,
    obs: &Observation,
    alpha: f64,
) -> [f64; NUM_HYPOTHESES] {
    let lit = *planner.env().literal_likelihoods(obs.cell, obs.action);
    if alpha == 0.0 {
        return lit;
    }
    let ped = planner.likelihoods(obs.cell, &obs.literal_belief, obs.action);
    if alpha == 1.0 {
        return ped;
    }
    std::array::from_fn(|r| alpha * ped[r] + (1.0 - alpha) * lit[r])
}

/// Replays a state-action trajectory, yielding each step as an
/// [`Observation`]. Fails on the first step that breaks the dynamics.
pub fn observations(env: &Environment, steps: &[(Cell, Action)]) -> Result<Vec<Observation>, AgentError> {
    let grid = env.grid();
    let mut out = Vec::with_capacity(steps.len());
    let mut literal = Belief::uniform();
    let mut expected = steps.first().map(|s| s.0);
    for &(cell, action) in steps {
        if Some(cell) != expected || !grid.is_open(cell) || cell == grid.goal() {
            return Err(AgentError::InconsistentTransition {
                from: out.last().map_or(cell, |o: &Observation| o.cell),
                action: out.last().map_or(action, |o: &Observation| o.action),
                to: cell,
            });
        }
        let (next, _) = grid.step(cell, action);
        out.push(Observation {
            cell,
            action,
            next,
            literal_belief: literal,
        });
        literal = literal.bayes(env.literal_likelihoods(cell, action))?;
        expected = Some(next);
    }
    Ok(out)
}

impl RobotKind {
    pub fn update(
        self,
        planner: &mut PedagogicPlanner<'_>,
        belief: &Belief,
        obs: &Observation,
    ) -> Result<Belief, AgentError> {
        match self {
            RobotKind::Literal => {
                literal_belief_update(planner.env(), belief, obs.cell, obs.action, obs.next)
            }
            RobotKind::Pedagogic => pedagogic_belief_update(planner, belief, obs),
            RobotKind::Mixture(alpha) => mixture_belief_update(planner, belief, obs, alpha),
        }
    }
}

/// Posterior of a robot after watching a whole trajectory from the uniform prior.
pub fn infer(
    planner: &mut PedagogicPlanner<'_>,
    robot: RobotKind,
    steps: &[(Cell, Action)],
) -> Result<Belief, AgentError> {
    let obs = observations(planner.env(), steps)?;
    obs.iter()
        .try_fold(Belief::uniform(), |b, o| robot.update(planner, &b, o))
}
