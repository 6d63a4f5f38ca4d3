use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::policy::{mixture_policy, sample_index};
use super::{AgentError, Belief, PedagogicPlanner};
use crate::grid::{Action, Cell, RewardHypothesis};
use crate::rng::{derive_seed, rng};

const COIN_STREAM: u64 = 0xC011;

/// Demonstrator model that produced (or is assumed to produce) a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    LiteralH,
    PedagogicH,
    /// Each action drawn from `alpha * H_P + (1 - alpha) * H_L`.
    ActionMixture(f64),
    /// Whole episode drawn from `H_P` with probability `p`, else from `H_L`.
    DemoMixture(f64),
}

impl Generator {
    pub fn tag(&self) -> &'static str {
        match self {
            Generator::LiteralH => "literal",
            Generator::PedagogicH => "pedagogic",
            Generator::ActionMixture(_) => "action-mixture",
            Generator::DemoMixture(_) => "demo-mixture",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Generator::ActionMixture(a) | Generator::DemoMixture(a) => Some(a),
            _ => None,
        }
    }

    pub fn from_parts(tag: &str, param: Option<f64>) -> Result<Self, String> {
        let need = || {
            param
                .filter(|p| (0.0..=1.0).contains(p))
                .ok_or_else(|| format!("generator {tag:?} needs a parameter in [0, 1]"))
        };
        Ok(match tag {
            "literal" => Generator::LiteralH,
            "pedagogic" => Generator::PedagogicH,
            "action-mixture" => Generator::ActionMixture(need()?),
            "demo-mixture" => Generator::DemoMixture(need()?),
            other => return Err(format!("unknown generator {other:?}")),
        })
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        match self.param() {
            Some(p) if !(0.0..=1.0).contains(&p) => Err(AgentError::InvalidParams(format!(
                "{} parameter {p} outside [0, 1]",
                self.tag()
            ))),
            _ => Ok(()),
        }
    }

    /// Weight on the pedagogic policy for per-step sampling, once any
    /// episode-level coin has been flipped.
    fn pedagogic_weight(&self) -> f64 {
        match *self {
            Generator::LiteralH => 0.0,
            Generator::PedagogicH => 1.0,
            Generator::ActionMixture(a) => a,
            Generator::DemoMixture(_) => unreachable!("resolved before sampling"),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({p})", self.tag()),
            None => f.write_str(self.tag()),
        }
    }
}

impl FromStr for Generator {
    type Err = String;

    /// Accepts `literal`, `pedagogic`, `action-mixture(0.5)`, `demo-mixture(0.7)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('(') {
            Some((tag, rest)) => {
                let num = rest
                    .strip_suffix(')')
                    .ok_or_else(|| format!("missing ')' in {s:?}"))?;
                let p: f64 = num.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
                Self::from_parts(tag.trim(), Some(p))
            }
            None => Self::from_parts(s, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub grid_id: String,
    pub true_reward: RewardHypothesis,
    pub generator: Generator,
    /// The model actually used; differs from `generator` only for
    /// `DemoMixture`, which resolves to `LiteralH` or `PedagogicH`.
    pub resolved: Generator,
    pub seed: u64,
    pub steps: Vec<(Cell, Action)>,
    pub individual: Option<String>,
}

/// Samples one episode from the start cell until the goal or `max_steps`.
/// Deterministic in `seed`; the demonstration-mixture coin uses its own
/// stream so `DemoMixture(0)` and `DemoMixture(1)` replay the pure models.
pub fn sample_demonstration(
    planner: &mut PedagogicPlanner<'_>,
    reward: RewardHypothesis,
    generator: Generator,
    seed: u64,
) -> Result<Demonstration, AgentError> {
    generator.validate()?;
    let resolved = match generator {
        Generator::DemoMixture(p) => {
            let coin: f64 = rng(derive_seed(seed, &[COIN_STREAM])).gen();
            if coin < p {
                Generator::PedagogicH
            } else {
                Generator::LiteralH
            }
        }
        g => g,
    };
    let weight = resolved.pedagogic_weight();

    let env = planner.env();
    let grid = env.grid();
    let mut rng = rng(seed);
    let mut cell = grid.start();
    let mut literal = Belief::uniform();
    let mut steps = Vec::new();
    while steps.len() < grid.max_steps() && cell != grid.goal() {
        let lit = env.literal_policy(cell, reward);
        let probs = if weight > 0.0 {
            let ped = planner.policy(cell, &literal, reward);
            mixture_policy(&lit, &ped, weight)
        } else {
            lit
        };
        let action = Action::from_index(sample_index(&probs, rng.gen()));
        steps.push((cell, action));
        literal = literal.bayes(env.literal_likelihoods(cell, action))?;
        cell = grid.step(cell, action).0;
    }
    Ok(Demonstration {
        grid_id: grid.id().to_string(),
        true_reward: reward,
        generator,
        resolved,
        seed,
        steps,
        individual: None,
    })
}

#[derive(Serialize, Deserialize)]
struct DemoRecord {
    grid_id: String,
    true_reward: usize,
    generator: String,
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resolved: Option<String>,
    seed: u64,
    steps: Vec<(usize, usize, Action)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    individual: Option<String>,
}

impl From<&Demonstration> for DemoRecord {
    fn from(d: &Demonstration) -> Self {
        Self {
            grid_id: d.grid_id.clone(),
            true_reward: d.true_reward.index(),
            generator: d.generator.tag().to_string(),
            alpha: d.generator.param(),
            resolved: (d.resolved != d.generator).then(|| d.resolved.to_string()),
            seed: d.seed,
            steps: d.steps.iter().map(|&((r, c), a)| (r, c, a)).collect(),
            individual: d.individual.clone(),
        }
    }
}

impl TryFrom<DemoRecord> for Demonstration {
    type Error = String;

    fn try_from(rec: DemoRecord) -> Result<Self, Self::Error> {
        let generator = Generator::from_parts(&rec.generator, rec.alpha)?;
        let resolved = match rec.resolved {
            Some(s) => s.parse()?,
            None => generator,
        };
        Ok(Self {
            grid_id: rec.grid_id,
            true_reward: RewardHypothesis::new(rec.true_reward)
                .ok_or_else(|| format!("true_reward {} out of range", rec.true_reward))?,
            generator,
            resolved,
            seed: rec.seed,
            steps: rec.steps.into_iter().map(|(r, c, a)| ((r, c), a)).collect(),
            individual: rec.individual,
        })
    }
}

impl Demonstration {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&DemoRecord::from(self)).expect("record serializes")
    }

    pub fn from_json(line: &str) -> Result<Self, String> {
        let rec: DemoRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        rec.try_into()
    }
}

pub fn write_jsonl<W: Write>(mut out: W, demos: &[Demonstration]) -> std::io::Result<()> {
    for d in demos {
        writeln!(out, "{}", d.to_json())?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Demonstration>, String> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Demonstration::from_json(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}
