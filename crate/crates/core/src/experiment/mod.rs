//! Seeded experiment harness: the human/robot accuracy matrix, mixture
//! sweeps, the hierarchy ranking sweep, the cooperative-inference solver
//! check and the likelihood reversal report.
//!
//! Trial `t` runs on grid `t mod n_grids` with seed
//! `derive_seed(master, [grid, t])`. Every human and robot in a run sees
//! the same true reward and the same demonstration seed for a given trial.

mod config;
mod output;

pub use config::{
    bundled_grid_names, resolve_grid, ExperimentConfig, DEFAULT_GRIDS, DEFAULT_P_DEMO, DEFAULT_SEED, DEFAULT_TRIALS,
};
pub use output::{write_cells_csv, write_manifest, CellRow, Manifest};

use num::{BigRational, ToPrimitive};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agents::{
    infer, sample_demonstration, AgentError, Catalog, Demonstration, Generator, HumanParams,
    PedagogicPlanner, RobotKind,
};
use crate::coop::{
    build_hierarchy, ci_fixed_point, ci_residuals, verify_ranking, CommonPayoffGame, CoopError, RankingCheck,
};
use crate::estimation::{bootstrap_ci, BootstrapCI, EstimationError, DEFAULT_LEVEL};
use crate::grid::{RewardHypothesis, NUM_HYPOTHESES};
use crate::likelihood::{claim2_fixture, exact, inferential_likelihood, predictive_likelihood};
use crate::rng::{derive_seed, rng};

const DEMO_STREAM: u64 = 0xDE30;
const BOOTSTRAP_STREAM: u64 = 0xB007;
const COIN_STREAM: u64 = 0xC014;

/// Tilt strength of the improving response in the ranking sweep.
pub const DEFAULT_TILT: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("grid {0:?}: {1}")]
    Grid(String, String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Coop(#[from] CoopError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyCell {
    pub human: String,
    pub robot: String,
    /// Sweep value, or the human's mixture parameter in a matrix run.
    pub alpha: Option<f64>,
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
    pub ci: BootstrapCI,
    pub seed: u64,
}

impl AccuracyCell {
    pub fn is(&self, human: &str, robot: &str) -> bool {
        self.human == human && self.robot == robot
    }
}

/// Per-trial correctness, indexed `[trial][human][robot]`.
fn run_trials(
    catalog: &Catalog,
    params: &HumanParams,
    humans: &[Generator],
    robots: &[RobotKind],
    trials: usize,
    master: u64,
) -> Result<Vec<Vec<Vec<bool>>>, ExperimentError> {
    let n_grids = catalog.len();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let gi = t % n_grids;
            let seed = derive_seed(master, &[gi as u64, t as u64]);
            let truth = RewardHypothesis::new(rng(seed).gen_range(0..NUM_HYPOTHESES)).expect("in range");
            let demo_seed = derive_seed(seed, &[DEMO_STREAM]);
            let mut planner = PedagogicPlanner::new(&catalog.envs()[gi], params)?;
            humans
                .iter()
                .map(|&h| {
                    let demo = sample_demonstration(&mut planner, truth, h, demo_seed)?;
                    robots
                        .iter()
                        .map(|&r| Ok(infer(&mut planner, r, &demo.steps)?.mode() == truth))
                        .collect::<Result<Vec<bool>, ExperimentError>>()
                })
                .collect()
        })
        .collect()
}

fn aggregate(
    outcomes: &[Vec<Vec<bool>>],
    humans: &[Generator],
    robots: &[RobotKind],
    alpha: impl Fn(Generator) -> Option<f64>,
    master: u64,
    resamples: usize,
) -> Result<Vec<AccuracyCell>, ExperimentError> {
    let mut cells = Vec::with_capacity(humans.len() * robots.len());
    for (hi, &h) in humans.iter().enumerate() {
        for (ri, &r) in robots.iter().enumerate() {
            let samples: Vec<f64> = outcomes.iter().map(|t| f64::from(u8::from(t[hi][ri]))).collect();
            let correct = samples.iter().filter(|&&x| x > 0.0).count();
            // the interval depends only on the outcomes, so identical
            // outcome vectors get identical intervals
            let ci = bootstrap_ci(&samples, DEFAULT_LEVEL, resamples, derive_seed(master, &[BOOTSTRAP_STREAM]))?;
            cells.push(AccuracyCell {
                human: h.to_string(),
                robot: r.to_string(),
                alpha: alpha(h),
                accuracy: correct as f64 / samples.len() as f64,
                correct,
                n: samples.len(),
                ci,
                seed: master,
            });
        }
    }
    Ok(cells)
}

/// Accuracy of every configured robot against every configured human.
pub fn run_matrix(cfg: &ExperimentConfig) -> Result<Vec<AccuracyCell>, ExperimentError> {
    let catalog = cfg.validate()?;
    let humans = cfg.generators()?;
    let robots = cfg.robot_kinds()?;
    let outcomes = run_trials(&catalog, &cfg.params, &humans, &robots, cfg.trials, cfg.seed)?;
    aggregate(&outcomes, &humans, &robots, |h| h.param(), cfg.seed, cfg.resamples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MixtureKind {
    /// Whole-episode coin with probability `p` of a pedagogic episode.
    Demonstration,
    /// Per-step mixture with weight `alpha` on the pedagogic policy.
    Action,
}

impl std::str::FromStr for MixtureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "demonstration" | "demo" => Ok(MixtureKind::Demonstration),
            "action" => Ok(MixtureKind::Action),
            _ => Err(format!("unknown mixture kind {s:?} (demonstration | action)")),
        }
    }
}

/// One matrix slice per sweep value. A configured mixture robot is pinned
/// to the generating value in action sweeps and skipped in demonstration
/// sweeps.
pub fn run_mixture_sweep(
    cfg: &ExperimentConfig,
    kind: MixtureKind,
    values: &[f64],
) -> Result<Vec<AccuracyCell>, ExperimentError> {
    let catalog = cfg.validate()?;
    let configured = cfg.robot_kinds()?;
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ExperimentError::Config(format!("sweep value {v} outside [0, 1]")));
    }
    let mut cells = Vec::new();
    for &v in values {
        let human = match kind {
            MixtureKind::Demonstration => Generator::DemoMixture(v),
            MixtureKind::Action => Generator::ActionMixture(v),
        };
        let robots: Vec<RobotKind> = configured
            .iter()
            .filter_map(|&r| match (r, kind) {
                (RobotKind::Mixture(_), MixtureKind::Action) => Some(RobotKind::Mixture(v)),
                (RobotKind::Mixture(_), MixtureKind::Demonstration) => None,
                (r, _) => Some(r),
            })
            .collect();
        let outcomes = run_trials(&catalog, &cfg.params, &[human], &robots, cfg.trials, cfg.seed)?;
        cells.extend(aggregate(&outcomes, &[human], &robots, |_| Some(v), cfg.seed, cfg.resamples)?);
    }
    Ok(cells)
}

/// Robot tag of a sweep cell with the mixture weight dropped, so sweep rows
/// can be grouped by robot family.
pub fn robot_family(tag: &str) -> &str {
    tag.split('(').next().unwrap_or(tag)
}

#[derive(Debug, Clone, Serialize)]
pub struct RankingViolation {
    pub game: usize,
    pub seed: u64,
    pub check: RankingCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub n_games: usize,
    pub max_types: usize,
    pub max_signals: usize,
    pub seed: u64,
    pub tilt: f64,
    pub passes: usize,
    pub min_slack: Option<f64>,
    pub violations: Vec<RankingViolation>,
}

/// Checks the one-step hierarchy ranking on `n_games` random games seeded
/// from `seed`, starting each from a random teacher.
pub fn run_theory_check(
    n_games: usize,
    max_types: usize,
    max_signals: usize,
    seed: u64,
    tilt: f64,
) -> Result<TheoryReport, ExperimentError> {
    let checks = (0..n_games)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, &[i as u64]);
            let (game, h0) = CommonPayoffGame::random(s, max_types, max_signals);
            let hierarchy = build_hierarchy(&game, &h0, 1, tilt)?;
            Ok((s, verify_ranking(&game, &hierarchy)?))
        })
        .collect::<Result<Vec<_>, CoopError>>()?;
    let min_slack = checks.iter().map(|(_, c)| c.min_slack).reduce(f64::min);
    let violations: Vec<RankingViolation> = checks
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| !c.holds)
        .map(|(game, &(seed, check))| RankingViolation { game, seed, check })
        .collect();
    Ok(TheoryReport {
        n_games,
        max_types,
        max_signals,
        seed,
        tilt,
        passes: n_games - violations.len(),
        min_slack,
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CiReport {
    pub n_matrices: usize,
    pub max_size: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub converged: usize,
    pub max_iterations_used: usize,
    pub max_learner_residual: f64,
    pub max_teacher_residual: f64,
    /// Indices of matrices that did not converge.
    pub failures: Vec<usize>,
}

/// Runs the cooperative-inference solver on random positive teacher
/// matrices of size up to `max_size` x `max_size`.
pub fn run_ci_check(
    n_matrices: usize,
    max_size: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<CiReport, ExperimentError> {
    let results = (0..n_matrices)
        .into_par_iter()
        .map(|i| {
            let (game, h0) = CommonPayoffGame::random(derive_seed(seed, &[i as u64]), max_size, max_size);
            let sol = ci_fixed_point(&h0, &game.prior, max_iter, tol)?;
            let (eq_learner, eq_teacher) = ci_residuals(&sol.teacher, &sol.learner, &game.prior);
            Ok((sol.converged, sol.iterations, eq_learner, eq_teacher))
        })
        .collect::<Result<Vec<_>, CoopError>>()?;
    Ok(CiReport {
        n_matrices,
        max_size,
        seed,
        tol,
        max_iter,
        converged: results.iter().filter(|r| r.0).count(),
        max_iterations_used: results.iter().map(|r| r.1).max().unwrap_or(0),
        max_learner_residual: results.iter().map(|r| r.2).fold(0.0, f64::max),
        max_teacher_residual: results.iter().map(|r| r.3).fold(0.0, f64::max),
        failures: results
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.0)
            .map(|(i, _)| i)
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LikelihoodValue {
    pub quantity: &'static str,
    pub exact: String,
    pub float: f64,
    /// Relative gap between the float computation and the exact value.
    pub float_rel_err: f64,
    /// The value as printed in the original derivation.
    pub printed: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct LikelihoodReport {
    pub values: Vec<LikelihoodValue>,
    pub predictive_prefers_m1: bool,
    pub inferential_prefers_m2: bool,
    pub reversal: bool,
    pub note: &'static str,
}

/// Predictive and inferential likelihoods of the two reversal-example
/// models, exact and in floating point.
pub fn run_likelihood_demo() -> Result<LikelihoodReport, ExperimentError> {
    let fx = claim2_fixture();
    let data = fx.dataset();
    let lx = [
        exact::predictive_likelihood(&fx.m1, &fx.items),
        exact::predictive_likelihood(&fx.m2, &fx.items),
    ];
    let lt = [
        exact::inferential_likelihood(&fx.m1, &fx.items, &fx.prior)
            .map_err(|e| ExperimentError::Config(e.to_string()))?,
        exact::inferential_likelihood(&fx.m2, &fx.items, &fx.prior)
            .map_err(|e| ExperimentError::Config(e.to_string()))?,
    ];
    let float_of = |f: Result<f64, _>| f.map_err(|e: crate::likelihood::LikelihoodError| ExperimentError::Config(e.to_string()));
    let (f1, f2) = (fx.m1.to_float(), fx.m2.to_float());
    let floats = [
        float_of(predictive_likelihood(&f1, &data))?,
        float_of(predictive_likelihood(&f2, &data))?,
        float_of(inferential_likelihood(&f1, &data))?,
        float_of(inferential_likelihood(&f2, &data))?,
    ];
    let exacts: [&BigRational; 4] = [&lx[0], &lx[1], &lt[0], &lt[1]];
    let names = ["L_X(m1)", "L_X(m2)", "L_Theta(m1)", "L_Theta(m2)"];
    let printed = ["64/19683", "16/19683", "1/8", "8/81"];
    let values = (0..4)
        .map(|i| {
            let e = exacts[i].to_f64().unwrap_or(f64::NAN);
            LikelihoodValue {
                quantity: names[i],
                exact: exacts[i].to_string(),
                float: floats[i],
                float_rel_err: ((floats[i] - e) / e).abs(),
                printed: printed[i],
            }
        })
        .collect();
    let predictive_prefers_m1 = lx[0] > lx[1];
    let inferential_prefers_m2 = lt[0] < lt[1];
    Ok(LikelihoodReport {
        values,
        predictive_prefers_m1,
        inferential_prefers_m2,
        reversal: predictive_prefers_m1 && inferential_prefers_m2,
        note: "the printed L_Theta(m2) = (1/3)(2/3)^3 = 8/81 does not match its own nine-item dataset; \
               evaluating the inferential likelihood over those items gives (1/3)(2/3)^2 = 4/27",
    })
}

/// Simulated population: `demos_each` demonstrations for each of
/// `n_individuals` individuals, cycling through the catalog's grids. A
/// demonstration-mixture individual flips its coin once and keeps that
/// model for all of its demonstrations.
pub fn generate_population(
    catalog: &Catalog,
    params: &HumanParams,
    generator: Generator,
    n_individuals: usize,
    demos_each: usize,
    seed: u64,
) -> Result<Vec<Demonstration>, ExperimentError> {
    generator.validate()?;
    if catalog.is_empty() {
        return Err(ExperimentError::Config("no grids".into()));
    }
    let per_individual: Vec<Vec<Demonstration>> = (0..n_individuals)
        .into_par_iter()
        .map(|i| {
            let resolved = match generator {
                Generator::DemoMixture(p) => {
                    if rng(derive_seed(seed, &[i as u64, COIN_STREAM])).gen::<f64>() < p {
                        Generator::PedagogicH
                    } else {
                        Generator::LiteralH
                    }
                }
                g => g,
            };
            (0..demos_each)
                .map(|j| {
                    let k = i * demos_each + j;
                    let env = &catalog.envs()[k % catalog.len()];
                    let s = derive_seed(seed, &[i as u64, j as u64]);
                    let truth = RewardHypothesis::new(rng(s).gen_range(0..NUM_HYPOTHESES)).expect("in range");
                    let mut planner = PedagogicPlanner::new(env, params)?;
                    let mut demo = sample_demonstration(&mut planner, truth, resolved, derive_seed(s, &[DEMO_STREAM]))?;
                    demo.generator = generator;
                    demo.individual = Some(format!("i{i:04}"));
                    Ok(demo)
                })
                .collect()
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(per_individual.into_iter().flatten().collect())
}
