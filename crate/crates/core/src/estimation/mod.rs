//! Demonstration likelihoods under each demonstrator model, grid-search
//! maximum likelihood for the action-mixture weight, per-individual model
//! comparison, and bootstrap intervals.

mod bootstrap;

pub use bootstrap::{bootstrap_ci, BootstrapCI, DEFAULT_LEVEL, DEFAULT_RESAMPLES};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::agents::{observations, AgentError, Catalog, Demonstration, Generator, HumanParams, PedagogicPlanner};

pub const DEFAULT_GRID_STEP: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("demonstration references unknown grid {0:?}")]
    UnknownGrid(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Per-step action probabilities of one demonstration under its true
/// reward: `(H_L(a_t|...), H_P(a_t|...))`.
pub fn step_probabilities(
    planner: &mut PedagogicPlanner<'_>,
    demo: &Demonstration,
) -> Result<Vec<(f64, f64)>, EstimationError> {
    let r = demo.true_reward.index();
    let env = planner.env();
    observations(env, &demo.steps)?
        .iter()
        .map(|o| {
            let lit = env.literal_likelihoods(o.cell, o.action)[r];
            let ped = planner.likelihoods(o.cell, &o.literal_belief, o.action)[r];
            Ok((lit, ped))
        })
        .collect()
}

fn mixture_loglik(steps: &[(f64, f64)], alpha: f64) -> f64 {
    steps
        .iter()
        .map(|&(lit, ped)| (alpha * ped + (1.0 - alpha) * lit).ln())
        .sum()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `Σ_t log P_model(a_t | s_t, r_true, history)`; the demonstration mixture
/// is scored as a whole-episode mixture.
pub fn demo_loglik(
    planner: &mut PedagogicPlanner<'_>,
    demo: &Demonstration,
    model: Generator,
) -> Result<f64, EstimationError> {
    model.validate()?;
    if model == Generator::LiteralH {
        let r = demo.true_reward.index();
        let env = planner.env();
        return Ok(observations(env, &demo.steps)?
            .iter()
            .map(|o| env.literal_likelihoods(o.cell, o.action)[r].ln())
            .sum());
    }
    let steps = step_probabilities(planner, demo)?;
    Ok(match model {
        Generator::LiteralH => unreachable!(),
        Generator::PedagogicH => mixture_loglik(&steps, 1.0),
        Generator::ActionMixture(a) => mixture_loglik(&steps, a),
        Generator::DemoMixture(p) => {
            let lit = mixture_loglik(&steps, 0.0);
            let ped = mixture_loglik(&steps, 1.0);
            log_sum_exp(p.ln() + ped, (1.0 - p).ln() + lit)
        }
    })
}

fn planner_for<'c>(
    catalog: &'c Catalog,
    demo: &Demonstration,
    params: &HumanParams,
) -> Result<PedagogicPlanner<'c>, EstimationError> {
    let env = catalog
        .get(&demo.grid_id)
        .ok_or_else(|| EstimationError::UnknownGrid(demo.grid_id.clone()))?;
    Ok(PedagogicPlanner::new(env, params)?)
}

/// `{0, step, 2·step, ..., 1}`; `step` must divide 1.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>, EstimationError> {
    let n = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || (n * step - 1.0).abs() > 1e-9 {
        return Err(EstimationError::Invalid(format!("grid step {step} does not divide 1")));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Grid index of the minimum; ties go to the smaller alpha.
fn argmin_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub alpha_hat: f64,
    pub alphas: Vec<f64>,
    /// Mean negative log-likelihood per demonstration at each alpha.
    pub mean_nll: Vec<f64>,
    pub per_individual: Option<BTreeMap<String, f64>>,
    pub normalization: &'static str,
}

const ANONYMOUS: &str = "-";

/// Grid-search maximum likelihood for the action-mixture weight.
pub fn fit_alpha(
    catalog: &Catalog,
    demos: &[Demonstration],
    params: &HumanParams,
    grid_step: f64,
    per_individual: bool,
) -> Result<FitResult, EstimationError> {
    if demos.is_empty() {
        return Err(EstimationError::Empty("demonstrations"));
    }
    let alphas = alpha_grid(grid_step)?;
    let traces = demos
        .iter()
        .map(|d| {
            let mut planner = planner_for(catalog, d, params)?;
            step_probabilities(&mut planner, d)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let nll_curve = |subset: &[&Vec<(f64, f64)>]| -> Vec<f64> {
        alphas
            .iter()
            .map(|&a| -subset.iter().map(|t| mixture_loglik(t, a)).sum::<f64>() / subset.len() as f64)
            .collect()
    };
    let all: Vec<&Vec<(f64, f64)>> = traces.iter().collect();
    let mean_nll = nll_curve(&all);
    let alpha_hat = alphas[argmin_low(&mean_nll)];

    let per_individual = per_individual.then(|| {
        let mut groups: BTreeMap<String, Vec<&Vec<(f64, f64)>>> = BTreeMap::new();
        for (d, t) in demos.iter().zip(&traces) {
            let id = d.individual.clone().unwrap_or_else(|| ANONYMOUS.to_string());
            groups.entry(id).or_default().push(t);
        }
        groups
            .into_iter()
            .map(|(id, ts)| (id, alphas[argmin_low(&nll_curve(&ts))]))
            .collect()
    });

    Ok(FitResult {
        alpha_hat,
        alphas,
        mean_nll,
        per_individual,
        normalization: "per-demonstration",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IndividualFit {
    pub id: String,
    pub loglik_literal: f64,
    pub loglik_pedagogic: f64,
    pub better: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison {
    pub literal_fraction: f64,
    pub pedagogic_fraction: f64,
    pub individuals: Vec<IndividualFit>,
}

/// Which pure model explains each individual's demonstrations better;
/// ties count as literal.
pub fn model_comparison(
    catalog: &Catalog,
    individuals: &BTreeMap<String, Vec<Demonstration>>,
    params: &HumanParams,
) -> Result<ModelComparison, EstimationError> {
    if individuals.is_empty() {
        return Err(EstimationError::Empty("individuals"));
    }
    let mut rows = Vec::with_capacity(individuals.len());
    for (id, demos) in individuals {
        if demos.is_empty() {
            return Err(EstimationError::Invalid(format!("individual {id:?} has no demonstrations")));
        }
        let (mut lit, mut ped) = (0.0, 0.0);
        for d in demos {
            let mut planner = planner_for(catalog, d, params)?;
            let steps = step_probabilities(&mut planner, d)?;
            lit += mixture_loglik(&steps, 0.0);
            ped += mixture_loglik(&steps, 1.0);
        }
        rows.push(IndividualFit {
            id: id.clone(),
            loglik_literal: lit,
            loglik_pedagogic: ped,
            better: if ped > lit { "pedagogic" } else { "literal" },
        });
    }
    let n = rows.len() as f64;
    let ped = rows.iter().filter(|r| r.better == "pedagogic").count() as f64;
    Ok(ModelComparison {
        literal_fraction: 1.0 - ped / n,
        pedagogic_fraction: ped / n,
        individuals: rows,
    })
}

/// Groups demonstrations by their `individual` tag.
pub fn group_by_individual(demos: &[Demonstration]) -> BTreeMap<String, Vec<Demonstration>> {
    let mut out: BTreeMap<String, Vec<Demonstration>> = BTreeMap::new();
    for d in demos {
        let id = d.individual.clone().unwrap_or_else(|| ANONYMOUS.to_string());
        out.entry(id).or_default().push(d.clone());
    }
    out
}
