//! Predictive vs inferential likelihood of a conditional model `m(x | θ)`
//! on labelled data, in floating point, log space and exact rationals.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error("observation {x} has zero evidence under the model and prior")]
    UndefinedPosterior { x: usize },
    #[error("invalid model or dataset: {0}")]
    Invalid(String),
}

/// `m(x | θ)`, one row per latent value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveModel {
    table: Vec<Vec<f64>>,
}

impl PredictiveModel {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self, LikelihoodError> {
        let width = table.first().map_or(0, Vec::len);
        if table.is_empty() || width == 0 || table.iter().any(|r| r.len() != width) {
            return Err(LikelihoodError::Invalid("table must be a non-empty rectangle".into()));
        }
        for (i, row) in table.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-12 {
                return Err(LikelihoodError::Invalid(format!("row {i} is not a distribution")));
            }
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn n_latent(&self) -> usize {
        self.table.len()
    }

    pub fn n_obs(&self) -> usize {
        self.table[0].len()
    }

    pub fn prob(&self, theta: usize, x: usize) -> f64 {
        self.table[theta][x]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    /// `(θ, x)` index pairs.
    pub items: Vec<(usize, usize)>,
    pub prior: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(usize, usize)>, prior: Vec<f64>) -> Result<Self, LikelihoodError> {
        let total: f64 = prior.iter().sum();
        if prior.is_empty() || prior.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(LikelihoodError::Invalid("prior is not a distribution".into()));
        }
        if items.iter().any(|&(t, _)| t >= prior.len()) {
            return Err(LikelihoodError::Invalid("latent index out of range".into()));
        }
        Ok(Self { items, prior })
    }

    fn check(&self, n_latent: usize, n_obs: usize) -> Result<(), LikelihoodError> {
        if self.prior.len() != n_latent || self.items.iter().any(|&(t, x)| t >= n_latent || x >= n_obs) {
            return Err(LikelihoodError::Invalid("dataset does not fit the model".into()));
        }
        Ok(())
    }
}

/// `Π_i m(x_i | θ_i)`.
pub fn predictive_likelihood(m: &PredictiveModel, d: &LabeledDataset) -> Result<f64, LikelihoodError> {
    d.check(m.n_latent(), m.n_obs())?;
    Ok(d.items.iter().map(|&(t, x)| m.prob(t, x)).product())
}

pub fn log_predictive_likelihood(m: &PredictiveModel, d: &LabeledDataset) -> Result<f64, LikelihoodError> {
    d.check(m.n_latent(), m.n_obs())?;
    Ok(d.items.iter().map(|&(t, x)| m.prob(t, x).ln()).sum())
}

fn posterior_of_label(m: &PredictiveModel, prior: &[f64], t: usize, x: usize) -> Result<f64, LikelihoodError> {
    let evidence: f64 = (0..m.n_latent()).map(|s| m.prob(s, x) * prior[s]).sum();
    if evidence <= 0.0 {
        return Err(LikelihoodError::UndefinedPosterior { x });
    }
    Ok(m.prob(t, x) * prior[t] / evidence)
}

/// `Π_i m(x_i|θ_i) p(θ_i) / Σ_θ m(x_i|θ) p(θ)`.
pub fn inferential_likelihood(m: &PredictiveModel, d: &LabeledDataset) -> Result<f64, LikelihoodError> {
    d.check(m.n_latent(), m.n_obs())?;
    d.items
        .iter()
        .map(|&(t, x)| posterior_of_label(m, &d.prior, t, x))
        .product()
}

pub fn log_inferential_likelihood(m: &PredictiveModel, d: &LabeledDataset) -> Result<f64, LikelihoodError> {
    d.check(m.n_latent(), m.n_obs())?;
    d.items
        .iter()
        .map(|&(t, x)| posterior_of_label(m, &d.prior, t, x).map(f64::ln))
        .sum()
}

/// Exact-rational counterparts.
pub mod exact {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    pub struct ExactModel {
        pub table: Vec<Vec<BigRational>>,
    }

    pub fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Parses `"2/3"`, `"0"`, `"0.25"` into an exact rational.
    pub fn parse_ratio(s: &str) -> Result<BigRational, LikelihoodError> {
        let s = s.trim();
        let bad = || LikelihoodError::Invalid(format!("cannot parse {s:?} as a probability"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(BigRational::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
            let scale = num::pow(BigInt::from(10), frac.len());
            return Ok(BigRational::new(digits, scale));
        }
        Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
    }

    impl ExactModel {
        pub fn new(table: Vec<Vec<BigRational>>) -> Result<Self, LikelihoodError> {
            let width = table.first().map_or(0, Vec::len);
            if table.is_empty() || width == 0 || table.iter().any(|r| r.len() != width) {
                return Err(LikelihoodError::Invalid("table must be a non-empty rectangle".into()));
            }
            for (i, row) in table.iter().enumerate() {
                let total: BigRational = row.iter().sum();
                if row.iter().any(|p| *p < BigRational::zero()) || !total.is_one() {
                    return Err(LikelihoodError::Invalid(format!("row {i} does not sum to 1")));
                }
            }
            Ok(Self { table })
        }

        pub fn to_float(&self) -> PredictiveModel {
            PredictiveModel {
                table: self
                    .table
                    .iter()
                    .map(|r| r.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect())
                    .collect(),
            }
        }
    }

    pub fn predictive_likelihood(m: &ExactModel, items: &[(usize, usize)]) -> BigRational {
        items
            .iter()
            .fold(BigRational::one(), |acc, &(t, x)| acc * &m.table[t][x])
    }

    pub fn inferential_likelihood(
        m: &ExactModel,
        items: &[(usize, usize)],
        prior: &[BigRational],
    ) -> Result<BigRational, LikelihoodError> {
        let mut acc = BigRational::one();
        for &(t, x) in items {
            let evidence: BigRational = (0..m.table.len()).map(|s| &m.table[s][x] * &prior[s]).sum();
            if evidence.is_zero() {
                return Err(LikelihoodError::UndefinedPosterior { x });
            }
            acc *= &m.table[t][x] * &prior[t] / evidence;
        }
        Ok(acc)
    }

    pub fn uniform_prior(n: usize) -> Vec<BigRational> {
        vec![ratio(1, n as i64); n]
    }
}

use exact::{ratio, ExactModel};

/// The two 2x3 tables and nine-item dataset of the predictive/inferential
/// reversal example, with a uniform prior.
#[derive(Debug, Clone)]
pub struct Claim2Fixture {
    pub m1: ExactModel,
    pub m2: ExactModel,
    pub items: Vec<(usize, usize)>,
    pub prior: Vec<BigRational>,
}

impl Claim2Fixture {
    pub fn dataset(&self) -> LabeledDataset {
        LabeledDataset {
            items: self.items.clone(),
            prior: self.prior.iter().map(|p| p.to_f64().unwrap()).collect(),
        }
    }
}

pub fn claim2_fixture() -> Claim2Fixture {
    let z = || ratio(0, 1);
    let m1 = ExactModel::new(vec![
        vec![ratio(2, 3), ratio(1, 3), z()],
        vec![z(), ratio(1, 3), ratio(2, 3)],
    ])
    .unwrap();
    let m2 = ExactModel::new(vec![
        vec![ratio(2, 3), ratio(1, 3), z()],
        vec![z(), ratio(2, 3), ratio(1, 3)],
    ])
    .unwrap();
    // θ1: x1, x1, x2   θ2: x2, x2, x3, x3, x3, x3
    let items = vec![(0, 0), (0, 0), (0, 1), (1, 1), (1, 1), (1, 2), (1, 2), (1, 2), (1, 2)];
    Claim2Fixture {
        m1,
        m2,
        items,
        prior: exact::uniform_prior(2),
    }
}

/// A pair where the first model predicts the data better but infers the
/// latents worse.
#[derive(Debug, Clone)]
pub struct Reversal {
    pub better_predictive: ExactModel,
    pub better_inferential: ExactModel,
    pub items: Vec<(usize, usize)>,
    pub predictive: (BigRational, BigRational),
    pub inferential: (BigRational, BigRational),
}

/// Units per row for lattice candidates: entries are multiples of `1/3`.
const LATTICE: usize = 3;
const SEARCH_DATASET_SIZE: usize = 9;

fn lattice_model(rng: &mut crate::rng::Rng, n_types: usize, n_obs: usize) -> ExactModel {
    let table = (0..n_types)
        .map(|_| {
            let mut counts = vec![0i64; n_obs];
            for _ in 0..LATTICE {
                counts[rng.gen_range(0..n_obs)] += 1;
            }
            counts.into_iter().map(|c| ratio(c, LATTICE as i64)).collect()
        })
        .collect();
    ExactModel { table }
}

/// Random search for reversals among `n_candidates` lattice models on a
/// fixed dataset sampled from one more lattice model (uniform prior).
pub fn search_reversal(n_types: usize, n_obs: usize, n_candidates: usize, seed: u64) -> Vec<Reversal> {
    assert!(n_types >= 1 && n_obs >= 1, "need at least one latent and one observation");
    let mut rng = rng(seed);
    let truth = lattice_model(&mut rng, n_types, n_obs).to_float();
    let items: Vec<(usize, usize)> = (0..SEARCH_DATASET_SIZE)
        .map(|_| {
            let t = rng.gen_range(0..n_types);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let x = (0..n_obs)
                .find(|&x| {
                    acc += truth.prob(t, x);
                    u < acc
                })
                .unwrap_or(n_obs - 1);
            (t, x)
        })
        .collect();
    let candidates: Vec<ExactModel> = (0..n_candidates)
        .map(|_| lattice_model(&mut rng, n_types, n_obs))
        .collect();
    search_reversal_on(&candidates, &items, &exact::uniform_prior(n_types))
}

/// Exhaustive pairwise check of `candidates` on a given dataset.
pub fn search_reversal_on(
    candidates: &[ExactModel],
    items: &[(usize, usize)],
    prior: &[BigRational],
) -> Vec<Reversal> {
    let scored: Vec<(&ExactModel, BigRational, BigRational)> = candidates
        .iter()
        .filter_map(|m| {
            let inf = exact::inferential_likelihood(m, items, prior).ok()?;
            Some((m, exact::predictive_likelihood(m, items), inf))
        })
        .collect();
    let mut out = Vec::new();
    for a in &scored {
        for b in &scored {
            if a.1 > b.1 && a.2 < b.2 {
                out.push(Reversal {
                    better_predictive: a.0.clone(),
                    better_inferential: b.0.clone(),
                    items: items.to_vec(),
                    predictive: (a.1.clone(), b.1.clone()),
                    inferential: (a.2.clone(), b.2.clone()),
                });
            }
        }
    }
    out
}
