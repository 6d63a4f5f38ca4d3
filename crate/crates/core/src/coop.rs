//! Discrete cooperative inference: teacher/learner conditionals, the
//! alternating-normalization fixed point, and the best-response /
//! improving-response hierarchy on common-payoff games whose payoff is the
//! learner's inference accuracy.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng;

/// Slack used by the ranking check and the improving-response guard.
pub const RANKING_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoopError {
    #[error("degenerate distribution: {what} {index} has zero mass")]
    DegenerateDistribution { what: &'static str, index: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("not a probability vector: {0}")]
    NotNormalized(String),
    #[error("hierarchy depth must be at least 1")]
    ZeroDepth,
}

fn check_distribution(v: &[f64], what: &str) -> Result<(), CoopError> {
    if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(CoopError::NotNormalized(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(CoopError::NotNormalized(format!("{what} sums to {total}")));
    }
    Ok(())
}

fn argmax_low(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Common-payoff game: the teacher knows a type `θ` drawn from `prior`,
/// emits one of `n_signals` signals, and both players receive
/// `payoff[θ][θ̂]` when the learner guesses `θ̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonPayoffGame {
    pub prior: Vec<f64>,
    pub payoff: Vec<Vec<f64>>,
    pub n_signals: usize,
}

impl CommonPayoffGame {
    pub fn new(prior: Vec<f64>, payoff: Vec<Vec<f64>>, n_signals: usize) -> Result<Self, CoopError> {
        let n = prior.len();
        if n == 0 || n_signals == 0 {
            return Err(CoopError::Shape("need at least one type and one signal".into()));
        }
        check_distribution(&prior, "prior")?;
        if payoff.len() != n || payoff.iter().any(|row| row.len() != n) {
            return Err(CoopError::Shape(format!("payoff must be {n}x{n}")));
        }
        if payoff.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CoopError::Shape("payoff has a non-finite entry".into()));
        }
        Ok(Self {
            prior,
            payoff,
            n_signals,
        })
    }

    /// Identity payoff: 1 for a correct guess, 0 otherwise.
    pub fn accuracy(prior: Vec<f64>, n_signals: usize) -> Result<Self, CoopError> {
        let n = prior.len();
        let payoff = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(prior, payoff, n_signals)
    }

    pub fn n_types(&self) -> usize {
        self.prior.len()
    }

    /// Random instance with `2..=max_types` types and `2..=max_signals`
    /// signals, plus a random starting teacher: positive normalized prior
    /// and teacher rows; payoff 1 on the diagonal and `0.5 * U[0, 1)` off it.
    pub fn random(seed: u64, max_types: usize, max_signals: usize) -> (Self, TeacherPolicy) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=max_types.max(2));
        let m = rng.gen_range(2..=max_signals.max(2));
        let positive = |len: usize, rng: &mut crate::rng::Rng| -> Vec<f64> {
            let v: Vec<f64> = (0..len).map(|_| 1.0 - rng.gen::<f64>()).collect();
            let total: f64 = v.iter().sum();
            v.into_iter().map(|x| x / total).collect()
        };
        let prior = positive(n, &mut rng);
        let payoff = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 1.0 } else { 0.5 * rng.gen::<f64>() })
                    .collect()
            })
            .collect();
        let rows = (0..n).map(|_| positive(m, &mut rng)).collect();
        (
            Self {
                prior,
                payoff,
                n_signals: m,
            },
            TeacherPolicy { rows },
        )
    }
}

/// `p^H(d | θ)`, one row per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherPolicy {
    rows: Vec<Vec<f64>>,
}

impl TeacherPolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, CoopError> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(CoopError::Shape("teacher rows must be non-empty and equal length".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            check_distribution(r, &format!("teacher row {i}"))?;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_types(&self) -> usize {
        self.rows.len()
    }

    pub fn n_signals(&self) -> usize {
        self.rows[0].len()
    }

    pub fn prob(&self, theta: usize, d: usize) -> f64 {
        self.rows[theta][d]
    }

    fn sup_distance(&self, other: &Self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `p^R(θ | d)`, one column per signal, plus the deterministic guess the
/// learner outputs for each signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerPolicy {
    /// `posterior[d][θ]`.
    posterior: Vec<Vec<f64>>,
    guess: Vec<usize>,
}

impl LearnerPolicy {
    pub fn posterior(&self) -> &[Vec<f64>] {
        &self.posterior
    }

    pub fn prob(&self, theta: usize, d: usize) -> f64 {
        self.posterior[d][theta]
    }

    pub fn guess(&self) -> &[usize] {
        &self.guess
    }

    /// A learner that answers `guess[d]` deterministically.
    pub fn deterministic(n_types: usize, guess: Vec<usize>) -> Self {
        let posterior = guess
            .iter()
            .map(|&g| (0..n_types).map(|t| if t == g { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { posterior, guess }
    }
}

/// Joint payoff `U(H, R) = Σ_θ p(θ) Σ_d H(d|θ) payoff(θ, guess_R(d))`.
pub fn joint_payoff(game: &CommonPayoffGame, h: &TeacherPolicy, r: &LearnerPolicy) -> f64 {
    let mut total = 0.0;
    for (theta, row) in h.rows.iter().enumerate() {
        let mut inner = 0.0;
        for (d, p) in row.iter().enumerate() {
            inner += p * game.payoff[theta][r.guess[d]];
        }
        total += game.prior[theta] * inner;
    }
    total
}

fn check_shapes(game: &CommonPayoffGame, h: &TeacherPolicy) -> Result<(), CoopError> {
    if h.n_types() != game.n_types() || h.n_signals() != game.n_signals {
        return Err(CoopError::Shape(format!(
            "teacher is {}x{}, game is {}x{}",
            h.n_types(),
            h.n_signals(),
            game.n_types(),
            game.n_signals
        )));
    }
    Ok(())
}

/// Learner update `p^R(θ|d) ∝ p(θ) p^H(d|θ)`, normalized over types per signal.
pub fn learner_from_teacher(h: &TeacherPolicy, prior: &[f64]) -> Result<Vec<Vec<f64>>, CoopError> {
    (0..h.n_signals())
        .map(|d| {
            let col: Vec<f64> = (0..h.n_types()).map(|t| prior[t] * h.rows[t][d]).collect();
            let total: f64 = col.iter().sum();
            if total <= 0.0 {
                return Err(CoopError::DegenerateDistribution {
                    what: "signal",
                    index: d,
                });
            }
            Ok(col.into_iter().map(|x| x / total).collect())
        })
        .collect()
}

/// Teacher update `p^H(d|θ) ∝ p^R(θ|d)`, normalized over signals per type.
pub fn teacher_from_learner(posterior: &[Vec<f64>], n_types: usize) -> Result<TeacherPolicy, CoopError> {
    let rows = (0..n_types)
        .map(|t| {
            let row: Vec<f64> = posterior.iter().map(|col| col[t]).collect();
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return Err(CoopError::DegenerateDistribution {
                    what: "type",
                    index: t,
                });
            }
            Ok(row.into_iter().map(|x| x / total).collect())
        })
        .collect::<Result<_, _>>()?;
    Ok(TeacherPolicy { rows })
}

#[derive(Debug, Clone)]
pub struct CiSolution {
    pub teacher: TeacherPolicy,
    pub learner: LearnerPolicy,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of the teacher at each iteration.
    pub deltas: Vec<f64>,
}

/// Alternates the learner and teacher normalizations starting from `h0`
/// until the teacher moves less than `tol` in sup-norm, or `max_iter`
/// rounds have run.
pub fn ci_fixed_point(
    h0: &TeacherPolicy,
    prior: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<CiSolution, CoopError> {
    if prior.len() != h0.n_types() {
        return Err(CoopError::Shape("prior length differs from teacher rows".into()));
    }
    check_distribution(prior, "prior")?;
    let mut h = h0.clone();
    let mut deltas = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let r = learner_from_teacher(&h, prior)?;
        let next = teacher_from_learner(&r, h.n_types())?;
        let delta = next.sup_distance(&h);
        deltas.push(delta);
        h = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    let posterior = learner_from_teacher(&h, prior)?;
    let guess = posterior
        .iter()
        .map(|col| argmax_low(col.iter().copied()))
        .collect();
    Ok(CiSolution {
        teacher: h,
        learner: LearnerPolicy { posterior, guess },
        iterations: deltas.len(),
        converged,
        deltas,
    })
}

/// Residuals of the two fixed-point equations at `(h, r)`:
/// `(max |R - normalize_θ(p·H)|, max |H - normalize_d(R)|)`.
pub fn ci_residuals(h: &TeacherPolicy, r: &LearnerPolicy, prior: &[f64]) -> (f64, f64) {
    let sup = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let learner = learner_from_teacher(h, prior).map_or(f64::INFINITY, |post| sup(&post, &r.posterior));
    let teacher = teacher_from_learner(&r.posterior, h.n_types())
        .map_or(f64::INFINITY, |t| sup(&t.rows, &h.rows));
    (learner, teacher)
}

/// Literal teacher `p^H_0(d|θ) ∝ exp(score[θ][d])`.
pub fn literal_teacher(scores: &[Vec<f64>]) -> Result<TeacherPolicy, CoopError> {
    let rows = scores
        .iter()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !max.is_finite() {
                return Err(CoopError::Shape("scores must be finite".into()));
            }
            let e: Vec<f64> = row.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = e.iter().sum();
            Ok(e.into_iter().map(|x| x / total).collect())
        })
        .collect::<Result<_, _>>()?;
    TeacherPolicy::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PedagogyMode {
    /// `p^H_1(d|θ) ∝ p^R_0(θ|d)`
    Proportional,
    /// `p^H_1(d|θ) ∝ exp(p^R_0(θ|d))`
    Exponential,
}

/// Teacher that favors signals the given learner finds informative.
pub fn pedagogic_teacher(r0: &LearnerPolicy, mode: PedagogyMode) -> Result<TeacherPolicy, CoopError> {
    let n_types = r0.posterior.first().map_or(0, Vec::len);
    match mode {
        PedagogyMode::Proportional => teacher_from_learner(&r0.posterior, n_types),
        PedagogyMode::Exponential => {
            let transformed: Vec<Vec<f64>> = r0
                .posterior
                .iter()
                .map(|col| col.iter().map(|p| p.exp()).collect())
                .collect();
            teacher_from_learner(&transformed, n_types)
        }
    }
}

/// Bayes posterior per signal and the payoff-maximizing guess under it.
/// Zero-mass signals fall back to the prior; ties go to the lowest type.
pub fn best_response(game: &CommonPayoffGame, h: &TeacherPolicy) -> Result<LearnerPolicy, CoopError> {
    check_shapes(game, h)?;
    let n = game.n_types();
    let mut posterior = Vec::with_capacity(game.n_signals);
    let mut guess = Vec::with_capacity(game.n_signals);
    for d in 0..game.n_signals {
        // unnormalized weights are exactly what U sums for this signal
        let mut weights: Vec<f64> = (0..n).map(|t| game.prior[t] * h.rows[t][d]).collect();
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            guess.push(argmax_low((0..n).map(|g| {
                (0..n).map(|t| weights[t] * game.payoff[t][g]).sum::<f64>()
            })));
            weights.iter_mut().for_each(|w| *w /= total);
        } else {
            weights = game.prior.clone();
            guess.push(argmax_low((0..n).map(|g| {
                (0..n).map(|t| weights[t] * game.payoff[t][g]).sum::<f64>()
            })));
        }
        posterior.push(weights);
    }
    Ok(LearnerPolicy { posterior, guess })
}

/// Exponential tilt of each teacher row toward signals that pay more under
/// `r`; falls back to `h` if the tilt would lower the joint payoff.
pub fn improving_response(
    game: &CommonPayoffGame,
    h: &TeacherPolicy,
    r: &LearnerPolicy,
    beta: f64,
) -> TeacherPolicy {
    let rows = h
        .rows
        .iter()
        .enumerate()
        .map(|(theta, row)| {
            let v: Vec<f64> = r.guess.iter().map(|&g| game.payoff[theta][g]).collect();
            let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = row
                .iter()
                .zip(&v)
                .map(|(p, vi)| p * (beta * (vi - vmax)).exp())
                .collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let candidate = TeacherPolicy { rows };
    if joint_payoff(game, &candidate, r) >= joint_payoff(game, h, r) - RANKING_SLACK {
        candidate
    } else {
        h.clone()
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub teacher: TeacherPolicy,
    pub learner: LearnerPolicy,
    /// `U(H_k, R_k)`.
    pub payoff: f64,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
}

/// `R_k = BR(H_k)`, `H_{k+1} = IR(H_k, R_k)` for `k = 0..=depth`.
pub fn build_hierarchy(
    game: &CommonPayoffGame,
    h0: &TeacherPolicy,
    depth: usize,
    beta: f64,
) -> Result<Hierarchy, CoopError> {
    if depth == 0 {
        return Err(CoopError::ZeroDepth);
    }
    let mut levels = Vec::with_capacity(depth + 1);
    let mut h = h0.clone();
    for k in 0..=depth {
        let r = best_response(game, &h)?;
        let payoff = joint_payoff(game, &h, &r);
        let next = (k < depth).then(|| improving_response(game, &h, &r, beta));
        levels.push(Level {
            teacher: h,
            learner: r,
            payoff,
        });
        match next {
            Some(n) => h = n,
            None => break,
        }
    }
    Ok(Hierarchy { levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankingCheck {
    /// `[U(H1,R1), U(H1,R0), U(H0,R0), U(H0,R1)]`
    pub chain: [f64; 4],
    pub holds: bool,
    /// Smallest of the three consecutive differences.
    pub min_slack: f64,
}

/// Checks `U(H_{k+1},R_{k+1}) ≥ U(H_{k+1},R_k) ≥ U(H_k,R_k) ≥ U(H_k,R_{k+1})`.
pub fn verify_ranking_at(
    game: &CommonPayoffGame,
    hierarchy: &Hierarchy,
    k: usize,
) -> Result<RankingCheck, CoopError> {
    if hierarchy.levels.len() < k + 2 {
        return Err(CoopError::ZeroDepth);
    }
    let (lo, hi) = (&hierarchy.levels[k], &hierarchy.levels[k + 1]);
    let chain = [
        joint_payoff(game, &hi.teacher, &hi.learner),
        joint_payoff(game, &hi.teacher, &lo.learner),
        joint_payoff(game, &lo.teacher, &lo.learner),
        joint_payoff(game, &lo.teacher, &hi.learner),
    ];
    let min_slack = chain
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    Ok(RankingCheck {
        chain,
        holds: min_slack >= -RANKING_SLACK,
        min_slack,
    })
}

pub fn verify_ranking(game: &CommonPayoffGame, hierarchy: &Hierarchy) -> Result<RankingCheck, CoopError> {
    verify_ranking_at(game, hierarchy, 0)
}

/// On-disk layout for games and teacher matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub prior: Vec<f64>,
    #[serde(default)]
    pub payoff: Option<Vec<Vec<f64>>>,
    pub teacher: Vec<Vec<f64>>,
}

impl GameFile {
    pub fn into_parts(self) -> Result<(CommonPayoffGame, TeacherPolicy), CoopError> {
        let teacher = TeacherPolicy::new(self.teacher)?;
        let game = match self.payoff {
            Some(p) => CommonPayoffGame::new(self.prior, p, teacher.n_signals())?,
            None => CommonPayoffGame::accuracy(self.prior, teacher.n_signals())?,
        };
        check_shapes(&game, &teacher)?;
        Ok((game, teacher))
    }
}
