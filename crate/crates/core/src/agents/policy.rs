use crate::grid::Cell;
use crate::qvalues::QTable;

/// Boltzmann distribution over four action values, shifted by the maximum.
pub fn softmax(q: &[f64; 4], tau: f64) -> [f64; 4] {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = q.map(|v| ((v - max) / tau).exp());
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    p
}

/// Noisily optimal literal demonstrator: `P(a) ∝ exp(Q(s, a) / tau)`.
pub fn literal_policy(q: &QTable, cell: Cell, tau: f64) -> [f64; 4] {
    softmax(q.row(cell), tau)
}

/// Per-step convex combination `alpha * pedagogic + (1 - alpha) * literal`.
pub fn mixture_policy(literal: &[f64; 4], pedagogic: &[f64; 4], alpha: f64) -> [f64; 4] {
    if alpha == 0.0 {
        return *literal;
    }
    if alpha == 1.0 {
        return *pedagogic;
    }
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = alpha * pedagogic[i] + (1.0 - alpha) * literal[i];
    }
    out
}

pub(crate) fn sample_index(probs: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(3)
}
