//! Exact Q-values for a fixed reward hypothesis: finite-horizon backward
//! induction or discounted value iteration to a sup-norm tolerance.

use crate::grid::{Action, Cell, GridWorld, RewardHypothesis, TileKind};

/// Q-values indexed by cell and action. Finite-horizon tables keep every
/// layer `Q_0 ..= Q_h`; the infinite-horizon table keeps one converged layer
/// and reports `horizon() == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    width: usize,
    horizon: usize,
    layers: Vec<Vec<[f64; 4]>>,
}

impl QTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_infinite(&self) -> bool {
        self.horizon == 0
    }

    /// Q at the full horizon (or the converged table).
    pub fn q(&self, cell: Cell, action: Action) -> f64 {
        self.row(cell)[action.index()]
    }

    pub fn row(&self, cell: Cell) -> &[f64; 4] {
        let top = self.layers.last().expect("at least one layer");
        &top[cell.0 * self.width + cell.1]
    }

    /// Q with `remaining` steps to go; panics for the converged table when
    /// `remaining` is not zero.
    pub fn row_at(&self, cell: Cell, remaining: usize) -> &[f64; 4] {
        let layer = if self.is_infinite() { 0 } else { remaining };
        &self.layers[layer][cell.0 * self.width + cell.1]
    }

    pub fn value(&self, cell: Cell) -> f64 {
        max4(self.row(cell))
    }
}

pub(crate) fn max4(q: &[f64; 4]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn backup(g: &GridWorld, r: RewardHypothesis, next_value: &[f64]) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; g.num_cells()];
    for cell in g.open_cells() {
        if cell == g.goal() {
            continue;
        }
        let row = &mut out[g.index_of(cell)];
        for a in Action::ALL {
            let (next, done) = g.step(cell, a);
            let cont = if done { 0.0 } else { next_value[g.index_of(next)] };
            row[a.index()] = g.reward_of(r, cell, a, next) + g.discount() * cont;
        }
    }
    out
}

fn values_of(g: &GridWorld, layer: &[[f64; 4]]) -> Vec<f64> {
    (0..g.num_cells())
        .map(|i| {
            if g.tile(g.cell_at(i)) == TileKind::Wall {
                0.0
            } else {
                max4(&layer[i])
            }
        })
        .collect()
}

/// `horizon > 0`: backward induction with `Q_0 = 0`.
/// `horizon == 0`: value iteration until the sup-norm change drops below `tol`.
pub fn q_values(g: &GridWorld, r: RewardHypothesis, horizon: usize, tol: f64) -> QTable {
    let zero = vec![[0.0; 4]; g.num_cells()];
    if horizon > 0 {
        let mut layers = Vec::with_capacity(horizon + 1);
        layers.push(zero);
        for h in 1..=horizon {
            let next = values_of(g, &layers[h - 1]);
            layers.push(backup(g, r, &next));
        }
        return QTable {
            width: g.width(),
            horizon,
            layers,
        };
    }

    assert!(tol > 0.0, "value iteration needs a positive tolerance");
    let mut layer = zero;
    loop {
        let next = backup(g, r, &values_of(g, &layer));
        let delta = next
            .iter()
            .zip(&layer)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        layer = next;
        if delta < tol {
            break;
        }
    }
    QTable {
        width: g.width(),
        horizon: 0,
        layers: vec![layer],
    }
}
