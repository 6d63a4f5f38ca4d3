use crate::grid::{Action, Cell, GridWorld, RewardHypothesis, NUM_HYPOTHESES};
use crate::qvalues::{q_values, QTable};

use super::policy::softmax;

/// Value-iteration tolerance for the literal model's Q-values.
pub const LITERAL_TOL: f64 = 1e-8;

/// A grid together with the literal demonstrator model for every reward
/// hypothesis: converged Q-values and the per-step action likelihoods
/// `H_L(a | s, r)` the literal robot uses.
#[derive(Debug, Clone)]
pub struct Environment {
    grid: GridWorld,
    tau_literal: f64,
    q: Vec<QTable>,
    // [cell][action][hypothesis]
    likelihood: Vec<[[f64; NUM_HYPOTHESES]; 4]>,
    // [hypothesis][cell]
    value: Vec<Vec<f64>>,
}

impl Environment {
    pub fn new(grid: GridWorld, tau_literal: f64) -> Self {
        assert!(tau_literal > 0.0, "tau_literal must be positive");
        let q: Vec<QTable> = RewardHypothesis::all()
            .map(|r| q_values(&grid, r, 0, LITERAL_TOL))
            .collect();
        let mut likelihood = vec![[[0.0; NUM_HYPOTHESES]; 4]; grid.num_cells()];
        let mut value = vec![vec![0.0; grid.num_cells()]; NUM_HYPOTHESES];
        for cell in grid.open_cells() {
            let ci = grid.index_of(cell);
            for (r, table) in q.iter().enumerate() {
                let p = softmax(table.row(cell), tau_literal);
                for a in 0..4 {
                    likelihood[ci][a][r] = p[a];
                }
                value[r][ci] = table.value(cell);
            }
        }
        Self {
            grid,
            tau_literal,
            q,
            likelihood,
            value,
        }
    }

    pub fn grid(&self) -> &GridWorld {
        &self.grid
    }

    pub fn tau_literal(&self) -> f64 {
        self.tau_literal
    }

    pub fn q_table(&self, r: RewardHypothesis) -> &QTable {
        &self.q[r.index()]
    }

    /// `V*_r(cell)` under the converged literal Q-values.
    pub fn value(&self, r: RewardHypothesis, cell: Cell) -> f64 {
        self.value[r.index()][self.grid.index_of(cell)]
    }

    pub(crate) fn value_by_index(&self, r: usize, cell_index: usize) -> f64 {
        self.value[r][cell_index]
    }

    /// `H_L(a | cell, r)` for all hypotheses at once.
    pub fn literal_likelihoods(&self, cell: Cell, action: Action) -> &[f64; NUM_HYPOTHESES] {
        &self.likelihood[self.grid.index_of(cell)][action.index()]
    }

    /// `H_L(. | cell, r)`.
    pub fn literal_policy(&self, cell: Cell, r: RewardHypothesis) -> [f64; 4] {
        let row = &self.likelihood[self.grid.index_of(cell)];
        [0, 1, 2, 3].map(|a| row[a][r.index()])
    }
}

/// Environments keyed by grid id, all built with the same literal temperature.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    envs: Vec<Environment>,
}

impl Catalog {
    pub fn new(grids: impl IntoIterator<Item = GridWorld>, tau_literal: f64) -> Self {
        Self {
            envs: grids
                .into_iter()
                .map(|g| Environment::new(g, tau_literal))
                .collect(),
        }
    }

    pub fn get(&self, grid_id: &str) -> Option<&Environment> {
        self.envs.iter().find(|e| e.grid().id() == grid_id)
    }

    pub fn envs(&self) -> &[Environment] {
        &self.envs
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }
}
