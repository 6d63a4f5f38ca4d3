//! Brute-force reference computations. Dynamics and rewards are re-derived
//! from the ASCII map here rather than taken from the grid module.

use misspec_core::agents::{infer, Environment, HumanParams, PedagogicPlanner, RobotKind};
use misspec_core::coop::{
    best_response, build_hierarchy, ci_fixed_point, verify_ranking, CommonPayoffGame, LearnerPolicy,
    TeacherPolicy,
};
use misspec_core::experiment::DEFAULT_TILT;
use misspec_core::grid::{load_grid, Action, Cell, RewardHypothesis};
use misspec_core::qvalues::q_values;
use misspec_core::rng::rng;
use rand::Rng;

pub const TOL: f64 = 1e-9;
const GAMMA: f64 = 0.99;

/// Plain character map with its own move and reward rules.
pub struct Map {
    pub rows: Vec<Vec<char>>,
}

impl Map {
    pub fn new(text: &str) -> Self {
        Self {
            rows: text.lines().map(|l| l.trim().chars().collect()).collect(),
        }
    }

    fn find(&self, ch: char) -> Cell {
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(c) = row.iter().position(|&x| x == ch) {
                return (r, c);
            }
        }
        panic!("no {ch}");
    }

    pub fn start(&self) -> Cell {
        self.find('S')
    }

    pub fn goal(&self) -> Cell {
        self.find('G')
    }

    pub fn open(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, &ch) in row.iter().enumerate() {
                if ch != '#' {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn step(&self, (r, c): Cell, a: usize) -> (Cell, bool) {
        let (dr, dc): (i64, i64) = match Action::from_index(a) {
            Action::North => (-1, 0),
            Action::South => (1, 0),
            Action::East => (0, 1),
            Action::West => (0, -1),
        };
        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
        let inside = nr >= 0 && nc >= 0 && (nr as usize) < self.rows.len() && (nc as usize) < self.rows[0].len();
        let next = if inside && self.rows[nr as usize][nc as usize] != '#' {
            (nr as usize, nc as usize)
        } else {
            (r, c)
        };
        (next, self.rows[next.0][next.1] == 'G')
    }

    /// Reward for entering `cell` under hypothesis bits `h`
    /// (bit 0 orange, bit 1 purple, bit 2 cyan dangerous).
    pub fn reward(&self, h: usize, cell: Cell) -> f64 {
        let bit = match self.rows[cell.0][cell.1] {
            'G' => return 10.0,
            'o' => 0,
            'p' => 1,
            'c' => 2,
            _ => return 0.0,
        };
        if h >> bit & 1 == 1 {
            -2.0
        } else {
            0.0
        }
    }
}

/// Max discounted return over every action sequence of length `h` that
/// starts with each action.
pub fn q_by_enumeration(map: &Map, hyp: usize, cell: Cell, h: usize) -> [f64; 4] {
    let mut best = [f64::NEG_INFINITY; 4];
    for code in 0..4usize.pow(h as u32) {
        let (mut s, mut ret, mut disc, mut x) = (cell, 0.0, 1.0, code);
        let first = code % 4;
        for _ in 0..h {
            let (next, done) = map.step(s, x % 4);
            x /= 4;
            ret += disc * map.reward(hyp, next);
            disc *= GAMMA;
            s = next;
            if done {
                break;
            }
        }
        best[first] = best[first].max(ret);
    }
    best
}

pub fn q_grids() -> Vec<&'static str> {
    vec![
        "S.oc\np#..\n.cp.\no..G",
        "Sop.\n.#c.\ncc.o\n...G",
        "S.c\n#pG",
        "Soc\np.G",
        "Sopc\nG...",
        "So\nc.\npG",
    ]
}

/// Seeded random maps up to 4x4 with S and G on distinct cells.
pub fn random_maps(n: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let (h, w) = (rng.gen_range(1..=4), rng.gen_range(2..=4));
            let mut cells: Vec<char> = (0..h * w)
                .map(|_| ['.', 'o', 'p', 'c', '#'][rng.gen_range(0..5)])
                .collect();
            let s = rng.gen_range(0..h * w);
            let mut g = rng.gen_range(0..h * w);
            while g == s {
                g = rng.gen_range(0..h * w);
            }
            cells[s] = 'S';
            cells[g] = 'G';
            cells
                .chunks(w)
                .map(|r| r.iter().collect::<String>())
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect()
}

/// Finite-horizon Q against enumeration on every open non-goal cell.
pub fn check_q_table(text: &str, h: usize) -> Result<usize, String> {
    let g = load_grid(text).map_err(|e| e.to_string())?;
    let map = Map::new(text);
    let mut n = 0;
    for hyp in 0..8 {
        let table = q_values(&g, RewardHypothesis::new(hyp).unwrap(), h, 0.0);
        for cell in map.open() {
            if cell == map.goal() {
                continue;
            }
            let want = q_by_enumeration(&map, hyp, cell, h);
            let got = table.row(cell);
            for a in 0..4 {
                if (got[a] - want[a]).abs() > TOL {
                    return Err(format!(
                        "{text:?} h={h} r={hyp} cell={cell:?} a={a}: {} vs {}",
                        got[a], want[a]
                    ));
                }
                n += 1;
            }
        }
    }
    Ok(n)
}

pub fn check_q_oracle() -> Result<usize, String> {
    let mut n = 0;
    for text in q_grids() {
        for h in [1, 2, 3, 6, 8] {
            n += check_q_table(text, h)?;
        }
    }
    for (i, text) in random_maps(12, 41).iter().enumerate() {
        n += check_q_table(text, 1 + i % 8)?;
    }
    Ok(n)
}

fn softmax(q: &[f64; 4], tau: f64) -> [f64; 4] {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = q.map(|x| ((x - m) / tau).exp());
    let z: f64 = e.iter().sum();
    e.map(|x| x / z)
}

/// `H_L(a | cell, r)` for every hypothesis, from the converged Q tables.
pub fn literal_lik(env: &Environment, cell: Cell, a: usize) -> [f64; 8] {
    std::array::from_fn(|r| softmax(env.q_table(RewardHypothesis::new(r).unwrap()).row(cell), env.tau_literal())[a])
}

fn bayes(b: &[f64; 8], lik: &[f64; 8]) -> [f64; 8] {
    let w: [f64; 8] = std::array::from_fn(|r| b[r] * lik[r]);
    let z: f64 = w.iter().sum();
    w.map(|x| x / z)
}

fn v_star(env: &Environment, hyp: usize, cell: Cell) -> f64 {
    env.q_table(RewardHypothesis::new(hyp).unwrap())
        .row(cell)
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Pedagogic Q by enumerating every `h`-step action sequence, scoring the
/// shaped reward along the literal robot's belief path and `V*` at the leaf.
pub fn pedagogic_q_by_enumeration(
    env: &Environment,
    map: &Map,
    kappa: f64,
    cell: Cell,
    belief: &[f64; 8],
    h: usize,
) -> [[f64; 4]; 8] {
    let mut best = [[f64::NEG_INFINITY; 4]; 8];
    for code in 0..4usize.pow(h as u32) {
        let (mut s, mut b, mut x, mut disc) = (cell, *belief, code, 1.0);
        let mut ret = [0.0; 8];
        let first = code % 4;
        for t in 0..h {
            let a = x % 4;
            x /= 4;
            let (next, done) = map.step(s, a);
            let nb = bayes(&b, &literal_lik(env, s, a));
            for r in 0..8 {
                ret[r] += disc * (map.reward(r, next) + kappa * (nb[r] - b[r]));
            }
            disc *= GAMMA;
            if done {
                break;
            }
            if t == h - 1 {
                for (r, acc) in ret.iter_mut().enumerate() {
                    *acc += disc * v_star(env, r, next);
                }
            }
            s = next;
            b = nb;
        }
        for r in 0..8 {
            best[r][first] = best[r][first].max(ret[r]);
        }
    }
    best
}

pub fn check_pedagogic_oracle() -> Result<usize, String> {
    let mut n = 0;
    for (text, h) in [("Soc\np.G", 4), ("S.o\np#c\n..G", 4), ("Sop\nc.G", 5)] {
        let map = Map::new(text);
        let env = Environment::new(load_grid(text).unwrap(), 1.0);
        let params = HumanParams {
            kappa: 5.0,
            plan_horizon: h,
            ..Default::default()
        };
        let mut planner = PedagogicPlanner::new(&env, &params).unwrap();
        let skewed = [0.3, 0.05, 0.1, 0.15, 0.02, 0.08, 0.2, 0.1];
        for belief in [[0.125; 8], skewed] {
            let b = misspec_core::agents::Belief::new(belief).unwrap();
            for cell in map.open() {
                if cell == map.goal() {
                    continue;
                }
                let want = pedagogic_q_by_enumeration(&env, &map, 5.0, cell, &belief, h);
                let got = planner.q(cell, &b, h);
                for r in 0..8 {
                    for a in 0..4 {
                        if (got[r][a] - want[r][a]).abs() > TOL {
                            return Err(format!(
                                "{text:?} cell={cell:?} r={r} a={a}: {} vs {}",
                                got[r][a], want[r][a]
                            ));
                        }
                        n += 1;
                    }
                }
            }
        }
    }
    Ok(n)
}

/// Every trajectory of at most `len` steps from the start, stopping early at
/// the goal.
pub fn trajectories(map: &Map, len: usize) -> Vec<Vec<(Cell, Action)>> {
    fn rec(map: &Map, s: Cell, len: usize, prefix: &mut Vec<(Cell, Action)>, out: &mut Vec<Vec<(Cell, Action)>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        if prefix.len() == len || s == map.goal() {
            return;
        }
        for a in 0..4 {
            let (next, _) = map.step(s, a);
            prefix.push((s, Action::from_index(a)));
            rec(map, next, len, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(map, map.start(), len, &mut Vec::new(), &mut out);
    out
}

/// Per-step action likelihoods under the true literal belief path:
/// `(H_L, H_P)` for every hypothesis.
fn step_likelihoods(
    env: &Environment,
    planner: &mut PedagogicPlanner<'_>,
    tau_p: f64,
    steps: &[(Cell, Action)],
) -> Vec<([f64; 8], [f64; 8])> {
    let mut b = [0.125; 8];
    steps
        .iter()
        .map(|&(s, a)| {
            let lit = literal_lik(env, s, a.index());
            let belief = misspec_core::agents::Belief::new(b).unwrap();
            let q = planner.q(s, &belief, planner.horizon());
            let ped: [f64; 8] = std::array::from_fn(|r| softmax(&q[r], tau_p)[a.index()]);
            b = bayes(&b, &lit);
            (lit, ped)
        })
        .collect()
}

/// Joint-likelihood Bayes over whole trajectories against each robot's
/// sequential updates, plus normalization of the trajectory distribution.
pub fn check_belief_oracle() -> Result<usize, String> {
    let alpha = 0.3;
    let mut n = 0;
    for (text, len) in [("Soc\np.G", 5), ("S.o.\np#c.\n..pG", 5), ("Sc\noG", 4)] {
        let map = Map::new(text);
        let env = Environment::new(load_grid(text).unwrap(), 1.0);
        let params = HumanParams::default();
        let mut planner = PedagogicPlanner::new(&env, &params).unwrap();
        let mut mass = [[0.0f64; 8]; 3];
        for traj in trajectories(&map, len) {
            let liks = step_likelihoods(&env, &mut planner, params.tau_pedagogic, &traj);
            let mut joint = [[1.0f64; 8]; 3];
            for (lit, ped) in &liks {
                for r in 0..8 {
                    joint[0][r] *= lit[r];
                    joint[1][r] *= ped[r];
                    joint[2][r] *= alpha * ped[r] + (1.0 - alpha) * lit[r];
                }
            }
            let complete = traj.len() == len || map.step(traj.last().unwrap().0, traj.last().unwrap().1.index()).1;
            for (k, robot) in [RobotKind::Literal, RobotKind::Pedagogic, RobotKind::Mixture(alpha)]
                .into_iter()
                .enumerate()
            {
                let z: f64 = joint[k].iter().sum();
                let got = infer(&mut planner, robot, &traj).map_err(|e| e.to_string())?;
                for r in 0..8 {
                    let want = joint[k][r] / z;
                    if (got.probs()[r] - want).abs() > TOL {
                        return Err(format!("{text:?} {robot} {traj:?} r={r}: {} vs {want}", got.probs()[r]));
                    }
                    n += 1;
                    if complete {
                        mass[k][r] += joint[k][r];
                    }
                }
            }
        }
        for (k, row) in mass.iter().enumerate() {
            for (r, m) in row.iter().enumerate() {
                if (m - 1.0).abs() > TOL {
                    return Err(format!("{text:?} model {k} r={r}: trajectory mass {m}"));
                }
            }
        }
    }
    Ok(n)
}

pub fn payoff(game: &CommonPayoffGame, teacher: &[Vec<f64>], guess: &[usize]) -> f64 {
    let mut u = 0.0;
    for (t, row) in teacher.iter().enumerate() {
        for (d, p) in row.iter().enumerate() {
            u += game.prior[t] * p * game.payoff[t][guess[d]];
        }
    }
    u
}

/// Best response against every deterministic learner of random games.
pub fn check_br_dominance(n_games: usize, seed: u64) -> Result<usize, String> {
    let mut compared = 0;
    for i in 0..n_games {
        let (game, h) = CommonPayoffGame::random(seed + i as u64, 5, 6);
        let br = best_response(&game, &h).map_err(|e| e.to_string())?;
        let u_br = payoff(&game, h.rows(), br.guess());
        let (n, m) = (game.n_types(), game.n_signals);
        let mut guess = vec![0usize; m];
        loop {
            let u = payoff(&game, h.rows(), &guess);
            if u > u_br + 1e-12 {
                return Err(format!("game {i}: learner {guess:?} earns {u} > {u_br}"));
            }
            compared += 1;
            let mut k = 0;
            while k < m {
                guess[k] += 1;
                if guess[k] < n {
                    break;
                }
                guess[k] = 0;
                k += 1;
            }
            if k == m {
                break;
            }
        }
    }
    Ok(compared)
}

fn level_payoff(game: &CommonPayoffGame, h: &TeacherPolicy, r: &LearnerPolicy) -> f64 {
    payoff(game, h.rows(), r.guess())
}

/// The one-step ranking chain on random games, recomputed from scratch.
pub fn check_ranking_chain(n_games: usize, seed: u64) -> Result<f64, String> {
    let mut min_slack = f64::INFINITY;
    for i in 0..n_games {
        let s = misspec_core::rng::derive_seed(seed, &[i as u64]);
        let (game, h0) = CommonPayoffGame::random(s, 5, 6);
        let hier = build_hierarchy(&game, &h0, 1, DEFAULT_TILT).map_err(|e| e.to_string())?;
        let (l0, l1) = (&hier.levels[0], &hier.levels[1]);
        let chain = [
            level_payoff(&game, &l1.teacher, &l1.learner),
            level_payoff(&game, &l1.teacher, &l0.learner),
            level_payoff(&game, &l0.teacher, &l0.learner),
            level_payoff(&game, &l0.teacher, &l1.learner),
        ];
        let slack = chain.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        if slack < -1e-12 {
            return Err(format!("game {i}: chain {chain:?}"));
        }
        let check = verify_ranking(&game, &hier).map_err(|e| e.to_string())?;
        if !check.holds || (check.min_slack - slack).abs() > 1e-12 {
            return Err(format!("game {i}: library check {check:?} vs chain {chain:?}"));
        }
        min_slack = min_slack.min(slack);
    }
    Ok(min_slack)
}

/// Residuals of both fixed-point equations, recomputed from the definitions.
pub fn ci_residuals_by_hand(prior: &[f64], teacher: &[Vec<f64>], learner: &[Vec<f64>]) -> (f64, f64) {
    let (n, m) = (teacher.len(), teacher[0].len());
    let mut eq_learner: f64 = 0.0;
    for d in 0..m {
        let z: f64 = (0..n).map(|t| prior[t] * teacher[t][d]).sum();
        for t in 0..n {
            eq_learner = eq_learner.max((learner[d][t] - prior[t] * teacher[t][d] / z).abs());
        }
    }
    let mut eq_teacher: f64 = 0.0;
    for t in 0..n {
        let z: f64 = (0..m).map(|d| learner[d][t]).sum();
        for d in 0..m {
            eq_teacher = eq_teacher.max((teacher[t][d] - learner[d][t] / z).abs());
        }
    }
    (eq_learner, eq_teacher)
}

/// Random positive `n x m` teacher with `n, m <= max` and a random prior.
pub fn random_teacher(seed: u64, max: usize) -> (Vec<f64>, TeacherPolicy) {
    let mut rng = rng(seed);
    let (n, m) = (rng.gen_range(1..=max), rng.gen_range(1..=max));
    let mut positive = |len: usize| {
        let v: Vec<f64> = (0..len).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let z: f64 = v.iter().sum();
        v.into_iter().map(|x| x / z).collect::<Vec<f64>>()
    };
    let prior = positive(n);
    let rows = (0..n).map(|_| positive(m)).collect();
    (prior, TeacherPolicy::new(rows).unwrap())
}

pub fn check_ci(n: usize, seed: u64) -> Result<(usize, f64), String> {
    let mut worst: f64 = 0.0;
    let mut max_iter = 0;
    for i in 0..n {
        let (prior, h0) = random_teacher(seed + i as u64, 6);
        let sol = ci_fixed_point(&h0, &prior, 10_000, 1e-10).map_err(|e| e.to_string())?;
        if !sol.converged || sol.deltas.last().is_none_or(|d| *d >= 1e-10) {
            return Err(format!("matrix {i} did not converge in {} iterations", sol.iterations));
        }
        if sol.deltas.iter().any(|d| !d.is_finite()) {
            return Err(format!("matrix {i}: non-finite change"));
        }
        let (a, b) = ci_residuals_by_hand(&prior, sol.teacher.rows(), sol.learner.posterior());
        if a >= 1e-9 || b >= 1e-9 {
            return Err(format!("matrix {i}: residuals {a:e} {b:e}"));
        }
        worst = worst.max(a).max(b);
        max_iter = max_iter.max(sol.iterations);
    }
    Ok((max_iter, worst))
}
