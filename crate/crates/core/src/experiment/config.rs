use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::ExperimentError;
use crate::agents::{Catalog, Generator, HumanParams, RobotKind};
use crate::estimation::DEFAULT_RESAMPLES;
use crate::grid::{load_grid, GridWorld};

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 20170901;
pub const DEFAULT_P_DEMO: f64 = 0.7;

const BUNDLED: [(&str, &str); 4] = [
    ("bands", include_str!("../../grids/bands.txt")),
    ("corridors", include_str!("../../grids/corridors.txt")),
    ("islands", include_str!("../../grids/islands.txt")),
    // one color only: orange is grass, the rest is pavement
    ("grass", include_str!("../../grids/grass.txt")),
];

/// The three-color grids used by default experiments.
pub const DEFAULT_GRIDS: [&str; 3] = ["bands", "corridors", "islands"];

pub fn bundled_grid_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// A bundled grid by name, or a grid file whose id becomes its file stem.
pub fn resolve_grid(source: &str) -> Result<GridWorld, ExperimentError> {
    if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == source) {
        return Ok(load_grid(text)
            .map_err(|e| ExperimentError::Grid(source.into(), e.to_string()))?
            .with_id(*name));
    }
    let path = Path::new(source);
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::Grid(source.into(), e.to_string()))?;
    let id = path
        .file_stem()
        .map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(load_grid(&text)
        .map_err(|e| ExperimentError::Grid(source.into(), e.to_string()))?
        .with_id(id))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    /// Bundled grid names or grid file paths.
    pub grids: Vec<String>,
    pub params: HumanParams,
    /// Pedagogic probability for a bare `demo-mixture` human.
    pub p_demo: f64,
    pub trials: usize,
    pub seed: u64,
    /// `literal`, `pedagogic`, `mixture` (at `params.alpha`) or `mixture(a)`.
    pub robots: Vec<String>,
    /// Generator strings; bare `action-mixture` / `demo-mixture` take
    /// `params.alpha` / `p_demo`.
    pub humans: Vec<String>,
    pub resamples: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grids: DEFAULT_GRIDS.map(String::from).to_vec(),
            params: HumanParams::default(),
            p_demo: DEFAULT_P_DEMO,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            robots: vec!["literal".into(), "pedagogic".into()],
            humans: vec!["literal".into(), "pedagogic".into()],
            resamples: DEFAULT_RESAMPLES,
            out: None,
        }
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl ExperimentConfig {
    /// Sets one `key = value` setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let bad = |e: &dyn std::fmt::Display| ExperimentError::Config(format!("{key} = {value}: {e}"));
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "grid" | "grids" => self.grids = list(value),
            "tau_l" | "tau_literal" => self.params.tau_literal = value.parse().map_err(|e| bad(&e))?,
            "tau_p" | "tau_pedagogic" => self.params.tau_pedagogic = value.parse().map_err(|e| bad(&e))?,
            "kappa" => self.params.kappa = value.parse().map_err(|e| bad(&e))?,
            "alpha" => self.params.alpha = value.parse().map_err(|e| bad(&e))?,
            "horizon" | "plan_horizon" => self.params.plan_horizon = value.parse().map_err(|e| bad(&e))?,
            "p_demo" => self.p_demo = value.parse().map_err(|e| bad(&e))?,
            "trials" => self.trials = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "robots" => self.robots = list(value),
            "humans" => self.humans = list(value),
            "resamples" => self.resamples = value.parse().map_err(|e| bad(&e))?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(ExperimentError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.apply(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn robot_kinds(&self) -> Result<Vec<RobotKind>, ExperimentError> {
        self.robots
            .iter()
            .map(|s| match s.trim() {
                "mixture" => Ok(RobotKind::Mixture(self.params.alpha)),
                other => other.parse().map_err(ExperimentError::Config),
            })
            .collect()
    }

    pub fn generators(&self) -> Result<Vec<Generator>, ExperimentError> {
        self.humans
            .iter()
            .map(|s| {
                let g = match s.trim() {
                    "action-mixture" => Generator::ActionMixture(self.params.alpha),
                    "demo-mixture" => Generator::DemoMixture(self.p_demo),
                    other => other.parse().map_err(ExperimentError::Config)?,
                };
                g.validate()?;
                Ok(g)
            })
            .collect()
    }

    /// Checks everything a run needs and loads the grids.
    pub fn validate(&self) -> Result<Catalog, ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.resamples == 0 {
            return Err(ExperimentError::Config("resamples must be at least 1".into()));
        }
        if self.grids.is_empty() {
            return Err(ExperimentError::Config("no grids configured".into()));
        }
        self.params.validate()?;
        self.robot_kinds()?;
        self.generators()?;
        let grids = self
            .grids
            .iter()
            .map(|g| resolve_grid(g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Catalog::new(grids, self.params.tau_literal))
    }
}
