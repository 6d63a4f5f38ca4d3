use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{AccuracyCell, ExperimentError};

/// One CSV line of an accuracy table.
#[derive(Debug, Clone, Serialize)]
pub struct CellRow<'a> {
    pub human: &'a str,
    pub robot: &'a str,
    pub alpha: Option<f64>,
    pub accuracy: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub seed: u64,
}

impl<'a> From<&'a AccuracyCell> for CellRow<'a> {
    fn from(c: &'a AccuracyCell) -> Self {
        Self {
            human: &c.human,
            robot: &c.robot,
            alpha: c.alpha,
            accuracy: c.accuracy,
            ci_lo: c.ci.lo,
            ci_hi: c.ci.hi,
            n: c.n,
            seed: c.seed,
        }
    }
}

pub fn write_cells_csv<W: Write>(out: W, cells: &[AccuracyCell]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(CellRow::from(c))?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'static str,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub config: &'a C,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'a str, seed: u64, outputs: Vec<String>, config: &'a C) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            outputs,
            config,
        }
    }
}

pub fn write_manifest<C: Serialize>(dir: &Path, manifest: &Manifest<'_, C>) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}
