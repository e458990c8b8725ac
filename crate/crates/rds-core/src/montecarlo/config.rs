//! Experiment configuration: JSON-loadable knobs with desk-scale defaults
//! and a paper-scale switch.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Configuration for the Monte Carlo experiment drivers. All fields have
/// desk-scale defaults; `paper_scale` restores the published problem sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Population size for SBM experiments.
    pub population: usize,
    /// Monte Carlo replications per scenario.
    pub replications: usize,
    /// Referral waves per tree.
    pub waves: u32,
    /// Master seed; every stream is derived from it.
    pub seed: u64,
    /// Test level.
    pub alpha: f64,
    /// Target second eigenvalues of the SBM block kernel.
    pub lambda2_grid: Vec<f64>,
    /// SBM edge density `p + r`.
    pub edge_density: f64,
    /// Sample-size sweep for power and MSE experiments.
    pub n_sweep: Vec<usize>,
    /// Offspring law for the convexity-scan trees.
    pub gw_offspring: Vec<f64>,
    /// Offspring law for the power/MSE referral trees (mean 1.1).
    pub gw_power_offspring: Vec<f64>,
    /// Node cap for the convexity-scan trees.
    pub node_cap: usize,
    /// Number of trees in the convexity scan.
    pub num_trees: usize,
    /// Grid step for PGF evaluation.
    pub grid_step: f64,
    /// Output directory for CSV artifacts (current directory when unset).
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            population: 2000,
            replications: 1000,
            waves: 8,
            seed: 1,
            alpha: 0.05,
            lambda2_grid: vec![0.5, 0.6, 0.8, 0.9],
            edge_density: 0.01,
            n_sweep: vec![20, 50, 100, 200, 350, 500],
            gw_offspring: vec![0.1, 0.1, 0.3, 0.5],
            gw_power_offspring: vec![0.0, 0.9, 0.1],
            node_cap: 5000,
            num_trees: 20,
            grid_step: 0.01,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Restore the published problem sizes (N = 5000, R = 2000).
    pub fn paper_scale(mut self) -> Self {
        self.population = 5000;
        self.replications = 2000;
        self
    }

    /// Parse a JSON config, falling back to defaults for missing keys.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("bad config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.waves == 0 {
            return Err(Error::Config("waves must be >= 1".into()));
        }
        if self.population < 2 || self.population % 2 != 0 {
            return Err(Error::Config("population must be even and >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) || self.alpha == 0.0 {
            return Err(Error::Config("alpha must be in (0, 1)".into()));
        }
        if self.lambda2_grid.iter().any(|&l| !(0.0..1.0).contains(&l)) {
            return Err(Error::Config("lambda2 targets must be in [0, 1)".into()));
        }
        if self.n_sweep.is_empty() || self.n_sweep.iter().any(|&n| n < 2) {
            return Err(Error::Config("n_sweep entries must be >= 2".into()));
        }
        Ok(())
    }

    /// SBM `(p, r)` hitting a target block-level second eigenvalue at the
    /// configured edge density: `p - r = lambda2 (p + r)`.
    pub fn sbm_rates(&self, lambda2: f64) -> (f64, f64) {
        let s = self.edge_density;
        (s * (1.0 + lambda2) / 2.0, s * (1.0 - lambda2) / 2.0)
    }
}
