//! Mean-square-error sweep for the sample mean, the IPW estimator, and the
//! bias-adjusted estimator, with the crossover sample size at which
//! reweighting starts to pay off.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::estimators::{
    bias_adjusted, bias_feature, bias_test, harmonic_mean_degree, ipw_estimate, sample_mean,
};
use crate::graph::Graph;
use crate::montecarlo::config::ExperimentConfig;
use crate::rng::derive_rng;
use crate::tree::{distance_pgf, galton_watson, GwStop, DEFAULT_GW_RESTARTS};
use crate::variance::plugin_variance;
use crate::walk::{tp_walk, RootInit};

/// One row of `mse.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct MseRow {
    pub feature: String,
    pub estimator: &'static str,
    pub n: usize,
    pub mse: f64,
    pub se: f64,
}

/// Smallest swept sample size where MSE(IPW) < MSE(mean).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Crossover {
    At(usize),
    BeyondSweep(usize),
}

impl Crossover {
    pub fn label(&self) -> String {
        match self {
            Crossover::At(n) => n.to_string(),
            Crossover::BeyondSweep(max) => format!("> {max}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MseOutput {
    pub rows: Vec<MseRow>,
    pub crossover: Crossover,
}

/// MSE sweep under tree-walk sampling with the plug-in bias test driving the
/// bias-adjusted estimator (IPW is the weighted arm, stationary weights
/// taken as known).
pub fn run_mse(
    g: &Graph,
    y: &[f64],
    feature_name: &str,
    cfg: &ExperimentConfig,
) -> Result<MseOutput> {
    cfg.validate()?;
    let mu_true = y.iter().sum::<f64>() / y.len() as f64;
    let reps = cfg.replications;
    let mut rows = Vec::new();
    let mut crossover = None;
    for (ni, &n) in cfg.n_sweep.iter().enumerate() {
        let errors: Vec<(f64, f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = derive_rng(cfg.seed, &[3, ni as u64, rep as u64]);
                let tree = galton_watson(
                    &cfg.gw_power_offspring,
                    GwStop::NodeCap {
                        cap: n,
                        max_restarts: DEFAULT_GW_RESTARTS,
                    },
                    &mut rng,
                )?
                .truncate_bfs(n);
                let sample = tp_walk(g, &tree, RootInit::Stationary, &mut rng)?;
                let obs = sample.observe_feature(y)?;
                let deg = sample.observe_degrees(g);
                let mu_hat = sample_mean(&obs)?;
                let pi_at: Vec<f64> =
                    sample.sampled_nodes().iter().map(|&i| g.pi()[i]).collect();
                let mu_ipw = ipw_estimate(&obs, &pi_at, g.n())?;
                let dbar_hat = harmonic_mean_degree(&deg)?;
                let y_prime = bias_feature(&obs, &deg, dbar_hat)?;
                let bias_hat = sample_mean(&y_prime)?;
                let pgf = distance_pgf(sample.tree())?;
                let plug = plugin_variance(&sample, &y_prime, &deg, &pgf)?;
                let test = bias_test(bias_hat, plug.sigma_hat_sq, cfg.alpha)?;
                let mu_ba = bias_adjusted(mu_hat, mu_ipw, test.reject);
                Ok((
                    (mu_hat - mu_true).powi(2),
                    (mu_ipw - mu_true).powi(2),
                    (mu_ba - mu_true).powi(2),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let stats = |pick: fn(&(f64, f64, f64)) -> f64| {
            let m = errors.iter().map(pick).sum::<f64>() / reps as f64;
            let v = errors
                .iter()
                .map(|e| (pick(e) - m).powi(2))
                .sum::<f64>()
                / (reps - 1) as f64;
            (m, (v / reps as f64).sqrt())
        };
        let (mse_mean, se_mean) = stats(|e| e.0);
        let (mse_ipw, se_ipw) = stats(|e| e.1);
        let (mse_ba, se_ba) = stats(|e| e.2);
        if crossover.is_none() && mse_ipw < mse_mean {
            crossover = Some(n);
        }
        for (estimator, mse, se) in [
            ("mu_hat", mse_mean, se_mean),
            ("mu_ipw", mse_ipw, se_ipw),
            ("mu_ba", mse_ba, se_ba),
        ] {
            rows.push(MseRow {
                feature: feature_name.to_string(),
                estimator,
                n,
                mse,
                se,
            });
        }
    }
    let max_n = *cfg.n_sweep.iter().max().expect("nonempty sweep");
    Ok(MseOutput {
        rows,
        crossover: crossover.map_or(Crossover::BeyondSweep(max_n), Crossover::At),
    })
}


/// Serialize rows in the pinned `mse.csv` schema.
pub fn mse_csv(rows: &[MseRow]) -> String {
    let mut out = String::from("feature,estimator,n,mse,se\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.feature, r.estimator, r.n, r.mse, r.se
        ));
    }
    out
}
