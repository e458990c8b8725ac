//! Power study of the bias test across four sampling/variance scenarios:
//! analytic normal, i.i.d. stationary draws with known variance, tree walks
//! with simulation-true variance, and tree walks with the plug-in variance.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    bias_feature, harmonic_mean_degree, normal_cdf, normal_quantile, sample_mean,
};
use crate::graph::{pi_inner, Graph};
use crate::montecarlo::config::ExperimentConfig;
use crate::rng::derive_rng;
use crate::tree::{distance_pgf, galton_watson, GwStop, DEFAULT_GW_RESTARTS};
use crate::variance::plugin_variance;
use crate::walk::{tp_walk, RootInit, WalkSample};

/// Which per-node feature the test statistic averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerFeature {
    /// The centered raw feature `y - E_pi(y)`; mean zero under stationary
    /// sampling, so this calibrates the test's size.
    Raw,
    /// The bias feature `y'(i) = y(i)(1 - dbar/deg(i))`; its mean is the
    /// bias of the sample average, so this measures power.
    BiasFeature,
}

/// One row of `power.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct PowerRow {
    pub feature: String,
    pub scenario: u8,
    pub n: usize,
    pub power: f64,
    pub se: f64,
}

/// Exact population-level feature for scenarios 1-2: the tested vector, its
/// stationary mean, and its stationary variance.
fn population_feature(g: &Graph, y: &[f64], mode: PowerFeature) -> Result<(Vec<f64>, f64, f64)> {
    let ones = vec![1.0; y.len()];
    let feat = match mode {
        PowerFeature::Raw => {
            let mean = pi_inner(y, &ones, g.pi())?;
            y.iter().map(|&v| v - mean).collect::<Vec<f64>>()
        }
        PowerFeature::BiasFeature => {
            let dbar = g.degrees().iter().sum::<f64>() / g.n() as f64;
            bias_feature(y, g.degrees(), dbar)?
        }
    };
    let mean = pi_inner(&feat, &ones, g.pi())?;
    let centered: Vec<f64> = feat.iter().map(|&v| v - mean).collect();
    let var = pi_inner(&centered, &centered, g.pi())?;
    Ok((feat, mean, var))
}

/// Tested statistic for one walk: the mean of the per-sample feature, plus
/// the observed feature vector for the plug-in variance.
fn walk_statistic(
    g: &Graph,
    y: &[f64],
    mode: PowerFeature,
    sample: &WalkSample,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let obs = sample.observe_feature(y)?;
    let deg = sample.observe_degrees(g);
    let feat = match mode {
        PowerFeature::Raw => {
            let ones = vec![1.0; y.len()];
            let mean = pi_inner(y, &ones, g.pi())?;
            obs.iter().map(|&v| v - mean).collect::<Vec<f64>>()
        }
        PowerFeature::BiasFeature => {
            let dbar_hat = harmonic_mean_degree(&deg)?;
            bias_feature(&obs, &deg, dbar_hat)?
        }
    };
    let stat = sample_mean(&feat)?;
    Ok((stat, feat, deg))
}

fn grow_sample(
    g: &Graph,
    offspring: &[f64],
    n: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<WalkSample> {
    let tree = galton_watson(
        offspring,
        GwStop::NodeCap {
            cap: n,
            max_restarts: DEFAULT_GW_RESTARTS,
        },
        rng,
    )?
    .truncate_bfs(n);
    tp_walk(g, &tree, RootInit::Stationary, rng)
}

/// Run the requested scenarios over the configured sample-size sweep.
pub fn run_power(
    g: &Graph,
    y: &[f64],
    feature_name: &str,
    mode: PowerFeature,
    scenarios: &[u8],
    cfg: &ExperimentConfig,
) -> Result<Vec<PowerRow>> {
    cfg.validate()?;
    for &s in scenarios {
        if !(1..=4).contains(&s) {
            return Err(Error::Config(format!("unknown scenario id {s}")));
        }
    }
    let (feat, mean, var) = population_feature(g, y, mode)?;
    let z_crit = normal_quantile(1.0 - cfg.alpha / 2.0);
    let reps = cfg.replications;
    let se_of = |p: f64| (p * (1.0 - p) / reps as f64).sqrt();

    let mut rows = Vec::new();
    for &scenario in scenarios {
        for (ni, &n) in cfg.n_sweep.iter().enumerate() {
            let power = match scenario {
                1 => {
                    if var <= 0.0 {
                        return Err(Error::Degenerate("zero feature variance".into()));
                    }
                    let shift = (n as f64).sqrt() * mean.abs() / var.sqrt();
                    normal_cdf(-z_crit + shift) + normal_cdf(-z_crit - shift)
                }
                2 => {
                    let sd_mean = (var / n as f64).sqrt();
                    let rejected: usize = (0..reps)
                        .into_par_iter()
                        .map(|rep| {
                            let mut rng = derive_rng(
                                cfg.seed,
                                &[2, 2, ni as u64, rep as u64],
                            );
                            let mut acc = 0.0;
                            for _ in 0..n {
                                acc += feat[stationary_draw(g.pi(), &mut rng)];
                            }
                            usize::from((acc / n as f64 / sd_mean).abs() > z_crit)
                        })
                        .sum();
                    rejected as f64 / reps as f64
                }
                3 => {
                    // simulation-true variance from an independent pre-run
                    let pre: Vec<f64> = (0..reps)
                        .into_par_iter()
                        .map(|rep| {
                            let mut rng = derive_rng(
                                cfg.seed,
                                &[2, 13, ni as u64, rep as u64],
                            );
                            let sample = grow_sample(g, &cfg.gw_power_offspring, n, &mut rng)?;
                            Ok(walk_statistic(g, y, mode, &sample)?.0)
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    let pre_mean = pre.iter().sum::<f64>() / reps as f64;
                    let true_var = pre
                        .iter()
                        .map(|&v| (v - pre_mean).powi(2))
                        .sum::<f64>()
                        / (reps - 1) as f64;
                    if true_var <= 0.0 {
                        return Err(Error::Degenerate("zero simulated variance".into()));
                    }
                    let sd = true_var.sqrt();
                    let rejected: usize = (0..reps)
                        .into_par_iter()
                        .map(|rep| {
                            let mut rng = derive_rng(
                                cfg.seed,
                                &[2, 3, ni as u64, rep as u64],
                            );
                            let sample = grow_sample(g, &cfg.gw_power_offspring, n, &mut rng)?;
                            let (stat, _, _) = walk_statistic(g, y, mode, &sample)?;
                            Ok(usize::from((stat / sd).abs() > z_crit))
                        })
                        .sum::<Result<usize>>()?;
                    rejected as f64 / reps as f64
                }
                4 => {
                    let rejected: usize = (0..reps)
                        .into_par_iter()
                        .map(|rep| {
                            let mut rng = derive_rng(
                                cfg.seed,
                                &[2, 4, ni as u64, rep as u64],
                            );
                            let sample = grow_sample(g, &cfg.gw_power_offspring, n, &mut rng)?;
                            let (stat, feat_obs, deg_obs) = walk_statistic(g, y, mode, &sample)?;
                            let pgf = distance_pgf(sample.tree())?;
                            let plug = plugin_variance(&sample, &feat_obs, &deg_obs, &pgf)?;
                            if plug.degenerate || plug.sigma_hat_sq <= 0.0 {
                                return Ok(usize::from(stat != 0.0));
                            }
                            Ok(usize::from((stat / plug.sigma_hat_sq.sqrt()).abs() > z_crit))
                        })
                        .sum::<Result<usize>>()?;
                    rejected as f64 / reps as f64
                }
                _ => unreachable!(),
            };
            rows.push(PowerRow {
                feature: feature_name.to_string(),
                scenario,
                n,
                power,
                se: if scenario == 1 { 0.0 } else { se_of(power) },
            });
        }
    }
    Ok(rows)
}

fn stationary_draw<R: rand::Rng + ?Sized>(pi: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pi.len() - 1
}


/// Serialize rows in the pinned `power.csv` schema.
pub fn power_csv(rows: &[PowerRow]) -> String {
    let mut out = String::from("feature,scenario,n,power,se\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.feature, r.scenario, r.n, r.power, r.se
        ));
    }
    out
}
