//! Q-Q normality study: SBM populations at several mixing rates, four
//! sampling designs (m-tree / Galton-Watson tree, with / without
//! replacement), self-standardized estimator distributions against normal
//! quantiles.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use rand::Rng;
use crate::estimators::{normal_quantile, sample_mean, vh_estimate};
use crate::graph::{sbm_sample, Graph};
use crate::montecarlo::config::ExperimentConfig;
use crate::montecarlo::diagnostics::{
    batched_diagnostics, plotting_quantiles, standardize, NormalityDiagnostics,
};
use crate::rng::derive_rng;
use crate::tree::{galton_watson, m_tree, m_tree_size, GwStop, ReferralTree};
use crate::walk::{tp_walk, tp_walk_without_replacement, RootInit};

/// Referral-tree design of a Q-Q scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeDesign {
    /// Complete 2-tree of height `waves`.
    MTree,
    /// Galton-Watson with offspring uniform on `{1, 2, 3}`, `waves` waves.
    GwUniform,
}

impl TreeDesign {
    pub fn label(self) -> &'static str {
        match self {
            TreeDesign::MTree => "mtree",
            TreeDesign::GwUniform => "gw",
        }
    }
}

/// One row of `qq.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct QqRow {
    pub scenario: String,
    pub lambda2: f64,
    pub tree: &'static str,
    pub replacement: &'static str,
    pub estimator: &'static str,
    pub rep: usize,
    pub standardized: f64,
    pub normal_q: f64,
}

/// Per-scenario, per-estimator diagnostics with batch standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct QqSummary {
    pub scenario: String,
    pub lambda2_target: f64,
    pub lambda2_realized: f64,
    pub tree: &'static str,
    pub replacement: &'static str,
    pub estimator: &'static str,
    pub diagnostics: NormalityDiagnostics,
    /// Batch-based Monte Carlo SEs of the three diagnostics.
    pub diagnostics_se: NormalityDiagnostics,
}

#[derive(Debug, Clone)]
pub struct QqOutput {
    pub rows: Vec<QqRow>,
    pub summaries: Vec<QqSummary>,
}

/// Signed second eigenvalue of the walk kernel by deflated power iteration
/// on the symmetrized operator (cheap enough for thousands of nodes).
pub fn realized_lambda2(g: &Graph, iters: usize) -> f64 {
    let n = g.n();
    let u: Vec<f64> = g.pi().iter().map(|&p| p.sqrt()).collect();
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i * 2654435761 + 12345) % 1000) as f64 / 1000.0 - 0.5)
        .collect();
    let deg = g.degrees();
    let mut w = vec![0.0; n];
    for _ in 0..iters {
        // deflate the top eigenvector, apply S, renormalize
        let dot: f64 = v.iter().zip(&u).map(|(&a, &b)| a * b).sum();
        for i in 0..n {
            v[i] -= dot * u[i];
        }
        for (i, wi) in w.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(j, wt) in g.neighbors(i) {
                acc += wt * v[j] / (deg[i] * deg[j]).sqrt();
            }
            *wi = acc;
        }
        let norm: f64 = w.iter().map(|&x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = w[i] / norm;
        }
    }
    // Rayleigh quotient recovers the sign
    let mut num = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for &(j, wt) in g.neighbors(i) {
            acc += wt * v[j] / (deg[i] * deg[j]).sqrt();
        }
        num += v[i] * acc;
    }
    num
}

/// Standard deviation of the node-level noise added to the block signal.
const FEATURE_NOISE_SD: f64 = 1.0;

/// Run the full Q-Q grid: `lambda2_grid` x {m-tree, GW} x {with, without}.
pub fn run_qq(cfg: &ExperimentConfig) -> Result<QqOutput> {
    cfg.validate()?;
    let tree_size = m_tree_size(2, cfg.waves)
        .ok_or_else(|| Error::Capacity("m-tree size overflow".into()))?;
    if tree_size >= cfg.population {
        return Err(Error::Config(format!(
            "without-replacement design infeasible: tree size {tree_size} >= population {}",
            cfg.population
        )));
    }

    let designs = [
        (TreeDesign::MTree, true),
        (TreeDesign::MTree, false),
        (TreeDesign::GwUniform, true),
        (TreeDesign::GwUniform, false),
    ];
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (li, &lambda2) in cfg.lambda2_grid.iter().enumerate() {
        let (p, r) = cfg.sbm_rates(lambda2);
        let mut graph_rng = derive_rng(cfg.seed, &[1, li as u64, u64::MAX]);
        let (build, blocks) = sbm_sample(cfg.population, p, r, &mut graph_rng)?;
        let g = build.graph;
        // block signal plus fixed independent node-level noise: the trait
        // tracks community without being a deterministic function of it
        let mut y_rng = derive_rng(cfg.seed, &[1, li as u64, u64::MAX - 2]);
        let y: Vec<f64> = blocks
            .iter()
            .map(|&b| {
                let u: f64 = y_rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
                b as f64 + FEATURE_NOISE_SD * normal_quantile(u)
            })
            .collect();
        let realized = realized_lambda2(&g, 300);

        for (di, &(design, with_repl)) in designs.iter().enumerate() {
            let scenario = format!(
                "l{lambda2}_{}_{}",
                design.label(),
                if with_repl { "wr" } else { "wor" }
            );
            // one referral tree per design, shared by every replication:
            // the randomness studied here is the walk on the graph, not the
            // shape of the tree
            // one referral tree per design, shared by every replication: the
            // randomness studied here is the walk on the graph, not the shape
            // of the tree.  The Galton-Watson draw is redrawn until its size
            // is comparable to the m-tree sample, so every design recruits a
            // similar fraction of the population
            let tree: ReferralTree = match design {
                TreeDesign::MTree => m_tree(2, cfg.waves)?,
                TreeDesign::GwUniform => {
                    let mut tree_rng =
                        derive_rng(cfg.seed, &[1, li as u64, di as u64, u64::MAX]);
                    let mut picked = None;
                    for _ in 0..1000 {
                        let t = galton_watson(
                            &[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                            GwStop::MaxWave(cfg.waves),
                            &mut tree_rng,
                        )?;
                        if (tree_size / 2..=tree_size * 2).contains(&t.len()) {
                            picked = Some(t);
                            break;
                        }
                    }
                    picked.ok_or_else(|| {
                        Error::Capacity("no suitably sized tree in 1000 draws".into())
                    })?
                }
            };
            let estimates: Vec<Result<(f64, f64)>> = (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng =
                        derive_rng(cfg.seed, &[1, li as u64, di as u64, rep as u64]);
                    let init = RootInit::Stationary;
                    let sample = if with_repl {
                        tp_walk(&g, &tree, init, &mut rng)?
                    } else {
                        // a cornered chain can collapse recruitment to a
                        // handful of nodes; re-seed such failed chains as a
                        // field study would
                        let mut s = tp_walk_without_replacement(&g, &tree, init, &mut rng)?;
                        for _ in 0..100 {
                            if s.sampled_nodes().len() * 2 >= tree.len() {
                                break;
                            }
                            s = tp_walk_without_replacement(&g, &tree, init, &mut rng)?;
                        }
                        s
                    };
                    let obs = sample.observe_feature(&y)?;
                    let deg = sample.observe_degrees(&g);
                    Ok((sample_mean(&obs)?, vh_estimate(&obs, &deg)?))
                })
                .collect();
            let mut mu_hat = Vec::with_capacity(cfg.replications);
            let mut mu_vh = Vec::with_capacity(cfg.replications);
            for e in estimates {
                let (a, b) = e?;
                mu_hat.push(a);
                mu_vh.push(b);
            }

            for (estimator, values) in [("mu_hat", &mu_hat), ("mu_vh", &mu_vh)] {
                let mut z = standardize(values)?;
                z.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let q = plotting_quantiles(z.len());
                for (rank, (&zi, &qi)) in z.iter().zip(&q).enumerate() {
                    rows.push(QqRow {
                        scenario: scenario.clone(),
                        lambda2,
                        tree: design.label(),
                        replacement: if with_repl { "with" } else { "without" },
                        estimator,
                        rep: rank + 1,
                        standardized: zi,
                        normal_q: qi,
                    });
                }
                // adapt the batch count so each batch keeps enough values
                let batches = (values.len() / 20).clamp(2, 10);
                let (diagnostics, diagnostics_se) = batched_diagnostics(values, batches)?;
                summaries.push(QqSummary {
                    scenario: scenario.clone(),
                    lambda2_target: lambda2,
                    lambda2_realized: realized,
                    tree: design.label(),
                    replacement: if with_repl { "with" } else { "without" },
                    estimator,
                    diagnostics,
                    diagnostics_se,
                });
            }
        }
    }
    Ok(QqOutput { rows, summaries })
}


/// Serialize rows in the pinned `qq.csv` schema.
pub fn qq_csv(rows: &[QqRow]) -> String {
    let mut out = String::from("scenario,lambda2,tree,replacement,estimator,rep,standardized,normal_q\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scenario, r.lambda2, r.tree, r.replacement, r.estimator, r.rep, r.standardized, r.normal_q
        ));
    }
    out
}
