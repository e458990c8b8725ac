//! Synthetic survey population: a degree-heterogeneous random graph (degrees
//! capped at 10) with one degree-uncorrelated binary feature and one
//! degree-proportional feature, standing in for a real referral-survey
//! network that cannot be redistributed.

use rand::Rng;

use crate::error::Result;
use crate::graph::{Graph, GraphBuild};
use crate::rng::derive_rng;

/// Synthetic population: graph plus the two benchmark features.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub graph: Graph,
    /// Binary feature independent of degree.
    pub y_uncorrelated: Vec<f64>,
    /// Feature proportional to degree.
    pub y_degree: Vec<f64>,
    pub dropped_nodes: usize,
}

/// Generate the surrogate population. Target degrees are drawn from a
/// right-skewed law on `1..=10`; edges connect with probability
/// `d_i d_j / sum_k d_k` (expected-degree model), so realized degrees stay
/// near their targets and below the cap.
pub fn surrogate_population(n: usize, seed: u64) -> Result<Surrogate> {
    let mut rng = derive_rng(seed, &[0x5u64, 0]);
    // skewed target degrees: many 1-3s, few up to 10
    let weights = [0.22, 0.22, 0.18, 0.12, 0.08, 0.06, 0.05, 0.04, 0.02, 0.01];
    let mut cum = [0.0; 10];
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        cum[k] = acc;
    }
    let target: Vec<f64> = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            (cum.partition_point(|&c| c <= u).min(9) + 1) as f64
        })
        .collect();
    let total: f64 = target.iter().sum();

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let p = (target[i] * target[j] / total).min(1.0);
            if rng.random::<f64>() < p {
                adj[i].push((j, 1.0));
                adj[j].push((i, 1.0));
            }
        }
    }
    // enforce the degree cap by dropping excess edges deterministically
    enforce_degree_cap(&mut adj, 10);

    let GraphBuild {
        graph,
        dropped_nodes,
    } = Graph::from_weighted_edges(
        n,
        &flatten_edges(&adj),
    )?;

    let mut feat_rng = derive_rng(seed, &[0x5u64, 1]);
    let y_uncorrelated: Vec<f64> = (0..graph.n())
        .map(|_| f64::from(feat_rng.random::<bool>()))
        .collect();
    let y_degree: Vec<f64> = graph.degrees().to_vec();
    Ok(Surrogate {
        graph,
        y_uncorrelated,
        y_degree,
        dropped_nodes,
    })
}

fn enforce_degree_cap(adj: &mut [Vec<(usize, f64)>], cap: usize) {
    let n = adj.len();
    for i in 0..n {
        while adj[i].len() > cap {
            let (j, _) = adj[i].pop().expect("nonempty");
            adj[j].retain(|&(k, _)| k != i);
        }
    }
}

fn flatten_edges(adj: &[Vec<(usize, f64)>]) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for (i, row) in adj.iter().enumerate() {
        for &(j, w) in row {
            if i < j {
                edges.push((i, j, w));
            }
        }
    }
    edges
}
