//! Tree-indexed Markov walk on the population graph: each parent-child edge
//! of the referral tree is an independent transition under the walk kernel.
//! A without-replacement variant mimics field referrals that can only reach
//! friends who have not been sampled yet.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Kernel};
use crate::rng::derive_rng;
use crate::tree::ReferralTree;

/// How the root of the walk is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootInit {
    /// Draw from the stationary distribution (the default).
    Stationary,
    /// Start at a fixed graph node.
    Fixed(usize),
    /// Draw uniformly over nodes.
    Uniform,
}

/// Replacement mode of the referral process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplacementMode {
    WithReplacement,
    WithoutReplacement,
}

/// Anything the walk can transition on.
pub trait TransitionSampler {
    fn num_states(&self) -> usize;
    fn pi(&self) -> &[f64];
    fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize;
}

impl TransitionSampler for Graph {
    fn num_states(&self) -> usize {
        self.n()
    }
    fn pi(&self) -> &[f64] {
        self.pi()
    }
    fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        Graph::step(self, from, rng)
    }
}

impl TransitionSampler for Kernel {
    fn num_states(&self) -> usize {
        self.n()
    }
    fn pi(&self) -> &[f64] {
        self.pi()
    }
    fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        Kernel::step(self, from, rng)
    }
}

/// Provenance of a walk sample.
#[derive(Debug, Clone)]
pub struct WalkMeta {
    pub mode: ReplacementMode,
    pub root_init: RootInit,
    pub seed: Option<u64>,
    /// Nodes pruned in without-replacement mode because no unsampled
    /// neighbor was available.
    pub truncations: usize,
}

/// A realized walk: tree-node -> graph-node assignment plus metadata.
/// An artificial multi-seed root carries no assignment.
#[derive(Debug, Clone)]
pub struct WalkSample {
    tree: ReferralTree,
    assignment: Vec<Option<usize>>,
    meta: WalkMeta,
}

impl WalkSample {
    pub fn tree(&self) -> &ReferralTree {
        &self.tree
    }

    pub fn meta(&self) -> &WalkMeta {
        &self.meta
    }

    /// Graph node at a tree node (`None` only for an artificial root).
    pub fn node(&self, tree_node: usize) -> Option<usize> {
        self.assignment[tree_node]
    }

    /// Number of observed samples.
    pub fn len(&self) -> usize {
        self.tree.len() - usize::from(self.tree.has_artificial_root())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Graph nodes in tree order, skipping an artificial root.
    pub fn sampled_nodes(&self) -> Vec<usize> {
        self.tree
            .observed_nodes()
            .into_iter()
            .map(|t| self.assignment[t].expect("observed node has assignment"))
            .collect()
    }

    /// Observed feature values `y(X_tau)` per observed tree node.
    /// Missing attributes (NaN) are a data error.
    pub fn observe_feature(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.sampled_nodes()
            .into_iter()
            .map(|i| {
                if i >= y.len() {
                    Err(Error::Data(format!("no attribute for sampled node {i}")))
                } else if y[i].is_nan() {
                    Err(Error::Data(format!("missing attribute for sampled node {i}")))
                } else {
                    Ok(y[i])
                }
            })
            .collect()
    }

    /// Observed degrees per observed tree node.
    pub fn observe_degrees(&self, g: &Graph) -> Vec<f64> {
        self.sampled_nodes()
            .into_iter()
            .map(|i| g.degrees()[i])
            .collect()
    }

    /// Parent-child index pairs into the observed-node vectors, excluding
    /// edges incident to an artificial root.
    pub fn parent_child_pairs(&self) -> Vec<(usize, usize)> {
        let offset = usize::from(self.tree.has_artificial_root());
        let mut pairs = Vec::new();
        for node in 1..self.tree.len() {
            let p = self.tree.parent(node).expect("non-root");
            if self.assignment[p].is_some() && self.assignment[node].is_some() {
                pairs.push((p - offset, node - offset));
            }
        }
        pairs
    }

    /// CSV export: `tree_node,graph_node,wave,y,deg`.
    pub fn to_csv(&self, y: &[f64], g: &Graph) -> Result<String> {
        let mut out = String::from("tree_node,graph_node,wave,y,deg\n");
        for t in self.tree.observed_nodes() {
            let i = self.assignment[t].expect("observed");
            if i >= y.len() || y[i].is_nan() {
                return Err(Error::Data(format!("missing attribute for node {i}")));
            }
            out.push_str(&format!(
                "{t},{i},{},{},{}\n",
                self.tree.wave(t),
                y[i],
                g.degrees()[i]
            ));
        }
        Ok(out)
    }
}

fn draw_root<T: TransitionSampler, R: Rng + ?Sized>(
    sampler: &T,
    init: RootInit,
    rng: &mut R,
) -> Result<usize> {
    match init {
        RootInit::Stationary => {
            let u = rng.random::<f64>();
            let mut acc = 0.0;
            let pi = sampler.pi();
            for (i, &p) in pi.iter().enumerate() {
                acc += p;
                if u < acc {
                    return Ok(i);
                }
            }
            Ok(pi.len() - 1)
        }
        RootInit::Fixed(node) => {
            if node >= sampler.num_states() {
                Err(Error::Argument(format!("fixed root {node} out of range")))
            } else {
                Ok(node)
            }
        }
        RootInit::Uniform => Ok(rng.random_range(0..sampler.num_states())),
    }
}

/// With-replacement `(T, P)`-walk: every referral is an independent Markov
/// transition. Works on graphs and on bare kernels.
pub fn tp_walk<T: TransitionSampler, R: Rng + ?Sized>(
    sampler: &T,
    tree: &ReferralTree,
    root_init: RootInit,
    rng: &mut R,
) -> Result<WalkSample> {
    if tree.is_empty() {
        return Err(Error::Argument("tree is empty".into()));
    }
    let n = tree.len();
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    if !tree.has_artificial_root() {
        assignment[0] = Some(draw_root(sampler, root_init, rng)?);
    }
    for node in 1..n {
        let p = tree.parent(node).expect("non-root");
        assignment[node] = Some(match assignment[p] {
            Some(x) => sampler.step(x, rng),
            // children of an artificial root are independent seeds
            None => draw_root(sampler, root_init, rng)?,
        });
    }
    Ok(WalkSample {
        tree: tree.clone(),
        assignment,
        meta: WalkMeta {
            mode: ReplacementMode::WithReplacement,
            root_init,
            seed: None,
            truncations: 0,
        },
    })
}

/// Seeded convenience wrapper around [`tp_walk`].
pub fn tp_walk_seeded<T: TransitionSampler>(
    sampler: &T,
    tree: &ReferralTree,
    root_init: RootInit,
    seed: u64,
) -> Result<WalkSample> {
    let mut rng = derive_rng(seed, &[]);
    let mut sample = tp_walk(sampler, tree, root_init, &mut rng)?;
    sample.meta.seed = Some(seed);
    Ok(sample)
}

/// Without-replacement variant: each referral is drawn uniformly from the
/// parent's neighbors that are not yet in the sample. When a referral is due
/// and no unsampled neighbor exists, that branch of the tree is truncated.
pub fn tp_walk_without_replacement<R: Rng + ?Sized>(
    g: &Graph,
    tree: &ReferralTree,
    root_init: RootInit,
    rng: &mut R,
) -> Result<WalkSample> {
    if tree.is_empty() {
        return Err(Error::Argument("tree is empty".into()));
    }
    if tree.has_artificial_root() {
        return Err(Error::Argument(
            "without-replacement walk expects a single-seed tree".into(),
        ));
    }
    let n = tree.len();
    let root = draw_root(g, root_init, rng)?;
    if g.neighbors(root).is_empty() {
        return Err(Error::Degenerate(format!("root node {root} has no neighbors")));
    }
    let mut sampled = vec![false; g.n()];
    sampled[root] = true;
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    assignment[0] = Some(root);
    let mut alive = vec![false; n];
    alive[0] = true;
    // children are visited in tree-node index order, which fixes the
    // sequential without-replacement draws deterministically per seed
    for node in 1..n {
        let p = tree.parent(node).expect("non-root");
        if !alive[p] {
            continue;
        }
        let parent_node = assignment[p].expect("alive node assigned");
        let candidates: Vec<usize> = g
            .neighbors(parent_node)
            .iter()
            .map(|&(j, _)| j)
            .filter(|&j| !sampled[j])
            .collect();
        if candidates.is_empty() {
            continue; // branch truncated: node and its subtree stay dead
        }
        let pick = candidates[rng.random_range(0..candidates.len())];
        sampled[pick] = true;
        assignment[node] = Some(pick);
        alive[node] = true;
    }

    // compact the surviving nodes into a pruned tree
    let survivors: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let truncations = n - survivors.len();
    let mut new_index = vec![usize::MAX; n];
    for (new, &old) in survivors.iter().enumerate() {
        new_index[old] = new;
    }
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(survivors.len());
    let mut new_assignment = Vec::with_capacity(survivors.len());
    for &old in &survivors {
        parent.push(tree.parent(old).map(|p| new_index[p]));
        new_assignment.push(assignment[old]);
    }
    let pruned = ReferralTree::from_parents(parent, false);
    Ok(WalkSample {
        tree: pruned,
        assignment: new_assignment,
        meta: WalkMeta {
            mode: ReplacementMode::WithoutReplacement,
            root_init,
            seed: None,
            truncations,
        },
    })
}
