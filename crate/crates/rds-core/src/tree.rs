//! Referral trees indexing the sample, the pairwise-distance distribution,
//! and the probability generating function `G(z) = E(z^D)` where `D` is the
//! distance between two uniformly chosen tree nodes.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default cap on tree size.
pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

/// Threshold below which a second derivative counts as nonconvex.
pub const NONCONVEX_TOL: f64 = -1e-12;

/// Rooted tree indexing the sample. Node 0 is the root and nodes are stored
/// in breadth-first order, so waves are nondecreasing in node index.
#[derive(Debug, Clone)]
pub struct ReferralTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    wave: Vec<u32>,
    artificial_root: bool,
}

impl ReferralTree {
    /// Build from a BFS-ordered parent vector. Callers guarantee
    /// `parent[i] < i` for every non-root node.
    pub(crate) fn from_parents(parent: Vec<Option<usize>>, artificial_root: bool) -> ReferralTree {
        let n = parent.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut wave = vec![0u32; n];
        for i in 1..n {
            let p = parent[i].expect("non-root node has a parent");
            debug_assert!(p < i, "nodes must be in BFS order");
            children[p].push(i);
            wave[i] = wave[p] + 1;
        }
        ReferralTree {
            parent,
            children,
            wave,
            artificial_root,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn wave(&self, node: usize) -> u32 {
        self.wave[node]
    }

    pub fn height(&self) -> u32 {
        self.wave.iter().copied().max().unwrap_or(0)
    }

    /// Offspring count `eta(node)`.
    pub fn offspring(&self, node: usize) -> usize {
        self.children[node].len()
    }

    /// Whether node 0 is an artificial multi-seed root.
    pub fn has_artificial_root(&self) -> bool {
        self.artificial_root
    }

    /// Nodes that carry observations: everything except an artificial root.
    pub fn observed_nodes(&self) -> Vec<usize> {
        let start = usize::from(self.artificial_root);
        (start..self.len()).collect()
    }

    /// `(m, h)` if this is a complete m-tree of height h.
    pub fn m_tree_shape(&self) -> Option<(usize, u32)> {
        let h = self.height();
        let m = self.children[0].len();
        if m == 0 {
            return if self.len() == 1 { Some((1, 0)) } else { None };
        }
        for node in 0..self.len() {
            let expect = if self.wave[node] < h { m } else { 0 };
            if self.children[node].len() != expect {
                return None;
            }
        }
        Some((m, h))
    }

    /// Keep only the first `limit` nodes in breadth-first order.
    pub fn truncate_bfs(&self, limit: usize) -> ReferralTree {
        let limit = limit.min(self.len()).max(1);
        let parent = self.parent[..limit].to_vec();
        ReferralTree::from_parents(parent, self.artificial_root)
    }

    /// Serialize as `node,parent,wave` CSV (parent = -1 for the root).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,parent,wave\n");
        for i in 0..self.len() {
            let p = self.parent[i].map(|p| p as i64).unwrap_or(-1);
            out.push_str(&format!("{i},{p},{}\n", self.wave[i]));
        }
        out
    }

    /// Parse the `node,parent,wave` CSV format.
    pub fn from_csv(text: &str) -> Result<ReferralTree> {
        let mut parent: Vec<Option<usize>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if idx == 0 {
                continue; // header
            }
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected node,parent,wave".into(),
                });
            }
            let node: usize = fields[0].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: "bad node id".into(),
            })?;
            let p: i64 = fields[1].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: "bad parent id".into(),
            })?;
            if node != parent.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "nodes must appear in order 0..n-1".into(),
                });
            }
            parent.push(if p < 0 { None } else { Some(p as usize) });
        }
        if parent.is_empty() || parent[0].is_some() {
            return Err(Error::Construction("tree must have root node 0".into()));
        }
        for (i, p) in parent.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < i => {}
                _ => {
                    return Err(Error::Construction(format!(
                        "node {i} must have a parent with a smaller index"
                    )))
                }
            }
        }
        Ok(ReferralTree::from_parents(parent, false))
    }
}

/// Complete m-ary tree of height `h`.
pub fn m_tree(m: usize, h: u32) -> Result<ReferralTree> {
    m_tree_with_limit(m, h, DEFAULT_NODE_LIMIT)
}

pub fn m_tree_with_limit(m: usize, h: u32, node_limit: usize) -> Result<ReferralTree> {
    if m == 0 {
        return Err(Error::Argument("branching factor must be >= 1".into()));
    }
    let count = m_tree_size(m, h)
        .filter(|&c| c <= node_limit)
        .ok_or_else(|| Error::Capacity(format!("m-tree m={m} h={h} exceeds {node_limit} nodes")))?;
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(count);
    parent.push(None);
    let mut wave_start = 0usize;
    let mut wave_len = 1usize;
    for _ in 0..h {
        for p in wave_start..wave_start + wave_len {
            for _ in 0..m {
                parent.push(Some(p));
            }
        }
        wave_start += wave_len;
        wave_len *= m;
    }
    debug_assert_eq!(parent.len(), count);
    Ok(ReferralTree::from_parents(parent, false))
}

/// `(m^{h+1} - 1) / (m - 1)`, or `h + 1` when `m = 1`. `None` on overflow.
pub fn m_tree_size(m: usize, h: u32) -> Option<usize> {
    if m == 1 {
        return Some(h as usize + 1);
    }
    let mut total: usize = 0;
    let mut wave: usize = 1;
    for _ in 0..=h {
        total = total.checked_add(wave)?;
        wave = wave.checked_mul(m)?;
    }
    Some(total)
}

/// Stopping rule for Galton-Watson growth.
#[derive(Debug, Clone, Copy)]
pub enum GwStop {
    /// Grow exactly `h` waves past the root.
    MaxWave(u32),
    /// Grow whole waves until at least `cap` nodes exist; trees that go
    /// extinct first are discarded and regrown, up to `max_restarts` times.
    NodeCap { cap: usize, max_restarts: usize },
}

/// Default restart budget for extinct trees in node-cap mode.
pub const DEFAULT_GW_RESTARTS: usize = 1000;

/// Galton-Watson tree with i.i.d. offspring counts drawn from
/// `offspring_dist` (probabilities over 0..=K).
pub fn galton_watson<R: Rng + ?Sized>(
    offspring_dist: &[f64],
    stop: GwStop,
    rng: &mut R,
) -> Result<ReferralTree> {
    galton_watson_with_limit(offspring_dist, stop, DEFAULT_NODE_LIMIT, rng)
}

pub fn galton_watson_with_limit<R: Rng + ?Sized>(
    offspring_dist: &[f64],
    stop: GwStop,
    node_limit: usize,
    rng: &mut R,
) -> Result<ReferralTree> {
    let total: f64 = offspring_dist.iter().sum();
    if offspring_dist.is_empty() || (total - 1.0).abs() > 1e-9 || offspring_dist.iter().any(|&p| p < 0.0)
    {
        return Err(Error::Argument("offspring distribution must sum to 1".into()));
    }
    let survival: f64 = offspring_dist.iter().skip(1).sum();
    let (cap, restarts) = match stop {
        GwStop::MaxWave(_) => (None, 0),
        GwStop::NodeCap { cap, max_restarts } => {
            if survival <= 0.0 {
                return Err(Error::Argument(
                    "node-cap growth needs P(eta >= 1) > 0".into(),
                ));
            }
            (Some(cap), max_restarts)
        }
    };

    let mut cum = Vec::with_capacity(offspring_dist.len());
    let mut acc = 0.0;
    for &p in offspring_dist {
        acc += p;
        cum.push(acc);
    }
    let draw = |rng: &mut R| -> usize {
        let u = rng.random::<f64>();
        cum.partition_point(|&c| c <= u).min(cum.len() - 1)
    };

    let mut attempts = 0usize;
    loop {
        let mut parent: Vec<Option<usize>> = vec![None];
        let mut frontier: Vec<usize> = vec![0];
        let mut wave = 0u32;
        let finished = loop {
            match stop {
                GwStop::MaxWave(h) => {
                    if wave >= h {
                        break true;
                    }
                }
                GwStop::NodeCap { cap, .. } => {
                    if parent.len() >= cap {
                        break true;
                    }
                    if frontier.is_empty() {
                        break false; // extinct before reaching the cap
                    }
                }
            }
            if frontier.is_empty() {
                break true; // extinction under max-wave growth is allowed
            }
            let mut next = Vec::new();
            for &node in &frontier {
                let eta = draw(rng);
                for _ in 0..eta {
                    if parent.len() >= node_limit {
                        return Err(Error::Capacity(format!(
                            "tree exceeded node limit {node_limit}"
                        )));
                    }
                    next.push(parent.len());
                    parent.push(Some(node));
                }
            }
            frontier = next;
            wave += 1;
        };
        if finished {
            return Ok(ReferralTree::from_parents(parent, false));
        }
        attempts += 1;
        if attempts > restarts {
            return Err(Error::Extinction(format!(
                "tree went extinct before reaching {} nodes in {attempts} attempts",
                cap.unwrap_or(0)
            )));
        }
    }
}

/// Join subtrees under a new artificial root; seeds become the root's
/// children, so two seeds sit at distance 2.
pub fn attach_artificial_root(seed_subtrees: &[ReferralTree]) -> Result<ReferralTree> {
    if seed_subtrees.is_empty() {
        return Err(Error::Argument("need at least one seed subtree".into()));
    }
    let total: usize = 1 + seed_subtrees.iter().map(|t| t.len()).sum::<usize>();
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(total);
    parent.push(None);
    // interleave subtrees wave by wave to keep BFS order
    let max_h = seed_subtrees.iter().map(|t| t.height()).max().unwrap();
    let mut offsets: Vec<Vec<usize>> = seed_subtrees.iter().map(|t| vec![0; t.len()]).collect();
    for wave in 0..=max_h {
        for (s, t) in seed_subtrees.iter().enumerate() {
            for node in 0..t.len() {
                if t.wave(node) == wave {
                    offsets[s][node] = parent.len();
                    let p = match t.parent(node) {
                        None => 0, // seed attaches to the artificial root
                        Some(p) => offsets[s][p],
                    };
                    parent.push(Some(p));
                }
            }
        }
    }
    debug_assert_eq!(parent.len(), total);
    Ok(ReferralTree::from_parents(parent, true))
}

/// Histogram of ordered-pair tree distances with PGF evaluators.
#[derive(Debug, Clone)]
pub struct DistancePGF {
    n: usize,
    /// `counts[d]` = number of ordered node pairs at distance `d`.
    counts: Vec<u64>,
}

impl DistancePGF {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn max_distance(&self) -> usize {
        self.counts.len() - 1
    }

    /// `G(z)`, `G'(z)`, `G''(z)` by exact polynomial evaluation.
    /// Well conditioned on `|z| <= 1` since all coefficients are nonnegative.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        let norm = (self.n as f64) * (self.n as f64);
        let mut g = 0.0;
        let mut gp = 0.0;
        let mut gpp = 0.0;
        let mut pow2 = 1.0; // z^{d-2}, tracked two steps behind
        let mut pow1 = 1.0; // z^{d-1}
        let mut pow = 1.0; // z^d
        for (d, &cd) in self.counts.iter().enumerate() {
            let c = cd as f64;
            let df = d as f64;
            g += c * pow;
            if d >= 1 {
                gp += df * c * pow1;
            }
            if d >= 2 {
                gpp += df * (df - 1.0) * c * pow2;
                pow2 *= z;
            }
            if d >= 1 {
                pow1 *= z;
            }
            pow *= z;
        }
        (g / norm, gp / norm, gpp / norm)
    }
}

/// Exact ordered-pair distance histogram via one BFS per node. Counts are
/// integers, so parallel accumulation is order-independent.
pub fn distance_pgf(tree: &ReferralTree) -> Result<DistancePGF> {
    distance_pgf_with_limit(tree, DEFAULT_NODE_LIMIT)
}

pub fn distance_pgf_with_limit(tree: &ReferralTree, node_limit: usize) -> Result<DistancePGF> {
    let n = tree.len();
    if n == 0 {
        return Err(Error::Argument("tree is empty".into()));
    }
    if n > node_limit {
        return Err(Error::Capacity(format!(
            "tree has {n} nodes, distance histogram limit is {node_limit}"
        )));
    }
    let max_d = 2 * tree.height() as usize;
    let counts = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; max_d + 1],
            |mut acc, start| {
                // BFS over the tree's undirected adjacency
                let mut dist = vec![u32::MAX; n];
                let mut queue = std::collections::VecDeque::new();
                dist[start] = 0;
                queue.push_back(start);
                while let Some(u) = queue.pop_front() {
                    acc[dist[u] as usize] += 1;
                    let du = dist[u] + 1;
                    if let Some(p) = tree.parent(u) {
                        if dist[p] == u32::MAX {
                            dist[p] = du;
                            queue.push_back(p);
                        }
                    }
                    for &c in tree.children(u) {
                        if dist[c] == u32::MAX {
                            dist[c] = du;
                            queue.push_back(c);
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; max_d + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let mut counts = counts;
    while counts.len() > 1 && *counts.last().unwrap() == 0 {
        counts.pop();
    }
    Ok(DistancePGF { n, counts })
}

/// A grid scan of `G''` on `[lambda_min, 1]` with nonconvex runs reported.
#[derive(Debug, Clone)]
pub struct ConvexityScan {
    /// `(z, G''(z))` at each grid point.
    pub points: Vec<(f64, f64)>,
    /// Closed intervals of contiguous grid points with `G'' < -1e-12`.
    pub nonconvex_intervals: Vec<(f64, f64)>,
}

impl ConvexityScan {
    pub fn is_convex(&self) -> bool {
        self.nonconvex_intervals.is_empty()
    }
}

/// Evaluate `G''` on a grid over `[lambda_min, 1]` (default step 0.01).
pub fn convexity_scan(pgf: &DistancePGF, lambda_min: f64, step: f64) -> Result<ConvexityScan> {
    if !(-1.0..1.0).contains(&lambda_min) {
        return Err(Error::Argument(format!(
            "lambda_min must be in [-1, 1), got {lambda_min}"
        )));
    }
    if step <= 0.0 {
        return Err(Error::Argument("grid step must be positive".into()));
    }
    let mut points = Vec::new();
    let mut z = lambda_min;
    loop {
        let (_, _, gpp) = pgf.eval(z);
        points.push((z, gpp));
        if z >= 1.0 {
            break;
        }
        z = (z + step).min(1.0);
    }
    let mut nonconvex_intervals = Vec::new();
    let mut run_start: Option<f64> = None;
    for &(z, gpp) in &points {
        if gpp < NONCONVEX_TOL {
            run_start.get_or_insert(z);
        } else if let Some(start) = run_start.take() {
            nonconvex_intervals.push((start, z));
        }
    }
    if let Some(start) = run_start {
        nonconvex_intervals.push((start, 1.0));
    }
    Ok(ConvexityScan {
        points,
        nonconvex_intervals,
    })
}
