//! Population graph, transition kernel, stationary distribution, and the
//! spectral machinery of the reversible walk.
//!
//! The walk kernel on a weighted undirected graph is `P_ij = w_ij / deg(i)`
//! with stationary distribution `pi_i = deg(i) / sum_k deg(k)`. Reversibility
//! lets us diagonalize through the symmetrized operator
//! `S_ij = w_ij / sqrt(deg(i) deg(j))` and rescale eigenvectors into
//! pi-orthonormal eigenfunctions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Default hard cap for the dense eigensolver.
pub const DEFAULT_DENSE_LIMIT: usize = 10_000;

/// Numerical threshold for the `|lambda2| != 1` precondition.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-10;

/// Weighted undirected population graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    /// Sorted adjacency: `adj[i]` holds `(j, w_ij)` with `w_ij > 0`.
    adj: Vec<Vec<(usize, f64)>>,
    /// Cumulative neighbor weights, for exact inverse-cdf transition sampling.
    cum: Vec<Vec<f64>>,
    deg: Vec<f64>,
    pi: Vec<f64>,
    /// Original node ids before largest-component pruning (identity if none).
    node_ids: Vec<usize>,
}

/// Result of graph construction: the retained component plus a count of
/// nodes dropped when the input was disconnected.
#[derive(Debug, Clone)]
pub struct GraphBuild {
    pub graph: Graph,
    pub dropped_nodes: usize,
}

impl Graph {
    /// Build from undirected weighted edges over nodes `0..n`.
    ///
    /// Keeps the largest connected component; `dropped_nodes` reports how many
    /// nodes were discarded. Zero-weight entries are ignored.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<GraphBuild> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Domain(format!(
                    "edge ({i},{j}) references a node >= n={n}"
                )));
            }
            if i == j {
                return Err(Error::Domain(format!("self-loop at node {i}")));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::Domain(format!("negative or non-finite weight on ({i},{j})")));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::Domain(format!("duplicate edge record ({i},{j})")));
            }
            if w > 0.0 {
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
        Self::from_adjacency(adj)
    }

    fn from_adjacency(adj: Vec<Vec<(usize, f64)>>) -> Result<GraphBuild> {
        let n = adj.len();
        if n == 0 {
            return Err(Error::Construction("empty graph".into()));
        }
        let component = largest_component(&adj);
        let kept = component.len();
        if kept == 0 || adj[component[0]].is_empty() {
            return Err(Error::Construction(
                "empty graph after pruning isolated nodes".into(),
            ));
        }
        let dropped = n - kept;

        let mut index_of = vec![usize::MAX; n];
        for (new, &old) in component.iter().enumerate() {
            index_of[old] = new;
        }
        let mut new_adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); kept];
        for (new, &old) in component.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = adj[old]
                .iter()
                .map(|&(j, w)| (index_of[j], w))
                .collect();
            row.sort_by_key(|&(j, _)| j);
            new_adj[new] = row;
        }

        let deg: Vec<f64> = new_adj
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect();
        if deg.iter().any(|&d| d <= 0.0) {
            return Err(Error::Construction("node with zero degree survived pruning".into()));
        }
        let total: f64 = deg.iter().sum();
        let pi: Vec<f64> = deg.iter().map(|&d| d / total).collect();
        let cum = new_adj
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|&(_, w)| {
                        acc += w;
                        acc
                    })
                    .collect()
            })
            .collect();

        Ok(GraphBuild {
            graph: Graph {
                n: kept,
                adj: new_adj,
                cum,
                deg,
                pi,
                node_ids: component,
            },
            dropped_nodes: dropped,
        })
    }

    /// Parse whitespace-separated `i j w` records. Lines starting with `#`
    /// and blank lines are skipped.
    pub fn from_edge_list<'a, I: IntoIterator<Item = &'a str>>(lines: I) -> Result<GraphBuild> {
        let mut edges = Vec::new();
        let mut max_node = 0usize;
        for (idx, raw) in lines.into_iter().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 'i j w', got {} fields", fields.len()),
                });
            }
            let i: usize = fields[0].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad node id '{}'", fields[0]),
            })?;
            let j: usize = fields[1].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad node id '{}'", fields[1]),
            })?;
            let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad weight '{}'", fields[2]),
            })?;
            if w < 0.0 {
                return Err(Error::Domain(format!(
                    "negative weight {w} at line {line_no}"
                )));
            }
            max_node = max_node.max(i).max(j);
            edges.push((i, j, w));
        }
        if edges.is_empty() {
            return Err(Error::Construction("edge list is empty".into()));
        }
        Self::from_weighted_edges(max_node + 1, &edges)
    }

    /// Read an edge-list file from disk.
    pub fn from_edge_list_file(path: &std::path::Path) -> Result<GraphBuild> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list(text.lines())
    }

    /// Exact weighted blockmodel graph: `w_ij = B[z(i)][z(j)]` for `i != j`.
    /// Nodes within a block are structurally equivalent.
    pub fn from_block_weights(spec: &BlockModelSpec) -> Result<(GraphBuild, Vec<usize>)> {
        spec.validate()?;
        let n: usize = spec.block_sizes.iter().sum();
        let mut block = Vec::with_capacity(n);
        for (b, &size) in spec.block_sizes.iter().enumerate() {
            block.extend(std::iter::repeat(b).take(size));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let w = spec.connection[(block[i], block[j])];
                    if w > 0.0 {
                        adj[i].push((j, w));
                    }
                }
            }
        }
        let build = Self::from_adjacency(adj)?;
        let block = build.graph.node_ids.iter().map(|&i| block[i]).collect();
        Ok((build, block))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[f64] {
        &self.deg
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Original node ids of the retained component.
    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.adj[i].binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => self.adj[i][pos].1,
            Err(_) => 0.0,
        }
    }

    /// One transition of the walk from node `i`: exact cumulative-sum
    /// inversion over neighbor weights.
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let cum = &self.cum[i];
        let total = *cum.last().expect("positive degree");
        let u = rng.random::<f64>() * total;
        let pos = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.adj[i][pos].0
    }

    /// Dense row-stochastic transition matrix.
    pub fn kernel(&self) -> Kernel {
        let mut p = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for &(j, w) in &self.adj[i] {
                p[(i, j)] = w / self.deg[i];
            }
        }
        Kernel {
            p,
            pi: self.pi.clone(),
        }
    }

    /// Full dense spectral decomposition of the walk kernel via the
    /// symmetrized operator.
    pub fn spectral_decomposition(&self) -> Result<Spectrum> {
        self.spectral_decomposition_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn spectral_decomposition_with_limit(&self, dense_limit: usize) -> Result<Spectrum> {
        if self.n > dense_limit {
            return Err(Error::Capacity(format!(
                "graph has {} nodes, dense eigensolver limit is {dense_limit}",
                self.n
            )));
        }
        let n = self.n;
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for &(j, w) in &self.adj[i] {
                s[(i, j)] = w / (self.deg[i] * self.deg[j]).sqrt();
            }
        }
        Spectrum::from_symmetrized(s, &self.pi)
    }
}

fn largest_component(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if visited[start] || adj[start].is_empty() {
            continue;
        }
        let mut comp = Vec::new();
        visited[start] = true;
        stack.push(start);
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &(v, _) in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    stack.push(v);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

/// `sum_i y(i) f(i) pi_i`.
pub fn pi_inner(y: &[f64], f: &[f64], pi: &[f64]) -> Result<f64> {
    if y.len() != f.len() || y.len() != pi.len() {
        return Err(Error::Dimension(format!(
            "pi_inner lengths {} / {} / {}",
            y.len(),
            f.len(),
            pi.len()
        )));
    }
    Ok(y.iter()
        .zip(f)
        .zip(pi)
        .map(|((&a, &b), &p)| a * b * p)
        .sum())
}

/// Two-block Stochastic Blockmodel draw with equal blocks: within-block pairs
/// connect with probability `p`, between-block pairs with probability `r`.
/// The largest connected component is retained.
pub fn sbm_sample<R: Rng + ?Sized>(
    n: usize,
    within: f64,
    between: f64,
    rng: &mut R,
) -> Result<(GraphBuild, Vec<usize>)> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Argument(format!("n must be positive and even, got {n}")));
    }
    if !(0.0..=1.0).contains(&within) || !(0.0..=1.0).contains(&between) || between > within {
        return Err(Error::Argument(format!(
            "need 0 <= r <= p <= 1, got p={within}, r={between}"
        )));
    }
    if within + between == 0.0 {
        return Err(Error::Degenerate("p + r = 0 yields an empty graph".into()));
    }
    let half = n / 2;
    let block = |i: usize| usize::from(i >= half);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if block(i) == block(j) { within } else { between };
            if rng.random::<f64>() < prob {
                adj[i].push((j, 1.0));
                adj[j].push((i, 1.0));
            }
        }
    }
    let build = Graph::from_adjacency(adj)?;
    let blocks = build.graph.node_ids.iter().map(|&i| block(i)).collect();
    Ok((build, blocks))
}

/// Dense row-stochastic kernel with a known stationary distribution.
#[derive(Debug, Clone)]
pub struct Kernel {
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

impl Kernel {
    /// Wrap a row-stochastic matrix, computing its stationary distribution by
    /// fixed-point iteration.
    pub fn from_rows(p: DMatrix<f64>) -> Result<Kernel> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(Error::Dimension("kernel must be square and nonempty".into()));
        }
        for i in 0..n {
            let row_sum: f64 = p.row(i).iter().sum();
            if (row_sum - 1.0).abs() > 1e-10 || p.row(i).iter().any(|&x| x < -1e-15) {
                return Err(Error::Domain(format!("row {i} is not a probability vector")));
            }
        }
        let mut pi = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..200_000 {
            let next = p.tr_mul(&pi);
            let diff: f64 = (&next - &pi).abs().sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        let pi: Vec<f64> = pi.iter().copied().collect();
        Self::with_stationary(p, pi)
    }

    /// Wrap a kernel with an externally known stationary distribution.
    pub fn with_stationary(p: DMatrix<f64>, pi: Vec<f64>) -> Result<Kernel> {
        let n = p.nrows();
        if pi.len() != n {
            return Err(Error::Dimension("pi length must match kernel size".into()));
        }
        let k = Kernel { p, pi };
        let resid = k.stationarity_residual();
        if resid > 1e-8 {
            return Err(Error::Domain(format!(
                "pi is not stationary for P (L1 residual {resid:.2e})"
            )));
        }
        Ok(k)
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// `|| pi P - pi ||_1`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.n();
        let mut resid = 0.0;
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += self.pi[i] * self.p[(i, j)];
            }
            resid += (s - self.pi[j]).abs();
        }
        resid
    }

    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let n = self.n();
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.p[(i, j)];
            if u < acc {
                return j;
            }
        }
        n - 1
    }

    /// Spectral decomposition via symmetrization. Requires reversibility.
    pub fn spectral_decomposition(&self) -> Result<Spectrum> {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let fwd = self.pi[i] * self.p[(i, j)];
                let bwd = self.pi[j] * self.p[(j, i)];
                if (fwd - bwd).abs() > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "kernel is not reversible at pair ({i},{j})"
                    )));
                }
            }
        }
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = self.p[(i, j)] * (self.pi[i] / self.pi[j]).sqrt();
            }
        }
        // force exact symmetry against roundoff
        let s = (&s + s.transpose()) * 0.5;
        Spectrum::from_symmetrized(s, &self.pi)
    }
}

/// Eigendecomposition of a reversible kernel: eigenvalues sorted by modulus
/// descending (`lambda_1 = 1` first) with pi-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// `eigenfunctions[l][i]` is `f_{l+1}(i)`.
    eigenfunctions: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

impl Spectrum {
    fn from_symmetrized(s: DMatrix<f64>, pi: &[f64]) -> Result<Spectrum> {
        let n = s.nrows();
        let eig = s.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        // modulus descending, ties broken by signed value descending
        order.sort_by(|&a, &b| {
            let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
            lb.abs()
                .partial_cmp(&la.abs())
                .unwrap()
                .then(lb.partial_cmp(&la).unwrap())
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if (eigenvalues[0] - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "leading eigenvalue {} is not 1",
                eigenvalues[0]
            )));
        }
        let mut eigenfunctions = Vec::with_capacity(n);
        for &k in &order {
            let v = eig.eigenvectors.column(k);
            let mut f: Vec<f64> = (0..n).map(|i| v[i] / pi[i].sqrt()).collect();
            // sign convention: first coordinate of nonnegligible modulus positive
            let lead = f
                .iter()
                .find(|x| x.abs() > 1e-9 / (n as f64).sqrt())
                .copied()
                .unwrap_or(1.0);
            if lead < 0.0 {
                for x in &mut f {
                    *x = -*x;
                }
            }
            eigenfunctions.push(f);
        }
        Ok(Spectrum {
            eigenvalues,
            eigenfunctions,
            pi: pi.to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Signed second-largest-modulus eigenvalue.
    pub fn lambda2(&self) -> f64 {
        if self.eigenvalues.len() > 1 {
            self.eigenvalues[1]
        } else {
            0.0
        }
    }

    /// Smallest signed eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eigenfunction(&self, l: usize) -> &[f64] {
        &self.eigenfunctions[l]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Inner products `<y, f_l>_pi` for every eigenfunction.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.eigenfunctions
            .iter()
            .map(|f| pi_inner(y, f, &self.pi))
            .collect()
    }

    /// `t`-step transition probability reconstructed from the spectrum
    /// (`P^t_ij = pi_j + pi_j sum_{l>=2} lambda_l^t f_l(i) f_l(j)`).
    pub fn transition_probability(&self, i: usize, j: usize, t: u32) -> f64 {
        let mut acc = 1.0;
        for l in 1..self.eigenvalues.len() {
            acc += self.eigenvalues[l].powi(t as i32)
                * self.eigenfunctions[l][i]
                * self.eigenfunctions[l][j];
        }
        self.pi[j] * acc
    }

    /// Return probability `P^t_ii`.
    pub fn return_probability(&self, i: usize, t: u32) -> f64 {
        self.transition_probability(i, i, t)
    }
}

/// Blockmodel description: block sizes and a symmetric connection matrix.
#[derive(Debug, Clone)]
pub struct BlockModelSpec {
    pub block_sizes: Vec<usize>,
    /// Symmetric `K x K` connection weight (or probability) matrix.
    pub connection: DMatrix<f64>,
    /// Optional block-level feature values.
    pub block_features: Option<Vec<f64>>,
}

impl BlockModelSpec {
    pub fn new(block_sizes: Vec<usize>, connection: DMatrix<f64>) -> Self {
        BlockModelSpec {
            block_sizes,
            connection,
            block_features: None,
        }
    }

    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.connection.nrows() != k || self.connection.ncols() != k {
            return Err(Error::Dimension(
                "connection matrix must be K x K with K >= 1".into(),
            ));
        }
        for i in 0..k {
            for j in 0..k {
                let b = self.connection[(i, j)];
                if b < 0.0 || !b.is_finite() {
                    return Err(Error::Domain("connection entries must be nonnegative".into()));
                }
                if (b - self.connection[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Domain("connection matrix must be symmetric".into()));
                }
            }
        }
        if self.block_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Argument("block sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Expected block-level transition kernel `P = E(D)^{-1} E(A)` and its second
/// eigenvalue. For the equal two-block case the eigenvalue is `(p-r)/(p+r)`.
pub fn block_transition(spec: &BlockModelSpec) -> Result<(Kernel, f64)> {
    spec.validate()?;
    let k = spec.k();
    if k < 2 {
        return Err(Error::Argument("need at least two blocks".into()));
    }
    let mut p = DMatrix::zeros(k, k);
    let mut expected_deg = vec![0.0; k];
    for u in 0..k {
        for v in 0..k {
            // a node in block u has block_sizes[v] potential partners in v,
            // minus itself when v == u
            let partners = spec.block_sizes[v] as f64 - if u == v { 1.0 } else { 0.0 };
            expected_deg[u] += spec.connection[(u, v)] * partners;
        }
        if expected_deg[u] <= 0.0 {
            return Err(Error::Degenerate(format!("block {u} has zero expected degree")));
        }
        for v in 0..k {
            let partners = spec.block_sizes[v] as f64 - if u == v { 1.0 } else { 0.0 };
            p[(u, v)] = spec.connection[(u, v)] * partners / expected_deg[u];
        }
    }
    // stationary mass of a block is proportional to total expected degree
    let total: f64 = (0..k)
        .map(|u| spec.block_sizes[u] as f64 * expected_deg[u])
        .sum();
    let pi: Vec<f64> = (0..k)
        .map(|u| spec.block_sizes[u] as f64 * expected_deg[u] / total)
        .collect();
    let kernel = Kernel::with_stationary(p, pi)?;
    let lambda2 = kernel.spectral_decomposition()?.lambda2();
    Ok((kernel, lambda2))
}

/// Result of the exact sup-norm contraction check behind condition (c2').
#[derive(Debug, Clone, Copy)]
pub struct C2PrimeReport {
    /// Exact contraction constant `max_i min_c sum_j |P_ij - c pi_j|`.
    pub gamma: f64,
    /// `gamma < 1/sqrt(2)`.
    pub pass: bool,
    /// The weaker necessary quantity `max_i sum_j |P_ij - pi_j|`.
    pub necessary_value: f64,
}

/// Exact sup-norm contraction constant of `P` over mean-zero functions.
///
/// Row `i` contributes `min_c sum_j |P_ij - c pi_j|`; the piecewise-linear
/// minimum sits at the pi-weighted median of the ratios `P_ij / pi_j`.
pub fn check_c2prime(kernel: &Kernel) -> Result<C2PrimeReport> {
    let resid = kernel.stationarity_residual();
    if resid > 1e-8 {
        return Err(Error::Domain(format!(
            "pi is not stationary for P (L1 residual {resid:.2e})"
        )));
    }
    let n = kernel.n();
    let pi = kernel.pi();
    let p = kernel.matrix();
    let mut gamma = 0.0f64;
    let mut necessary = 0.0f64;
    for i in 0..n {
        let mut ratios: Vec<(f64, f64)> = (0..n).map(|j| (p[(i, j)] / pi[j], pi[j])).collect();
        ratios.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // pi-weighted median of the ratios
        let mut acc = 0.0;
        let mut c = ratios[n - 1].0;
        for &(r, w) in &ratios {
            acc += w;
            if acc >= 0.5 {
                c = r;
                break;
            }
        }
        let row_value: f64 = (0..n).map(|j| (p[(i, j)] - c * pi[j]).abs()).sum();
        gamma = gamma.max(row_value);
        let row_necessary: f64 = (0..n).map(|j| (p[(i, j)] - pi[j]).abs()).sum();
        necessary = necessary.max(row_necessary);
    }
    Ok(C2PrimeReport {
        gamma,
        pass: gamma < std::f64::consts::FRAC_1_SQRT_2,
        necessary_value: necessary,
    })
}

/// Sufficient symmetry condition (c1) at block granularity: the feature level
/// set must be sign-symmetric and the level-to-level kernel must satisfy
/// `p(u, v) = p(-u, -v)`.
pub fn check_c1_sufficient(kernel: &Kernel, y_levels: &[f64]) -> Result<bool> {
    let k = kernel.n();
    if y_levels.len() != k {
        return Err(Error::Dimension(
            "feature levels must match block count".into(),
        ));
    }
    let tol = 1e-12;
    // aggregate block-level transitions onto feature values
    let mut values: Vec<f64> = Vec::new();
    for &v in y_levels {
        if !values.iter().any(|&u| (u - v).abs() <= tol) {
            values.push(v);
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let value_index = |v: f64| -> Option<usize> {
        values.iter().position(|&u| (u - v).abs() <= tol)
    };

    // sign symmetry of the level set
    for &v in &values {
        if value_index(-v).is_none() {
            return Ok(false);
        }
    }

    let m = values.len();
    let p = kernel.matrix();
    // rows with the same feature value must induce the same value-level
    // distribution, else p(u, v) is not well-defined
    let mut level_kernel = vec![vec![f64::NAN; m]; m];
    for b in 0..k {
        let u = value_index(y_levels[b]).expect("level present");
        let mut dist = vec![0.0; m];
        for c in 0..k {
            let v = value_index(y_levels[c]).expect("level present");
            dist[v] += p[(b, c)];
        }
        for v in 0..m {
            if level_kernel[u][v].is_nan() {
                level_kernel[u][v] = dist[v];
            } else if (level_kernel[u][v] - dist[v]).abs() > 1e-10 {
                return Err(Error::Data(
                    "feature is not block-constant: p(u,v) is ill-defined".into(),
                ));
            }
        }
    }

    for u in 0..m {
        let nu = value_index(-values[u]).expect("sign symmetric");
        for v in 0..m {
            let nv = value_index(-values[v]).expect("sign symmetric");
            if (level_kernel[u][v] - level_kernel[nu][nv]).abs() > 1e-10 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;

    fn triangle() -> Graph {
        Graph::from_weighted_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
            .unwrap()
            .graph
    }

    #[test]
    fn triangle_degrees_and_pi() {
        let g = triangle();
        assert_eq!(g.degrees(), &[2.0, 2.0, 2.0]);
        for &p in g.pi() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn path_pi_proportional_to_degree() {
        let g = Graph::from_weighted_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)])
            .unwrap()
            .graph;
        assert_eq!(g.pi(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn disconnected_keeps_largest_component() {
        let build =
            Graph::from_weighted_edges(5, &[(0, 1, 1.0), (2, 3, 1.0), (2, 4, 1.0)]).unwrap();
        assert_eq!(build.graph.n(), 3);
        assert_eq!(build.dropped_nodes, 2);
        assert_eq!(build.graph.node_ids(), &[2, 3, 4]);
    }

    #[test]
    fn edge_list_parsing() {
        let build = Graph::from_edge_list("# comment\n0 1 1\n1 2 1\n0 2 1\n".lines()).unwrap();
        assert_eq!(build.graph.n(), 3);

        let err = Graph::from_edge_list("0 1 1\n1 2\n".lines()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        assert!(Graph::from_edge_list("0 1 -2\n".lines()).is_err());
        assert!(Graph::from_weighted_edges(2, &[(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(Graph::from_weighted_edges(2, &[(0, 0, 1.0)]).is_err());
    }

    #[test]
    fn two_node_spectrum() {
        let g = Graph::from_weighted_edges(2, &[(0, 1, 1.0)]).unwrap().graph;
        let s = g.spectral_decomposition().unwrap();
        assert_abs_diff_eq!(s.eigenvalues()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues()[1], -1.0, epsilon = 1e-12);
        let f2 = s.eigenfunction(1);
        assert_abs_diff_eq!(f2[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f2[1], -1.0, epsilon = 1e-9);
    }

    #[test]
    fn four_cycle_spectrum() {
        let g = Graph::from_weighted_edges(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        )
        .unwrap()
        .graph;
        let s = g.spectral_decomposition().unwrap();
        let mut eig = s.eigenvalues().to_vec();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-1.0, 0.0, 0.0, 1.0];
        for (a, b) in eig.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    fn random_graph(n: usize, seed: u64) -> Graph {
        let mut rng = derive_rng(seed, &[99]);
        loop {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < 0.5 {
                        edges.push((i, j, 0.5 + rng.random::<f64>()));
                    }
                }
            }
            if let Ok(build) = Graph::from_weighted_edges(n, &edges) {
                if build.graph.n() == n {
                    return build.graph;
                }
            }
        }
    }

    #[test]
    fn pi_orthonormality_and_parseval() {
        let g = random_graph(12, 7);
        let s = g.spectral_decomposition().unwrap();
        let n = g.n();
        for a in 0..n {
            for b in 0..n {
                let ip = pi_inner(s.eigenfunction(a), s.eigenfunction(b), g.pi()).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, expect, epsilon = 1e-8);
            }
        }
        // f_1 is the all-ones function
        for &x in s.eigenfunction(0) {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-8);
        }
        // Parseval: sum of squared projections equals the second moment
        let mut rng = derive_rng(3, &[4]);
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let w = s.project(&y).unwrap();
        let second_moment = pi_inner(&y, &y, g.pi()).unwrap();
        let sum_sq: f64 = w.iter().map(|&x| x * x).sum();
        assert_abs_diff_eq!(sum_sq, second_moment, epsilon = 1e-10);
        // centered version: the tail projections carry the variance
        let mean = pi_inner(&y, &vec![1.0; n], g.pi()).unwrap();
        let var = second_moment - mean * mean;
        let tail: f64 = w.iter().skip(1).map(|&x| x * x).sum();
        assert_abs_diff_eq!(tail, var, epsilon = 1e-10);
    }

    #[test]
    fn spectral_reconstruction_of_pt() {
        let g = random_graph(10, 11);
        let s = g.spectral_decomposition().unwrap();
        let kernel = g.kernel();
        let mut pt = kernel.matrix().clone();
        for t in 1..=3u32 {
            for i in 0..g.n() {
                for j in 0..g.n() {
                    assert_abs_diff_eq!(
                        s.transition_probability(i, j, t),
                        pt[(i, j)],
                        epsilon = 1e-8
                    );
                }
            }
            pt = &pt * kernel.matrix();
        }
    }

    #[test]
    fn detailed_balance_and_stationarity() {
        let g = random_graph(9, 23);
        let k = g.kernel();
        assert!(k.stationarity_residual() <= 1e-10);
        for i in 0..g.n() {
            for j in 0..g.n() {
                let fwd = g.pi()[i] * k.matrix()[(i, j)];
                let bwd = g.pi()[j] * k.matrix()[(j, i)];
                assert_abs_diff_eq!(fwd, bwd, epsilon = 1e-12);
            }
        }
    }

    fn two_block_kernel(p: f64) -> Kernel {
        let mat = DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p]);
        Kernel::with_stationary(mat, vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn block_transition_lambda2() {
        // two equal blocks: lambda2 = (p - r) / (p + r) in the large-size limit
        let spec = BlockModelSpec::new(
            vec![1000, 1000],
            DMatrix::from_row_slice(2, 2, &[0.008, 0.002, 0.002, 0.008]),
        );
        let (_, lambda2) = block_transition(&spec).unwrap();
        assert_abs_diff_eq!(lambda2, 0.6, epsilon = 1e-3);

        let spec = BlockModelSpec::new(
            vec![1000, 1000],
            DMatrix::from_row_slice(2, 2, &[0.005, 0.005, 0.005, 0.005]),
        );
        let (_, lambda2) = block_transition(&spec).unwrap();
        assert_abs_diff_eq!(lambda2, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn block_transition_2k_circulant() {
        // 2K blocks with p on the diagonal, (1-p)/(2K-1) off it; K=2, p=0.4
        let k2 = 4;
        let p = 0.4;
        let off = (1.0 - p) / (k2 as f64 - 1.0);
        let mut b = DMatrix::from_element(k2, k2, off);
        for u in 0..k2 {
            b[(u, u)] = p;
        }
        let spec = BlockModelSpec::new(vec![500; k2], b);
        let (_, lambda2) = block_transition(&spec).unwrap();
        assert_abs_diff_eq!(lambda2, 0.2, epsilon = 1e-3);
    }

    #[test]
    fn c2prime_two_block_gamma() {
        for p in [0.55, 0.75, 0.9] {
            let report = check_c2prime(&two_block_kernel(p)).unwrap();
            assert_abs_diff_eq!(report.gamma, (2.0 * p - 1.0).abs(), epsilon = 1e-12);
            assert_eq!(
                report.pass,
                2.0 * p - 1.0 < std::f64::consts::FRAC_1_SQRT_2
            );
        }
    }

    #[test]
    fn c2prime_rank_one_kernel() {
        let pi = vec![0.2, 0.3, 0.5];
        let mut p = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                p[(i, j)] = pi[j];
            }
        }
        let k = Kernel::with_stationary(p, pi).unwrap();
        let report = check_c2prime(&k).unwrap();
        assert!(report.gamma.abs() <= 1e-12);
        assert!(report.pass);
    }

    /// Brute-force LP oracle: maximize `|sum_j P_ij f_j|` over mean-zero
    /// `|f|_inf <= 1` by enumerating vertex solutions (all coordinates at
    /// +-1 except one adjusted to meet the mean constraint).
    fn c2prime_bruteforce(kernel: &Kernel) -> f64 {
        let n = kernel.n();
        let pi = kernel.pi();
        let p = kernel.matrix();
        let mut best = 0.0f64;
        for signs in 0..(1u32 << n) {
            let s: Vec<f64> = (0..n)
                .map(|j| if signs >> j & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            for k in 0..n {
                let partial: f64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| pi[j] * s[j])
                    .sum();
                let fk = -partial / pi[k];
                if fk.abs() > 1.0 + 1e-12 {
                    continue;
                }
                let mut f = s.clone();
                f[k] = fk;
                for i in 0..n {
                    let val: f64 = (0..n).map(|j| p[(i, j)] * f[j]).sum::<f64>().abs();
                    best = best.max(val);
                }
            }
        }
        best
    }

    #[test]
    fn c2prime_matches_bruteforce_lp() {
        for seed in 0..5u64 {
            let g = random_graph(5, 40 + seed);
            let k = g.kernel();
            let report = check_c2prime(&k).unwrap();
            let brute = c2prime_bruteforce(&k);
            assert_abs_diff_eq!(report.gamma, brute, epsilon = 1e-6);
        }
    }

    #[test]
    fn c1_sufficient_symmetry() {
        let k = two_block_kernel(0.7);
        assert!(check_c1_sufficient(&k, &[1.0, -1.0]).unwrap());
        assert!(!check_c1_sufficient(&k, &[1.0, 2.0]).unwrap());

        // 2K blocks with the circulant kernel and paired +-levels
        let k2 = 4;
        let p = 0.4;
        let off = (1.0 - p) / (k2 as f64 - 1.0);
        let mut mat = DMatrix::from_element(k2, k2, off);
        for u in 0..k2 {
            mat[(u, u)] = p;
        }
        let kernel = Kernel::with_stationary(mat, vec![0.25; k2]).unwrap();
        assert!(check_c1_sufficient(&kernel, &[1.0, -1.0, 2.0, -2.0]).unwrap());
    }

    #[test]
    fn sbm_preconditions() {
        let mut rng = derive_rng(1, &[0]);
        assert!(sbm_sample(5, 0.5, 0.1, &mut rng).is_err()); // odd n
        assert!(sbm_sample(4, 0.1, 0.5, &mut rng).is_err()); // r > p
        assert!(sbm_sample(4, 0.0, 0.0, &mut rng).is_err()); // empty
        let (build, blocks) = sbm_sample(40, 0.9, 0.4, &mut rng).unwrap();
        assert_eq!(build.graph.n(), blocks.len());
        assert!(blocks.iter().any(|&b| b == 0) && blocks.iter().any(|&b| b == 1));
    }

    #[test]
    fn sbm_realized_lambda2_near_target() {
        // (p - r)/(p + r) = 0.5 at moderate density
        let mut rng = derive_rng(5, &[1]);
        let (build, _) = sbm_sample(400, 0.12, 0.04, &mut rng).unwrap();
        let s = build.graph.spectral_decomposition().unwrap();
        assert!((s.lambda2() - 0.5).abs() < 0.08, "lambda2 = {}", s.lambda2());
    }

    #[test]
    fn kernel_step_frequencies() {
        let g = triangle();
        let mut rng = derive_rng(2, &[7]);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[g.step(0, &mut rng)] += 1;
        }
        assert_eq!(counts[0], 0);
        let p1 = counts[1] as f64 / 30_000.0;
        assert!((p1 - 0.5).abs() < 0.02);
    }

    #[test]
    fn dense_limit_capacity_error() {
        let g = triangle();
        assert!(matches!(
            g.spectral_decomposition_with_limit(2),
            Err(Error::Capacity(_))
        ));
    }
}
