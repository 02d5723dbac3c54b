//! Explicit constructions of the hierarchical graphs `H(n,k)` and the
//! Sierpiński graphs `S(n,k)`.
//!
//! Both families have `k^n` vertices and `(k^{n+1} - k)/2` edges at every
//! generation. Edge lists are stored canonically: each pair as
//! `(min, max)` and the whole list sorted lexicographically, so identical
//! specs always produce identical graphs.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_VERTEX_BUDGET: usize = 2_000_000;
pub const DEFAULT_DENSE_BUDGET: usize = 3_000;
/// Distinct entries a decimated spectrum may hold; roughly `2^{n+1}`.
pub const DEFAULT_SPECTRUM_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hierarchical,
    Sierpinski,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::Hierarchical, Family::Sierpinski];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Hierarchical => "hierarchical",
            Family::Sierpinski => "sierpinski",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Family::Hierarchical => "hier",
            Family::Sierpinski => "sier",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hier" | "hierarchical" | "h" => Ok(Family::Hierarchical),
            "sier" | "sierpinski" | "s" => Ok(Family::Sierpinski),
            other => Err(Error::InvalidSpec(format!("unknown family '{other}'"))),
        }
    }
}

/// Size limits for explicit constructions, dense linear algebra and
/// compressed spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub vertices: usize,
    pub dense: usize,
    pub spectrum_entries: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            vertices: DEFAULT_VERTEX_BUDGET,
            dense: DEFAULT_DENSE_BUDGET,
            spectrum_entries: DEFAULT_SPECTRUM_BUDGET,
        }
    }
}

impl Budget {
    pub fn check_vertices(&self, requested: u64) -> Result<()> {
        check_budget("vertex", requested, self.vertices)
    }

    pub fn check_dense(&self, requested: u64) -> Result<()> {
        check_budget("dense", requested, self.dense)
    }

    pub fn check_spectrum_entries(&self, requested: u64) -> Result<()> {
        check_budget("spectrum", requested, self.spectrum_entries)
    }
}

fn check_budget(what: &'static str, requested: u64, limit: usize) -> Result<()> {
    if requested > limit as u64 {
        Err(Error::BudgetExceeded { what, requested, limit: limit as u64 })
    } else {
        Ok(())
    }
}

/// Which graph to build: family, generation `n >= 1` and branching `k >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphSpec {
    pub family: Family,
    pub n: u32,
    pub k: u32,
}

impl GraphSpec {
    pub fn new(family: Family, n: u32, k: u32) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidSpec(format!("k must be >= 3, got {k}")));
        }
        if n < 1 {
            return Err(Error::InvalidSpec(format!("n must be >= 1, got {n}")));
        }
        let spec = GraphSpec { family, n, k };
        spec.checked_order().ok_or_else(|| Error::InvalidSpec(format!("k^n overflows for n={n}, k={k}")))?;
        Ok(spec)
    }

    pub fn hierarchical(n: u32, k: u32) -> Result<Self> {
        Self::new(Family::Hierarchical, n, k)
    }

    pub fn sierpinski(n: u32, k: u32) -> Result<Self> {
        Self::new(Family::Sierpinski, n, k)
    }

    fn checked_order(&self) -> Option<u64> {
        let order = (self.k as u64).checked_pow(self.n)?;
        // the edge count needs k^{n+1} as well
        order.checked_mul(self.k as u64)?;
        Some(order)
    }

    /// `N = k^n`.
    pub fn order(&self) -> u64 {
        (self.k as u64).pow(self.n)
    }

    /// `E = (k^{n+1} - k) / 2`.
    pub fn size(&self) -> u64 {
        (self.order() * self.k as u64 - self.k as u64) / 2
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.family {
            Family::Hierarchical => 'H',
            Family::Sierpinski => 'S',
        };
        write!(f, "{tag}({},{})", self.n, self.k)
    }
}

/// Per-vertex label: an n-tuple over `1..=k` for Sierpiński graphs, the
/// construction-order index for hierarchical graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexLabel {
    Index(usize),
    Tuple(Vec<u32>),
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Index(i) => write!(f, "{i}"),
            VertexLabel::Tuple(t) => {
                let sep = if t.iter().any(|&d| d > 9) { "." } else { "" };
                let parts: Vec<String> = t.iter().map(|d| d.to_string()).collect();
                f.write_str(&parts.join(sep))
            }
        }
    }
}

/// An undirected simple graph with a canonical edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    spec: GraphSpec,
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<u32>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, canonicalizing it.
    ///
    /// Rejects self-loops, duplicate edges and out-of-range endpoints. The
    /// spec is carried along as metadata only; nothing checks that the
    /// edges actually realize it (the oracle checks do that).
    pub fn from_edges(spec: GraphSpec, num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> =
            edges.into_iter().map(|(u, v)| if u <= v { (u, v) } else { (v, u) }).collect();
        edges.sort_unstable();
        let mut degrees = vec![0u32; num_vertices];
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u == v {
                return Err(Error::InternalCheck(format!("self-loop at vertex {u}")));
            }
            if v >= num_vertices {
                return Err(Error::InternalCheck(format!("edge ({u},{v}) out of range")));
            }
            if i > 0 && edges[i - 1] == (u, v) {
                return Err(Error::InternalCheck(format!("duplicate edge ({u},{v})")));
            }
            degrees[u] += 1;
            degrees[v] += 1;
        }
        Ok(Graph { spec, num_vertices, edges, degrees })
    }

    pub fn build(spec: GraphSpec, budget: &Budget) -> Result<Self> {
        match spec.family {
            Family::Hierarchical => build_hierarchical(spec, budget),
            Family::Sierpinski => build_sierpinski(spec, budget),
        }
    }

    pub fn spec(&self) -> GraphSpec {
        self.spec
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn label(&self, v: usize) -> VertexLabel {
        match self.spec.family {
            Family::Hierarchical => VertexLabel::Index(v),
            Family::Sierpinski => {
                VertexLabel::Tuple(sierpinski_digits(v, self.spec.n, self.spec.k).into_iter().map(|d| d + 1).collect())
            }
        }
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = self.degrees.iter().map(|&d| Vec::with_capacity(d as usize)).collect();
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.num_vertices == 0 {
            return true;
        }
        let adj = self.adjacency_lists();
        bfs_distances(&adj, 0).iter().all(|d| d.is_some())
    }

    /// `out = L x` with `L = D - A`, without forming the matrix.
    pub fn apply_laplacian(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.num_vertices);
        debug_assert_eq!(out.len(), self.num_vertices);
        for (o, (&d, &xi)) in out.iter_mut().zip(self.degrees.iter().zip(x)) {
            *o = d as f64 * xi;
        }
        for &(u, v) in &self.edges {
            out[u] -= x[v];
            out[v] -= x[u];
        }
    }
}

/// Digits `u_1 .. u_n` (0-based, most significant first) of vertex `v` of `S(n,k)`.
pub fn sierpinski_digits(mut v: usize, n: u32, k: u32) -> Vec<u32> {
    let mut digits = vec![0u32; n as usize];
    for slot in digits.iter_mut().rev() {
        *slot = (v % k as usize) as u32;
        v /= k as usize;
    }
    digits
}

pub fn sierpinski_index(digits: &[u32], k: u32) -> usize {
    digits.iter().fold(0usize, |acc, &d| acc * k as usize + d as usize)
}

fn check_spec(spec: GraphSpec, family: Family, budget: &Budget) -> Result<()> {
    if spec.family != family {
        return Err(Error::InvalidSpec(format!("expected a {family} spec, got {}", spec.family)));
    }
    let validated = GraphSpec::new(spec.family, spec.n, spec.k)?;
    budget.check_vertices(validated.order())
}

/// `H(n,k)` by vertex expansion: start from `K_k`; every generation gives
/// each existing vertex `k-1` new children that form a clique and are all
/// joined to their mother. Vertices `0..k` are the generation-1 hubs.
pub fn build_hierarchical(spec: GraphSpec, budget: &Budget) -> Result<Graph> {
    check_spec(spec, Family::Hierarchical, budget)?;
    let k = spec.k as usize;
    let order = spec.order() as usize;
    let mut edges = Vec::with_capacity(spec.size() as usize);

    for u in 0..k {
        for v in u + 1..k {
            edges.push((u, v));
        }
    }
    let mut count = k;
    for _ in 2..=spec.n {
        let existing = count;
        for mother in 0..existing {
            let first = count;
            count += k - 1;
            for child in first..count {
                edges.push((mother, child));
                for other in child + 1..count {
                    edges.push((child, other));
                }
            }
        }
    }
    debug_assert_eq!(count, order);
    Graph::from_edges(spec, order, edges)
}

/// `S(n,k)` on the n-tuples over `{1..k}`.
///
/// Vertices `p` and `q` are adjacent iff for some `h` they agree before
/// position `h`, differ at `h`, and from `h+1` on `p` is constantly `q_h`
/// while `q` is constantly `p_h`. The edges are enumerated directly from
/// that shape: `prefix·a·b…b` ~ `prefix·b·a…a`.
pub fn build_sierpinski(spec: GraphSpec, budget: &Budget) -> Result<Graph> {
    check_spec(spec, Family::Sierpinski, budget)?;
    let n = spec.n as usize;
    let k = spec.k as usize;
    let order = spec.order() as usize;
    let mut edges = Vec::with_capacity(spec.size() as usize);

    // h is 1-based; the prefix has h-1 digits and the tail n-h digits
    let mut tail_repunit = vec![0usize; n + 1];
    for len in 1..=n {
        tail_repunit[len] = tail_repunit[len - 1] * k + 1;
    }
    for h in 1..=n {
        let tail_len = n - h;
        let tail_weight = k.pow(tail_len as u32);
        let prefix_count = k.pow((h - 1) as u32);
        for prefix in 0..prefix_count {
            let base = prefix * k * tail_weight;
            for a in 0..k {
                for b in a + 1..k {
                    let p = base + a * tail_weight + b * tail_repunit[tail_len];
                    let q = base + b * tail_weight + a * tail_repunit[tail_len];
                    edges.push((p, q));
                }
            }
        }
    }
    Graph::from_edges(spec, order, edges)
}

pub fn degree_histogram(g: &Graph) -> BTreeMap<u32, usize> {
    let mut hist = BTreeMap::new();
    for &d in g.degrees() {
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}

fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact diameter by BFS from every vertex; `O(N·E)`, so it is guarded by
/// the dense budget.
pub fn bfs_diameter(g: &Graph, budget: &Budget) -> Result<u32> {
    budget.check_dense(g.num_vertices() as u64)?;
    let adj = g.adjacency_lists();
    let mut diameter = 0;
    for s in 0..g.num_vertices() {
        for d in bfs_distances(&adj, s) {
            match d {
                Some(d) => diameter = diameter.max(d),
                None => return Err(Error::InternalCheck(format!("graph {} is disconnected", g.spec()))),
            }
        }
    }
    Ok(diameter)
}

pub fn laplacian_dense(g: &Graph, budget: &Budget) -> Result<DMatrix<f64>> {
    let n = g.num_vertices();
    budget.check_dense(n as u64)?;
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for (i, &d) in g.degrees().iter().enumerate() {
        lap[(i, i)] = d as f64;
    }
    for &(u, v) in g.edges() {
        lap[(u, v)] = -1.0;
        lap[(v, u)] = -1.0;
    }
    Ok(lap)
}
