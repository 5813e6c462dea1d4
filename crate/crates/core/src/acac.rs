//! Clean-component graphs: succinct neighbor/mark oracles, the constraint
//! graph of a SetCSP instance, and explicit adjacency-list graphs.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::setcsp::SetCspInstance;

/// Largest bit-width we enumerate when materialising a succinct graph.
pub const MAX_MATERIALIZE_BITS: usize = 24;

/// A graph on vertex ids `0..vertex_count()`, given by a neighbor oracle and
/// a mark oracle.
pub trait AcacGraph: Send + Sync {
    fn vertex_count(&self) -> u64;

    /// Neighbors of `v`, sorted and without duplicates.
    fn neighbors(&self, v: u64) -> Vec<u64>;

    fn is_marked(&self, v: u64) -> bool;
}

/// The graph `G_C`: strings are adjacent when they are `C`-neighbors for
/// some constraint, and bad strings are marked.
#[derive(Clone, Debug)]
pub struct ConstraintGraph {
    inst: SetCspInstance,
}

impl ConstraintGraph {
    pub fn new(inst: SetCspInstance) -> Self {
        Self { inst }
    }

    pub fn instance(&self) -> &SetCspInstance {
        &self.inst
    }

    fn string(&self, v: u64) -> BitString {
        BitString::from_value(v, self.inst.n()).expect("vertex id in range")
    }
}

impl AcacGraph for ConstraintGraph {
    fn vertex_count(&self) -> u64 {
        1u64 << self.inst.n()
    }

    fn neighbors(&self, v: u64) -> Vec<u64> {
        self.inst
            .neighbors_unchecked(&self.string(v))
            .iter()
            .map(BitString::value)
            .collect()
    }

    fn is_marked(&self, v: u64) -> bool {
        let x = self.string(v);
        self.inst.constraints().iter().any(|c| c.bad_unchecked(&x))
    }
}

/// An ACAC instance: a graph oracle with its recorded degree bound and
/// optional promise parameter.
#[derive(Clone)]
pub struct AcacInstance {
    graph: Arc<dyn AcacGraph>,
    bits: usize,
    degree_bound: usize,
    epsilon: Option<Rational>,
}

impl std::fmt::Debug for AcacInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AcacInstance")
            .field("bits", &self.bits)
            .field("degree_bound", &self.degree_bound)
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

impl AcacInstance {
    pub fn new(
        graph: Arc<dyn AcacGraph>,
        bits: usize,
        degree_bound: usize,
        epsilon: Option<Rational>,
    ) -> Self {
        Self {
            graph,
            bits,
            degree_bound,
            epsilon,
        }
    }

    /// Wraps an explicit graph; the degree bound is its maximum degree.
    pub fn from_explicit(g: ExplicitGraph, epsilon: Option<Rational>) -> Self {
        let d = g.max_degree();
        let bits = g.bits();
        Self::new(Arc::new(g), bits, d, epsilon)
    }

    pub fn graph(&self) -> &dyn AcacGraph {
        self.graph.as_ref()
    }

    /// Width of a vertex label.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn epsilon(&self) -> Option<Rational> {
        self.epsilon
    }

    pub fn neighbors(&self, v: u64) -> Result<Vec<u64>> {
        self.check_vertex(v)?;
        let nb = self.graph.neighbors(v);
        if nb.len() > self.degree_bound {
            return Err(Error::Integrity(format!(
                "vertex {v} has {} neighbors, above the declared bound {}",
                nb.len(),
                self.degree_bound
            )));
        }
        if let Some(&bad) = nb.iter().find(|&&u| u >= self.graph.vertex_count()) {
            return Err(Error::Integrity(format!(
                "neighbor {bad} of {v} is out of range"
            )));
        }
        Ok(nb)
    }

    pub fn is_marked(&self, v: u64) -> Result<bool> {
        self.check_vertex(v)?;
        Ok(self.graph.is_marked(v))
    }

    fn check_vertex(&self, v: u64) -> Result<()> {
        if v >= self.graph.vertex_count() {
            return Err(Error::validation(format!("vertex {v} out of range")));
        }
        Ok(())
    }
}

/// Builds `G_C` from a SetCSP instance.
///
/// The degree bound is `sum over constraints of (largest group size - 1)`,
/// and a promise `eps` on the input becomes `eps / 2` on the output.
pub fn reduce(inst: &SetCspInstance) -> AcacInstance {
    let d = inst
        .constraints()
        .iter()
        .map(|c| c.max_group_size().saturating_sub(1))
        .sum();
    let epsilon = inst.epsilon().map(|e| e / 2);
    let bits = inst.n();
    AcacInstance::new(
        Arc::new(ConstraintGraph::new(inst.clone())),
        bits,
        d,
        epsilon,
    )
}

/// A simple undirected graph with optional positive edge weights and marks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitGraph {
    adjacency: Vec<Vec<u32>>,
    /// Parallel to `adjacency`; `None` means unit weights.
    weights: Option<Vec<Vec<Rational>>>,
    marked: Vec<bool>,
}

impl ExplicitGraph {
    /// Builds from an undirected edge list. Rejects self-loops, repeated
    /// edges and out-of-range endpoints.
    pub fn new(vertex_count: usize, edges: &[(u32, u32)], marked: &[u32]) -> Result<Self> {
        if vertex_count == 0 || vertex_count > u32::MAX as usize {
            return Err(Error::validation(format!(
                "vertex count {vertex_count} out of range"
            )));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u as usize >= vertex_count || v as usize >= vertex_count {
                return Err(Error::validation(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::validation(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::validation(format!("repeated edge ({u},{v})")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut flags = vec![false; vertex_count];
        for &m in marked {
            let slot = flags
                .get_mut(m as usize)
                .ok_or_else(|| Error::validation(format!("marked vertex {m} out of range")))?;
            *slot = true;
        }
        Ok(Self {
            adjacency,
            weights: None,
            marked: flags,
        })
    }

    /// Attaches positive weights, given in the same order as `edges`.
    pub fn with_weights(mut self, edges: &[(u32, u32)], weights: &[Rational]) -> Result<Self> {
        if edges.len() != weights.len() || edges.len() != self.edge_count() {
            return Err(Error::validation("one weight per edge is required"));
        }
        let mut table: Vec<Vec<Rational>> = self
            .adjacency
            .iter()
            .map(|l| vec![Rational::from_integer(0); l.len()])
            .collect();
        for (&(u, v), &w) in edges.iter().zip(weights) {
            if *w.numer() == 0 {
                return Err(Error::validation(format!("edge ({u},{v}) has zero weight")));
            }
            for (a, b) in [(u, v), (v, u)] {
                let pos = self.adjacency[a as usize].binary_search(&b).map_err(|_| {
                    Error::validation(format!("weighted edge ({u},{v}) not in graph"))
                })?;
                table[a as usize][pos] = w;
            }
        }
        self.weights = Some(table);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Bits needed to label every vertex (at least 1).
    pub fn bits(&self) -> usize {
        let n = self.vertex_count();
        (usize::BITS - (n - 1).leading_zeros()).max(1) as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn adjacency(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_marked(&self, v: usize) -> bool {
        self.marked[v]
    }

    pub fn marked(&self) -> Vec<u32> {
        (0..self.vertex_count() as u32)
            .filter(|&v| self.marked[v as usize])
            .collect()
    }

    pub fn set_marked(&mut self, v: usize, flag: bool) {
        self.marked[v] = flag;
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Weight of the `i`-th entry of `v`'s adjacency list.
    pub fn weight_at(&self, v: usize, i: usize) -> Rational {
        match &self.weights {
            Some(w) => w[v][i],
            None => Rational::from_integer(1),
        }
    }

    /// Cut edges `{u, v}` with `u` in `set` and `v` outside, as `(u, v)`.
    pub fn boundary(&self, set: &[u32]) -> Result<Vec<(u32, u32)>> {
        let inside = self.membership(set)?;
        let mut out = Vec::new();
        for &u in set {
            for &v in &self.adjacency[u as usize] {
                if !inside[v as usize] {
                    out.push((u, v));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub(crate) fn membership(&self, set: &[u32]) -> Result<Vec<bool>> {
        let mut inside = vec![false; self.vertex_count()];
        for &u in set {
            *inside
                .get_mut(u as usize)
                .ok_or_else(|| Error::validation(format!("vertex {u} out of range")))? = true;
        }
        Ok(inside)
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut comps = Vec::new();
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            let id = comps.len();
            label[root] = id;
            let mut stack = vec![root as u32];
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for &v in &self.adjacency[u as usize] {
                    if label[v as usize] == usize::MAX {
                        label[v as usize] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    pub fn component_of(&self, v: u32) -> Vec<u32> {
        self.components()
            .into_iter()
            .find(|c| c.binary_search(&v).is_ok())
            .expect("every vertex lies in a component")
    }

    /// The `q`-dimensional hypercube on `q`-bit labels.
    pub fn hypercube(q: usize) -> Result<Self> {
        if q == 0 || q > 20 {
            return Err(Error::scope(format!("hypercube dimension {q}")));
        }
        let mut edges = Vec::new();
        for v in 0..1u32 << q {
            for b in 0..q {
                let u = v ^ (1 << b);
                if v < u {
                    edges.push((v, u));
                }
            }
        }
        Self::new(1 << q, &edges, &[])
    }

    /// Vertex 0 joined to `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves as u32).map(|l| (0, l)).collect();
        Self::new(leaves + 1, &edges, &[])
    }

    pub fn path(vertices: usize) -> Result<Self> {
        let edges: Vec<_> = (1..vertices as u32).map(|v| (v - 1, v)).collect();
        Self::new(vertices, &edges, &[])
    }

    pub fn cycle(vertices: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..vertices as u32).map(|v| (v - 1, v)).collect();
        if vertices > 2 {
            edges.push((0, vertices as u32 - 1));
        }
        Self::new(vertices, &edges, &[])
    }

    pub fn complete(vertices: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..vertices as u32 {
            for v in u + 1..vertices as u32 {
                edges.push((u, v));
            }
        }
        Self::new(vertices, &edges, &[])
    }

    /// Erdős–Rényi `G(n, p)` with a spanning path added so the result is
    /// connected.
    pub fn random_connected<R: Rng>(vertices: usize, p: f64, rng: &mut R) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..vertices as u32 {
            for v in u + 1..vertices as u32 {
                if v == u + 1 || rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self::new(vertices, &edges, &[])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("graph JSON: {e}")))?;
        Ok(file.into_graph()?.0)
    }

    pub fn to_json(&self) -> String {
        GraphFile::from_graph(self, None, None).to_json()
    }
}

impl AcacGraph for ExplicitGraph {
    fn vertex_count(&self) -> u64 {
        self.adjacency.len() as u64
    }

    fn neighbors(&self, v: u64) -> Vec<u64> {
        self.adjacency[v as usize]
            .iter()
            .map(|&u| u as u64)
            .collect()
    }

    fn is_marked(&self, v: u64) -> bool {
        self.marked[v as usize]
    }
}

/// Enumerates every vertex of a succinct instance and checks symmetry.
pub fn materialize(acac: &AcacInstance) -> Result<ExplicitGraph> {
    if acac.bits() > MAX_MATERIALIZE_BITS {
        return Err(Error::scope(format!(
            "materialising {} bits exceeds {MAX_MATERIALIZE_BITS}",
            acac.bits()
        )));
    }
    let count = acac.graph().vertex_count();
    let lists: Vec<(Vec<u64>, bool)> = (0..count)
        .into_par_iter()
        .map(|v| Ok((acac.neighbors(v)?, acac.graph().is_marked(v))))
        .collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for (v, (nb, _)) in lists.iter().enumerate() {
        for &u in nb {
            if u == v as u64 {
                return Err(Error::Integrity(format!("vertex {v} lists itself")));
            }
            if lists[u as usize].0.binary_search(&(v as u64)).is_err() {
                return Err(Error::Integrity(format!(
                    "asymmetric neighbor oracle: {v} lists {u} but not vice versa"
                )));
            }
            if (v as u64) < u {
                edges.push((v as u32, u as u32));
            }
        }
    }
    let marked: Vec<u32> = lists
        .iter()
        .enumerate()
        .filter(|(_, (_, m))| *m)
        .map(|(v, _)| v as u32)
        .collect();
    ExplicitGraph::new(count as usize, &edges, &marked)
}

/// JSON interchange for explicit graphs:
/// `{"n": bits, "edges": [[u,v],...], "marked": [...]}` plus optional
/// `vertices` (when not `2^n`), `weights`, `epsilon` and `degree_bound`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    pub edges: Vec<[u32; 2]>,
    pub marked: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<String>>,
    #[serde(
        default,
        with = "rational::serde_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub epsilon: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_bound: Option<usize>,
}

impl GraphFile {
    pub fn from_graph(
        g: &ExplicitGraph,
        epsilon: Option<Rational>,
        degree_bound: Option<usize>,
    ) -> Self {
        let n = g.bits();
        let vertices = (g.vertex_count() != 1usize << n).then_some(g.vertex_count());
        let edges = g.edges();
        let weights = g.is_weighted().then(|| {
            edges
                .iter()
                .map(|&(u, v)| {
                    let i = g.adjacency(u as usize).binary_search(&v).expect("edge");
                    rational::format(&g.weight_at(u as usize, i))
                })
                .collect()
        });
        Self {
            n,
            vertices,
            edges: edges.iter().map(|&(u, v)| [u, v]).collect(),
            marked: g.marked(),
            weights,
            epsilon,
            degree_bound,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("graph JSON: {e}")))
    }

    /// The graph plus the optional epsilon stamp.
    pub fn into_graph(self) -> Result<(ExplicitGraph, Option<Rational>)> {
        if self.n > MAX_MATERIALIZE_BITS {
            return Err(Error::scope(format!("graph with n = {}", self.n)));
        }
        let count = self.vertices.unwrap_or(1usize << self.n);
        let edges: Vec<(u32, u32)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = ExplicitGraph::new(count, &edges, &self.marked)?;
        if let Some(ws) = &self.weights {
            let ws = ws
                .iter()
                .map(|w| rational::parse(w))
                .collect::<Result<Vec<_>>>()?;
            g = g.with_weights(&edges, &ws)?;
        }
        Ok((g, self.epsilon))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}
