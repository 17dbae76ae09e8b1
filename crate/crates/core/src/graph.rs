//! Metric graph data model: vertices with conditions, edges with lengths,
//! named graph families, dummy-vertex calculus and edge contraction.
//!
//! Conventions used throughout the crate:
//!
//! - Vertex and edge ids are dense indices into the graph's own storage.
//!   Mutating operations return fresh graphs with renumbered ids plus maps
//!   from old ids where callers need to track vertices across the change.
//! - Every edge has a fixed orientation chosen at construction: coordinate
//!   `x = 0` sits at `from`, `x = length` at `to`. Eigenfunction coefficients
//!   refer to this chart.
//! - Loops (`from == to`) and parallel edges are permitted. Spectral assembly
//!   splits loops at their midpoint with an auto-inserted Kirchhoff dummy, so
//!   the spectrum is unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one edge")]
    Empty,
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    BadLength { edge: usize, length: f64 },
    #[error("delta strength at vertex {vertex} is not finite")]
    BadStrength { vertex: usize },
    #[error("edge {edge} references missing vertex {vertex}")]
    DanglingEdge { edge: usize, vertex: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid family descriptor: {0}")]
    BadFamily(String),
    #[error("split position {x} outside the open interval (0, {length})")]
    SplitOutOfRange { x: f64, length: f64 },
    #[error("edge {0} does not exist")]
    NoSuchEdge(usize),
    #[error("vertex {0} does not exist")]
    NoSuchVertex(usize),
    #[error("edge {0} is a loop; use contract_loop for loops")]
    LoopContraction(usize),
    #[error("edge {0} is not a loop")]
    NotALoop(usize),
    #[error("cannot contract the only edge of the graph")]
    LastEdge,
    #[error("graph deserialization failed: {0}")]
    Parse(String),
}

/// Condition imposed at a vertex. `Delta(0.0)` is the standard Kirchhoff
/// condition (Neumann at degree-1 vertices). Dirichlet is kept as a distinct
/// kind rather than an infinite strength so that condition arithmetic (merge
/// under contraction) never touches infinities: Dirichlet absorbs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexCondition {
    Dirichlet,
    Delta(f64),
}

impl VertexCondition {
    pub fn kirchhoff() -> Self {
        VertexCondition::Delta(0.0)
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, VertexCondition::Dirichlet)
    }

    pub fn is_kirchhoff(&self) -> bool {
        matches!(self, VertexCondition::Delta(a) if *a == 0.0)
    }

    pub fn strength(&self) -> Option<f64> {
        match self {
            VertexCondition::Dirichlet => None,
            VertexCondition::Delta(a) => Some(*a),
        }
    }

    /// Condition of a vertex obtained by identifying two vertices: Dirichlet
    /// absorbs, otherwise strengths add.
    pub fn merge(&self, other: &VertexCondition) -> VertexCondition {
        match (self, other) {
            (VertexCondition::Dirichlet, _) | (_, VertexCondition::Dirichlet) => {
                VertexCondition::Dirichlet
            }
            (VertexCondition::Delta(a), VertexCondition::Delta(b)) => VertexCondition::Delta(a + b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub condition: VertexCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

/// A compact connected metric graph. Immutable after construction; all
/// mutating operations return new values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

/// Derived quantities of a graph: total length, edge/vertex counts, first
/// Betti number, and the numbers of Dirichlet and Neumann (Kirchhoff
/// degree-1) leaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub total_length: f64,
    pub num_edges: usize,
    pub num_vertices: usize,
    pub betti: usize,
    pub dirichlet_leaves: usize,
    pub neumann_leaves: usize,
}

impl MetricGraph {
    pub fn new(
        conditions: Vec<VertexCondition>,
        edges: Vec<(usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let vertices: Vec<Vertex> = conditions
            .into_iter()
            .enumerate()
            .map(|(id, condition)| Vertex { id, condition })
            .collect();
        let edges: Vec<Edge> = edges
            .into_iter()
            .enumerate()
            .map(|(id, (from, to, length))| Edge {
                id,
                from,
                to,
                length,
            })
            .collect();
        let g = MetricGraph { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.edges.is_empty() {
            return Err(GraphError::Empty);
        }
        for v in &self.vertices {
            if let VertexCondition::Delta(a) = v.condition {
                if !a.is_finite() {
                    return Err(GraphError::BadStrength { vertex: v.id });
                }
            }
        }
        for e in &self.edges {
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(GraphError::BadLength {
                    edge: e.id,
                    length: e.length,
                });
            }
            for v in [e.from, e.to] {
                if v >= self.vertices.len() {
                    return Err(GraphError::DanglingEdge { edge: e.id, vertex: v });
                }
            }
        }
        // Connectivity over the union of edge endpoints; every vertex must be
        // reached (isolated vertices are not part of a compact connected graph).
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        for v in 0..n {
            if find(&mut parent, v) != root {
                return Err(GraphError::Disconnected);
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn condition(&self, vertex: usize) -> VertexCondition {
        self.vertices[vertex].condition
    }

    /// Degree of a vertex; a loop counts twice.
    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.from == vertex) as usize + (e.to == vertex) as usize)
            .sum()
    }

    pub fn is_leaf(&self, vertex: usize) -> bool {
        self.degree(vertex) == 1
    }

    pub fn is_tree(&self) -> bool {
        self.num_edges() + 1 == self.num_vertices()
    }

    pub fn has_dirichlet_vertex(&self) -> bool {
        self.vertices.iter().any(|v| v.condition.is_dirichlet())
    }

    pub fn has_nonzero_strength(&self) -> bool {
        self.vertices
            .iter()
            .any(|v| matches!(v.condition, VertexCondition::Delta(a) if a != 0.0))
    }

    /// Returns a graph with one vertex condition replaced.
    pub fn with_condition(&self, vertex: usize, condition: VertexCondition) -> Result<Self, GraphError> {
        if vertex >= self.vertices.len() {
            return Err(GraphError::NoSuchVertex(vertex));
        }
        let mut g = self.clone();
        g.vertices[vertex].condition = condition;
        Ok(g)
    }

    /// Returns a graph with all edge lengths replaced (same topology).
    pub fn with_lengths(&self, lengths: &[f64]) -> Result<Self, GraphError> {
        assert_eq!(lengths.len(), self.edges.len());
        let mut g = self.clone();
        for (e, &l) in g.edges.iter_mut().zip(lengths) {
            e.length = l;
        }
        g.validate()?;
        Ok(g)
    }

    /// Returns a graph with all lengths scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self, GraphError> {
        let lengths: Vec<f64> = self.edges.iter().map(|e| e.length * s).collect();
        self.with_lengths(&lengths)
    }

    /// Structural hash over conditions, incidences and exact length bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in &self.vertices {
            match v.condition {
                VertexCondition::Dirichlet => (0u8).hash(&mut h),
                VertexCondition::Delta(a) => {
                    (1u8).hash(&mut h);
                    a.to_bits().hash(&mut h);
                }
            }
        }
        for e in &self.edges {
            e.from.hash(&mut h);
            e.to.hash(&mut h);
            e.length.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

pub fn graph_stats(g: &MetricGraph) -> GraphStats {
    let m = g.num_edges();
    let n = g.num_vertices();
    let mut dirichlet_leaves = 0;
    let mut neumann_leaves = 0;
    for v in g.vertices() {
        if g.degree(v.id) == 1 {
            match v.condition {
                VertexCondition::Dirichlet => dirichlet_leaves += 1,
                VertexCondition::Delta(a) if a == 0.0 => neumann_leaves += 1,
                _ => {}
            }
        }
    }
    GraphStats {
        total_length: g.total_length(),
        num_edges: m,
        num_vertices: n,
        betti: m + 1 - n,
        dirichlet_leaves,
        neumann_leaves,
    }
}

/// A graph is a Dirichlet tree when it has no cycles, every leaf carries a
/// Dirichlet condition, and every other vertex the standard Kirchhoff one.
pub fn is_dirichlet_tree(g: &MetricGraph) -> bool {
    if !g.is_tree() {
        return false;
    }
    g.vertices().iter().all(|v| {
        if g.degree(v.id) == 1 {
            v.condition.is_dirichlet()
        } else {
            v.condition.is_kirchhoff()
        }
    })
}

/// Inserts a degree-2 Kirchhoff dummy at position `x` in the interior of an
/// edge. Total length, Betti number and leaf counts are unchanged; the
/// spectrum is invariant.
pub fn insert_dummy(g: &MetricGraph, edge: usize, x: f64) -> Result<MetricGraph, GraphError> {
    let e = *g.edges().get(edge).ok_or(GraphError::NoSuchEdge(edge))?;
    if !(x > 0.0 && x < e.length) {
        return Err(GraphError::SplitOutOfRange { x, length: e.length });
    }
    let mut conditions: Vec<VertexCondition> = g.vertices().iter().map(|v| v.condition).collect();
    let dummy = conditions.len();
    conditions.push(VertexCondition::kirchhoff());
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(g.num_edges() + 1);
    for other in g.edges() {
        if other.id == edge {
            edges.push((e.from, dummy, x));
            edges.push((dummy, e.to, e.length - x));
        } else {
            edges.push((other.from, other.to, other.length));
        }
    }
    MetricGraph::new(conditions, edges)
}

/// Merges every degree-2 vertex carrying the plain Kirchhoff condition
/// (strength exactly zero) into a single longer edge. Degree-2 vertices with
/// a nonzero strength or a Dirichlet condition are retained; a vertex whose
/// two edge ends belong to the same edge (a loop) is also retained.
pub fn suppress_dummies(g: &MetricGraph) -> MetricGraph {
    let mut current = g.clone();
    loop {
        let mut target: Option<usize> = None;
        for v in current.vertices() {
            if !v.condition.is_kirchhoff() || current.degree(v.id) != 2 {
                continue;
            }
            let incident: Vec<usize> = current
                .edges()
                .iter()
                .filter(|e| e.from == v.id || e.to == v.id)
                .map(|e| e.id)
                .collect();
            // Two distinct incident edges; a single loop stays.
            if incident.len() == 2 {
                target = Some(v.id);
                break;
            }
        }
        let Some(v) = target else { return current };
        let incident: Vec<Edge> = current
            .edges()
            .iter()
            .filter(|e| e.from == v || e.to == v)
            .cloned()
            .collect();
        let (e1, e2) = (incident[0], incident[1]);
        // Far endpoints, oriented so the merged edge runs a -> b through v.
        let a = if e1.from == v { e1.to } else { e1.from };
        let b = if e2.from == v { e2.to } else { e2.from };
        let merged_len = e1.length + e2.length;

        let mut conditions = Vec::new();
        let mut vmap = vec![usize::MAX; current.num_vertices()];
        for w in current.vertices() {
            if w.id != v {
                vmap[w.id] = conditions.len();
                conditions.push(w.condition);
            }
        }
        let mut edges = Vec::new();
        for e in current.edges() {
            if e.id == e1.id || e.id == e2.id {
                continue;
            }
            edges.push((vmap[e.from], vmap[e.to], e.length));
        }
        edges.push((vmap[a], vmap[b], merged_len));
        current = MetricGraph::new(conditions, edges).expect("suppression keeps the graph valid");
    }
}

/// Result of contracting an edge: the new graph plus maps from old vertex and
/// edge ids to new ones (`None` for the removed items).
#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: MetricGraph,
    pub vertex_map: Vec<Option<usize>>,
    pub edge_map: Vec<Option<usize>>,
}

/// Contracts a non-loop edge: its endpoints are identified, the merged vertex
/// condition is Dirichlet if either endpoint was Dirichlet and otherwise the
/// sum of strengths, and the total length drops by the edge length.
pub fn contract_edge(g: &MetricGraph, edge: usize) -> Result<Contraction, GraphError> {
    let e = *g.edges().get(edge).ok_or(GraphError::NoSuchEdge(edge))?;
    if e.is_loop() {
        return Err(GraphError::LoopContraction(edge));
    }
    if g.num_edges() == 1 {
        return Err(GraphError::LastEdge);
    }
    let keep = e.from.min(e.to);
    let drop = e.from.max(e.to);
    let merged = g.condition(e.from).merge(&g.condition(e.to));

    let mut vertex_map = vec![None; g.num_vertices()];
    let mut conditions = Vec::new();
    for v in g.vertices() {
        if v.id == drop {
            continue;
        }
        let new_id = conditions.len();
        vertex_map[v.id] = Some(new_id);
        conditions.push(if v.id == keep { merged } else { v.condition });
    }
    vertex_map[drop] = vertex_map[keep];

    let mut edge_map = vec![None; g.num_edges()];
    let mut edges = Vec::new();
    for other in g.edges() {
        if other.id == edge {
            continue;
        }
        edge_map[other.id] = Some(edges.len());
        edges.push((
            vertex_map[other.from].unwrap(),
            vertex_map[other.to].unwrap(),
            other.length,
        ));
    }
    let graph = MetricGraph::new(conditions, edges)?;
    Ok(Contraction {
        graph,
        vertex_map,
        edge_map,
    })
}

/// Contracting a loop removes it and decrements the Betti number; the vertex
/// condition is unchanged.
pub fn contract_loop(g: &MetricGraph, edge: usize) -> Result<Contraction, GraphError> {
    let e = *g.edges().get(edge).ok_or(GraphError::NoSuchEdge(edge))?;
    if !e.is_loop() {
        return Err(GraphError::NotALoop(edge));
    }
    if g.num_edges() == 1 {
        return Err(GraphError::LastEdge);
    }
    let conditions: Vec<VertexCondition> = g.vertices().iter().map(|v| v.condition).collect();
    let mut edge_map = vec![None; g.num_edges()];
    let mut edges = Vec::new();
    for other in g.edges() {
        if other.id == edge {
            continue;
        }
        edge_map[other.id] = Some(edges.len());
        edges.push((other.from, other.to, other.length));
    }
    let graph = MetricGraph::new(conditions, edges)?;
    Ok(Contraction {
        graph,
        vertex_map: (0..g.num_vertices()).map(Some).collect(),
        edge_map,
    })
}

/// Discrete graph plus condition vector; a metric graph is recovered by
/// supplying an edge-length vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub conditions: Vec<VertexCondition>,
    pub incidences: Vec<(usize, usize)>,
}

impl Topology {
    pub fn of(g: &MetricGraph) -> Self {
        Topology {
            conditions: g.vertices().iter().map(|v| v.condition).collect(),
            incidences: g.edges().iter().map(|e| (e.from, e.to)).collect(),
        }
    }

    pub fn num_edges(&self) -> usize {
        self.incidences.len()
    }

    pub fn with_lengths(&self, lengths: &[f64]) -> Result<MetricGraph, GraphError> {
        assert_eq!(lengths.len(), self.incidences.len());
        let edges = self
            .incidences
            .iter()
            .zip(lengths)
            .map(|(&(a, b), &l)| (a, b, l))
            .collect();
        MetricGraph::new(self.conditions.clone(), edges)
    }
}

/// Descriptors for the named graph families used across the test suites and
/// the CLI mini-language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FamilySpec {
    /// Single edge with the two given end conditions.
    Interval {
        length: f64,
        left: VertexCondition,
        right: VertexCondition,
    },
    /// `legs` edges of equal length meeting at one center.
    EquilateralStar {
        legs: usize,
        length: f64,
        leaf: VertexCondition,
        center: VertexCondition,
    },
    /// `legs` Dirichlet legs of length `leg_length` plus one tail edge of
    /// length `tail_length` at a Kirchhoff center.
    StarWithTail {
        legs: usize,
        leg_length: f64,
        tail_length: f64,
        tail: VertexCondition,
    },
    /// One long edge with a Dirichlet far end and `short_edges` edges of
    /// length `epsilon` at the other end.
    BigStar {
        tail_length: f64,
        short_edges: usize,
        epsilon: f64,
        tip: VertexCondition,
    },
    /// `loops` loops of equal length at a center, plus a tail edge.
    BalloonBunch {
        loops: usize,
        loop_length: f64,
        tail_length: f64,
        tip: VertexCondition,
    },
    /// Seeded uniform-attachment tree with log-uniform lengths; the edge count
    /// is drawn uniformly from `1..=max_edges`.
    RandomTree {
        seed: u64,
        max_edges: usize,
        length_range: (f64, f64),
        leaf: VertexCondition,
    },
}

pub fn make_family(spec: &FamilySpec) -> Result<MetricGraph, GraphError> {
    let positive = |name: &str, v: f64| -> Result<(), GraphError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(GraphError::BadFamily(format!("{name} must be positive, got {v}")))
        }
    };
    match spec {
        FamilySpec::Interval { length, left, right } => {
            positive("length", *length)?;
            MetricGraph::new(vec![*left, *right], vec![(0, 1, *length)])
        }
        FamilySpec::EquilateralStar {
            legs,
            length,
            leaf,
            center,
        } => {
            if *legs < 1 {
                return Err(GraphError::BadFamily("star needs at least one leg".into()));
            }
            positive("length", *length)?;
            let mut conditions = vec![*center];
            conditions.extend(std::iter::repeat(*leaf).take(*legs));
            let edges = (0..*legs).map(|i| (0, i + 1, *length)).collect();
            MetricGraph::new(conditions, edges)
        }
        FamilySpec::StarWithTail {
            legs,
            leg_length,
            tail_length,
            tail,
        } => {
            if *legs < 1 {
                return Err(GraphError::BadFamily("star needs at least one leg".into()));
            }
            positive("leg_length", *leg_length)?;
            positive("tail_length", *tail_length)?;
            let mut conditions = vec![VertexCondition::kirchhoff()];
            conditions.extend(std::iter::repeat(VertexCondition::Dirichlet).take(*legs));
            conditions.push(*tail);
            let mut edges: Vec<(usize, usize, f64)> =
                (0..*legs).map(|i| (0, i + 1, *leg_length)).collect();
            edges.push((0, legs + 1, *tail_length));
            MetricGraph::new(conditions, edges)
        }
        FamilySpec::BigStar {
            tail_length,
            short_edges,
            epsilon,
            tip,
        } => {
            if *short_edges < 1 {
                return Err(GraphError::BadFamily(
                    "big star needs at least one short edge".into(),
                ));
            }
            positive("tail_length", *tail_length)?;
            positive("epsilon", *epsilon)?;
            let mut conditions = vec![VertexCondition::Dirichlet, VertexCondition::kirchhoff()];
            conditions.extend(std::iter::repeat(*tip).take(*short_edges));
            let mut edges = vec![(0, 1, *tail_length)];
            edges.extend((0..*short_edges).map(|i| (1, i + 2, *epsilon)));
            MetricGraph::new(conditions, edges)
        }
        FamilySpec::BalloonBunch {
            loops,
            loop_length,
            tail_length,
            tip,
        } => {
            if *loops < 1 {
                return Err(GraphError::BadFamily("need at least one loop".into()));
            }
            positive("loop_length", *loop_length)?;
            positive("tail_length", *tail_length)?;
            let conditions = vec![VertexCondition::kirchhoff(), *tip];
            let mut edges: Vec<(usize, usize, f64)> =
                (0..*loops).map(|_| (0, 0, *loop_length)).collect();
            edges.push((0, 1, *tail_length));
            MetricGraph::new(conditions, edges)
        }
        FamilySpec::RandomTree {
            seed,
            max_edges,
            length_range,
            leaf,
        } => {
            if *max_edges < 1 {
                return Err(GraphError::BadFamily("max_edges must be at least 1".into()));
            }
            let (lo, hi) = *length_range;
            positive("length range low", lo)?;
            positive("length range high", hi)?;
            if lo > hi {
                return Err(GraphError::BadFamily("empty length range".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let m = rng.gen_range(1..=*max_edges);
            let draw_len = |rng: &mut ChaCha8Rng| -> f64 {
                let u: f64 = rng.gen_range(lo.ln()..=hi.ln());
                u.exp()
            };
            // Uniform attachment: each new edge hangs off a uniformly chosen
            // existing vertex.
            let mut incidences: Vec<(usize, usize)> = Vec::new();
            let mut lengths = Vec::new();
            let mut n = 1usize;
            for _ in 0..m {
                let anchor = rng.gen_range(0..n);
                incidences.push((anchor, n));
                lengths.push(draw_len(&mut rng));
                n += 1;
            }
            let mut degrees = vec![0usize; n];
            for &(a, b) in &incidences {
                degrees[a] += 1;
                degrees[b] += 1;
            }
            let conditions = degrees
                .iter()
                .map(|&d| if d == 1 { *leaf } else { VertexCondition::kirchhoff() })
                .collect();
            let edges = incidences
                .into_iter()
                .zip(lengths)
                .map(|((a, b), l)| (a, b, l))
                .collect();
            MetricGraph::new(conditions, edges)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(len: f64) -> MetricGraph {
        make_family(&FamilySpec::Interval {
            length: len,
            left: VertexCondition::Dirichlet,
            right: VertexCondition::Dirichlet,
        })
        .unwrap()
    }

    #[test]
    fn interval_stats() {
        let s = graph_stats(&interval(1.0));
        assert_eq!(s.total_length, 1.0);
        assert_eq!(s.num_edges, 1);
        assert_eq!(s.num_vertices, 2);
        assert_eq!(s.betti, 0);
        assert_eq!(s.dirichlet_leaves, 2);
        assert_eq!(s.neumann_leaves, 0);
    }

    #[test]
    fn balloon_bunch_stats() {
        let g = make_family(&FamilySpec::BalloonBunch {
            loops: 3,
            loop_length: 0.1,
            tail_length: 1.0,
            tip: VertexCondition::Dirichlet,
        })
        .unwrap();
        let s = graph_stats(&g);
        assert_eq!(s.betti, 3);
        assert_eq!(s.dirichlet_leaves, 1);
        assert_eq!(s.neumann_leaves, 0);
    }

    #[test]
    fn equilateral_star_stats() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 5,
            length: 1.0,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let s = graph_stats(&g);
        assert_eq!((s.total_length, s.num_edges, s.num_vertices), (5.0, 5, 6));
        assert_eq!((s.betti, s.dirichlet_leaves, s.neumann_leaves), (0, 5, 0));
    }

    #[test]
    fn big_star_matches_descriptor() {
        let g = make_family(&FamilySpec::BigStar {
            tail_length: 1.0,
            short_edges: 7,
            epsilon: 0.05,
            tip: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let s = graph_stats(&g);
        assert_eq!(s.dirichlet_leaves, 1);
        assert_eq!(s.neumann_leaves, 7);
        assert_eq!(s.betti, 0);
    }

    #[test]
    fn dummy_roundtrip_is_identity_up_to_isomorphism() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: 0.9,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let split = insert_dummy(&g, 1, 0.3).unwrap();
        assert_eq!(split.num_edges(), g.num_edges() + 1);
        assert_eq!(split.num_vertices(), g.num_vertices() + 1);
        assert_eq!(graph_stats(&split).betti, 0);
        assert!((split.total_length() - g.total_length()).abs() < 1e-15);

        let back = suppress_dummies(&split);
        assert_eq!(back.num_edges(), g.num_edges());
        let mut a: Vec<f64> = back.edges().iter().map(|e| e.length).collect();
        let mut b: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn split_at_boundary_rejected() {
        let g = interval(1.0);
        assert!(matches!(
            insert_dummy(&g, 0, 0.0),
            Err(GraphError::SplitOutOfRange { .. })
        ));
        assert!(matches!(
            insert_dummy(&g, 0, 1.0),
            Err(GraphError::SplitOutOfRange { .. })
        ));
    }

    #[test]
    fn nonzero_strength_dummy_is_retained() {
        let g = MetricGraph::new(
            vec![
                VertexCondition::Dirichlet,
                VertexCondition::Delta(1.5),
                VertexCondition::Dirichlet,
            ],
            vec![(0, 1, 0.5), (1, 2, 0.5)],
        )
        .unwrap();
        let s = suppress_dummies(&g);
        assert_eq!(s.num_edges(), 2);
    }

    #[test]
    fn dirichlet_midpoint_is_retained() {
        let g = MetricGraph::new(
            vec![
                VertexCondition::Dirichlet,
                VertexCondition::Dirichlet,
                VertexCondition::Dirichlet,
            ],
            vec![(0, 1, 0.5), (1, 2, 0.5)],
        )
        .unwrap();
        assert_eq!(suppress_dummies(&g).num_edges(), 2);
    }

    #[test]
    fn contraction_merges_conditions() {
        // Path with delta strengths 1 and 2 joined by the contracted edge.
        let g = MetricGraph::new(
            vec![
                VertexCondition::Dirichlet,
                VertexCondition::Delta(1.0),
                VertexCondition::Delta(2.0),
                VertexCondition::Dirichlet,
            ],
            vec![(0, 1, 1.0), (1, 2, 0.4), (2, 3, 1.0)],
        )
        .unwrap();
        let c = contract_edge(&g, 1).unwrap();
        assert_eq!(c.graph.num_edges(), 2);
        assert_eq!(c.graph.num_vertices(), 3);
        let merged = c.vertex_map[1].unwrap();
        assert_eq!(c.vertex_map[2].unwrap(), merged);
        assert_eq!(c.graph.condition(merged), VertexCondition::Delta(3.0));
        assert!((c.graph.total_length() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn contraction_dirichlet_absorbs() {
        let g = MetricGraph::new(
            vec![
                VertexCondition::Dirichlet,
                VertexCondition::Delta(2.0),
                VertexCondition::Dirichlet,
            ],
            vec![(0, 1, 1.0), (1, 2, 0.5)],
        )
        .unwrap();
        let c = contract_edge(&g, 1).unwrap();
        let merged = c.vertex_map[1].unwrap();
        assert!(c.graph.condition(merged).is_dirichlet());
    }

    #[test]
    fn contract_path_to_interval() {
        let g = MetricGraph::new(
            vec![
                VertexCondition::Dirichlet,
                VertexCondition::kirchhoff(),
                VertexCondition::Dirichlet,
            ],
            vec![(0, 1, 0.5), (1, 2, 0.5)],
        )
        .unwrap();
        let c = contract_edge(&g, 1).unwrap();
        assert_eq!(c.graph.num_edges(), 1);
        assert!((c.graph.total_length() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn contract_last_edge_fails() {
        let g = interval(1.0);
        assert!(matches!(contract_edge(&g, 0), Err(GraphError::LastEdge)));
    }

    #[test]
    fn contract_loop_decrements_betti() {
        let g = make_family(&FamilySpec::BalloonBunch {
            loops: 2,
            loop_length: 0.3,
            tail_length: 1.0,
            tip: VertexCondition::Dirichlet,
        })
        .unwrap();
        assert!(matches!(
            contract_edge(&g, 0),
            Err(GraphError::LoopContraction(0))
        ));
        let c = contract_loop(&g, 0).unwrap();
        assert_eq!(graph_stats(&c.graph).betti, graph_stats(&g).betti - 1);
        assert_eq!(c.graph.num_vertices(), g.num_vertices());
    }

    #[test]
    fn betti_bookkeeping_under_mutations() {
        let g = make_family(&FamilySpec::BalloonBunch {
            loops: 2,
            loop_length: 0.4,
            tail_length: 1.3,
            tip: VertexCondition::Dirichlet,
        })
        .unwrap();
        for op in [
            insert_dummy(&g, 0, 0.1).unwrap(),
            insert_dummy(&g, 2, 0.7).unwrap(),
            suppress_dummies(&g),
        ] {
            let s = graph_stats(&op);
            assert_eq!(s.betti, s.num_edges + 1 - s.num_vertices);
            assert_eq!(s.betti, 2);
        }
    }

    #[test]
    fn random_tree_is_deterministic_and_valid() {
        let spec = FamilySpec::RandomTree {
            seed: 42,
            max_edges: 8,
            length_range: (0.1, 2.0),
            leaf: VertexCondition::Dirichlet,
        };
        let a = make_family(&spec).unwrap();
        let b = make_family(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.is_tree());
        assert!(is_dirichlet_tree(&a));
        for e in a.edges() {
            assert!(e.length >= 0.1 && e.length <= 2.0);
        }
    }

    #[test]
    fn bad_descriptors_are_rejected() {
        assert!(make_family(&FamilySpec::Interval {
            length: 0.0,
            left: VertexCondition::Dirichlet,
            right: VertexCondition::Dirichlet,
        })
        .is_err());
        assert!(make_family(&FamilySpec::EquilateralStar {
            legs: 0,
            length: 1.0,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .is_err());
        assert!(make_family(&FamilySpec::BigStar {
            tail_length: 1.0,
            short_edges: 3,
            epsilon: -0.01,
            tip: VertexCondition::kirchhoff(),
        })
        .is_err());
    }
}
