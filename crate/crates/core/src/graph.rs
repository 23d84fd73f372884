//! Combinatorial graphs, metric graphs with possibly unbounded ends, and
//! points of their geometric representation.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, is_integer, lcm_denominators, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Finite connected multigraph; loops and parallel edges allowed.
#[derive(Clone, Debug)]
pub struct Graph {
    vertices: Vec<String>,
    vertex_index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, usize>,
    incidence: Vec<Vec<usize>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph from vertex names and `(edge id, from, to)` triples.
    pub fn new<S: AsRef<str>>(vertices: &[S], edges: &[(S, S, S)]) -> Result<Self> {
        let names: Vec<String> = vertices.iter().map(|v| v.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::DuplicateId(n.clone()));
            }
        }
        let mut indexed = Vec::with_capacity(edges.len());
        for (id, a, b) in edges {
            let lookup = |s: &S| {
                index
                    .get(s.as_ref())
                    .copied()
                    .ok_or_else(|| Error::UnknownVertex(s.as_ref().to_string()))
            };
            indexed.push(Edge {
                id: id.as_ref().to_string(),
                from: lookup(a)?,
                to: lookup(b)?,
            });
        }
        Self::from_indexed(names, indexed)
    }

    pub fn from_indexed(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, n) in vertices.iter().enumerate() {
            if vertex_index.insert(n.clone(), i).is_some() {
                return Err(Error::DuplicateId(n.clone()));
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= vertices.len() {
                return Err(Error::UnknownVertex(e.from.to_string()));
            }
            if e.to >= vertices.len() {
                return Err(Error::UnknownVertex(e.to.to_string()));
            }
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(e.id.clone()));
            }
            incidence[e.from].push(i);
            if !e.is_loop() {
                incidence[e.to].push(i);
            }
        }
        let g = Graph {
            vertices,
            vertex_index,
            edges,
            edge_index,
            incidence,
        };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &e in &self.incidence[v] {
                let w = self.other_end(e, v);
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex(&self, name: &str) -> Result<usize> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_by_id(&self, id: &str) -> Result<usize> {
        self.edge_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    /// Edges incident to `v`; a loop is listed once.
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    /// The endpoint of `e` opposite to `v` (for a loop, `v` itself).
    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let edge = &self.edges[e];
        if edge.from == v {
            edge.to
        } else {
            edge.from
        }
    }

    /// Number of edge-ends at `v`; loops count twice.
    pub fn valence(&self, v: usize) -> usize {
        self.incidence[v]
            .iter()
            .map(|&e| if self.edges[e].is_loop() { 2 } else { 1 })
            .sum()
    }

    pub fn valence_of(&self, name: &str) -> Result<usize> {
        Ok(self.valence(self.vertex(name)?))
    }

    pub fn max_valence(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.valence(v)).max().unwrap_or(0)
    }

    /// First Betti number |E| - |V| + 1.
    pub fn genus(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn is_loopless(&self) -> bool {
        self.edges.iter().all(|e| !e.is_loop())
    }

    /// Breadth-first spanning tree from `root` with its fundamental cycles.
    pub fn spanning_tree(&self, root: usize) -> SpanningTree {
        let n = self.vertex_count();
        let mut parent_edge: Vec<Option<usize>> = vec![None; n];
        let mut depth = vec![usize::MAX; n];
        let mut in_tree = vec![false; self.edge_count()];
        let mut order = vec![root];
        depth[root] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &e in self.incident_edges(v) {
                let w = self.other_end(e, v);
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent_edge[w] = Some(e);
                    in_tree[e] = true;
                    order.push(w);
                }
            }
        }
        let non_tree: Vec<usize> = (0..self.edge_count()).filter(|&e| !in_tree[e]).collect();
        let mut cycles = vec![vec![0i64; non_tree.len()]; self.edge_count()];
        for (i, &e) in non_tree.iter().enumerate() {
            cycles[e][i] += 1;
            // Close the cycle with the tree path from `to` back to `from`.
            let (mut a, mut b) = (self.edges[e].to, self.edges[e].from);
            while a != b {
                if depth[a] >= depth[b] {
                    let pe = parent_edge[a].unwrap();
                    cycles[pe][i] += if self.edges[pe].from == a { 1 } else { -1 };
                    a = self.other_end(pe, a);
                } else {
                    let pe = parent_edge[b].unwrap();
                    cycles[pe][i] += if self.edges[pe].to == b { 1 } else { -1 };
                    b = self.other_end(pe, b);
                }
            }
        }
        SpanningTree {
            order,
            parent_edge,
            non_tree,
            cycles,
        }
    }

    /// Every simple cycle, as a sorted edge list. Walks the 2^genus elements
    /// of the cycle space, so keep the genus small.
    pub fn simple_cycles(&self) -> Vec<Vec<usize>> {
        let tree = self.spanning_tree(0);
        let g = tree.non_tree.len();
        assert!(g < 24, "cycle space too large");
        let mut out = Vec::new();
        for mask in 1u32..(1 << g) {
            let edges: Vec<usize> = (0..self.edge_count())
                .filter(|&e| (0..g).filter(|&i| mask >> i & 1 == 1 && tree.cycles[e][i] % 2 != 0).count() % 2 == 1)
                .collect();
            if self.is_single_cycle(&edges) {
                out.push(edges);
            }
        }
        out
    }

    fn is_single_cycle(&self, edges: &[usize]) -> bool {
        let mut deg = vec![0; self.vertex_count()];
        for &e in edges {
            deg[self.edges[e].from] += 1;
            deg[self.edges[e].to] += 1;
        }
        if deg.iter().any(|&d| d != 0 && d != 2) {
            return false;
        }
        // Connected: walk from one edge.
        let mut seen = vec![false; edges.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let a = &self.edges[edges[i]];
            for (j, &f) in edges.iter().enumerate() {
                let b = &self.edges[f];
                if !seen[j] && (a.from == b.from || a.from == b.to || a.to == b.from || a.to == b.to) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// Spanning tree data; `cycles[e][i]` is the signed multiplicity of edge `e`
/// (in its stored direction) in the fundamental cycle of `non_tree[i]`.
#[derive(Clone, Debug)]
pub struct SpanningTree {
    /// Vertices in breadth-first order, root first.
    pub order: Vec<usize>,
    pub parent_edge: Vec<Option<usize>>,
    pub non_tree: Vec<usize>,
    pub cycles: Vec<Vec<i64>>,
}

/// Edge length: a positive rational or the unbounded marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Length {
    Finite(Q),
    Infinite,
}

impl Length {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            Length::Finite(l) => Some(l),
            Length::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Length::Infinite)
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Finite(l) => f.write_str(&format_rational(l)),
            Length::Infinite => f.write_str("inf"),
        }
    }
}

/// A point of the geometric representation in canonical form.
///
/// Offsets are measured from the stored first endpoint of the edge and lie
/// strictly inside the edge; endpoints collapse to `Vertex`. The valence-1
/// far vertex of an unbounded edge is always written as `End`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphPoint {
    Vertex(usize),
    Edge { edge: usize, offset: Q },
    End(usize),
}

/// Metric graph whose unbounded edges (if any) end in valence-1 vertices.
///
/// Unbounded edges are normalized so that `to` is the end vertex and
/// offsets are measured from the attachment vertex.
#[derive(Debug)]
pub struct MetricGraph {
    graph: Graph,
    lengths: Vec<Length>,
    end_edge_of_vertex: Vec<Option<usize>>,
    vertex_distances: OnceLock<Vec<Vec<Option<Q>>>>,
}

impl Clone for MetricGraph {
    fn clone(&self) -> Self {
        MetricGraph {
            graph: self.graph.clone(),
            lengths: self.lengths.clone(),
            end_edge_of_vertex: self.end_edge_of_vertex.clone(),
            vertex_distances: OnceLock::new(),
        }
    }
}

impl PartialEq for MetricGraph {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph && self.lengths == other.lengths
    }
}

impl Eq for MetricGraph {}

impl MetricGraph {
    pub fn new(graph: Graph, lengths: Vec<Length>) -> Result<Self> {
        assert_eq!(graph.edge_count(), lengths.len(), "one length per edge");
        let mut graph = graph;
        let mut end_edge_of_vertex = vec![None; graph.vertex_count()];
        for (i, len) in lengths.iter().enumerate() {
            match len {
                Length::Finite(l) => {
                    if !l.is_positive() {
                        return Err(Error::NonPositiveLength(graph.edges[i].id.clone()));
                    }
                }
                Length::Infinite => {
                    let e = graph.edges[i].clone();
                    let end = if e.is_loop() {
                        None
                    } else if graph.valence(e.to) == 1 {
                        Some(e.to)
                    } else if graph.valence(e.from) == 1 {
                        Some(e.from)
                    } else {
                        None
                    };
                    let end = end.ok_or_else(|| Error::BadInfiniteEdge(e.id.clone()))?;
                    if end_edge_of_vertex[end].is_some() {
                        return Err(Error::BadInfiniteEdge(e.id.clone()));
                    }
                    if end == e.from {
                        graph.edges[i].from = e.to;
                        graph.edges[i].to = e.from;
                    }
                    end_edge_of_vertex[end] = Some(i);
                }
            }
        }
        Ok(MetricGraph {
            graph,
            lengths,
            end_edge_of_vertex,
            vertex_distances: OnceLock::new(),
        })
    }

    /// Convenience constructor from string triples `(id, from, to)` and
    /// length strings (`"p/q"`, `"p"` or `"inf"`).
    pub fn build(vertices: &[&str], edges: &[(&str, &str, &str, &str)]) -> Result<Self> {
        let triples: Vec<(&str, &str, &str)> = edges.iter().map(|e| (e.0, e.1, e.2)).collect();
        let graph = Graph::new(vertices, &triples)?;
        let lengths = edges
            .iter()
            .map(|e| crate::format::parse_length(e.3))
            .collect::<Result<Vec<_>>>()?;
        MetricGraph::new(graph, lengths)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn length(&self, e: usize) -> &Length {
        &self.lengths[e]
    }

    pub fn lengths(&self) -> &[Length] {
        &self.lengths
    }

    pub fn genus(&self) -> usize {
        self.graph.genus()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.graph.valence(v)
    }

    pub fn has_infinite_edges(&self) -> bool {
        self.lengths.iter().any(Length::is_infinite)
    }

    pub fn infinite_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.lengths.len()).filter(|&e| self.lengths[e].is_infinite())
    }

    /// The unbounded edge whose end is vertex `v`, if `v` is an end.
    pub fn end_edge_of(&self, v: usize) -> Option<usize> {
        self.end_edge_of_vertex[v]
    }

    pub fn is_end_vertex(&self, v: usize) -> bool {
        self.end_edge_of_vertex[v].is_some()
    }

    /// True if every finite length is an integer.
    pub fn is_integral(&self) -> bool {
        self.lengths
            .iter()
            .all(|l| l.finite().map_or(true, is_integer))
    }

    /// lcm of all finite length denominators.
    pub fn length_denominator_lcm(&self) -> num_bigint::BigInt {
        lcm_denominators(self.lengths.iter().filter_map(Length::finite))
    }

    pub fn vertex_point(&self, v: usize) -> GraphPoint {
        match self.end_edge_of_vertex[v] {
            Some(e) => GraphPoint::End(e),
            None => GraphPoint::Vertex(v),
        }
    }

    /// Canonical point at `offset` from the first endpoint of edge `e`.
    pub fn edge_point(&self, e: usize, offset: Q) -> Result<GraphPoint> {
        if e >= self.lengths.len() {
            return Err(Error::UnknownEdge(e.to_string()));
        }
        let edge = self.graph.edge(e);
        if offset.is_negative() {
            return Err(Error::InvalidPoint(format!(
                "negative offset {} on edge `{}`",
                format_rational(&offset),
                edge.id
            )));
        }
        if offset.is_zero() {
            return Ok(self.vertex_point(edge.from));
        }
        match &self.lengths[e] {
            Length::Finite(l) => {
                if &offset == l {
                    Ok(self.vertex_point(edge.to))
                } else if &offset > l {
                    Err(Error::InvalidPoint(format!(
                        "offset {} exceeds length of edge `{}`",
                        format_rational(&offset),
                        edge.id
                    )))
                } else {
                    Ok(GraphPoint::Edge { edge: e, offset })
                }
            }
            Length::Infinite => Ok(GraphPoint::Edge { edge: e, offset }),
        }
    }

    pub fn end_point(&self, e: usize) -> Result<GraphPoint> {
        match self.lengths.get(e) {
            Some(Length::Infinite) => Ok(GraphPoint::End(e)),
            Some(_) => Err(Error::InvalidPoint(format!(
                "edge `{}` is bounded and has no end",
                self.graph.edge(e).id
            ))),
            None => Err(Error::UnknownEdge(e.to_string())),
        }
    }

    /// Re-canonicalizes a point that may have been built by hand.
    pub fn canonical(&self, p: &GraphPoint) -> Result<GraphPoint> {
        match p {
            GraphPoint::Vertex(v) => {
                if *v >= self.graph.vertex_count() {
                    return Err(Error::UnknownVertex(v.to_string()));
                }
                Ok(self.vertex_point(*v))
            }
            GraphPoint::Edge { edge, offset } => self.edge_point(*edge, offset.clone()),
            GraphPoint::End(e) => self.end_point(*e),
        }
    }

    /// True if `p` lies on the bounded part (not on an unbounded edge).
    pub fn is_core_point(&self, p: &GraphPoint) -> bool {
        match p {
            GraphPoint::Vertex(_) => true,
            GraphPoint::Edge { edge, .. } => !self.lengths[*edge].is_infinite(),
            GraphPoint::End(_) => false,
        }
    }

    /// Integer distance to the vertices along its own edge.
    pub fn is_integer_point(&self, p: &GraphPoint) -> bool {
        match p {
            GraphPoint::Edge { offset, .. } => is_integer(offset),
            _ => true,
        }
    }

    pub fn describe_point(&self, p: &GraphPoint) -> String {
        match p {
            GraphPoint::Vertex(v) => self.graph.vertex_name(*v).to_string(),
            GraphPoint::Edge { edge, offset } => {
                format!("{}@{}", self.graph.edge(*edge).id, format_rational(offset))
            }
            GraphPoint::End(e) => format!("{}@inf", self.graph.edge(*e).id),
        }
    }

    /// Vertex-to-vertex shortest path lengths over bounded edges.
    pub fn vertex_distances(&self) -> &Vec<Vec<Option<Q>>> {
        self.vertex_distances.get_or_init(|| {
            let n = self.graph.vertex_count();
            let mut d: Vec<Vec<Option<Q>>> = vec![vec![None; n]; n];
            for (v, row) in d.iter_mut().enumerate() {
                row[v] = Some(Q::zero());
            }
            for (i, e) in self.graph.edges().iter().enumerate() {
                if let Length::Finite(l) = &self.lengths[i] {
                    if e.is_loop() {
                        continue;
                    }
                    let better = match &d[e.from][e.to] {
                        Some(cur) => l < cur,
                        None => true,
                    };
                    if better {
                        d[e.from][e.to] = Some(l.clone());
                        d[e.to][e.from] = Some(l.clone());
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    let Some(dik) = d[i][k].clone() else { continue };
                    for j in 0..n {
                        let Some(dkj) = &d[k][j] else { continue };
                        let via = &dik + dkj;
                        let better = match &d[i][j] {
                            Some(cur) => via < *cur,
                            None => true,
                        };
                        if better {
                            d[i][j] = Some(via);
                        }
                    }
                }
            }
            d
        })
    }

    /// (vertex, distance) pairs through which a point exits its edge.
    fn exits(&self, p: &GraphPoint) -> Vec<(usize, Q)> {
        match p {
            GraphPoint::Vertex(v) => vec![(*v, Q::zero())],
            GraphPoint::End(_) => vec![],
            GraphPoint::Edge { edge, offset } => {
                let e = self.graph.edge(*edge);
                match &self.lengths[*edge] {
                    Length::Finite(l) => vec![(e.from, offset.clone()), (e.to, l - offset)],
                    Length::Infinite => vec![(e.from, offset.clone())],
                }
            }
        }
    }

    /// Shortest-path distance; `Length::Infinite` iff exactly one argument is
    /// an unbounded end (or they are different ends).
    pub fn distance(&self, p: &GraphPoint, q: &GraphPoint) -> Length {
        if p == q {
            return Length::Finite(Q::zero());
        }
        if matches!(p, GraphPoint::End(_)) || matches!(q, GraphPoint::End(_)) {
            return Length::Infinite;
        }
        let table = self.vertex_distances();
        let mut best: Option<Q> = None;
        let mut offer = |c: Q| {
            if best.as_ref().map_or(true, |b| c < *b) {
                best = Some(c);
            }
        };
        if let (
            GraphPoint::Edge { edge: e1, offset: t1 },
            GraphPoint::Edge { edge: e2, offset: t2 },
        ) = (p, q)
        {
            if e1 == e2 {
                offer((t1 - t2).abs());
            }
        }
        let pe = self.exits(p);
        let qe = self.exits(q);
        for (a, da) in &pe {
            for (b, db) in &qe {
                if let Some(ab) = &table[*a][*b] {
                    offer(da + ab + db);
                }
            }
        }
        match best {
            Some(b) => Length::Finite(b),
            None => Length::Infinite,
        }
    }

    /// All Z-points of a bounded Z-graph: vertices first (in index order),
    /// then interior integer offsets edge by edge.
    pub fn integer_points(&self) -> Result<Vec<GraphPoint>> {
        if self.has_infinite_edges() {
            return Err(Error::HasInfiniteEdges);
        }
        if !self.is_integral() {
            return Err(Error::NotIntegral("non-integer edge length".into()));
        }
        let mut pts: Vec<GraphPoint> =
            (0..self.graph.vertex_count()).map(GraphPoint::Vertex).collect();
        for (e, len) in self.lengths.iter().enumerate() {
            let l = crate::rational::to_i64(len.finite().expect("bounded"))
                .ok_or(Error::Overflow("edge length"))?;
            for k in 1..l {
                pts.push(GraphPoint::Edge {
                    edge: e,
                    offset: crate::rational::q(k),
                });
            }
        }
        Ok(pts)
    }
}

/// Transport of points between a metric graph and its rescaling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rescaling {
    pub factor: Q,
}

impl Rescaling {
    pub fn point(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Edge { edge, offset } => GraphPoint::Edge {
                edge: *edge,
                offset: offset * &self.factor,
            },
            other => other.clone(),
        }
    }

    pub fn inverse(&self) -> Rescaling {
        Rescaling {
            factor: self.factor.recip(),
        }
    }
}

/// Multiplies every finite length by `factor`; unbounded edges stay unbounded.
pub fn rescale(g: &MetricGraph, factor: &Q) -> Result<(MetricGraph, Rescaling)> {
    if !factor.is_positive() {
        return Err(Error::NonPositiveScale);
    }
    let lengths = g
        .lengths
        .iter()
        .map(|l| match l {
            Length::Finite(x) => Length::Finite(x * factor),
            Length::Infinite => Length::Infinite,
        })
        .collect();
    let scaled = MetricGraph {
        graph: g.graph.clone(),
        lengths,
        end_edge_of_vertex: g.end_edge_of_vertex.clone(),
        vertex_distances: OnceLock::new(),
    };
    Ok((
        scaled,
        Rescaling {
            factor: factor.clone(),
        },
    ))
}

/// Unit subdivision of a bounded Z-graph with the vertex <-> Z-point map.
#[derive(Clone, Debug)]
pub struct IntegerModel {
    pub graph: Graph,
    /// `points[v]` is the Z-point of the metric graph that vertex `v` stands for.
    pub points: Vec<GraphPoint>,
    index: HashMap<GraphPoint, usize>,
    /// For each original edge, the chain of model vertices from `from` to `to`.
    pub chains: Vec<Vec<usize>>,
}

impl IntegerModel {
    pub fn vertex_of(&self, p: &GraphPoint) -> Option<usize> {
        self.index.get(p).copied()
    }
}

/// Replaces each edge of length l by a chain of l unit edges.
pub fn unit_subdivide(g: &MetricGraph) -> Result<IntegerModel> {
    let points = g.integer_points()?;
    for (i, e) in g.graph.edges().iter().enumerate() {
        if e.is_loop() && g.lengths[i] == Length::Finite(Q::one()) {
            return Err(Error::UnitLoop(e.id.clone()));
        }
    }
    let index: HashMap<GraphPoint, usize> =
        points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let names: Vec<String> = points.iter().map(|p| g.describe_point(p)).collect();
    let mut edges = Vec::new();
    let mut chains = Vec::with_capacity(g.graph.edge_count());
    for (i, e) in g.graph.edges().iter().enumerate() {
        let l = crate::rational::to_i64(g.lengths[i].finite().expect("bounded")).expect("integral");
        let mut chain = vec![e.from];
        for k in 1..l {
            chain.push(index[&GraphPoint::Edge {
                edge: i,
                offset: crate::rational::q(k),
            }]);
        }
        chain.push(e.to);
        for (k, w) in chain.windows(2).enumerate() {
            let id = if l == 1 {
                e.id.clone()
            } else {
                format!("{}#{}", e.id, k)
            };
            edges.push(Edge {
                id,
                from: w[0],
                to: w[1],
            });
        }
        chains.push(chain);
    }
    let graph = Graph::from_indexed(names, edges)?;
    Ok(IntegerModel {
        graph,
        points,
        index,
        chains,
    })
}

/// The bounded core of a tropical curve together with point transport.
#[derive(Clone, Debug)]
pub struct Retraction {
    pub core: Arc<MetricGraph>,
    /// `(curve edge, core vertex)` for every removed unbounded edge.
    pub attachments: Vec<(usize, usize)>,
    vertex_to_core: Vec<Option<usize>>,
    edge_to_core: Vec<Option<usize>>,
    vertex_from_core: Vec<usize>,
    edge_from_core: Vec<usize>,
}

impl Retraction {
    /// Core image of a curve point lying on the core, `None` otherwise.
    pub fn to_core(&self, p: &GraphPoint) -> Option<GraphPoint> {
        match p {
            GraphPoint::Vertex(v) => self.vertex_to_core[*v].map(GraphPoint::Vertex),
            GraphPoint::Edge { edge, offset } => self.edge_to_core[*edge].map(|e| GraphPoint::Edge {
                edge: e,
                offset: offset.clone(),
            }),
            GraphPoint::End(_) => None,
        }
    }

    pub fn from_core(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(self.vertex_from_core[*v]),
            GraphPoint::Edge { edge, offset } => GraphPoint::Edge {
                edge: self.edge_from_core[*edge],
                offset: offset.clone(),
            },
            GraphPoint::End(e) => GraphPoint::End(self.edge_from_core[*e]),
        }
    }

    /// Curve vertex where unbounded edge `e` meets the core.
    pub fn attachment(&self, e: usize) -> Option<usize> {
        self.attachments
            .iter()
            .find(|(edge, _)| *edge == e)
            .map(|(_, v)| self.vertex_from_core[*v])
    }
}

/// Deletes every unbounded edge together with its end.
pub fn retract_core(g: &MetricGraph) -> Result<Retraction> {
    let n = g.graph.vertex_count();
    let mut vertex_to_core = vec![None; n];
    let mut vertex_from_core = Vec::new();
    let mut names = Vec::new();
    for v in 0..n {
        if !g.is_end_vertex(v) {
            vertex_to_core[v] = Some(vertex_from_core.len());
            vertex_from_core.push(v);
            names.push(g.graph.vertex_name(v).to_string());
        }
    }
    let mut edge_to_core = vec![None; g.graph.edge_count()];
    let mut edge_from_core = Vec::new();
    let mut edges = Vec::new();
    let mut lengths = Vec::new();
    let mut attachments = Vec::new();
    for (i, e) in g.graph.edges().iter().enumerate() {
        match &g.lengths[i] {
            Length::Infinite => {
                let at = vertex_to_core[e.from].expect("attachment is a core vertex");
                attachments.push((i, at));
            }
            Length::Finite(l) => {
                edge_to_core[i] = Some(edge_from_core.len());
                edge_from_core.push(i);
                edges.push(Edge {
                    id: e.id.clone(),
                    from: vertex_to_core[e.from].expect("core"),
                    to: vertex_to_core[e.to].expect("core"),
                });
                lengths.push(Length::Finite(l.clone()));
            }
        }
    }
    let core = MetricGraph::new(Graph::from_indexed(names, edges)?, lengths)?;
    Ok(Retraction {
        core: Arc::new(core),
        attachments,
        vertex_to_core,
        edge_to_core,
        vertex_from_core,
        edge_from_core,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};

    fn dumbbell() -> MetricGraph {
        MetricGraph::build(
            &["P", "Q"],
            &[("c1", "P", "P", "1"), ("c2", "Q", "Q", "1"), ("e", "P", "Q", "1")],
        )
        .unwrap()
    }

    #[test]
    fn genus_examples() {
        assert_eq!(dumbbell().genus(), 2);
        let seg = MetricGraph::build(&["A", "B"], &[("e", "A", "B", "1")]).unwrap();
        assert_eq!(seg.genus(), 0);
        let lp = MetricGraph::build(&["v"], &[("l", "v", "v", "1")]).unwrap();
        assert_eq!(lp.genus(), 1);
    }

    #[test]
    fn valence_examples() {
        let g = dumbbell();
        assert_eq!(g.graph().valence_of("P").unwrap(), 3);
        let single = MetricGraph::build(&["v"], &[]).unwrap();
        assert_eq!(single.valence(0), 0);
        let path = MetricGraph::build(&["a", "b", "c"], &[("x", "a", "b", "1"), ("y", "b", "c", "1")])
            .unwrap();
        assert_eq!(path.graph().valence_of("b").unwrap(), 2);
        assert!(matches!(path.graph().valence_of("z"), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(matches!(
            MetricGraph::build(&["a", "b"], &[]),
            Err(Error::Disconnected)
        ));
        assert!(matches!(
            MetricGraph::build(&["a", "b"], &[("e", "a", "b", "0")]),
            Err(Error::NonPositiveLength(_))
        ));
        assert!(matches!(
            MetricGraph::build(&["a"], &[("e", "a", "a", "inf")]),
            Err(Error::BadInfiniteEdge(_))
        ));
        // both endpoints have valence 2
        assert!(matches!(
            MetricGraph::build(
                &["a", "b"],
                &[("e", "a", "b", "inf"), ("f", "a", "b", "1")]
            ),
            Err(Error::BadInfiniteEdge(_))
        ));
    }

    #[test]
    fn infinite_edge_is_oriented_toward_its_end() {
        let g = MetricGraph::build(&["x", "c"], &[("r", "x", "c", "inf"), ("l", "c", "c", "1")])
            .unwrap();
        let e = g.graph().edge(0);
        assert_eq!(g.graph().vertex_name(e.from), "c");
        assert_eq!(g.vertex_point(g.graph().vertex("x").unwrap()), GraphPoint::End(0));
    }

    #[test]
    fn canonical_offsets_collapse_to_vertices() {
        let g = dumbbell();
        assert_eq!(g.edge_point(2, q(0)).unwrap(), GraphPoint::Vertex(0));
        assert_eq!(g.edge_point(2, q(1)).unwrap(), GraphPoint::Vertex(1));
        assert!(g.edge_point(2, q(2)).is_err());
    }

    #[test]
    fn distance_examples() {
        let g = dumbbell();
        let p = GraphPoint::Vertex(0);
        assert_eq!(g.distance(&p, &p), Length::Finite(q(0)));
        let mid = g.edge_point(0, q_frac(1, 2)).unwrap();
        assert_eq!(g.distance(&p, &mid), Length::Finite(q_frac(1, 2)));
        let on_loop = g.edge_point(0, q_frac(1, 4)).unwrap();
        assert_eq!(g.distance(&on_loop, &mid), Length::Finite(q_frac(1, 4)));
        let far = g.edge_point(1, q_frac(1, 3)).unwrap();
        assert_eq!(g.distance(&on_loop, &far), Length::Finite(q_frac(1, 4) + q(1) + q_frac(1, 3)));

        let par = MetricGraph::build(&["a", "b"], &[("s", "a", "b", "3"), ("t", "a", "b", "5")])
            .unwrap();
        assert_eq!(
            par.distance(&GraphPoint::Vertex(0), &GraphPoint::Vertex(1)),
            Length::Finite(q(3))
        );
        let on_long = par.edge_point(1, q(4)).unwrap();
        assert_eq!(par.distance(&GraphPoint::Vertex(0), &on_long), Length::Finite(q(4)));
    }

    #[test]
    fn distance_to_ends_is_infinite() {
        let g = MetricGraph::build(&["c", "x"], &[("r", "c", "x", "inf")]).unwrap();
        let end = GraphPoint::End(0);
        let p = g.edge_point(0, q(5)).unwrap();
        assert_eq!(g.distance(&end, &end), Length::Finite(q(0)));
        assert_eq!(g.distance(&p, &end), Length::Infinite);
        assert_eq!(g.distance(&p, &GraphPoint::Vertex(0)), Length::Finite(q(5)));
    }

    #[test]
    fn rescale_examples() {
        let lp = MetricGraph::build(&["v"], &[("l", "v", "v", "1")]).unwrap();
        let (same, t) = rescale(&lp, &q(1)).unwrap();
        assert_eq!(same, lp);
        let mid = lp.edge_point(0, q_frac(1, 2)).unwrap();
        assert_eq!(t.point(&mid), mid);
        let (double, t) = rescale(&lp, &q(2)).unwrap();
        assert_eq!(double.length(0), &Length::Finite(q(2)));
        assert_eq!(t.point(&mid), GraphPoint::Edge { edge: 0, offset: q(1) });
        let short = MetricGraph::build(&["a", "b"], &[("e", "a", "b", "2/3")]).unwrap();
        assert_eq!(rescale(&short, &q(3)).unwrap().0.length(0), &Length::Finite(q(2)));
        assert!(matches!(rescale(&short, &q(0)), Err(Error::NonPositiveScale)));
    }

    #[test]
    fn subdivide_examples() {
        let seg = MetricGraph::build(&["A", "B"], &[("e", "A", "B", "3")]).unwrap();
        let m = unit_subdivide(&seg).unwrap();
        assert_eq!(m.graph.vertex_count(), 4);
        assert_eq!(m.graph.edge_count(), 3);
        assert_eq!(m.chains[0], vec![0, 2, 3, 1]);

        let lp = MetricGraph::build(&["P"], &[("l", "P", "P", "2")]).unwrap();
        let m = unit_subdivide(&lp).unwrap();
        assert_eq!(m.graph.vertex_count(), 2);
        assert!(m.graph.is_loopless());
        assert!(m.graph.edges().iter().all(|e| (e.from, e.to) == (0, 1) || (e.from, e.to) == (1, 0)));

        let unit = MetricGraph::build(&["a", "b"], &[("e", "a", "b", "1"), ("f", "a", "b", "1")])
            .unwrap();
        let m = unit_subdivide(&unit).unwrap();
        assert_eq!(&m.graph, unit.graph());

        let bad = MetricGraph::build(&["v"], &[("l", "v", "v", "1")]).unwrap();
        assert!(matches!(unit_subdivide(&bad), Err(Error::UnitLoop(_))));
    }

    #[test]
    fn retract_examples() {
        let g = dumbbell();
        let r = retract_core(&g).unwrap();
        assert_eq!(*r.core, g);
        assert!(r.attachments.is_empty());

        let tad = MetricGraph::build(&["Q", "X"], &[("l", "Q", "Q", "1"), ("r", "Q", "X", "inf")])
            .unwrap();
        let r = retract_core(&tad).unwrap();
        assert_eq!(r.core.graph().edge_count(), 1);
        assert_eq!(r.attachment(1), Some(0));

        let star = MetricGraph::build(
            &["c", "x", "y", "z"],
            &[("a", "c", "x", "inf"), ("b", "c", "y", "inf"), ("d", "z", "c", "inf")],
        )
        .unwrap();
        let r = retract_core(&star).unwrap();
        assert_eq!(r.core.graph().vertex_count(), 1);
        assert_eq!(r.core.graph().edge_count(), 0);
        assert_eq!(r.attachments.len(), 3);
        assert!(r.attachments.iter().all(|(_, v)| *v == 0));
    }
}
