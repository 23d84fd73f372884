//! Tropical rational functions: continuous piecewise-linear functions with
//! integer slopes, stored edge by edge as breakpoint lists.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::divisor::{same_host, Divisor};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphPoint, Length, MetricGraph};
use crate::rational::{format_rational, is_integer, q, q_frac, Q};

/// Value of a rational function, allowing the infinities taken at ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtValue {
    Finite(Q),
    PosInf,
    NegInf,
}

impl ExtValue {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            ExtValue::Finite(x) => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::Finite(x) => f.write_str(&format_rational(x)),
            ExtValue::PosInf => f.write_str("inf"),
            ExtValue::NegInf => f.write_str("-inf"),
        }
    }
}

/// Restriction of a function to one edge.
///
/// Offsets strictly increase from 0; on a bounded edge the last offset is the
/// edge length. `end_slope` is the slope past the last breakpoint of an
/// unbounded edge and is 0 on bounded edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeFunction {
    pub breakpoints: Vec<(Q, Q)>,
    pub end_slope: i64,
}

impl EdgeFunction {
    pub fn linear(length: &Q, start: Q, slope: i64) -> Self {
        let end = &start + length * q(slope);
        EdgeFunction {
            breakpoints: vec![(Q::zero(), start), (length.clone(), end)],
            end_slope: 0,
        }
    }

    pub fn value_at(&self, t: &Q) -> Q {
        let bp = &self.breakpoints;
        let last = bp.last().expect("nonempty");
        if *t >= last.0 {
            return &last.1 + (t - &last.0) * q(self.end_slope);
        }
        let i = bp.partition_point(|(o, _)| o <= t);
        let (o0, v0) = &bp[i - 1];
        let (o1, v1) = &bp[i];
        v0 + (v1 - v0) * (t - o0) / (o1 - o0)
    }

    fn slopes(&self) -> Vec<Q> {
        self.breakpoints
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))
            .collect()
    }

    /// Drops breakpoints where the slope does not change.
    fn normalize(&mut self, bounded: bool) {
        let mut out: Vec<(Q, Q)> = Vec::with_capacity(self.breakpoints.len());
        for p in self.breakpoints.drain(..) {
            while out.len() >= 2 {
                let a = &out[out.len() - 2];
                let b = &out[out.len() - 1];
                let s1 = (&b.1 - &a.1) / (&b.0 - &a.0);
                let s2 = (&p.1 - &b.1) / (&p.0 - &b.0);
                if s1 == s2 {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(p);
        }
        if !bounded {
            while out.len() >= 2 {
                let a = &out[out.len() - 2];
                let b = &out[out.len() - 1];
                if (&b.1 - &a.1) / (&b.0 - &a.0) == q(self.end_slope) {
                    out.pop();
                } else {
                    break;
                }
            }
        }
        self.breakpoints = out;
    }
}

#[derive(Clone, Debug)]
pub struct RationalFunction {
    host: Arc<MetricGraph>,
    /// Values at vertices; entries for end vertices are unused and kept at 0.
    vertex_values: Vec<Q>,
    edges: Vec<EdgeFunction>,
}

impl PartialEq for RationalFunction {
    fn eq(&self, other: &Self) -> bool {
        same_host(&self.host, &other.host)
            && self.vertex_values == other.vertex_values
            && self.edges == other.edges
    }
}

impl Eq for RationalFunction {}

impl RationalFunction {
    /// Validates integrality of slopes and continuity at vertices.
    pub fn new(host: Arc<MetricGraph>, vertex_values: Vec<Q>, edges: Vec<EdgeFunction>) -> Result<Self> {
        let g = host.graph();
        if vertex_values.len() != g.vertex_count() || edges.len() != g.edge_count() {
            return Err(Error::InvalidFunction("wrong number of vertices or edges".into()));
        }
        let mut vertex_values = vertex_values;
        for v in 0..g.vertex_count() {
            if host.is_end_vertex(v) {
                vertex_values[v] = Q::zero();
            }
        }
        let mut edges = edges;
        for (i, ef) in edges.iter_mut().enumerate() {
            let e = g.edge(i);
            let bad = |msg: &str| Error::InvalidFunction(format!("edge `{}`: {msg}", e.id));
            let bp = &ef.breakpoints;
            if bp.is_empty() || !bp[0].0.is_zero() {
                return Err(bad("breakpoints must start at offset 0"));
            }
            if bp.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(bad("offsets must strictly increase"));
            }
            if bp[0].1 != vertex_values[e.from] {
                return Err(bad("discontinuous at first endpoint"));
            }
            match host.length(i) {
                Length::Finite(l) => {
                    if bp.len() < 2 || bp.last().unwrap().0 != *l {
                        return Err(bad("breakpoints must end at the edge length"));
                    }
                    if bp.last().unwrap().1 != vertex_values[e.to] {
                        return Err(bad("discontinuous at second endpoint"));
                    }
                    if ef.end_slope != 0 {
                        return Err(bad("end slope on a bounded edge"));
                    }
                }
                Length::Infinite => {}
            }
            if ef.slopes().iter().any(|s| !is_integer(s)) {
                return Err(bad("non-integer slope"));
            }
            let bounded = !host.length(i).is_infinite();
            ef.normalize(bounded);
        }
        Ok(RationalFunction {
            host,
            vertex_values,
            edges,
        })
    }

    /// Infers vertex values from the edge restrictions.
    pub fn from_edges(host: Arc<MetricGraph>, edges: Vec<EdgeFunction>) -> Result<Self> {
        let g = host.graph();
        let mut values: Vec<Option<Q>> = vec![None; g.vertex_count()];
        for (i, ef) in edges.iter().enumerate().take(g.edge_count()) {
            let e = g.edge(i);
            if let Some((_, v)) = ef.breakpoints.first() {
                values[e.from].get_or_insert_with(|| v.clone());
            }
            if !host.length(i).is_infinite() {
                if let Some((_, v)) = ef.breakpoints.last() {
                    values[e.to].get_or_insert_with(|| v.clone());
                }
            }
        }
        let values = values.into_iter().map(|v| v.unwrap_or_else(Q::zero)).collect();
        Self::new(host, values, edges)
    }

    pub fn constant(host: Arc<MetricGraph>, c: Q) -> Self {
        let g = host.graph();
        let edges = (0..g.edge_count())
            .map(|i| match host.length(i) {
                Length::Finite(l) => EdgeFunction {
                    breakpoints: vec![(Q::zero(), c.clone()), (l.clone(), c.clone())],
                    end_slope: 0,
                },
                Length::Infinite => EdgeFunction {
                    breakpoints: vec![(Q::zero(), c.clone())],
                    end_slope: 0,
                },
            })
            .collect();
        let mut values = vec![c; g.vertex_count()];
        for (v, val) in values.iter_mut().enumerate() {
            if host.is_end_vertex(v) {
                *val = Q::zero();
            }
        }
        RationalFunction {
            host,
            vertex_values: values,
            edges,
        }
    }

    pub fn host(&self) -> &Arc<MetricGraph> {
        &self.host
    }

    pub fn edge_function(&self, e: usize) -> &EdgeFunction {
        &self.edges[e]
    }

    pub fn edge_functions(&self) -> &[EdgeFunction] {
        &self.edges
    }

    /// Integer slopes of the consecutive pieces on edge `e` (plus the end
    /// slope on an unbounded edge).
    pub fn edge_slopes(&self, e: usize) -> Vec<i64> {
        let ef = &self.edges[e];
        let mut s: Vec<i64> = ef
            .slopes()
            .iter()
            .map(|x| x.to_integer().to_i64().expect("slope fits in i64"))
            .collect();
        if self.host.length(e).is_infinite() {
            s.push(ef.end_slope);
        }
        s
    }

    pub fn max_abs_slope(&self) -> i64 {
        (0..self.edges.len())
            .flat_map(|e| self.edge_slopes(e))
            .map(i64::abs)
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, p: &GraphPoint) -> ExtValue {
        match p {
            GraphPoint::Vertex(v) => ExtValue::Finite(self.vertex_values[*v].clone()),
            GraphPoint::End(e) => {
                let ef = &self.edges[*e];
                match ef.end_slope.signum() {
                    0 => ExtValue::Finite(ef.breakpoints.last().unwrap().1.clone()),
                    1 => ExtValue::PosInf,
                    _ => ExtValue::NegInf,
                }
            }
            GraphPoint::Edge { edge, offset } => ExtValue::Finite(self.edges[*edge].value_at(offset)),
        }
    }

    /// Outgoing slope at the first endpoint of `e`.
    fn start_slope(&self, e: usize) -> i64 {
        let ef = &self.edges[e];
        if ef.breakpoints.len() >= 2 {
            let (o0, v0) = &ef.breakpoints[0];
            let (o1, v1) = &ef.breakpoints[1];
            ((v1 - v0) / (o1 - o0)).to_integer().to_i64().expect("slope")
        } else {
            ef.end_slope
        }
    }

    /// Slope arriving at the second endpoint of bounded edge `e`.
    fn arrival_slope(&self, e: usize) -> i64 {
        let bp = &self.edges[e].breakpoints;
        let n = bp.len();
        let (o0, v0) = &bp[n - 2];
        let (o1, v1) = &bp[n - 1];
        ((v1 - v0) / (o1 - o0)).to_integer().to_i64().expect("slope")
    }

    /// Sum of outgoing slopes over all directions leaving `p`.
    pub fn order(&self, p: &GraphPoint) -> i64 {
        let g = self.host.graph();
        match p {
            GraphPoint::Vertex(v) => {
                let mut total = 0;
                for &e in g.incident_edges(*v) {
                    let edge = g.edge(e);
                    if edge.from == *v {
                        total += self.start_slope(e);
                    }
                    if edge.to == *v {
                        total -= self.arrival_slope(e);
                    }
                }
                total
            }
            GraphPoint::End(e) => -self.edges[*e].end_slope,
            GraphPoint::Edge { edge, offset } => {
                let ef = &self.edges[*edge];
                let bp = &ef.breakpoints;
                match bp.binary_search_by(|(o, _)| o.cmp(offset)) {
                    Err(_) => 0,
                    Ok(i) => {
                        let left = (&bp[i].1 - &bp[i - 1].1) / (&bp[i].0 - &bp[i - 1].0);
                        let right = if i + 1 < bp.len() {
                            (&bp[i + 1].1 - &bp[i].1) / (&bp[i + 1].0 - &bp[i].0)
                        } else {
                            q(ef.end_slope)
                        };
                        (right - left).to_integer().to_i64().expect("order")
                    }
                }
            }
        }
    }

    /// Points where the order may be nonzero.
    fn candidate_points(&self) -> Vec<GraphPoint> {
        let g = self.host.graph();
        let mut pts: Vec<GraphPoint> = (0..g.vertex_count())
            .filter(|&v| !self.host.is_end_vertex(v))
            .map(GraphPoint::Vertex)
            .collect();
        for (e, ef) in self.edges.iter().enumerate() {
            let bounded = !self.host.length(e).is_infinite();
            let n = ef.breakpoints.len();
            let upto = if bounded { n - 1 } else { n };
            for (o, _) in ef.breakpoints.iter().take(upto).skip(1) {
                pts.push(GraphPoint::Edge {
                    edge: e,
                    offset: o.clone(),
                });
            }
            if !bounded {
                pts.push(GraphPoint::End(e));
            }
        }
        pts
    }

    /// The divisor (f) = sum of ord_P f * P.
    pub fn principal_divisor(&self) -> Divisor {
        let mut d = Divisor::zero(self.host.clone());
        for p in self.candidate_points() {
            let o = self.order(&p);
            d.bump(p, o);
        }
        d
    }

    /// Pointwise sum. Fails if one summand tends to +inf and the other to
    /// -inf at the same end.
    pub fn try_add(&self, other: &RationalFunction) -> Result<RationalFunction> {
        if !same_host(&self.host, &other.host) {
            return Err(Error::HostMismatch);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (e, (a, b)) in self.edges.iter().zip(&other.edges).enumerate() {
            if a.end_slope.signum() * b.end_slope.signum() < 0 {
                return Err(Error::InfiniteCancellation(self.host.graph().edge(e).id.clone()));
            }
            let offsets: BTreeSet<&Q> = a.breakpoints.iter().chain(&b.breakpoints).map(|(o, _)| o).collect();
            let breakpoints = offsets
                .into_iter()
                .map(|o| (o.clone(), a.value_at(o) + b.value_at(o)))
                .collect();
            let mut ef = EdgeFunction {
                breakpoints,
                end_slope: a.end_slope + b.end_slope,
            };
            ef.normalize(!self.host.length(e).is_infinite());
            edges.push(ef);
        }
        let vertex_values = self
            .vertex_values
            .iter()
            .zip(&other.vertex_values)
            .map(|(x, y)| x + y)
            .collect();
        Ok(RationalFunction {
            host: self.host.clone(),
            vertex_values,
            edges,
        })
    }

    pub fn add_constant(&self, c: &Q) -> RationalFunction {
        let mut out = self.clone();
        for (v, val) in out.vertex_values.iter_mut().enumerate() {
            if !self.host.is_end_vertex(v) {
                *val += c;
            }
        }
        for ef in &mut out.edges {
            for (_, val) in &mut ef.breakpoints {
                *val += c;
            }
        }
        out
    }

    /// Multiplies the function by an integer.
    pub fn scaled(&self, k: i64) -> RationalFunction {
        let kq = q(k);
        let mut out = self.clone();
        for val in &mut out.vertex_values {
            *val *= &kq;
        }
        for (e, ef) in out.edges.iter_mut().enumerate() {
            for (_, val) in &mut ef.breakpoints {
                *val *= &kq;
            }
            ef.end_slope *= k;
            if k == 0 {
                ef.normalize(!self.host.length(e).is_infinite());
            }
        }
        out
    }

    /// Transports to a rescaled copy of the host: f'(lambda t) = lambda f(t),
    /// which keeps slopes and orders.
    pub fn rescaled(&self, host: Arc<MetricGraph>, factor: &Q) -> Result<RationalFunction> {
        let edges = self
            .edges
            .iter()
            .map(|ef| EdgeFunction {
                breakpoints: ef
                    .breakpoints
                    .iter()
                    .map(|(o, v)| (o * factor, v * factor))
                    .collect(),
                end_slope: ef.end_slope,
            })
            .collect();
        let values = self.vertex_values.iter().map(|v| v * factor).collect();
        RationalFunction::new(host, values, edges)
    }
}

/// The ramp f_P that pushes a point of an unbounded edge onto the core:
/// zero away from the edge of `p`, slope +1 from the attachment vertex up to
/// the depth of `p`, constant beyond. `(f_P) = Q - P` for the attachment
/// vertex `Q`; for core points it is the zero function.
pub fn end_ramp(g: &Arc<MetricGraph>, p: &GraphPoint) -> Result<RationalFunction> {
    let p = g.canonical(p)?;
    let zero = RationalFunction::constant(g.clone(), Q::zero());
    let (edge, ef) = match &p {
        GraphPoint::Edge { edge, offset } if g.length(*edge).is_infinite() => (
            *edge,
            EdgeFunction {
                breakpoints: vec![(Q::zero(), Q::zero()), (offset.clone(), offset.clone())],
                end_slope: 0,
            },
        ),
        GraphPoint::End(edge) => (
            *edge,
            EdgeFunction {
                breakpoints: vec![(Q::zero(), Q::zero())],
                end_slope: 1,
            },
        ),
        _ => return Ok(zero),
    };
    let mut edges = zero.edges.clone();
    edges[edge] = ef;
    RationalFunction::new(g.clone(), zero.vertex_values, edges)
}

/// Distance from a non-Z interior point to the nearest Z-point of its edge.
fn distance_to_integer_points(p: &GraphPoint) -> Q {
    match p {
        GraphPoint::Edge { offset, .. } => {
            let frac = offset - offset.floor();
            let other = Q::one() - &frac;
            if frac < other {
                frac
            } else {
                other
            }
        }
        _ => Q::zero(),
    }
}

/// Lower envelope of lines `y = s t + c` sampled exactly on `[lo, hi]`.
fn lower_envelope(lines: &[(i64, Q)], lo: &Q, hi: &Q) -> Vec<(Q, Q)> {
    let mut ts: BTreeSet<Q> = BTreeSet::new();
    ts.insert(lo.clone());
    ts.insert(hi.clone());
    for (i, (s1, c1)) in lines.iter().enumerate() {
        for (s2, c2) in &lines[i + 1..] {
            if s1 != s2 {
                let t = (c2 - c1) / q(s1 - s2);
                if &t > lo && &t < hi {
                    ts.insert(t);
                }
            }
        }
    }
    ts.into_iter()
        .map(|t| {
            let v = lines
                .iter()
                .map(|(s, c)| q(*s) * &t + c)
                .min()
                .expect("at least one line");
            (t, v)
        })
        .collect()
}

/// The function h used to slide the zero set of a function onto Z-points:
/// `h(Q) = -min(d, dist(Q, zeros))` on the component of the complement of
/// `zeros` containing `target`, and 0 elsewhere, where `d` is the smallest
/// distance from a zero to a Z-point and `target` is a Z-point at that
/// distance from the zeros.
pub fn snap_ramp(g: &Arc<MetricGraph>, zeros: &[GraphPoint], target: &GraphPoint) -> Result<RationalFunction> {
    let pre = |m: &str| Error::Precondition(m.to_string());
    if g.has_infinite_edges() {
        return Err(Error::HasInfiniteEdges);
    }
    if !g.is_integral() {
        return Err(Error::NotIntegral("snap_ramp needs a Z-graph".into()));
    }
    if zeros.is_empty() {
        return Err(pre("no zeros given"));
    }
    let zeros: Vec<GraphPoint> = zeros.iter().map(|z| g.canonical(z)).collect::<Result<_>>()?;
    if zeros.iter().any(|z| g.is_integer_point(z)) {
        return Err(pre("zeros must not be Z-points"));
    }
    let target = g.canonical(target)?;
    if !g.is_integer_point(&target) {
        return Err(pre("target must be a Z-point"));
    }
    let d = zeros.iter().map(distance_to_integer_points).min().expect("nonempty");
    let dist_to_zeros = |p: &GraphPoint| -> Q {
        zeros
            .iter()
            .map(|z| g.distance(p, z).finite().cloned().expect("bounded graph"))
            .min()
            .expect("nonempty")
    };
    if dist_to_zeros(&target) != d {
        return Err(pre("target is not at minimal distance from the zeros"));
    }

    let graph = g.graph();
    let n = graph.vertex_count();
    // Cuts per edge.
    let mut cuts: Vec<Vec<Q>> = vec![Vec::new(); graph.edge_count()];
    for z in &zeros {
        if let GraphPoint::Edge { edge, offset } = z {
            cuts[*edge].push(offset.clone());
        }
    }
    for c in &mut cuts {
        c.sort();
        c.dedup();
    }
    // Union-find over vertices followed by edge segments.
    let mut seg_base = Vec::with_capacity(graph.edge_count());
    let mut total = n;
    for c in &cuts {
        seg_base.push(total);
        total += c.len() + 1;
    }
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        let first = seg_base[e];
        let last = first + cuts[e].len();
        let a = find(&mut parent, first);
        let b = find(&mut parent, edge.from);
        parent[a] = b;
        let a = find(&mut parent, last);
        let b = find(&mut parent, edge.to);
        parent[a] = b;
    }
    let target_node = match &target {
        GraphPoint::Vertex(v) => *v,
        GraphPoint::Edge { edge, offset } => seg_base[*edge] + cuts[*edge].partition_point(|c| c < offset),
        GraphPoint::End(_) => unreachable!("bounded graph"),
    };
    let root = find(&mut parent, target_node);
    let in_component = |parent: &mut Vec<usize>, node: usize| find(parent, node) == root;

    let vertex_dist: Vec<Q> = (0..n).map(|v| dist_to_zeros(&GraphPoint::Vertex(v))).collect();
    let mut vertex_values = vec![Q::zero(); n];
    for v in 0..n {
        if in_component(&mut parent, v) {
            vertex_values[v] = -(if vertex_dist[v] < d { vertex_dist[v].clone() } else { d.clone() });
        }
    }
    let mut edges = Vec::with_capacity(graph.edge_count());
    for (e, edge) in graph.edges().iter().enumerate() {
        let len = g.length(e).finite().cloned().expect("bounded");
        let mut bounds = vec![Q::zero()];
        bounds.extend(cuts[e].iter().cloned());
        bounds.push(len.clone());
        let mut breakpoints: Vec<(Q, Q)> = Vec::new();
        for (j, w) in bounds.windows(2).enumerate() {
            let (lo, hi) = (&w[0], &w[1]);
            let piece = if in_component(&mut parent, seg_base[e] + j) {
                let mut lines: Vec<(i64, Q)> = vec![
                    (0, d.clone()),
                    (1, vertex_dist[edge.from].clone()),
                    (-1, &len + &vertex_dist[edge.to]),
                ];
                for z in &cuts[e] {
                    if z <= lo {
                        lines.push((1, -z));
                    } else {
                        lines.push((-1, z.clone()));
                    }
                }
                lower_envelope(&lines, lo, hi)
                    .into_iter()
                    .map(|(t, v)| (t, -v))
                    .collect()
            } else {
                vec![(lo.clone(), Q::zero()), (hi.clone(), Q::zero())]
            };
            for (t, v) in piece {
                if breakpoints.last().map_or(true, |(o, _)| *o != t) {
                    breakpoints.push((t, v));
                }
            }
        }
        edges.push(EdgeFunction {
            breakpoints,
            end_slope: 0,
        });
    }
    RationalFunction::new(g.clone(), vertex_values, edges)
}

/// (N + p)^alpha with N the maximal valence and alpha the number of edges:
/// bounds every slope of a function with at most p poles.
pub fn slope_bound(g: &Graph, poles: u32) -> Result<BigInt> {
    if poles == 0 {
        return Err(Error::Precondition("pole bound must be at least 1".into()));
    }
    let base = BigInt::from(g.max_valence() as u64 + poles as u64);
    Ok(num_traits::pow(base, g.edge_count()))
}

/// Options for [`random_function`].
#[derive(Clone, Debug)]
pub struct RandomFunctionOptions {
    pub max_slope: i64,
    pub max_denominator: i64,
    pub max_extra_breakpoints: usize,
}

impl Default for RandomFunctionOptions {
    fn default() -> Self {
        RandomFunctionOptions {
            max_slope: 3,
            max_denominator: 4,
            max_extra_breakpoints: 2,
        }
    }
}

fn random_offsets<R: Rng>(rng: &mut R, len: &Q, count: usize, max_den: i64) -> Vec<Q> {
    let mut out = BTreeSet::new();
    for _ in 0..count {
        let den = rng.random_range(1..=max_den.max(1));
        // Rational in (0, len) with denominator dividing den * denom(len).
        let scale = q(den) * Q::from_integer(len.denom().clone());
        let steps = (len * &scale).to_integer();
        if steps <= BigInt::one() {
            continue;
        }
        let k = rng.random_range(1..steps.to_i64().unwrap_or(i64::MAX).min(1 << 40));
        out.insert(q(k) / &scale);
    }
    out.into_iter().collect()
}

/// Pieces with random integer slopes on `[0, len]`, closing with a solved
/// two-piece tail when the total rise is prescribed.
fn random_pieces<R: Rng>(
    rng: &mut R,
    len: &Q,
    start: &Q,
    rise: Option<&Q>,
    opts: &RandomFunctionOptions,
) -> Vec<(Q, Q)> {
    let extra = rng.random_range(0..=opts.max_extra_breakpoints);
    let mut cuts = random_offsets(rng, len, extra, opts.max_denominator);
    let mut bp = vec![(Q::zero(), start.clone())];
    match rise {
        None => {
            cuts.push(len.clone());
            for c in cuts {
                let s = rng.random_range(-opts.max_slope..=opts.max_slope);
                let (o, v) = bp.last().unwrap().clone();
                let nv = &v + (&c - &o) * q(s);
                bp.push((c, nv));
            }
        }
        Some(rise) => {
            // Free slopes on all cuts but the last piece, then solve the rest.
            let tail_start = cuts.pop();
            for c in cuts {
                let s = rng.random_range(-opts.max_slope..=opts.max_slope);
                let (o, v) = bp.last().unwrap().clone();
                bp.push((c.clone(), &v + (&c - &o) * q(s)));
            }
            let _ = tail_start;
            let (o, v) = bp.last().unwrap().clone();
            let rest = len - &o;
            let need = start + rise - &v;
            let mean = &need / &rest;
            if is_integer(&mean) && rng.random_bool(0.5) {
                bp.push((len.clone(), start + rise));
            } else {
                let fl = mean.floor().to_integer().to_i64().expect("slope");
                let s1 = if is_integer(&mean) { fl - 1 } else { fl } - rng.random_range(0..=1);
                let s2 = fl + 1 + rng.random_range(0..=1);
                // s1 * l1 + s2 * (rest - l1) = need
                let l1 = (q(s2) * &rest - &need) / q(s2 - s1);
                let mid = &o + &l1;
                bp.push((mid.clone(), &v + &l1 * q(s1)));
                bp.push((len.clone(), start + rise));
            }
        }
    }
    bp
}

/// Random rational function: slopes sampled on a spanning tree, closing
/// edges completed so that the function is continuous.
pub fn random_function<R: Rng>(host: &Arc<MetricGraph>, rng: &mut R, opts: &RandomFunctionOptions) -> RationalFunction {
    let g = host.graph();
    let n = g.vertex_count();
    let mut values: Vec<Option<Q>> = vec![None; n];
    let mut edges: Vec<Option<EdgeFunction>> = vec![None; g.edge_count()];
    values[0] = Some(q_frac(rng.random_range(-8..=8), rng.random_range(1..=opts.max_denominator.max(1))));
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &e in g.incident_edges(v) {
            if edges[e].is_some() {
                continue;
            }
            let edge = g.edge(e);
            let w = g.other_end(e, v);
            if values[w].is_some() && w != v {
                continue;
            }
            match host.length(e) {
                Length::Infinite => {
                    let extent = q(rng.random_range(1..=3));
                    let start = values[edge.from].clone().expect("attachment visited first");
                    let bp = random_pieces(rng, &extent, &start, None, opts);
                    edges[e] = Some(EdgeFunction {
                        breakpoints: bp,
                        end_slope: rng.random_range(-opts.max_slope..=opts.max_slope),
                    });
                }
                Length::Finite(len) => {
                    if edge.is_loop() {
                        continue;
                    }
                    let known = values[v].clone().unwrap();
                    let bp = random_pieces(rng, len, &Q::zero(), None, opts);
                    let rise = bp.last().unwrap().1.clone();
                    let start = if edge.from == v { known.clone() } else { &known - &rise };
                    let bp: Vec<(Q, Q)> = bp.into_iter().map(|(o, x)| (o, x + &start)).collect();
                    values[w] = Some(if edge.from == v { &start + &rise } else { start.clone() });
                    edges[e] = Some(EdgeFunction {
                        breakpoints: bp,
                        end_slope: 0,
                    });
                    queue.push_back(w);
                }
            }
        }
    }
    for e in 0..g.edge_count() {
        if edges[e].is_some() {
            continue;
        }
        let edge = g.edge(e);
        let len = host.length(e).finite().expect("unbounded edges are tree edges").clone();
        let a = values[edge.from].clone().unwrap();
        let b = values[edge.to].clone().unwrap();
        let rise = &b - &a;
        edges[e] = Some(EdgeFunction {
            breakpoints: random_pieces(rng, &len, &a, Some(&rise), opts),
            end_slope: 0,
        });
    }
    let values = values.into_iter().map(|v| v.unwrap_or_else(Q::zero)).collect();
    let edges = edges.into_iter().map(|e| e.expect("every edge assigned")).collect();
    RationalFunction::new(host.clone(), values, edges).expect("generator builds valid functions")
}

/// Number of poles counted with multiplicity.
pub fn pole_count(f: &RationalFunction) -> i64 {
    f.principal_divisor().terms().filter(|(_, c)| *c < 0).map(|(_, c)| -c).sum()
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn segment(len: &str) -> Arc<MetricGraph> {
        Arc::new(MetricGraph::build(&["A", "B"], &[("e", "A", "B", len)]).unwrap())
    }

    fn tent() -> RationalFunction {
        let g = segment("1");
        RationalFunction::from_edges(
            g,
            vec![EdgeFunction {
                breakpoints: vec![(q(0), q(0)), (q_frac(1, 2), q_frac(1, 2)), (q(1), q(0))],
                end_slope: 0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let g = segment("1");
        let c = RationalFunction::constant(g.clone(), q(7));
        assert_eq!(c.evaluate(&GraphPoint::Vertex(1)), ExtValue::Finite(q(7)));
        let mid = g.edge_point(0, q_frac(1, 2)).unwrap();
        assert_eq!(tent().evaluate(&mid), ExtValue::Finite(q_frac(1, 2)));
        let quarter = g.edge_point(0, q_frac(1, 4)).unwrap();
        assert_eq!(tent().evaluate(&quarter), ExtValue::Finite(q_frac(1, 4)));
    }

    #[test]
    fn order_examples() {
        let f = tent();
        let g = f.host().clone();
        let mid = g.edge_point(0, q_frac(1, 2)).unwrap();
        assert_eq!(f.order(&mid), -2);
        assert_eq!(f.order(&GraphPoint::Vertex(0)), 1);
        assert_eq!(f.order(&GraphPoint::Vertex(1)), 1);
        let quarter = g.edge_point(0, q_frac(1, 4)).unwrap();
        assert_eq!(f.order(&quarter), 0);
        // slope 0 then 1 leaving p: a simple zero
        let z = RationalFunction::from_edges(
            segment("2"),
            vec![EdgeFunction {
                breakpoints: vec![(q(0), q(0)), (q(1), q(0)), (q(2), q(1))],
                end_slope: 0,
            }],
        )
        .unwrap();
        let p = z.host().edge_point(0, q(1)).unwrap();
        assert_eq!(z.order(&p), 1);
    }

    #[test]
    fn rejects_bad_functions() {
        let g = segment("1");
        let frac = RationalFunction::from_edges(
            g.clone(),
            vec![EdgeFunction {
                breakpoints: vec![(q(0), q(0)), (q(1), q_frac(1, 2))],
                end_slope: 0,
            }],
        );
        assert!(matches!(frac, Err(Error::InvalidFunction(_))));
        let jump = RationalFunction::new(
            g,
            vec![q(0), q(5)],
            vec![EdgeFunction {
                breakpoints: vec![(q(0), q(0)), (q(1), q(1))],
                end_slope: 0,
            }],
        );
        assert!(matches!(jump, Err(Error::InvalidFunction(_))));
    }

    #[test]
    fn principal_divisor_examples() {
        let g = segment("1");
        assert!(RationalFunction::constant(g.clone(), q(3)).principal_divisor().is_zero());
        let d = tent().principal_divisor();
        assert_eq!(d.to_string(), "A:1, B:1, e@1/2:-2");
        assert_eq!(d.degree(), 0);
    }

    #[test]
    fn addition_examples() {
        let f = tent();
        let zero = RationalFunction::constant(f.host().clone(), q(0));
        assert_eq!(f.try_add(&zero).unwrap(), f);
        let sum = f.try_add(&f.scaled(-1)).unwrap();
        assert_eq!(sum, zero);
        assert_eq!(
            f.add_constant(&q(5)).principal_divisor(),
            f.principal_divisor()
        );
    }

    fn tadpole() -> Arc<MetricGraph> {
        Arc::new(MetricGraph::build(&["Q", "X"], &[("l", "Q", "Q", "1"), ("r", "Q", "X", "inf")]).unwrap())
    }

    #[test]
    fn end_ramp_examples() {
        let g = tadpole();
        let core_pt = g.edge_point(0, q_frac(1, 2)).unwrap();
        assert!(end_ramp(&g, &core_pt).unwrap().principal_divisor().is_zero());

        let p = g.edge_point(1, q(2)).unwrap();
        let f = end_ramp(&g, &p).unwrap();
        assert_eq!(f.principal_divisor().to_string(), "Q:1, r@2:-1");
        assert_eq!(f.evaluate(&p), ExtValue::Finite(q(2)));
        assert_eq!(f.evaluate(&GraphPoint::End(1)), ExtValue::Finite(q(2)));

        let f = end_ramp(&g, &GraphPoint::End(1)).unwrap();
        assert_eq!(f.principal_divisor().to_string(), "Q:1, r@inf:-1");
        assert_eq!(f.evaluate(&GraphPoint::End(1)), ExtValue::PosInf);
        assert_eq!(f.order(&GraphPoint::End(1)), -1);
    }

    #[test]
    fn infinite_cancellation_is_rejected() {
        let g = tadpole();
        let up = end_ramp(&g, &GraphPoint::End(1)).unwrap();
        assert!(matches!(
            up.try_add(&up.scaled(-1)),
            Err(Error::InfiniteCancellation(_))
        ));
    }

    #[test]
    fn snap_ramp_single_zero() {
        // Segment of length 3 with the zero at 5/4: nearest Z-point is offset 1.
        let g = segment("3");
        let z = g.edge_point(0, q_frac(5, 4)).unwrap();
        let target = g.edge_point(0, q(1)).unwrap();
        let h = snap_ramp(&g, &[z.clone()], &target).unwrap();
        assert!(h.max_abs_slope() <= 1);
        let check = &(&h.principal_divisor() + &Divisor::point(g.clone(), z).unwrap())
            - &Divisor::point(g.clone(), target).unwrap();
        assert!(check.is_effective(), "{check}");
        assert_eq!(h.principal_divisor().degree(), 0);
    }

    #[test]
    fn snap_ramp_guards() {
        let g = segment("3");
        let z = g.edge_point(0, q_frac(5, 4)).unwrap();
        assert!(matches!(
            snap_ramp(&g, &[g.edge_point(0, q(1)).unwrap()], &GraphPoint::Vertex(0)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            snap_ramp(&g, &[z], &GraphPoint::Vertex(0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn slope_bound_examples() {
        let dumbbell = MetricGraph::build(
            &["P", "Q"],
            &[("c1", "P", "P", "1"), ("c2", "Q", "Q", "1"), ("e", "P", "Q", "1")],
        )
        .unwrap();
        assert_eq!(slope_bound(dumbbell.graph(), 2).unwrap(), BigInt::from(125));
        assert_eq!(slope_bound(segment("1").graph(), 1).unwrap(), BigInt::from(2));
        let tri = MetricGraph::build(
            &["a", "b", "c"],
            &[("x", "a", "b", "1"), ("y", "b", "c", "1"), ("z", "c", "a", "1")],
        )
        .unwrap();
        assert_eq!(slope_bound(tri.graph(), 3).unwrap(), BigInt::from(125));
        assert!(slope_bound(tri.graph(), 0).is_err());
    }

    #[test]
    fn random_functions_are_continuous_with_degree_zero() {
        let g = Arc::new(
            MetricGraph::build(
                &["a", "b", "x"],
                &[
                    ("p", "a", "b", "3/2"),
                    ("r", "a", "b", "1/3"),
                    ("l", "b", "b", "2"),
                    ("u", "a", "x", "inf"),
                ],
            )
            .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let f = random_function(&g, &mut rng, &RandomFunctionOptions::default());
            assert_eq!(f.principal_divisor().degree(), 0);
        }
    }
}
