//! Cells of the space S(D) of pairs (f, P_1..P_n) with (f) + D = P_1 + ... + P_n.
//!
//! A cell is fixed by where each point sits (a vertex or the interior of an
//! edge) and by the slope of `f` at the start of every edge. Within a cell
//! the free parameters are the vertex values of `f` and the offsets of the
//! points placed inside edges; they are tied together by one linear
//! equation per edge (the rise of `f` along it). The dimension of a feasible
//! cell is the number of parameters minus the rank of those equations.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::divisor::{same_host, Divisor};
use crate::error::{Error, Result};
use crate::function::{slope_bound, EdgeFunction, RationalFunction};
use crate::graph::{GraphPoint, MetricGraph};
use crate::polyhedron::{Relation, System};
use crate::rational::{q, Q};

/// Where one of the points `P_i` sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Location {
    Vertex(usize),
    Edge(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellSignature {
    pub placement: Vec<Location>,
    /// Slope of `f` leaving the first endpoint of each edge.
    pub slopes: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub signature: CellSignature,
    pub dimension: i64,
    pub feasible: bool,
    /// Cells with the same sorted placement belong to the same orbit under
    /// relabelling the points.
    pub orbit: Vec<Location>,
    /// A function from the relative interior of the cell.
    pub sample: RationalFunction,
    /// The points `P_i` for `sample`.
    pub sample_points: Vec<GraphPoint>,
}

#[derive(Clone, Debug)]
pub struct CellCaps {
    pub max_edges: usize,
    pub max_degree: i64,
    /// Stop after examining this many (placement, slopes) candidates.
    pub max_candidates: usize,
}

impl Default for CellCaps {
    fn default() -> Self {
        CellCaps {
            max_edges: 4,
            max_degree: 3,
            max_candidates: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellReport {
    pub cells: Vec<Cell>,
    pub candidates: usize,
    pub truncated: bool,
    /// `(N + p)^alpha` for the pole count `p` of the divisor.
    pub slope_bound: BigInt,
}

impl CellReport {
    /// Dimension -> number of feasible cells.
    pub fn dimensions(&self) -> BTreeMap<i64, usize> {
        let mut m = BTreeMap::new();
        for c in &self.cells {
            *m.entry(c.dimension).or_insert(0) += 1;
        }
        m
    }
}

pub fn max_cell_dimension(cells: &[Cell]) -> Option<i64> {
    cells.iter().map(|c| c.dimension).max()
}

/// Offsets and coefficients of the divisor inside each edge.
fn interior_terms(g: &MetricGraph, d: &Divisor) -> Vec<Vec<(Q, i64)>> {
    let mut out = vec![Vec::new(); g.graph().edge_count()];
    for (p, c) in d.terms() {
        if let GraphPoint::Edge { edge, offset } = p {
            out[*edge].push((offset.clone(), c));
        }
    }
    out
}

struct Layout {
    n_vertices: usize,
    /// Variable index of each point placed inside an edge.
    offset_var: Vec<Option<usize>>,
    vars: usize,
}

fn layout(g: &MetricGraph, placement: &[Location]) -> Layout {
    let n_vertices = g.graph().vertex_count();
    let mut vars = n_vertices;
    let offset_var = placement
        .iter()
        .map(|loc| match loc {
            Location::Edge(_) => {
                vars += 1;
                Some(vars - 1)
            }
            Location::Vertex(_) => None,
        })
        .collect();
    Layout {
        n_vertices,
        offset_var,
        vars,
    }
}

/// The linear system of a signature: variables are the vertex values of `f`
/// followed by the offsets of the points placed inside edges.
pub fn signature_system(g: &MetricGraph, d: &Divisor, sig: &CellSignature) -> System {
    let lay = layout(g, &sig.placement);
    let inner = interior_terms(g, d);
    let mut sys = System::new(lay.vars);
    for (e, edge) in g.graph().edges().iter().enumerate() {
        let l = g.length(e).finite().expect("bounded").clone();
        let mut coeffs = vec![Q::zero(); lay.vars];
        coeffs[edge.to] += q(1);
        coeffs[edge.from] -= q(1);
        let mut rhs = &l * q(sig.slopes[e]);
        for (i, loc) in sig.placement.iter().enumerate() {
            if *loc == Location::Edge(e) {
                coeffs[lay.offset_var[i].unwrap()] += q(1);
                rhs += &l;
            }
        }
        for (x, c) in &inner[e] {
            rhs -= q(*c) * (&l - x);
        }
        sys.push(coeffs, Relation::Eq, rhs);
    }
    for (i, loc) in sig.placement.iter().enumerate() {
        if let Location::Edge(e) = loc {
            let t = lay.offset_var[i].unwrap();
            let mut lo = vec![Q::zero(); lay.vars];
            lo[t] = q(-1);
            sys.push(lo, Relation::Lt, Q::zero());
            let mut hi = vec![Q::zero(); lay.vars];
            hi[t] = q(1);
            sys.push(hi, Relation::Lt, g.length(*e).finite().unwrap().clone());
        }
    }
    sys
}

/// Builds `f` and the points from a solution of the signature system.
fn realize(g: &Arc<MetricGraph>, d: &Divisor, sig: &CellSignature, x: &[Q]) -> Result<(RationalFunction, Vec<GraphPoint>)> {
    let lay = layout(g, &sig.placement);
    let inner = interior_terms(g, d);
    let mut points = Vec::with_capacity(sig.placement.len());
    let mut events: Vec<BTreeMap<Q, i64>> = vec![BTreeMap::new(); g.graph().edge_count()];
    for (e, terms) in inner.iter().enumerate() {
        for (x, c) in terms {
            *events[e].entry(x.clone()).or_insert(0) -= c;
        }
    }
    for (i, loc) in sig.placement.iter().enumerate() {
        match loc {
            Location::Vertex(v) => points.push(g.vertex_point(*v)),
            Location::Edge(e) => {
                let t = x[lay.offset_var[i].unwrap()].clone();
                *events[*e].entry(t.clone()).or_insert(0) += 1;
                points.push(g.edge_point(*e, t)?);
            }
        }
    }
    let values: Vec<Q> = x[..lay.n_vertices].to_vec();
    let mut edges = Vec::with_capacity(g.graph().edge_count());
    for (e, edge) in g.graph().edges().iter().enumerate() {
        let l = g.length(e).finite().unwrap().clone();
        let mut slope = sig.slopes[e];
        let mut bp = vec![(Q::zero(), values[edge.from].clone())];
        for (o, ord) in &events[e] {
            let (po, pv) = bp.last().unwrap().clone();
            bp.push((o.clone(), &pv + q(slope) * (o - &po)));
            slope += ord;
        }
        let (po, pv) = bp.last().unwrap().clone();
        bp.push((l.clone(), &pv + q(slope) * (&l - &po)));
        // Merge a breakpoint landing on the far end.
        bp.dedup_by(|b, a| a.0 == b.0);
        edges.push(EdgeFunction {
            breakpoints: bp,
            end_slope: 0,
        });
    }
    let f = RationalFunction::new(g.clone(), values, edges)?;
    Ok((f, points))
}

/// Particular integer slopes meeting the vertex conditions, or `None` if the
/// placement is inconsistent.
fn particular_slopes(
    g: &MetricGraph,
    tree: &crate::graph::SpanningTree,
    rhs: &[i64],
) -> Option<Vec<i64>> {
    let gr = g.graph();
    let mut s = vec![0i64; gr.edge_count()];
    for &v in tree.order.iter().skip(1).rev() {
        let pe = tree.parent_edge[v].unwrap();
        let mut known = 0;
        for &e in gr.incident_edges(v) {
            let edge = gr.edge(e);
            if e == pe || edge.is_loop() {
                continue;
            }
            if edge.from == v {
                known += s[e];
            } else {
                known -= s[e];
            }
        }
        s[pe] = if gr.edge(pe).from == v { rhs[v] - known } else { known - rhs[v] };
    }
    let root = tree.order[0];
    let mut total = 0;
    for &e in gr.incident_edges(root) {
        let edge = gr.edge(e);
        if edge.is_loop() {
            continue;
        }
        total += if edge.from == root { s[e] } else { -s[e] };
    }
    (total == rhs[root]).then_some(s)
}

fn inverse(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { q(1) } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("period matrix is nonsingular");
        a.swap(col, p);
        let pivot = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &pivot;
        }
        let prow = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn for_each_placement(slots: &[Location], n: usize, mut visit: impl FnMut(&[Location]) -> bool) {
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut idx = vec![0usize; n];
    loop {
        let pl: Vec<Location> = idx.iter().map(|&i| slots[i]).collect();
        if !visit(&pl) {
            return;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < slots.len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Enumerates the feasible cells of S(D) on a bounded metric graph.
pub fn enumerate_cells(g: &Arc<MetricGraph>, d: &Divisor, caps: &CellCaps) -> Result<CellReport> {
    if !same_host(g, d.host()) {
        return Err(Error::HostMismatch);
    }
    if g.has_infinite_edges() {
        return Err(Error::HasInfiniteEdges);
    }
    let gr = g.graph();
    if gr.edge_count() > caps.max_edges {
        return Err(Error::CapExceeded(format!("{} edges (cap {})", gr.edge_count(), caps.max_edges)));
    }
    let n = d.degree();
    if n > caps.max_degree {
        return Err(Error::CapExceeded(format!("degree {n} (cap {})", caps.max_degree)));
    }
    let poles: i64 = d.terms().filter(|(_, c)| *c > 0).map(|(_, c)| c).sum();
    let bound = slope_bound(gr, poles.max(1) as u32)?;
    let mut report = CellReport {
        cells: Vec::new(),
        candidates: 0,
        truncated: false,
        slope_bound: bound,
    };
    if n < 0 {
        return Ok(report);
    }
    let tree = gr.spanning_tree(0);
    let genus = tree.non_tree.len();
    let len: Vec<Q> = (0..gr.edge_count()).map(|e| g.length(e).finite().unwrap().clone()).collect();
    let inner = interior_terms(g, d);
    let period: Vec<Vec<Q>> = (0..genus)
        .map(|i| {
            (0..genus)
                .map(|j| {
                    (0..gr.edge_count())
                        .map(|e| &len[e] * q(tree.cycles[e][i] * tree.cycles[e][j]))
                        .sum()
                })
                .collect()
        })
        .collect();
    let period_inv = inverse(&period);

    let slots: Vec<Location> = (0..gr.vertex_count())
        .map(Location::Vertex)
        .chain((0..gr.edge_count()).map(Location::Edge))
        .collect();
    let mut error = None;
    for_each_placement(&slots, n as usize, |placement| {
        // Vertex conditions: sum of outgoing slopes = #P at v - D(v), where
        // slopes arriving at `to` are shifted by the orders inside the edge.
        let mut shift = vec![0i64; gr.edge_count()];
        let mut rhs: Vec<i64> = (0..gr.vertex_count()).map(|v| -d.coefficient(&g.vertex_point(v))).collect();
        for loc in placement {
            match loc {
                Location::Vertex(v) => rhs[*v] += 1,
                Location::Edge(e) => shift[*e] += 1,
            }
        }
        for (e, terms) in inner.iter().enumerate() {
            shift[e] -= terms.iter().map(|(_, c)| c).sum::<i64>();
        }
        for (e, edge) in gr.edges().iter().enumerate() {
            rhs[edge.to] += shift[e];
        }
        let Some(s0) = particular_slopes(g, &tree, &rhs) else {
            return true;
        };
        // Cycle conditions bound the cycle coordinates z of s = s0 + C z:
        // (period z)_i lies in -a_i - [lo_i, hi_i].
        let mut boxes = Vec::with_capacity(genus);
        for i in 0..genus {
            let mut a = Q::zero();
            let (mut lo, mut hi) = (Q::zero(), Q::zero());
            for e in 0..gr.edge_count() {
                let c = tree.cycles[e][i];
                if c == 0 {
                    continue;
                }
                a += q(c * s0[e]) * &len[e];
                for (x, k) in &inner[e] {
                    a -= q(c * k) * (&len[e] - x);
                }
                let m = placement.iter().filter(|l| **l == Location::Edge(e)).count() as i64;
                let span = q(c * m) * &len[e];
                if span.is_positive() {
                    hi += span;
                } else {
                    lo += span;
                }
            }
            boxes.push((-&a - hi, -&a - lo));
        }
        let mut ranges = Vec::with_capacity(genus);
        for row in &period_inv {
            let (mut zlo, mut zhi) = (Q::zero(), Q::zero());
            for (m, (ylo, yhi)) in row.iter().zip(&boxes) {
                let (u, v) = (m * ylo, m * yhi);
                if u < v {
                    zlo += u;
                    zhi += v;
                } else {
                    zlo += v;
                    zhi += u;
                }
            }
            let lo = zlo.ceil().to_integer().to_i64().unwrap_or(i64::MIN);
            let hi = zhi.floor().to_integer().to_i64().unwrap_or(i64::MAX);
            ranges.push((lo, hi));
        }
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return true;
        }
        let mut z: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            report.candidates += 1;
            if report.candidates > caps.max_candidates {
                report.truncated = true;
                return false;
            }
            let slopes: Vec<i64> = (0..gr.edge_count())
                .map(|e| s0[e] + (0..genus).map(|i| tree.cycles[e][i] * z[i]).sum::<i64>())
                .collect();
            let sig = CellSignature {
                placement: placement.to_vec(),
                slopes,
            };
            let sys = signature_system(g, d, &sig);
            if let Some(x) = sys.feasible_point() {
                match realize(g, d, &sig, &x) {
                    Ok((sample, sample_points)) => {
                        let mut orbit = sig.placement.clone();
                        orbit.sort();
                        report.cells.push(Cell {
                            dimension: (sys.vars - sys.equality_rank()) as i64,
                            feasible: true,
                            orbit,
                            signature: sig,
                            sample,
                            sample_points,
                        });
                    }
                    Err(e) => {
                        error = Some(e);
                        return false;
                    }
                }
            }
            // Next z in the box.
            let mut i = 0;
            loop {
                if i == genus {
                    return true;
                }
                if z[i] < ranges[i].1 {
                    z[i] += 1;
                    break;
                }
                z[i] = ranges[i].0;
                i += 1;
            }
        }
    });
    if let Some(e) = error {
        return Err(e);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::canonical;
    use crate::rational::q_frac;

    fn dumbbell() -> Arc<MetricGraph> {
        Arc::new(
            MetricGraph::build(
                &["P", "Q"],
                &[("c1", "P", "P", "1"), ("c2", "Q", "Q", "1"), ("e", "P", "Q", "1")],
            )
            .unwrap(),
        )
    }

    fn check_samples(d: &Divisor, report: &CellReport) {
        for c in &report.cells {
            let pts = Divisor::from_terms(d.host().clone(), c.sample_points.iter().map(|p| (p.clone(), 1))).unwrap();
            assert_eq!(d.try_add(&c.sample.principal_divisor()).unwrap(), pts);
        }
    }

    #[test]
    fn dumbbell_canonical_cells() {
        let g = dumbbell();
        let k = canonical(&g);
        let report = enumerate_cells(&g, &k, &CellCaps::default()).unwrap();
        check_samples(&k, &report);
        let dims = report.dimensions();
        assert!(dims.contains_key(&2) && dims.contains_key(&3), "{dims:?}");
        assert_eq!(max_cell_dimension(&report.cells), Some(3));
        // A point inside a cycle forces its partner onto the opposite point.
        for c in &report.cells {
            let on_cycle: Vec<usize> = c
                .signature
                .placement
                .iter()
                .enumerate()
                .filter(|(_, l)| matches!(l, Location::Edge(0) | Location::Edge(1)))
                .map(|(i, _)| i)
                .collect();
            if on_cycle.is_empty() {
                continue;
            }
            assert_eq!(on_cycle.len(), 2);
            assert_eq!(c.signature.placement[0], c.signature.placement[1]);
            let offs: Vec<Q> = c
                .sample_points
                .iter()
                .map(|p| match p {
                    GraphPoint::Edge { offset, .. } => offset.clone(),
                    _ => unreachable!(),
                })
                .collect();
            assert_eq!(&offs[0] + &offs[1], q(1));
            assert_eq!(c.dimension, 2);
        }
    }

    #[test]
    fn dumbbell_generic_points() {
        let g = dumbbell();
        let d = Divisor::from_terms(
            g.clone(),
            [
                (g.edge_point(0, q_frac(1, 3)).unwrap(), 1),
                (g.edge_point(1, q_frac(1, 2)).unwrap(), 1),
            ],
        )
        .unwrap();
        let report = enumerate_cells(&g, &d, &CellCaps::default()).unwrap();
        check_samples(&d, &report);
        assert_eq!(max_cell_dimension(&report.cells), Some(1));
        assert!(report.cells.iter().all(|c| c.dimension == 1));
    }

    #[test]
    fn zero_divisor_has_one_cell() {
        let g = dumbbell();
        let report = enumerate_cells(&g, &Divisor::zero(g.clone()), &CellCaps::default()).unwrap();
        assert_eq!(report.cells.len(), 1);
        assert_eq!(report.cells[0].dimension, 1);
    }

    #[test]
    fn caps_are_enforced() {
        let g = dumbbell();
        let d = Divisor::from_terms(g.clone(), [(GraphPoint::Vertex(0), 4)]).unwrap();
        assert!(matches!(enumerate_cells(&g, &d, &CellCaps::default()), Err(Error::CapExceeded(_))));
    }
}
