//! Ranks of divisors and linear equivalence.
//!
//! The discrete rank on a Z-graph only lets Z-points move. The metric rank of
//! a divisor with rational support is obtained from discrete ranks on a
//! schedule of integer rescalings; on a tropical curve, divisors are first
//! pushed onto the bounded core.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::chip::{dhar_reduce, wins_effective};
use crate::divisor::{retract_divisor, same_host, Divisor};
use crate::error::{Error, Result};
use crate::function::{EdgeFunction, RationalFunction};
use crate::graph::{rescale, retract_core, unit_subdivide, GraphPoint, IntegerModel, Length, MetricGraph, Retraction};
use crate::jacobian::Jacobian;
use crate::rational::{lcm_denominators, lcm_upto, q, Q};

/// How the discrete rank at a single scale is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    /// Sumsets of Abel–Jacobi classes of Z-points.
    Jacobian,
    /// Every multiset of Z-points, each tested by q-reduction.
    Enumerate,
}

#[derive(Clone, Debug)]
pub struct RankOptions {
    /// Largest `k` in the scale schedule `base * lcm(1..k)`.
    pub scale_cap: u32,
    pub method: RankMethod,
    /// Refuse sumsets larger than this many classes.
    pub max_sumset: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions {
            scale_cap: 4,
            method: RankMethod::Jacobian,
            max_sumset: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub rank: i64,
    /// Total rescaling factors used, in order.
    pub scales_tested: Vec<u64>,
    /// Ranks observed at those scales.
    pub ranks_observed: Vec<i64>,
    pub stabilized: bool,
    /// Effective divisor `E` with `deg E = rank + 1` and `D - E` not
    /// equivalent to an effective divisor.
    pub witness: Option<Divisor>,
}

/// Discrete rank with a certificate: `E` of degree `rank + 1` made of
/// Z-points such that `D - E` is not equivalent to an effective divisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteRank {
    pub rank: i64,
    pub witness: Divisor,
}

fn check_discrete(g: &Arc<MetricGraph>, d: &Divisor) -> Result<()> {
    if !same_host(g, d.host()) {
        return Err(Error::HostMismatch);
    }
    if g.has_infinite_edges() {
        return Err(Error::HasInfiniteEdges);
    }
    if !d.is_z_divisor()? {
        return Err(Error::NotIntegerDivisor);
    }
    Ok(())
}

/// Sumsets `W_j` of classes of effective divisors of degree `j`.
struct Sumsets<'a> {
    jac: &'a Jacobian,
    points: Vec<(GraphPoint, u64)>,
    distinct: Vec<u64>,
    w: Vec<HashSet<u64>>,
    max: usize,
}

impl<'a> Sumsets<'a> {
    fn new(jac: &'a Jacobian, max: usize) -> Result<Self> {
        let points: Vec<(GraphPoint, u64)> = jac
            .host()
            .integer_points()?
            .into_iter()
            .map(|p| {
                let c = jac.point_class(&p)?;
                Ok((p, c))
            })
            .collect::<Result<_>>()?;
        let mut distinct: Vec<u64> = points.iter().map(|(_, c)| *c).collect();
        distinct.sort_unstable();
        distinct.dedup();
        Ok(Sumsets {
            jac,
            points,
            distinct,
            w: vec![HashSet::from([0u64])],
            max,
        })
    }

    fn level(&mut self, j: usize) -> Result<&HashSet<u64>> {
        while self.w.len() <= j {
            let prev = self.w.last().unwrap();
            let bound = prev.len().saturating_mul(self.distinct.len());
            if bound > self.max && (self.jac.order() as usize) > self.max {
                return Err(Error::CapExceeded(format!(
                    "sumset of degree {} may hold {} classes",
                    self.w.len(),
                    bound
                )));
            }
            let mut next = HashSet::with_capacity(bound.min(self.jac.order() as usize));
            for &a in prev {
                for &b in &self.distinct {
                    next.insert(self.jac.add(a, b));
                }
            }
            self.w.push(next);
        }
        Ok(&self.w[j])
    }

    /// Every class of degree `j >= genus` is effective.
    fn contains(&mut self, j: i64, x: u64) -> Result<bool> {
        if j < 0 {
            return Ok(false);
        }
        if j as usize >= self.jac.genus() {
            return Ok(true);
        }
        Ok(self.level(j as usize)?.contains(&x))
    }

    /// Z-points whose classes add up to `x`, which must lie in `W_k`.
    fn decompose(&mut self, x: u64, k: usize) -> Result<Vec<GraphPoint>> {
        let mut out = Vec::with_capacity(k);
        let mut rest = x;
        for left in (0..k).rev() {
            let mut found = None;
            for i in 0..self.points.len() {
                let r = self.jac.sub(rest, self.points[i].1);
                if self.contains(left as i64, r)? {
                    found = Some((i, r));
                    break;
                }
            }
            let (i, r) = found.expect("class lies in the sumset");
            out.push(self.points[i].0.clone());
            rest = r;
        }
        Ok(out)
    }
}

fn jacobian_rank(g: &Arc<MetricGraph>, d: &Divisor, max_sumset: usize) -> Result<DiscreteRank> {
    let n = d.degree();
    let zero = Divisor::zero(g.clone());
    if n < 0 {
        return Ok(DiscreteRank { rank: -1, witness: zero });
    }
    let jac = Jacobian::new(g)?;
    let genus = jac.genus() as i64;
    let dc = jac.divisor_class(d)?;
    let mut sums = Sumsets::new(&jac, max_sumset)?;
    let to_witness = |pts: Vec<GraphPoint>| Divisor::from_terms(g.clone(), pts.into_iter().map(|p| (p, 1)));
    if !sums.contains(n, dc)? {
        return Ok(DiscreteRank { rank: -1, witness: zero });
    }
    for k in 1..=n {
        let m = n - k;
        if m >= genus {
            continue;
        }
        if k >= genus {
            // Every class is a sum of k points; pick a non-effective target.
            let mut x = 0u64;
            while sums.contains(m, x)? {
                x += 1;
            }
            let w = jac.sub(dc, x);
            let pts = sums.decompose(w, k as usize)?;
            return Ok(DiscreteRank {
                rank: k - 1,
                witness: to_witness(pts)?,
            });
        }
        let level: Vec<u64> = sums.level(k as usize)?.iter().copied().collect();
        let mut bad = None;
        for w in level {
            if !sums.contains(m, jac.sub(dc, w))? {
                bad = Some(bad.map_or(w, |b: u64| b.min(w)));
            }
        }
        if let Some(w) = bad {
            let pts = sums.decompose(w, k as usize)?;
            return Ok(DiscreteRank {
                rank: k - 1,
                witness: to_witness(pts)?,
            });
        }
    }
    // Removing deg D + 1 points always leaves a negative degree.
    let witness = Divisor::from_terms(g.clone(), [(GraphPoint::Vertex(0), n + 1)])?;
    Ok(DiscreteRank { rank: n, witness })
}

/// Chip configuration of a Z-divisor on the unit subdivision.
pub fn configuration(model: &IntegerModel, d: &Divisor) -> Result<Vec<i64>> {
    let mut c = vec![0i64; model.graph.vertex_count()];
    for (p, k) in d.terms() {
        let v = model.vertex_of(p).ok_or(Error::NotIntegerDivisor)?;
        c[v] += k;
    }
    Ok(c)
}

/// Visits multisets of size `k` from `0..n` in lexicographic order until
/// `visit` returns true.
fn find_multiset(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> Result<bool>) -> Result<Option<Vec<usize>>> {
    let mut idx = vec![0usize; k];
    if k > 0 && n == 0 {
        return Ok(None);
    }
    loop {
        if visit(&idx)? {
            return Ok(Some(idx));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
            if idx[i] + 1 < n {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[i];
                }
                break;
            }
        }
    }
}

fn enumerative_rank(g: &Arc<MetricGraph>, d: &Divisor) -> Result<DiscreteRank> {
    let n = d.degree();
    let zero = Divisor::zero(g.clone());
    if n < 0 {
        return Ok(DiscreteRank { rank: -1, witness: zero });
    }
    let model = unit_subdivide(g)?;
    let base = configuration(&model, d)?;
    let nv = model.graph.vertex_count();
    for k in 0..=(n as usize + 1) {
        let failing = find_multiset(nv, k, |e| {
            let mut c = base.clone();
            for &v in e {
                c[v] -= 1;
            }
            Ok(!wins_effective(&model.graph, &c, 0)?)
        })?;
        if let Some(e) = failing {
            let witness = Divisor::from_terms(g.clone(), e.into_iter().map(|v| (model.points[v].clone(), 1)))?;
            return Ok(DiscreteRank {
                rank: k as i64 - 1,
                witness,
            });
        }
    }
    unreachable!("a multiset of degree deg D + 1 always fails")
}

/// Rank on a Z-graph where only Z-points may be used.
pub fn discrete_rank(g: &Arc<MetricGraph>, d: &Divisor, method: RankMethod) -> Result<DiscreteRank> {
    discrete_rank_with(g, d, method, RankOptions::default().max_sumset)
}

fn discrete_rank_with(g: &Arc<MetricGraph>, d: &Divisor, method: RankMethod, max_sumset: usize) -> Result<DiscreteRank> {
    check_discrete(g, d)?;
    for (i, e) in g.graph().edges().iter().enumerate() {
        if e.is_loop() && g.length(i) == &Length::Finite(Q::one()) {
            return Err(Error::UnitLoop(e.id.clone()));
        }
    }
    match method {
        RankMethod::Jacobian => jacobian_rank(g, d, max_sumset),
        RankMethod::Enumerate => enumerative_rank(g, d),
    }
}

/// Smallest integer factor making all lengths and support offsets integers
/// and every loop longer than 1.
pub fn base_scale(g: &MetricGraph, extra: impl IntoIterator<Item = GraphPoint>) -> Result<u64> {
    let mut offsets = Vec::new();
    for p in extra {
        if let GraphPoint::Edge { offset, .. } = p {
            offsets.push(offset);
        }
    }
    let lcm = lcm_denominators(g.lengths().iter().filter_map(Length::finite).chain(offsets.iter()));
    let mut s = lcm.to_u64().ok_or(Error::Overflow("base scale"))?;
    let unit_loop = g.graph().edges().iter().enumerate().any(|(i, e)| {
        e.is_loop() && g.length(i).finite().is_some_and(|l| l * q(s as i64) == Q::one())
    });
    if unit_loop {
        s *= 2;
    }
    Ok(s)
}

/// Rank of a divisor with rational support on a bounded metric graph.
pub fn metric_rank(g: &Arc<MetricGraph>, d: &Divisor, opts: &RankOptions) -> Result<RankReport> {
    if !same_host(g, d.host()) {
        return Err(Error::HostMismatch);
    }
    if g.has_infinite_edges() {
        return Err(Error::HasInfiniteEdges);
    }
    if opts.scale_cap == 0 {
        return Err(Error::Precondition("scale cap must be at least 1".into()));
    }
    if d.degree() < 0 {
        return Ok(RankReport {
            rank: -1,
            scales_tested: Vec::new(),
            ranks_observed: Vec::new(),
            stabilized: true,
            witness: Some(Divisor::zero(g.clone())),
        });
    }
    let base = base_scale(g, d.support().cloned())?;
    let mut scales = Vec::new();
    let mut ranks = Vec::new();
    let mut best: Option<(i64, Divisor)> = None;
    let mut stabilized = false;
    for k in 1..=opts.scale_cap {
        let s = base.checked_mul(lcm_upto(k)).ok_or(Error::Overflow("scale"))?;
        let factor = Q::from_integer(BigInt::from(s));
        let (scaled, map) = rescale(g, &factor)?;
        let scaled = Arc::new(scaled);
        let ds = d.transport(scaled.clone(), |p| map.point(p))?;
        let r = discrete_rank_with(&scaled, &ds, opts.method, opts.max_sumset)?;
        let back = map.inverse();
        let witness = r.witness.transport(g.clone(), |p| back.point(p))?;
        if best.as_ref().is_none_or(|(b, _)| r.rank < *b) {
            best = Some((r.rank, witness));
        }
        let agrees = ranks.last() == Some(&r.rank);
        scales.push(s);
        ranks.push(r.rank);
        if agrees {
            stabilized = true;
            break;
        }
    }
    let (rank, witness) = best.expect("at least one scale");
    Ok(RankReport {
        rank,
        scales_tested: scales,
        ranks_observed: ranks,
        stabilized,
        witness: Some(witness),
    })
}

/// The core of a curve and the divisor moved onto it.
pub fn core_divisor(d: &Divisor) -> Result<(Retraction, Divisor)> {
    let curve = d.host();
    let retraction = retract_core(curve)?;
    let (moved, _) = retract_divisor(d)?;
    let on_core = Divisor::from_terms(
        retraction.core.clone(),
        moved
            .terms()
            .map(|(p, c)| (retraction.to_core(p).expect("retracted divisor lives on the core"), c)),
    )?;
    Ok((retraction, on_core))
}

/// Rank on a tropical curve: retract to the core, then take the metric rank.
pub fn tropical_rank(d: &Divisor, opts: &RankOptions) -> Result<RankReport> {
    let (retraction, on_core) = core_divisor(d)?;
    let mut report = metric_rank(&retraction.core, &on_core, opts)?;
    if let Some(w) = report.witness.take() {
        report.witness = Some(w.transport(d.host().clone(), |p| retraction.from_core(p))?);
    }
    Ok(report)
}

/// Integer rescaling of a bounded graph together with its unit model.
struct Lattice {
    scale: u64,
    scaled: Arc<MetricGraph>,
    model: IntegerModel,
}

fn lattice(g: &Arc<MetricGraph>, points: impl IntoIterator<Item = GraphPoint>) -> Result<Lattice> {
    let s = base_scale(g, points)?;
    let (scaled, _) = rescale(g, &Q::from_integer(BigInt::from(s)))?;
    let scaled = Arc::new(scaled);
    let model = unit_subdivide(&scaled)?;
    Ok(Lattice { scale: s, scaled, model })
}

impl Lattice {
    fn point(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Edge { edge, offset } => GraphPoint::Edge {
                edge: *edge,
                offset: offset * q(self.scale as i64),
            },
            other => other.clone(),
        }
    }

    fn unpoint(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Edge { edge, offset } => GraphPoint::Edge {
                edge: *edge,
                offset: offset / q(self.scale as i64),
            },
            other => other.clone(),
        }
    }

    fn config(&self, d: &Divisor) -> Result<Vec<i64>> {
        let ds = d.transport(self.scaled.clone(), |p| self.point(p))?;
        configuration(&self.model, &ds)
    }

    /// The function on the original graph given by a script on model vertices.
    fn function(&self, g: &Arc<MetricGraph>, script: &[i64]) -> Result<RationalFunction> {
        let mg = self.scaled.graph();
        let values: Vec<Q> = (0..mg.vertex_count()).map(|v| q(script[v])).collect();
        let edges = self
            .model
            .chains
            .iter()
            .map(|chain| EdgeFunction {
                breakpoints: chain.iter().enumerate().map(|(k, &v)| (q(k as i64), q(script[v]))).collect(),
                end_slope: 0,
            })
            .collect();
        let f = RationalFunction::new(self.scaled.clone(), values, edges)?;
        f.rescaled(g.clone(), &(Q::one() / q(self.scale as i64)))
    }
}

/// `f` with `(f) = -d` on a bounded graph if `d` is principal.
fn principal_witness(g: &Arc<MetricGraph>, d: &Divisor) -> Result<Option<RationalFunction>> {
    if d.degree() != 0 {
        return Ok(None);
    }
    let lat = lattice(g, d.support().cloned())?;
    let red = dhar_reduce(&lat.model.graph, &lat.config(d)?, 0)?;
    if red.config.iter().any(|&c| c != 0) {
        return Ok(None);
    }
    Ok(Some(lat.function(g, &red.script)?))
}

/// Decides `d1 ~ d2`; when equivalent, returns `f` with `d2 = d1 + (f)`.
pub fn linear_equiv(d1: &Divisor, d2: &Divisor) -> Result<Option<RationalFunction>> {
    if !same_host(d1.host(), d2.host()) {
        return Err(Error::HostMismatch);
    }
    if d1.degree() != d2.degree() {
        return Ok(None);
    }
    let curve = d1.host();
    let diff = d2.try_sub(d1)?;
    // diff + (f) lives on the core.
    let (retraction, on_core) = core_divisor(&diff)?;
    let (_, f) = retract_divisor(&diff)?;
    let Some(h) = principal_witness(&retraction.core, &on_core)? else {
        return Ok(None);
    };
    // (h) = -(diff + (f)), hence d2 = d1 + diff = d1 + (-h - f).
    let ext = extend_from_core(curve, &retraction, &h)?;
    let witness = ext.scaled(-1).try_add(&f.scaled(-1))?;
    Ok(Some(witness))
}

/// Extends a core function to the curve, constant along unbounded edges.
fn extend_from_core(curve: &Arc<MetricGraph>, retraction: &Retraction, h: &RationalFunction) -> Result<RationalFunction> {
    let g = curve.graph();
    let mut values = vec![Q::zero(); g.vertex_count()];
    let mut edges = Vec::with_capacity(g.edge_count());
    for (v, val) in values.iter_mut().enumerate() {
        if !curve.is_end_vertex(v) {
            let cp = retraction.to_core(&GraphPoint::Vertex(v)).expect("core vertex");
            *val = match h.evaluate(&cp) {
                crate::function::ExtValue::Finite(x) => x,
                _ => unreachable!("bounded core"),
            };
        }
    }
    for e in 0..g.edge_count() {
        match curve.length(e) {
            Length::Infinite => edges.push(EdgeFunction {
                breakpoints: vec![(Q::zero(), values[g.edge(e).from].clone())],
                end_slope: 0,
            }),
            Length::Finite(_) => {
                let ce = match retraction.to_core(&GraphPoint::Edge { edge: e, offset: Q::zero() }) {
                    Some(GraphPoint::Edge { edge, .. }) => edge,
                    _ => unreachable!("bounded edge maps to the core"),
                };
                edges.push(h.edge_function(ce).clone());
            }
        }
    }
    RationalFunction::new(curve.clone(), values, edges)
}

/// The q-reduced representative of `d` computed on the unit model of the
/// smallest integer rescaling on which `d` and `base` are Z-points; returns
/// it together with `f` such that `reduced = d + (f)`.
pub fn reduce(d: &Divisor, base: &GraphPoint) -> Result<(Divisor, RationalFunction)> {
    let g = d.host();
    if g.has_infinite_edges() {
        return Err(Error::HasInfiniteEdges);
    }
    let base = g.canonical(base)?;
    let lat = lattice(g, d.support().cloned().chain([base.clone()]))?;
    let q_vertex = lat.model.vertex_of(&lat.point(&base)).expect("base is a Z-point at this scale");
    let red = dhar_reduce(&lat.model.graph, &lat.config(d)?, q_vertex)?;
    let reduced = Divisor::from_terms(
        g.clone(),
        red.config
            .iter()
            .enumerate()
            .map(|(v, &c)| (lat.unpoint(&lat.model.points[v]), c)),
    )?;
    Ok((reduced, lat.function(g, &red.script)?))
}

/// Whether `d` is equivalent to an effective divisor on a bounded graph.
pub fn is_effective_class(d: &Divisor) -> Result<bool> {
    if d.degree() < 0 {
        return Ok(false);
    }
    let (reduced, _) = reduce(d, &GraphPoint::Vertex(0))?;
    Ok(reduced.is_effective())
}
