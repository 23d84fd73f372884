//! Seeded Riemann–Roch campaigns and random instance generators.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::divisor::{canonical, Divisor};
use crate::error::{Error, Result};
use crate::format::graph_to_spec;
use crate::function::RationalFunction;
use crate::graph::{Graph, GraphPoint, Length, MetricGraph};
use crate::rank::{reduce, tropical_rank, RankOptions};
use crate::rational::{format_rational, q, q_frac, Q};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub seed: u64,
    pub instances: usize,
    /// Inclusive genus range.
    pub genus: (usize, usize),
    /// Inclusive range for the number of bounded edges.
    pub edges: (usize, usize),
    /// Inclusive degree range.
    pub degree: (i64, i64),
    pub max_denominator: i64,
    /// Unbounded ends per curve, 0 up to this many.
    #[serde(default)]
    pub max_ends: usize,
    #[serde(default = "default_scale_cap")]
    pub scale_cap: u32,
}

fn default_scale_cap() -> u32 {
    4
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Precondition(m.to_string()));
        if self.genus.0 > self.genus.1 || self.edges.0 > self.edges.1 || self.degree.0 > self.degree.1 {
            return bad("empty range in campaign config");
        }
        if self.edges.1 == 0 || self.genus.0 > self.edges.1 {
            return bad("edge range cannot hold the requested genus");
        }
        if self.max_denominator < 1 {
            return bad("max_denominator must be at least 1");
        }
        if self.scale_cap < 1 {
            return bad("scale cap must be at least 1");
        }
        Ok(())
    }
}

/// Shape of a random curve.
#[derive(Clone, Debug)]
pub struct CurveShape {
    pub genus: usize,
    pub edges: usize,
    pub ends: usize,
    pub max_denominator: i64,
    /// Lengths are drawn from `(0, max_length]`.
    pub max_length: i64,
}

fn random_length<R: Rng>(rng: &mut R, max_den: i64, max_len: i64) -> Q {
    let b = rng.random_range(1..=max_den.max(1));
    let a = rng.random_range(1..=max_len.max(1) * b);
    q_frac(a, b)
}

/// A connected multigraph with `genus` independent cycles and `edges`
/// bounded edges (loops and parallel edges allowed), plus unbounded ends at
/// random vertices.
pub fn random_curve<R: Rng>(rng: &mut R, shape: &CurveShape) -> MetricGraph {
    let edges = shape.edges.max(shape.genus).max(1);
    let n = edges - shape.genus + 1;
    let mut names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut triples: Vec<(String, String, String)> = Vec::new();
    let mut lengths = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        triples.push((format!("e{}", triples.len()), names[j].clone(), names[i].clone()));
        lengths.push(Length::Finite(random_length(rng, shape.max_denominator, shape.max_length)));
    }
    for _ in 0..shape.genus {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        triples.push((format!("e{}", triples.len()), names[a].clone(), names[b].clone()));
        lengths.push(Length::Finite(random_length(rng, shape.max_denominator, shape.max_length)));
    }
    for k in 0..shape.ends {
        let a = rng.random_range(0..n);
        let end = format!("w{k}");
        names.push(end.clone());
        triples.push((format!("r{k}"), names[a].clone(), end));
        lengths.push(Length::Infinite);
    }
    let graph = Graph::new(&names, &triples).expect("generated graph is well formed");
    MetricGraph::new(graph, lengths).expect("generated lengths are valid")
}

/// A random point; `max_den` bounds the denominators of offsets.
pub fn random_point<R: Rng>(rng: &mut R, g: &MetricGraph, max_den: i64) -> GraphPoint {
    let gr = g.graph();
    loop {
        let roll = rng.random_range(0..10);
        if roll < 4 || gr.edge_count() == 0 {
            let v = rng.random_range(0..gr.vertex_count());
            if !g.is_end_vertex(v) || roll == 0 {
                return g.vertex_point(v);
            }
            continue;
        }
        let e = rng.random_range(0..gr.edge_count());
        let b = rng.random_range(1..=max_den.max(1));
        match g.length(e) {
            Length::Finite(l) => {
                // Offsets k / (b * denom(l)) strictly inside the edge.
                let den = b * l.denom().try_into().unwrap_or(1i64);
                let steps: i64 = (l * q(den)).to_integer().try_into().unwrap_or(1);
                if steps < 2 {
                    continue;
                }
                let k = rng.random_range(1..steps);
                return g.edge_point(e, q_frac(k, den)).unwrap();
            }
            Length::Infinite => {
                let k = rng.random_range(1..=3 * b);
                return g.edge_point(e, q_frac(k, b)).unwrap();
            }
        }
    }
}

/// A divisor of the given degree with a few positive and negative unit terms.
pub fn random_divisor<R: Rng>(rng: &mut R, g: &Arc<MetricGraph>, degree: i64, max_den: i64) -> Divisor {
    let neg = rng.random_range(0..=2) + (-degree).max(0);
    let pos = degree + neg;
    let mut terms: Vec<(GraphPoint, i64)> = Vec::new();
    for i in 0..pos + neg {
        terms.push((random_point(rng, g, max_den), if i < pos { 1 } else { -1 }));
    }
    Divisor::from_terms(g.clone(), terms).expect("points are canonical")
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Instance `index` of a campaign; the same `(seed, index)` always gives
/// the same curve and divisor.
pub fn random_instance(cfg: &CampaignConfig, index: usize) -> (Arc<MetricGraph>, Divisor) {
    let mut rng = rng_for(cfg.seed, index as u64);
    let genus = rng.random_range(cfg.genus.0..=cfg.genus.1.min(cfg.edges.1));
    let edges = rng.random_range(cfg.edges.0.max(genus).max(1)..=cfg.edges.1);
    let ends = rng.random_range(0..=cfg.max_ends);
    let shape = CurveShape {
        genus,
        edges,
        ends,
        max_denominator: cfg.max_denominator,
        max_length: 2,
    };
    let g = Arc::new(random_curve(&mut rng, &shape));
    let degree = rng.random_range(cfg.degree.0..=cfg.degree.1);
    let d = random_divisor(&mut rng, &g, degree, cfg.max_denominator);
    (g, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub graph_hash: String,
    pub genus: usize,
    pub degree: i64,
    pub divisor: String,
    pub r_d: i64,
    pub r_k_minus_d: i64,
    /// `r(D) - r(K - D)`
    pub lhs: i64,
    /// `deg D + 1 - g`
    pub rhs: i64,
    pub scales_d: Vec<u64>,
    pub scales_k_minus_d: Vec<u64>,
    pub stabilized: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InstanceRecord {
    /// `1 - 0 = 2 + 1 - 2 PASS`
    pub fn identity_line(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        format!("{} - {} = {} + 1 - {} {}", self.r_d, self.r_k_minus_d, self.degree, self.genus, status)
    }
}

/// SHA-256 of the graph's document form.
pub fn graph_hash(g: &MetricGraph) -> String {
    let json = serde_json::to_string(&graph_to_spec(g)).expect("graph spec serializes");
    Sha256::digest(json.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Checks `r(D) - r(K - D) = deg D + 1 - g` on one curve.
pub fn verify_rr(curve: &Arc<MetricGraph>, d: &Divisor, opts: &RankOptions) -> InstanceRecord {
    let genus = curve.genus();
    let degree = d.degree();
    let mut record = InstanceRecord {
        index: 0,
        graph_hash: graph_hash(curve),
        genus,
        degree,
        divisor: d.to_string(),
        r_d: 0,
        r_k_minus_d: 0,
        lhs: 0,
        rhs: degree + 1 - genus as i64,
        scales_d: Vec::new(),
        scales_k_minus_d: Vec::new(),
        stabilized: false,
        status: Status::Inconclusive,
        note: None,
    };
    let ranks = canonical(curve)
        .try_sub(d)
        .and_then(|kd| Ok((tropical_rank(d, opts)?, tropical_rank(&kd, opts)?)));
    let (rd, rkd) = match ranks {
        Ok(r) => r,
        Err(e) => {
            record.note = Some(e.to_string());
            return record;
        }
    };
    record.r_d = rd.rank;
    record.r_k_minus_d = rkd.rank;
    record.lhs = rd.rank - rkd.rank;
    record.scales_d = rd.scales_tested;
    record.scales_k_minus_d = rkd.scales_tested;
    record.stabilized = rd.stabilized && rkd.stabilized;
    record.status = if !record.stabilized {
        record.note = Some("rank did not stabilize within the scale cap".into());
        Status::Inconclusive
    } else if record.lhs == record.rhs {
        Status::Pass
    } else {
        Status::Fail
    };
    record
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub runtime_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignReport {
    pub records: Vec<InstanceRecord>,
    pub summary: Summary,
}

impl CampaignReport {
    fn from_records(records: Vec<InstanceRecord>, runtime_ms: u128) -> Self {
        let count = |s| records.iter().filter(|r| r.status == s).count();
        let summary = Summary {
            instances: records.len(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            inconclusive: count(Status::Inconclusive),
            runtime_ms,
        };
        CampaignReport { records, summary }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.inconclusive == 0
    }

    /// One JSON object per instance, then the summary.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>5}  {:>3}  {:>4}  {:>5}  {:>7}  {:<24}  {}", "index", "g", "deg", "r(D)", "r(K-D)", "identity", "graph");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>5}  {:>3}  {:>4}  {:>5}  {:>7}  {:<24}  {}",
                r.index,
                r.genus,
                r.degree,
                r.r_d,
                r.r_k_minus_d,
                r.identity_line(),
                &r.graph_hash[..12]
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "instances {}  passed {}  failed {}  inconclusive {}  runtime {} ms",
            s.instances, s.passed, s.failed, s.inconclusive, s.runtime_ms
        );
        out
    }
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let start = Instant::now();
    let opts = RankOptions {
        scale_cap: cfg.scale_cap,
        ..RankOptions::default()
    };
    let records = (0..cfg.instances)
        .map(|i| {
            let (g, d) = random_instance(cfg, i);
            let mut r = verify_rr(&g, &d, &opts);
            r.index = i;
            r
        })
        .collect();
    Ok(CampaignReport::from_records(records, start.elapsed().as_millis()))
}

/// Small hand-made curves: the dumbbell, a loop and a segment, each with a
/// few divisors.
pub fn fixtures() -> Vec<(String, Arc<MetricGraph>, Divisor)> {
    let dumbbell = Arc::new(
        MetricGraph::build(
            &["P", "Q"],
            &[("c1", "P", "P", "2"), ("c2", "Q", "Q", "3"), ("e", "P", "Q", "1")],
        )
        .unwrap(),
    );
    let lp = Arc::new(MetricGraph::build(&["v"], &[("c", "v", "v", "1")]).unwrap());
    let segment = Arc::new(MetricGraph::build(&["a", "b"], &[("e", "a", "b", "3/2")]).unwrap());
    let mut out = Vec::new();
    let k = canonical(&dumbbell);
    out.push(("dumbbell K".to_string(), dumbbell.clone(), k));
    let pq = Divisor::from_terms(
        dumbbell.clone(),
        [
            (dumbbell.edge_point(0, q(1)).unwrap(), 1),
            (dumbbell.edge_point(1, q_frac(1, 2)).unwrap(), 1),
        ],
    )
    .unwrap();
    out.push(("dumbbell P'+Q'".to_string(), dumbbell.clone(), pq));
    out.push(("dumbbell 0".to_string(), dumbbell.clone(), Divisor::zero(dumbbell.clone())));
    out.push(("loop 0".to_string(), lp.clone(), Divisor::zero(lp.clone())));
    let half = Divisor::from_terms(lp.clone(), [(lp.edge_point(0, q_frac(1, 2)).unwrap(), 2), (GraphPoint::Vertex(0), -1)]).unwrap();
    out.push(("loop 2c@1/2 - v".to_string(), lp.clone(), half));
    out.push(("segment 0".to_string(), segment.clone(), Divisor::zero(segment.clone())));
    let seg = Divisor::from_terms(segment.clone(), [(segment.edge_point(0, q_frac(1, 3)).unwrap(), 2)]).unwrap();
    out.push(("segment 2e@1/3".to_string(), segment.clone(), seg));
    out
}

pub fn run_fixtures(opts: &RankOptions) -> CampaignReport {
    let start = Instant::now();
    let records = fixtures()
        .iter()
        .enumerate()
        .map(|(i, (_, g, d))| {
            let mut r = verify_rr(g, d, opts);
            r.index = i;
            r
        })
        .collect();
    CampaignReport::from_records(records, start.elapsed().as_millis())
}

/// Cycles containing exactly one point that is not a Z-point, given a
/// Z-graph and a multiset of points (repeated entries count separately).
pub fn lonely_non_integer_cycles(g: &MetricGraph, points: &[GraphPoint]) -> Vec<Vec<usize>> {
    let bounded: Vec<usize> = (0..g.graph().edge_count()).filter(|&e| !g.length(e).is_infinite()).collect();
    g.graph()
        .simple_cycles()
        .into_iter()
        .filter(|c| c.iter().all(|e| bounded.contains(e)))
        .filter(|cycle| {
            points
                .iter()
                .filter(|p| match p {
                    GraphPoint::Edge { edge, offset } => cycle.contains(edge) && !offset.is_integer(),
                    _ => false,
                })
                .count()
                == 1
        })
        .collect()
}

/// A sampled member `(f, P_1..P_n)` of S(D).
#[derive(Clone, Debug)]
pub struct Member {
    pub d: Divisor,
    pub f: RationalFunction,
    pub points: Vec<GraphPoint>,
}

/// Samples a Z-divisor `D` of degree at least the genus on a bounded
/// Z-graph and a member of S(D), obtained by reducing `D` with respect to a
/// random point with denominator up to `max_den`.
pub fn sample_z_member<R: Rng>(rng: &mut R, g: &Arc<MetricGraph>, max_den: i64) -> Result<Member> {
    let genus = g.genus() as i64;
    let degree = genus + rng.random_range(0..=2);
    let d = random_divisor(rng, g, degree, 1);
    let base = random_point(rng, g, max_den);
    let (reduced, f) = reduce(&d, &base)?;
    if !reduced.is_effective() {
        return Err(Error::Precondition(format!("reduced divisor {reduced} is not effective")));
    }
    let mut points = Vec::new();
    for (p, c) in reduced.terms() {
        points.extend(std::iter::repeat_n(p.clone(), c as usize));
    }
    Ok(Member { d, f, points })
}

/// Exact description of a point for messages.
pub fn point_label(g: &MetricGraph, p: &GraphPoint) -> String {
    match p {
        GraphPoint::Edge { edge, offset } => format!("{}@{}", g.graph().edge(*edge).id, format_rational(offset)),
        _ => g.describe_point(p),
    }
}
