//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Every check is an exact identity; the only tolerances
//! are the runtime limits and the inconclusive budget of the campaign,
//! both pinned below.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tropdiv::chip::script_divisor;
use tropdiv::function::{pole_count, random_function, RandomFunctionOptions};
use tropdiv::harness::{
    lonely_non_integer_cycles, random_curve, random_divisor, random_point, run_campaign, sample_z_member,
    CampaignConfig, CurveShape,
};
use tropdiv::oracle::{loopless_multigraphs, reduced_forms, PrincipalLattice};
use tropdiv::rank::core_divisor;
use tropdiv::rational::{q, q_frac};
use tropdiv::{
    canonical, dhar_reduce, enumerate_cells, linear_equiv, max_cell_dimension, metric_rank, rescale, retract_core,
    slope_bound, tropical_rank, wins_effective, CellCaps, Divisor, Graph, MetricGraph, RankOptions,
};
use tropdiv_cli::{cmd_rank, load_file, Output};

const LIMIT_DUMBBELL: Duration = Duration::from_secs(10);
const LIMIT_CELLS: Duration = Duration::from_secs(60);
const LIMIT_CAMPAIGN: Duration = Duration::from_secs(600);
/// At most 5% of campaign instances may be inconclusive.
const INCONCLUSIVE_PERCENT: usize = 5;
const CAMPAIGN_SEED: u64 = 20_240_601;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("took {:.1} s, limit {} s", e.as_secs_f64(), limit.as_secs()))
}

fn shape(genus: usize, edges: usize, ends: usize, max_den: i64) -> CurveShape {
    CurveShape {
        genus,
        edges,
        ends,
        max_denominator: max_den,
        max_length: 2,
    }
}

fn dumbbell_doc() -> tropdiv_cli::Loaded {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/dumbbell.json");
    load_file(&path).expect("fixture parses")
}

fn first_line_rank(text: &str) -> Option<i64> {
    text.lines().next()?.strip_prefix("rank ")?.parse().ok()
}

fn dumbbell_ranks() -> Check {
    let t = Instant::now();
    let doc = dumbbell_doc();
    let opts = RankOptions::default();
    let k = cmd_rank(&doc, "K", &opts, Output::Text).map_err(|e| e.to_string())?;
    let pq = cmd_rank(&doc, "PQ", &opts, Output::Text).map_err(|e| e.to_string())?;
    let (rk, rpq) = (first_line_rank(&k.text), first_line_rank(&pq.text));
    ensure(rk == Some(1) && k.code == 0, || format!("r(K) reported as {rk:?} (exit {})", k.code))?;
    ensure(rpq == Some(0) && pq.code == 0, || format!("r(P'+Q') reported as {rpq:?}"))?;
    within(t, LIMIT_DUMBBELL)?;
    Ok(format!("r(K) = 1, r(P'+Q') = 0 in {:.2} s", t.elapsed().as_secs_f64()))
}

fn dumbbell_cells() -> Check {
    let t = Instant::now();
    let doc = dumbbell_doc();
    let g = &doc.graph;
    let k = canonical(g);
    let caps = CellCaps::default();
    let rk = enumerate_cells(g, &k, &caps).map_err(|e| e.to_string())?;
    let dims = rk.dimensions();
    ensure(!rk.truncated, || "enumeration truncated".into())?;
    ensure(dims.contains_key(&2) && dims.contains_key(&3), || format!("K dimensions {dims:?}"))?;
    ensure(max_cell_dimension(&rk.cells) == Some(3), || format!("K dimensions {dims:?}"))?;
    let pq = doc.divisor("PQ").map_err(|e| e.to_string())?;
    let rpq = enumerate_cells(g, &pq, &caps).map_err(|e| e.to_string())?;
    let max = max_cell_dimension(&rpq.cells);
    ensure(max == Some(1), || format!("P'+Q' maximal dimension {max:?}"))?;
    within(t, LIMIT_CELLS)?;
    Ok(format!("K dimensions {dims:?}, P'+Q' dimensions {:?}", rpq.dimensions()))
}

fn campaign() -> Check {
    let t = Instant::now();
    let cfg = CampaignConfig {
        seed: CAMPAIGN_SEED,
        instances: 200,
        genus: (0, 3),
        edges: (1, 6),
        degree: (-3, 6),
        max_denominator: 4,
        max_ends: 2,
        scale_cap: 4,
    };
    let report = run_campaign(&cfg).map_err(|e| e.to_string())?;
    let s = &report.summary;
    ensure(s.instances == 200, || format!("{} instances", s.instances))?;
    ensure(s.failed == 0, || {
        let first = report.records.iter().find(|r| r.status == tropdiv::Status::Fail).unwrap();
        format!("{} failures, first: {}", s.failed, serde_json::to_string(first).unwrap())
    })?;
    ensure(s.inconclusive * 100 <= INCONCLUSIVE_PERCENT * s.instances, || {
        format!("{} inconclusive of {}", s.inconclusive, s.instances)
    })?;
    within(t, LIMIT_CAMPAIGN)?;
    let genera: Vec<usize> = (0..=3).map(|g| report.records.iter().filter(|r| r.genus == g).count()).collect();
    Ok(format!(
        "{} passed, {} failed, {} inconclusive; instances per genus {:?}; {:.1} s",
        s.passed,
        s.failed,
        s.inconclusive,
        genera,
        t.elapsed().as_secs_f64()
    ))
}

fn degree_zero() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut count = 0;
    for i in 0..50 {
        let genus = i % 4;
        let edges = genus + rng.random_range(0..=2);
        let ends = rng.random_range(0..=2);
        let g = Arc::new(random_curve(&mut rng, &shape(genus, edges, ends, 4)));
        for _ in 0..20 {
            let f = random_function(&g, &mut rng, &RandomFunctionOptions::default());
            let div = f.principal_divisor();
            ensure(div.degree() == 0, || format!("deg (f) = {} on graph {i}", div.degree()))?;
            for (p, c) in div.terms() {
                ensure(f.order(p) == c, || "order disagrees with the principal divisor".into())?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} functions on 50 graphs, all of degree 0"))
}

fn invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = RankOptions::default();
    let fopts = RandomFunctionOptions {
        max_slope: 2,
        max_denominator: 3,
        max_extra_breakpoints: 1,
    };
    for i in 0..100 {
        let genus = i % 3;
        let edges = genus + rng.random_range(0..=1);
        let g = Arc::new(random_curve(&mut rng, &shape(genus, edges, 0, 3)));
        let degree = rng.random_range(-1..=4);
        let d = random_divisor(&mut rng, &g, degree, 3);
        let f = random_function(&g, &mut rng, &fopts);
        let moved = d.try_add(&f.principal_divisor()).map_err(|e| e.to_string())?;
        let a = metric_rank(&g, &d, &opts).map_err(|e| e.to_string())?;
        let b = metric_rank(&g, &moved, &opts).map_err(|e| e.to_string())?;
        ensure(a.stabilized && b.stabilized && a.rank == b.rank, || {
            format!("pair {i}: r(D) = {}, r(D + (f)) = {}", a.rank, b.rank)
        })?;
    }
    for i in 0..50 {
        let genus = i % 3;
        let edges = genus + rng.random_range(0..=1);
        let g = Arc::new(random_curve(&mut rng, &shape(genus, edges, 0, 3)));
        let degree = rng.random_range(0..=4);
        let d = random_divisor(&mut rng, &g, degree, 3);
        let r = metric_rank(&g, &d, &opts).map_err(|e| e.to_string())?.rank;
        for factor in [q(2), q(3), q_frac(1, 2)] {
            let (scaled, map) = rescale(&g, &factor).map_err(|e| e.to_string())?;
            let scaled = Arc::new(scaled);
            let ds = d.transport(scaled.clone(), |p| map.point(p)).map_err(|e| e.to_string())?;
            let rs = metric_rank(&scaled, &ds, &opts).map_err(|e| e.to_string())?.rank;
            ensure(rs == r, || format!("instance {i}: rank {r} becomes {rs} after scaling"))?;
        }
    }
    Ok("100 equivalence pairs and 50 instances x 3 rescalings agree".into())
}

fn dhar_oracle() -> Check {
    let graphs = loopless_multigraphs(5, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut configs = 0;
    for g in &graphs {
        for _ in 0..20 {
            let d: Vec<i64> = (0..g.vertex_count()).map(|_| rng.random_range(-3..=4)).collect();
            let q0 = rng.random_range(0..g.vertex_count());
            let red = dhar_reduce(g, &d, q0).map_err(|e| e.to_string())?;
            let moved = script_divisor(g, &red.script);
            ensure(d.iter().zip(&moved).map(|(a, b)| a + b).eq(red.config.iter().copied()), || {
                "script does not produce the reduced configuration".into()
            })?;
            let lattice = PrincipalLattice::new(g, q0);
            let forms = reduced_forms(g, &lattice, &d, q0);
            ensure(forms.len() == 1, || format!("{} reduced forms for {d:?} on {g:?}", forms.len()))?;
            ensure(forms[0] == red.config, || format!("Dhar gave {:?}, search gave {:?}", red.config, forms[0]))?;
            configs += 1;
        }
    }
    Ok(format!("{} graphs, {configs} configurations, reduced form unique and matched", graphs.len()))
}

fn end_retraction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = RankOptions::default();
    for i in 0..50 {
        let genus = i % 3;
        let ends = 1 + i % 2;
        let g = Arc::new(random_curve(&mut rng, &shape(genus, genus + 1, ends, 3)));
        let degree = rng.random_range(-1..=4);
        let d = random_divisor(&mut rng, &g, degree, 3);
        let (retraction, on_core) = core_divisor(&d).map_err(|e| e.to_string())?;
        let a = tropical_rank(&d, &opts).map_err(|e| e.to_string())?.rank;
        let b = metric_rank(&retraction.core, &on_core, &opts).map_err(|e| e.to_string())?.rank;
        ensure(a == b, || format!("curve {i}: {a} on the curve, {b} on the core"))?;
        let core = retract_core(&g).map_err(|e| e.to_string())?;
        let k_core = canonical(&core.core)
            .transport(g.clone(), |p| core.from_core(p))
            .map_err(|e| e.to_string())?;
        let k = canonical(&g);
        let w = linear_equiv(&k, &k_core).map_err(|e| e.to_string())?;
        let w = w.ok_or_else(|| format!("curve {i}: K_curve and K_core not equivalent"))?;
        ensure(k.try_add(&w.principal_divisor()).ok() == Some(k_core), || {
            format!("curve {i}: witness does not certify")
        })?;
    }
    Ok("50 curves: ranks agree, K_curve ~ K_core with checked witnesses".into())
}

fn closed_forms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = RankOptions::default();
    for i in 0..20 {
        let edges = rng.random_range(1..=5);
        let g = Arc::new(random_curve(&mut rng, &shape(0, edges, 0, 4)));
        let degree = rng.random_range(0..=4);
        let pts: Vec<_> = (0..degree).map(|_| (random_point(&mut rng, &g, 4), 1)).collect();
        let d = Divisor::from_terms(g.clone(), pts).map_err(|e| e.to_string())?;
        let r = metric_rank(&g, &d, &opts).map_err(|e| e.to_string())?.rank;
        ensure(r == degree, || format!("tree {i}: r = {r}, deg = {degree}"))?;
    }
    let cycle = Arc::new(MetricGraph::build(&["v"], &[("c", "v", "v", "1")]).unwrap());
    for degree in 1..=5 {
        for _ in 0..4 {
            let d = random_divisor(&mut rng, &cycle, degree, 4);
            let r = metric_rank(&cycle, &d, &opts).map_err(|e| e.to_string())?.rank;
            ensure(r == degree - 1, || format!("unit cycle: r({d}) = {r}"))?;
        }
    }
    let mut pairs = 0;
    for n in 2..=8usize {
        let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        let edges: Vec<(String, String, String)> =
            (0..n).map(|i| (format!("e{i}"), names[i].clone(), names[(i + 1) % n].clone())).collect();
        let cyc = Graph::new(&names, &edges).unwrap();
        let lattice = PrincipalLattice::new(&cyc, 0);
        for a in 0..n {
            for b in 0..n {
                let mut d = vec![0i64; n];
                d[a] += 1;
                d[b] -= 1;
                let wins = wins_effective(&cyc, &d, 0).map_err(|e| e.to_string())?;
                // A degree-0 class is effective iff it is principal.
                ensure(wins == (a == b) && wins == lattice.is_principal(&d), || {
                    format!("cycle {n}: A = {a}, B = {b}, wins = {wins}")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("20 trees, unit cycle degrees 1..=5, {pairs} differences A - B"))
}

fn slope_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cells = 0;
    let doc = dumbbell_doc();
    let mut cases: Vec<(Arc<MetricGraph>, Divisor)> = vec![
        (doc.graph.clone(), canonical(&doc.graph)),
        (doc.graph.clone(), doc.divisor("PQ").unwrap()),
    ];
    for i in 0..20 {
        let genus = i % 3;
        let g = Arc::new(random_curve(&mut rng, &shape(genus, (genus + 1).min(3), 0, 2)));
        let degree = rng.random_range(0..=3);
        cases.push((g.clone(), random_divisor(&mut rng, &g, degree, 2)));
    }
    for (g, d) in &cases {
        let report = enumerate_cells(g, d, &CellCaps::default()).map_err(|e| e.to_string())?;
        for c in &report.cells {
            let s = BigInt::from(c.sample.max_abs_slope());
            let own = slope_bound(g.graph(), pole_count(&c.sample).max(1) as u32).unwrap();
            ensure(s <= report.slope_bound && s <= own, || format!("slope {s} exceeds the bound for {d}"))?;
            cells += 1;
        }
    }
    let mut functions = 0;
    for i in 0..50 {
        let genus = i % 4;
        let ends = i % 3;
        let g = Arc::new(random_curve(&mut rng, &shape(genus, genus + 1, ends, 4)));
        for _ in 0..20 {
            let f = random_function(&g, &mut rng, &RandomFunctionOptions::default());
            let p = pole_count(&f).max(1) as u32;
            let bound = slope_bound(g.graph(), p).unwrap();
            ensure(BigInt::from(f.max_abs_slope()) <= bound, || "sampled function exceeds bound".into())?;
            functions += 1;
        }
    }
    Ok(format!("{cells} feasible cells over {} divisors, {functions} sampled functions", cases.len()))
}

fn not_one_nz() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut flags, mut non_integer) = (0, 0);
    for i in 0..200 {
        let genus = 1 + i % 3;
        let edges = genus + rng.random_range(0..=2);
        let g = random_curve(&mut rng, &shape(genus, edges, 0, 1));
        // Integer lengths, doubled so that no loop has length 1.
        let g = Arc::new(rescale(&g, &q(2)).map_err(|e| e.to_string())?.0);
        let m = sample_z_member(&mut rng, &g, 4).map_err(|e| e.to_string())?;
        ensure(m.d.is_z_divisor().unwrap_or(false), || "sampled divisor is not a Z-divisor".into())?;
        let sum = Divisor::from_terms(g.clone(), m.points.iter().map(|p| (p.clone(), 1))).unwrap();
        ensure(m.d.try_add(&m.f.principal_divisor()).ok() == Some(sum), || "(f) + D is not the sampled points".into())?;
        non_integer += m.points.iter().filter(|p| !g.is_integer_point(p)).count();
        flags += lonely_non_integer_cycles(&g, &m.points).len();
    }
    ensure(flags == 0, || format!("{flags} cycles with a single non-Z point"))?;
    ensure(non_integer > 0, || "no sample had a non-Z point".into())?;
    Ok(format!("200 samples, {non_integer} non-Z points, 0 flags"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("dumbbell ranks", dumbbell_ranks),
        ("dumbbell cell dimensions", dumbbell_cells),
        ("Riemann-Roch campaign", campaign),
        ("degree of principal divisors", degree_zero),
        ("equivalence and rescaling invariance", invariance),
        ("Dhar reduction against exhaustive search", dhar_oracle),
        ("retraction of unbounded ends", end_retraction),
        ("trees and the unit cycle", closed_forms),
        ("slope bound", slope_bounds),
        ("no cycle with a single non-Z point", not_one_nz),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
