//! Chip-firing on loopless graphs: q-reduction by Dhar's burning algorithm.
//!
//! A configuration assigns an integer to every vertex. Firing a set `S`
//! moves one chip along every edge leaving `S`. A firing script `x` turns
//! `d` into `d + (x)` with `(x)(v) = sum over edges vw of x(w) - x(v)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Result of a reduction: `config = original + (script)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub config: Vec<i64>,
    pub script: Vec<i64>,
}

fn check(g: &Graph, d: &[i64], q: usize) -> Result<()> {
    if !g.is_loopless() {
        return Err(Error::Precondition("chip-firing needs a loopless graph".into()));
    }
    if d.len() != g.vertex_count() {
        return Err(Error::Precondition("configuration size differs from vertex count".into()));
    }
    if q >= g.vertex_count() {
        return Err(Error::UnknownVertex(q.to_string()));
    }
    Ok(())
}

/// `(x)(v)` for a script `x`.
pub fn script_divisor(g: &Graph, x: &[i64]) -> Vec<i64> {
    let mut out = vec![0; g.vertex_count()];
    for e in g.edges() {
        let diff = x[e.to] - x[e.from];
        out[e.from] += diff;
        out[e.to] -= diff;
    }
    out
}

/// Fires `set` (given as a membership mask) `times` times.
fn fire(g: &Graph, d: &mut [i64], script: &mut [i64], set: &[bool], times: i64) {
    for (v, inside) in set.iter().enumerate() {
        if *inside {
            script[v] += times;
        }
    }
    for e in g.edges() {
        match (set[e.from], set[e.to]) {
            (true, false) => {
                d[e.from] -= times;
                d[e.to] += times;
            }
            (false, true) => {
                d[e.to] -= times;
                d[e.from] += times;
            }
            _ => {}
        }
    }
}

/// Burns from `q`; returns the mask of unburnt vertices and, for each
/// vertex, the number of edges joining it to burnt vertices.
fn burn(g: &Graph, d: &[i64], q: usize) -> (Vec<bool>, Vec<i64>) {
    let n = g.vertex_count();
    let mut burnt = vec![false; n];
    let mut hits = vec![0i64; n];
    burnt[q] = true;
    let mut queue = VecDeque::from([q]);
    while let Some(v) = queue.pop_front() {
        for &e in g.incident_edges(v) {
            let w = g.other_end(e, v);
            if burnt[w] {
                continue;
            }
            hits[w] += 1;
            if hits[w] > d[w] {
                burnt[w] = true;
                queue.push_back(w);
            }
        }
    }
    (burnt.iter().map(|b| !b).collect(), hits)
}

/// True if `d` is q-reduced: nonnegative away from `q` and every vertex
/// burns.
pub fn is_reduced(g: &Graph, d: &[i64], q: usize) -> Result<bool> {
    check(g, d, q)?;
    if d.iter().enumerate().any(|(v, &c)| v != q && c < 0) {
        return Ok(false);
    }
    let (unburnt, _) = burn(g, d, q);
    Ok(!unburnt.iter().any(|&u| u))
}

/// The unique q-reduced configuration equivalent to `d`, with the script
/// reaching it.
pub fn dhar_reduce(g: &Graph, d: &[i64], q: usize) -> Result<Reduction> {
    check(g, d, q)?;
    let n = g.vertex_count();
    let mut config = d.to_vec();
    let mut script = vec![0i64; n];

    // Stage 1: clear debt away from q, layer by layer from the outside in.
    // Firing the ball of radius j - 1 around q feeds every vertex at
    // distance j without touching vertices further out.
    let mut dist = vec![usize::MAX; n];
    dist[q] = 0;
    let mut order = vec![q];
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &e in g.incident_edges(v) {
            let w = g.other_end(e, v);
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                order.push(w);
            }
        }
    }
    let radius = dist.iter().copied().max().unwrap_or(0);
    for j in (1..=radius).rev() {
        let ball: Vec<bool> = dist.iter().map(|&x| x < j).collect();
        let mut times = 0i64;
        for v in 0..n {
            if dist[v] == j && config[v] < 0 {
                let feed = g
                    .incident_edges(v)
                    .iter()
                    .filter(|&&e| ball[g.other_end(e, v)])
                    .count() as i64;
                times = times.max((-config[v] + feed - 1) / feed);
            }
        }
        if times > 0 {
            fire(g, &mut config, &mut script, &ball, times);
        }
    }

    // Stage 2: fire the unburnt set as often as stays legal, until all burns.
    loop {
        let (unburnt, hits) = burn(g, &config, q);
        if !unburnt.iter().any(|&u| u) {
            break;
        }
        let times = (0..n)
            .filter(|&v| unburnt[v] && hits[v] > 0)
            .map(|v| config[v] / hits[v])
            .min()
            .expect("the unburnt set borders the burnt one");
        fire(g, &mut config, &mut script, &unburnt, times.max(1));
    }
    Ok(Reduction { config, script })
}

/// True iff `d` is equivalent to an effective configuration.
pub fn wins_effective(g: &Graph, d: &[i64], q: usize) -> Result<bool> {
    if d.iter().sum::<i64>() < 0 {
        return Ok(false);
    }
    Ok(dhar_reduce(g, d, q)?.config[q] >= 0)
}
