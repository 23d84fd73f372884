//! Brute-force references for chip-firing: exhaustive generation of small
//! loopless multigraphs and a search for q-reduced configurations that uses
//! neither burning nor firing sequences.

use std::collections::BTreeSet;

use num_traits::{ToPrimitive, Zero};

use crate::graph::Graph;
use crate::rational::{q, Q};

/// Connected loopless multigraphs with `2..=max_vertices` vertices and at
/// most `max_edges` edges, one per isomorphism class.
pub fn loopless_multigraphs(max_vertices: usize, max_edges: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 2..=max_vertices {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let perms = permutations(n);
        let mut seen = BTreeSet::new();
        for m in n - 1..=max_edges {
            let mut mult = vec![0usize; pairs.len()];
            multisets(&pairs, m, 0, &mut mult, &mut |mult| {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .zip(mult)
                    .flat_map(|(p, &k)| std::iter::repeat_n(*p, k))
                    .collect();
                if !connected(n, &edges) {
                    return;
                }
                let key = perms
                    .iter()
                    .map(|p| {
                        let mut e: Vec<(usize, usize)> = edges
                            .iter()
                            .map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b])))
                            .collect();
                        e.sort();
                        e
                    })
                    .min()
                    .unwrap();
                if seen.insert(key.clone()) {
                    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                    let triples: Vec<(String, String, String)> = key
                        .iter()
                        .enumerate()
                        .map(|(k, &(a, b))| (format!("e{k}"), names[a].clone(), names[b].clone()))
                        .collect();
                    out.push(Graph::new(&names, &triples).expect("generated graph is valid"));
                }
            });
        }
    }
    out
}

fn multisets(pairs: &[(usize, usize)], left: usize, from: usize, mult: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if left == 0 {
        visit(mult);
        return;
    }
    for i in from..pairs.len() {
        mult[i] += 1;
        multisets(pairs, left - 1, i, mult, visit);
        mult[i] -= 1;
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut r = p.clone();
            r.insert(i, n - 1);
            out.push(r);
        }
    }
    out
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Lattice of principal configurations, via the reduced Laplacian: `c` is
/// principal iff `adj * c|_{V - q} = 0 (mod det)`.
pub struct PrincipalLattice {
    q: usize,
    det: i64,
    adj: Vec<Vec<i64>>,
}

impl PrincipalLattice {
    pub fn new(g: &Graph, q0: usize) -> Self {
        let n = g.vertex_count();
        let idx: Vec<usize> = (0..n).filter(|&v| v != q0).collect();
        let mut lap = vec![vec![Q::zero(); n]; n];
        for e in g.edges() {
            if e.is_loop() {
                continue;
            }
            lap[e.from][e.from] += q(1);
            lap[e.to][e.to] += q(1);
            lap[e.from][e.to] -= q(1);
            lap[e.to][e.from] -= q(1);
        }
        let m: Vec<Vec<Q>> = idx.iter().map(|&i| idx.iter().map(|&j| lap[i][j].clone()).collect()).collect();
        let (det, inv) = det_inverse(&m);
        let adj = inv
            .iter()
            .map(|row| row.iter().map(|x| (x * &det).to_integer().to_i64().unwrap()).collect())
            .collect();
        PrincipalLattice {
            q: q0,
            det: det.to_integer().to_i64().unwrap(),
            adj,
        }
    }

    /// True iff `c` (of degree 0) is the divisor of a firing script.
    pub fn is_principal(&self, c: &[i64]) -> bool {
        if c.iter().sum::<i64>() != 0 {
            return false;
        }
        let v: Vec<i64> = (0..c.len()).filter(|&i| i != self.q).map(|i| c[i]).collect();
        self.adj
            .iter()
            .all(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum::<i64>().rem_euclid(self.det) == 0)
    }
}

fn det_inverse(m: &[Vec<Q>]) -> (Q, Vec<Vec<Q>>) {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            r.extend((0..n).map(|j| if i == j { q(1) } else { Q::zero() }));
            r
        })
        .collect();
    let mut det = q(1);
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).expect("connected graph");
        if p != c {
            a.swap(c, p);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= &piv;
        for x in a[c].iter_mut() {
            *x /= &piv;
        }
        let row = a[c].clone();
        for (r, other) in a.iter_mut().enumerate() {
            if r != c && !other[c].is_zero() {
                let f = other[c].clone();
                for (x, y) in other.iter_mut().zip(&row) {
                    *x -= &f * y;
                }
            }
        }
    }
    (det, a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Whether some nonempty set avoiding `q` can fire without sending any
/// vertex into debt, checked over all subsets.
pub fn has_legal_set_firing(g: &Graph, c: &[i64], q0: usize) -> bool {
    let others: Vec<usize> = (0..g.vertex_count()).filter(|&v| v != q0).collect();
    for mask in 1u32..(1 << others.len()) {
        let mut inside = vec![false; g.vertex_count()];
        for (k, &v) in others.iter().enumerate() {
            inside[v] = mask >> k & 1 == 1;
        }
        let mut out = vec![0i64; g.vertex_count()];
        for e in g.edges() {
            if inside[e.from] != inside[e.to] {
                out[if inside[e.from] { e.from } else { e.to }] += 1;
            }
        }
        if (0..g.vertex_count()).all(|v| !inside[v] || c[v] >= out[v]) {
            return true;
        }
    }
    false
}

/// Every q-reduced configuration equivalent to `d`, found by listing all
/// candidates with `0 <= c(v) < valence(v)` away from `q` and testing
/// equivalence and reducedness directly.
pub fn reduced_forms(g: &Graph, lattice: &PrincipalLattice, d: &[i64], q0: usize) -> Vec<Vec<i64>> {
    let n = g.vertex_count();
    let deg: i64 = d.iter().sum();
    let others: Vec<usize> = (0..n).filter(|&v| v != q0).collect();
    let mut out = Vec::new();
    let mut c = vec![0i64; n];
    loop {
        c[q0] = deg - others.iter().map(|&v| c[v]).sum::<i64>();
        let diff: Vec<i64> = c.iter().zip(d).map(|(a, b)| a - b).collect();
        if lattice.is_principal(&diff) && !has_legal_set_firing(g, &c, q0) {
            out.push(c.clone());
        }
        let mut k = 0;
        loop {
            if k == others.len() {
                return out;
            }
            let v = others[k];
            c[v] += 1;
            if c[v] < g.valence(v) as i64 {
                break;
            }
            c[v] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small_classes() {
        // Two vertices: 1..=3 parallel edges.
        let two: Vec<_> = loopless_multigraphs(2, 3);
        assert_eq!(two.len(), 3);
        // Three vertices, at most 3 edges: path, path with a doubled edge,
        // triangle.
        let three = loopless_multigraphs(3, 3).into_iter().filter(|g| g.vertex_count() == 3).count();
        assert_eq!(three, 3);
    }

    #[test]
    fn triangle_lattice() {
        let g = Graph::new(&["a", "b", "c"], &[("x", "a", "b"), ("y", "b", "c"), ("z", "c", "a")]).unwrap();
        let l = PrincipalLattice::new(&g, 0);
        assert!(l.is_principal(&[3, -3, 0]));
        assert!(!l.is_principal(&[1, -1, 0]));
        assert_eq!(reduced_forms(&g, &l, &[0, 3, 0], 0), vec![vec![3, 0, 0]]);
    }
}
