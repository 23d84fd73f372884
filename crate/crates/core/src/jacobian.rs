//! Abel–Jacobi coordinates for Z-points of a bounded Z-graph.
//!
//! With a spanning tree and its fundamental cycles `c_1..c_g`, a Z-point `P`
//! maps to the vector of signed lengths `<path(q, P), c_i>`. Two Z-divisors
//! of equal degree are chip-firing equivalent on the unit subdivision iff
//! their images agree modulo the period lattice `Q Z^g`, where
//! `Q_ij = <c_i, c_j>`. Classes are stored as integers via a Hermite basis
//! of that lattice.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{GraphPoint, MetricGraph};
use crate::rational::to_i64;

/// Upper triangular basis (as columns) of the lattice spanned by the
/// columns of a nonsingular square matrix.
fn hermite_columns(m: &[Vec<i128>]) -> Result<Vec<Vec<BigInt>>> {
    let g = m.len();
    let mut cols: Vec<Vec<BigInt>> = (0..g)
        .map(|j| (0..g).map(|i| BigInt::from(m[i][j])).collect())
        .collect();
    for i in (0..g).rev() {
        for j in 0..i {
            if cols[j][i].is_zero() {
                continue;
            }
            let u = cols[j][i].clone();
            let v = cols[i][i].clone();
            let eg = u.extended_gcd(&v);
            let (d, s, t) = (eg.gcd, eg.x, eg.y);
            let (ud, vd) = (&u / &d, &v / &d);
            let a = cols[j].clone();
            let b = cols[i].clone();
            cols[i] = a.iter().zip(&b).map(|(x, y)| &s * x + &t * y).collect();
            cols[j] = a.iter().zip(&b).map(|(x, y)| &ud * y - &vd * x).collect();
        }
        if cols[i][i].is_zero() {
            return Err(Error::Precondition("period matrix is singular".into()));
        }
        if cols[i][i].is_negative() {
            cols[i] = cols[i].iter().map(|x| -x).collect();
        }
    }
    // Shrink entries above the diagonal.
    for j in 0..g {
        for r in (0..j).rev() {
            let k = cols[j][r].div_floor(&cols[r][r]);
            if !k.is_zero() {
                let cr = cols[r].clone();
                for (x, y) in cols[j].iter_mut().zip(&cr) {
                    *x -= &k * y;
                }
            }
        }
    }
    Ok(cols)
}

#[derive(Clone, Debug)]
pub struct Jacobian {
    host: Arc<MetricGraph>,
    genus: usize,
    basis: Vec<Vec<i128>>,
    radix: Vec<u64>,
    order: u64,
    vertex_coords: Vec<Vec<i128>>,
    edge_cycles: Vec<Vec<i128>>,
    base: usize,
}

impl Jacobian {
    /// Needs a bounded graph with integer lengths. The base point is vertex 0.
    pub fn new(host: &Arc<MetricGraph>) -> Result<Self> {
        if host.has_infinite_edges() {
            return Err(Error::HasInfiniteEdges);
        }
        if !host.is_integral() {
            return Err(Error::NotIntegral("Jacobian coordinates need integer lengths".into()));
        }
        let g = host.graph();
        let n = g.vertex_count();
        let len = |e: usize| -> i128 { to_i64(host.length(e).finite().unwrap()).unwrap() as i128 };

        let tree = g.spanning_tree(0);
        let genus = tree.non_tree.len();
        let edge_cycles: Vec<Vec<i128>> = tree
            .cycles
            .iter()
            .map(|c| c.iter().map(|&x| x as i128).collect())
            .collect();

        let mut vertex_coords = vec![vec![0i128; genus]; n];
        for &w in tree.order.iter().skip(1) {
            let pe = tree.parent_edge[w].unwrap();
            let v = g.other_end(pe, w);
            let sign = if g.edge(pe).from == v { 1 } else { -1 };
            let l = len(pe);
            vertex_coords[w] = (0..genus)
                .map(|i| vertex_coords[v][i] + sign * l * edge_cycles[pe][i])
                .collect();
        }

        let mut period = vec![vec![0i128; genus]; genus];
        for e in 0..g.edge_count() {
            let l = len(e);
            for i in 0..genus {
                for j in 0..genus {
                    period[i][j] += l * edge_cycles[e][i] * edge_cycles[e][j];
                }
            }
        }
        let cols = hermite_columns(&period)?;
        let basis: Vec<Vec<i128>> = cols
            .iter()
            .map(|c| c.iter().map(|x| x.to_i128().ok_or(Error::Overflow("Jacobian basis"))).collect())
            .collect::<Result<_>>()?;
        let radix: Vec<u64> = (0..genus).map(|i| basis[i][i] as u64).collect();
        let mut total = BigInt::one();
        for r in &radix {
            total *= *r;
        }
        let order = total.to_u64().filter(|&o| o < (1u64 << 62)).ok_or(Error::Overflow("Jacobian order"))?;
        Ok(Jacobian {
            host: host.clone(),
            genus,
            basis,
            radix,
            order,
            vertex_coords,
            edge_cycles,
            base: 0,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Number of divisor classes of degree 0 on the unit subdivision.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn host(&self) -> &Arc<MetricGraph> {
        &self.host
    }

    /// Base vertex: the class of a point `P` is that of `P - base`.
    pub fn base(&self) -> usize {
        self.base
    }

    fn coords(&self, p: &GraphPoint) -> Result<Vec<i128>> {
        match p {
            GraphPoint::Vertex(v) => Ok(self.vertex_coords[*v].clone()),
            GraphPoint::Edge { edge, offset } => {
                let t = to_i64(offset).ok_or(Error::NotIntegerDivisor)? as i128;
                let from = self.host.graph().edge(*edge).from;
                Ok((0..self.genus)
                    .map(|i| self.vertex_coords[from][i] + t * self.edge_cycles[*edge][i])
                    .collect())
            }
            GraphPoint::End(_) => Err(Error::HasInfiniteEdges),
        }
    }

    fn reduce(&self, mut x: Vec<i128>) -> u64 {
        for i in (0..self.genus).rev() {
            let h = self.basis[i][i];
            let k = x[i].div_euclid(h);
            if k != 0 {
                for (r, xr) in x.iter_mut().enumerate().take(i + 1) {
                    *xr -= k * self.basis[i][r];
                }
            }
        }
        let mut code = 0u64;
        for i in (0..self.genus).rev() {
            code = code * self.radix[i] + x[i] as u64;
        }
        code
    }

    fn decode(&self, mut code: u64) -> Vec<i128> {
        let mut x = Vec::with_capacity(self.genus);
        for i in 0..self.genus {
            x.push((code % self.radix[i]) as i128);
            code /= self.radix[i];
        }
        x
    }

    /// Class of `P - base` for a Z-point `P`.
    pub fn point_class(&self, p: &GraphPoint) -> Result<u64> {
        Ok(self.reduce(self.coords(p)?))
    }

    /// Class of `D - deg(D) * base`.
    pub fn divisor_class(&self, d: &Divisor) -> Result<u64> {
        let mut x = vec![0i128; self.genus];
        for (p, c) in d.terms() {
            let cp = self.coords(p)?;
            for i in 0..self.genus {
                x[i] += c as i128 * cp[i];
            }
        }
        Ok(self.reduce(x))
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let (x, y) = (self.decode(a), self.decode(b));
        self.reduce(x.iter().zip(&y).map(|(p, q)| p + q).collect())
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let (x, y) = (self.decode(a), self.decode(b));
        self.reduce(x.iter().zip(&y).map(|(p, q)| p - q).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn cycle_group_orders() {
        // Jacobian of a unit cycle of length n is Z/n.
        for n in 2..6 {
            let g = Arc::new(MetricGraph::build(&["v"], &[("c", "v", "v", &n.to_string())]).unwrap());
            let j = Jacobian::new(&g).unwrap();
            assert_eq!(j.order(), n as u64);
            let p = g.edge_point(0, q(1)).unwrap();
            let c = j.point_class(&p).unwrap();
            let mut acc = 0;
            for _ in 0..n {
                acc = j.add(acc, c);
            }
            assert_eq!(acc, 0);
        }
    }

    #[test]
    fn spanning_tree_count() {
        // K4 has 16 spanning trees; the theta graph with three unit edges has 3.
        let k4 = Arc::new(
            MetricGraph::build(
                &["a", "b", "c", "d"],
                &[
                    ("1", "a", "b", "1"),
                    ("2", "a", "c", "1"),
                    ("3", "a", "d", "1"),
                    ("4", "b", "c", "1"),
                    ("5", "b", "d", "1"),
                    ("6", "c", "d", "1"),
                ],
            )
            .unwrap(),
        );
        assert_eq!(Jacobian::new(&k4).unwrap().order(), 16);
        let theta = Arc::new(
            MetricGraph::build(&["a", "b"], &[("1", "a", "b", "1"), ("2", "a", "b", "1"), ("3", "b", "a", "1")])
                .unwrap(),
        );
        assert_eq!(Jacobian::new(&theta).unwrap().order(), 3);
    }

    #[test]
    fn trees_are_trivial() {
        let g = Arc::new(MetricGraph::build(&["a", "b"], &[("e", "a", "b", "3")]).unwrap());
        let j = Jacobian::new(&g).unwrap();
        assert_eq!(j.order(), 1);
        assert_eq!(j.point_class(&GraphPoint::Vertex(1)).unwrap(), 0);
    }
}
