//! Divisors: finite integer combinations of points of a tropical curve.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::{end_ramp, RationalFunction};
use crate::graph::{GraphPoint, MetricGraph};

#[derive(Clone, Debug)]
pub struct Divisor {
    host: Arc<MetricGraph>,
    coeffs: BTreeMap<GraphPoint, i64>,
}

impl PartialEq for Divisor {
    fn eq(&self, other: &Self) -> bool {
        same_host(&self.host, &other.host) && self.coeffs == other.coeffs
    }
}

impl Eq for Divisor {}

pub(crate) fn same_host(a: &Arc<MetricGraph>, b: &Arc<MetricGraph>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Divisor {
    pub fn zero(host: Arc<MetricGraph>) -> Self {
        Divisor {
            host,
            coeffs: BTreeMap::new(),
        }
    }

    /// Sums the given terms; points are canonicalized and zero totals dropped.
    pub fn from_terms(
        host: Arc<MetricGraph>,
        terms: impl IntoIterator<Item = (GraphPoint, i64)>,
    ) -> Result<Self> {
        let mut d = Divisor::zero(host);
        for (p, c) in terms {
            let p = d.host.canonical(&p)?;
            d.bump(p, c);
        }
        Ok(d)
    }

    pub fn point(host: Arc<MetricGraph>, p: GraphPoint) -> Result<Self> {
        Self::from_terms(host, [(p, 1)])
    }

    pub(crate) fn bump(&mut self, p: GraphPoint, c: i64) {
        if c == 0 {
            return;
        }
        let entry = self.coeffs.entry(p);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0 {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn host(&self) -> &Arc<MetricGraph> {
        &self.host
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    pub fn coefficient(&self, p: &GraphPoint) -> i64 {
        self.coeffs.get(p).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GraphPoint, i64)> {
        self.coeffs.iter().map(|(p, c)| (p, *c))
    }

    pub fn support(&self) -> impl Iterator<Item = &GraphPoint> {
        self.coeffs.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|&c| c >= 0)
    }

    pub fn try_add(&self, other: &Divisor) -> Result<Divisor> {
        if !same_host(&self.host, &other.host) {
            return Err(Error::HostMismatch);
        }
        let mut out = self.clone();
        for (p, c) in &other.coeffs {
            out.bump(p.clone(), *c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Divisor) -> Result<Divisor> {
        self.try_add(&-other)
    }

    pub fn scaled(&self, k: i64) -> Divisor {
        let mut out = Divisor::zero(self.host.clone());
        for (p, c) in &self.coeffs {
            out.bump(p.clone(), c * k);
        }
        out
    }

    /// Moves the divisor to another host through a point map.
    pub fn transport(
        &self,
        host: Arc<MetricGraph>,
        map: impl Fn(&GraphPoint) -> GraphPoint,
    ) -> Result<Divisor> {
        Divisor::from_terms(host, self.coeffs.iter().map(|(p, c)| (map(p), *c)))
    }

    /// True if every support point is a Z-point; the host must be a Z-graph.
    pub fn is_z_divisor(&self) -> Result<bool> {
        if !self.host.is_integral() {
            return Err(Error::NotIntegral("host has non-integer lengths".into()));
        }
        Ok(self.coeffs.keys().all(|p| self.host.is_integer_point(p)))
    }

    /// Every point representable here has rational coordinates.
    pub fn is_q_divisor(&self) -> bool {
        true
    }

    /// True if no point lies on an unbounded edge.
    pub fn is_core_supported(&self) -> bool {
        self.coeffs.keys().all(|p| self.host.is_core_point(p))
    }
}

impl Neg for &Divisor {
    type Output = Divisor;

    fn neg(self) -> Divisor {
        self.scaled(-1)
    }
}

impl Neg for Divisor {
    type Output = Divisor;

    fn neg(self) -> Divisor {
        self.scaled(-1)
    }
}

/// Panics on host mismatch; use [`Divisor::try_add`] for a checked sum.
impl Add for &Divisor {
    type Output = Divisor;

    fn add(self, rhs: &Divisor) -> Divisor {
        self.try_add(rhs).expect("divisors on different graphs")
    }
}

impl Sub for &Divisor {
    type Output = Divisor;

    fn sub(self, rhs: &Divisor) -> Divisor {
        self.try_sub(rhs).expect("divisors on different graphs")
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(p, c)| format!("{}:{}", self.host.describe_point(p), c))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Sum over all vertices (ends included) of (valence - 2) times the vertex.
pub fn canonical(g: &Arc<MetricGraph>) -> Divisor {
    let mut d = Divisor::zero(g.clone());
    for v in 0..g.graph().vertex_count() {
        d.bump(g.vertex_point(v), g.valence(v) as i64 - 2);
    }
    d
}

/// Moves every point off the unbounded edges: returns `(d', f)` with
/// `d' = d + (f)` and `d'` supported on the core.
pub fn retract_divisor(d: &Divisor) -> Result<(Divisor, RationalFunction)> {
    let host = d.host().clone();
    let mut f = RationalFunction::constant(host.clone(), crate::rational::q(0));
    for (p, c) in d.terms() {
        if !host.is_core_point(p) {
            f = f.try_add(&end_ramp(&host, p)?.scaled(c))?;
        }
    }
    let moved = d.try_add(&f.principal_divisor())?;
    Ok((moved, f))
}
