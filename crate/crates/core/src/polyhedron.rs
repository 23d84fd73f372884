//! Exact feasibility of small systems of linear equalities and (strict)
//! inequalities by Gaussian and Fourier–Motzkin elimination.

use num_traits::{One, Signed, Zero};

use crate::rational::{q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Lt,
}

/// `coeffs . x  (relation)  rhs`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub relation: Relation,
    pub rhs: Q,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, relation: Relation, rhs: Q) -> Self {
        Constraint { coeffs, relation, rhs }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn holds_trivially(&self) -> bool {
        match self.relation {
            Relation::Eq => self.rhs.is_zero(),
            Relation::Le => !self.rhs.is_negative(),
            Relation::Lt => self.rhs.is_positive(),
        }
    }

    /// Replaces `x_var` by `expr . x + c`.
    fn substitute(&mut self, var: usize, expr: &[Q], c: &Q) {
        let a = std::mem::replace(&mut self.coeffs[var], Q::zero());
        if a.is_zero() {
            return;
        }
        for (k, e) in expr.iter().enumerate() {
            if !e.is_zero() {
                self.coeffs[k] += &a * e;
            }
        }
        self.rhs -= &a * c;
    }
}

#[derive(Clone, Debug, Default)]
pub struct System {
    pub vars: usize,
    pub constraints: Vec<Constraint>,
}

enum Step {
    /// `x_var = expr . x + c`
    Solved { var: usize, expr: Vec<Q>, c: Q },
    /// Bounds on `x_var` given by constraints over later variables.
    Bounded { var: usize, lower: Vec<Constraint>, upper: Vec<Constraint> },
}

impl System {
    pub fn new(vars: usize) -> Self {
        System {
            vars,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<Q>, relation: Relation, rhs: Q) {
        assert_eq!(coeffs.len(), self.vars);
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
    }

    /// Rank of the equality part.
    pub fn equality_rank(&self) -> usize {
        let mut rows: Vec<Vec<Q>> = self
            .constraints
            .iter()
            .filter(|c| c.relation == Relation::Eq)
            .map(|c| c.coeffs.clone())
            .collect();
        let mut rank = 0;
        for col in 0..self.vars {
            let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && !row[col].is_zero() {
                    let f = &row[col] / &pivot[col];
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x -= &f * y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// A point satisfying every constraint, or `None` if there is none.
    pub fn feasible_point(&self) -> Option<Vec<Q>> {
        let mut cons = self.constraints.clone();
        let mut steps = Vec::new();
        let mut done = vec![false; self.vars];
        loop {
            // Drop constraints with no variables left, checking them.
            let mut kept = Vec::with_capacity(cons.len());
            for c in cons {
                if c.is_trivial() {
                    if !c.holds_trivially() {
                        return None;
                    }
                } else {
                    kept.push(c);
                }
            }
            cons = kept;
            if cons.is_empty() {
                break;
            }
            if let Some(i) = cons.iter().position(|c| c.relation == Relation::Eq) {
                let eq = cons.swap_remove(i);
                let var = eq.coeffs.iter().position(|x| !x.is_zero()).unwrap();
                let a = eq.coeffs[var].clone();
                let expr: Vec<Q> = eq
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, x)| if k == var { Q::zero() } else { -x / &a })
                    .collect();
                let c = &eq.rhs / &a;
                for other in &mut cons {
                    other.substitute(var, &expr, &c);
                }
                done[var] = true;
                steps.push(Step::Solved { var, expr, c });
                continue;
            }
            // Eliminate the variable with the fewest lower*upper pairs.
            let var = (0..self.vars)
                .filter(|&v| !done[v] && cons.iter().any(|c| !c.coeffs[v].is_zero()))
                .min_by_key(|&v| {
                    let pos = cons.iter().filter(|c| c.coeffs[v].is_positive()).count();
                    let neg = cons.iter().filter(|c| c.coeffs[v].is_negative()).count();
                    pos * neg
                })
                .unwrap();
            let (mut lower, mut upper, mut rest) = (Vec::new(), Vec::new(), Vec::new());
            for c in cons {
                if c.coeffs[var].is_positive() {
                    upper.push(c);
                } else if c.coeffs[var].is_negative() {
                    lower.push(c);
                } else {
                    rest.push(c);
                }
            }
            for l in &lower {
                for u in &upper {
                    // l: -a x + ... <= b1 (a > 0), u: c x + ... <= b2 (c > 0)
                    let a = -&l.coeffs[var];
                    let c = u.coeffs[var].clone();
                    let coeffs: Vec<Q> = l.coeffs.iter().zip(&u.coeffs).map(|(x, y)| &c * x + &a * y).collect();
                    let rhs = &c * &l.rhs + &a * &u.rhs;
                    let relation = if l.relation == Relation::Lt || u.relation == Relation::Lt {
                        Relation::Lt
                    } else {
                        Relation::Le
                    };
                    let mut comb = Constraint::new(coeffs, relation, rhs);
                    comb.coeffs[var] = Q::zero();
                    rest.push(comb);
                }
            }
            done[var] = true;
            steps.push(Step::Bounded { var, lower, upper });
            cons = rest;
        }
        // Back substitution; untouched variables are 0.
        let mut x = vec![Q::zero(); self.vars];
        for step in steps.iter().rev() {
            match step {
                Step::Solved { var, expr, c } => {
                    let v: Q = expr.iter().zip(&x).map(|(e, xi)| e * xi).sum::<Q>() + c;
                    x[*var] = v;
                }
                Step::Bounded { var, lower, upper } => {
                    let bound = |con: &Constraint| -> Q {
                        let others: Q = con
                            .coeffs
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| k != var)
                            .map(|(k, a)| a * &x[k])
                            .sum();
                        (&con.rhs - others) / &con.coeffs[*var]
                    };
                    let lo = lower
                        .iter()
                        .map(|c| (bound(c), c.relation == Relation::Lt))
                        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
                    let hi = upper
                        .iter()
                        .map(|c| (bound(c), c.relation == Relation::Lt))
                        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
                    x[*var] = match (lo, hi) {
                        (Some((l, _)), Some((h, _))) => (l + h) / q(2),
                        (Some((l, _)), None) => l + Q::one(),
                        (None, Some((h, _))) => h - Q::one(),
                        (None, None) => Q::zero(),
                    };
                }
            }
        }
        debug_assert!(self.satisfied_by(&x));
        Some(x)
    }

    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        self.constraints.iter().all(|c| {
            let lhs: Q = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            match c.relation {
                Relation::Eq => lhs == c.rhs,
                Relation::Le => lhs <= c.rhs,
                Relation::Lt => lhs < c.rhs,
            }
        })
    }

    /// Dimension of the solution set (-1 if empty). Valid when every
    /// inequality is strict, so a nonempty set is open in its affine hull.
    pub fn open_dimension(&self) -> i64 {
        if self.feasible_point().is_none() {
            return -1;
        }
        (self.vars - self.equality_rank()) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn open_box_with_diagonal() {
        // 0 < x, y < 1 and x + y = 1: a segment.
        let mut s = System::new(2);
        s.push(v(&[-1, 0]), Relation::Lt, q(0));
        s.push(v(&[0, -1]), Relation::Lt, q(0));
        s.push(v(&[1, 0]), Relation::Lt, q(1));
        s.push(v(&[0, 1]), Relation::Lt, q(1));
        s.push(v(&[1, 1]), Relation::Eq, q(1));
        let p = s.feasible_point().unwrap();
        assert!(s.satisfied_by(&p));
        assert_eq!(s.open_dimension(), 1);
    }

    #[test]
    fn strictness_matters() {
        // 0 < x < 1 and x = 1 is empty; x <= 1 and x >= 1 is a point.
        let mut s = System::new(1);
        s.push(v(&[-1]), Relation::Lt, q(0));
        s.push(v(&[1]), Relation::Lt, q(1));
        s.push(v(&[1]), Relation::Eq, q(1));
        assert!(s.feasible_point().is_none());
        let mut t = System::new(1);
        t.push(v(&[1]), Relation::Le, q(1));
        t.push(v(&[-1]), Relation::Le, q(-1));
        assert_eq!(t.feasible_point().unwrap(), v(&[1]));
        let mut u = System::new(1);
        u.push(v(&[1]), Relation::Lt, q(1));
        u.push(v(&[-1]), Relation::Le, q(-1));
        assert!(u.feasible_point().is_none());
    }

    #[test]
    fn rational_point() {
        let mut s = System::new(2);
        s.push(vec![q(3), q(0)], Relation::Eq, q(1));
        s.push(vec![q(1), q(-1)], Relation::Lt, q(0));
        s.push(vec![q(0), q(1)], Relation::Lt, q_frac(1, 2));
        let p = s.feasible_point().unwrap();
        assert_eq!(p[0], q_frac(1, 3));
        assert!(p[1] > q_frac(1, 3) && p[1] < q_frac(1, 2));
    }

    #[test]
    fn rank_of_equalities() {
        let mut s = System::new(3);
        s.push(v(&[1, 1, 0]), Relation::Eq, q(0));
        s.push(v(&[2, 2, 0]), Relation::Eq, q(0));
        s.push(v(&[0, 0, 1]), Relation::Eq, q(3));
        assert_eq!(s.equality_rank(), 2);
    }
}
