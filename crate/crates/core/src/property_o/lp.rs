//! Exact two-phase simplex over the rationals with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub relation: Relation,
    pub rhs: BigRational,
}

/// `maximize objective . x` over free variables `x` subject to the
/// constraints.
#[derive(Clone, Debug)]
pub struct RationalLP {
    pub num_vars: usize,
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: BigRational,
        solution: Vec<BigRational>,
    },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimum(&self) -> Option<(&BigRational, &[BigRational])> {
        match self {
            LpOutcome::Optimal { value, solution } => Some((value, solution)),
            _ => None,
        }
    }
}

impl RationalLP {
    pub fn new(num_vars: usize, objective: Vec<BigRational>) -> Result<Self> {
        if objective.len() != num_vars {
            return Err(Error::DimensionMismatch {
                expected: num_vars,
                found: objective.len(),
            });
        }
        Ok(Self {
            num_vars,
            objective,
            constraints: Vec::new(),
        })
    }

    pub fn push(&mut self, coeffs: Vec<BigRational>, relation: Relation, rhs: BigRational) -> Result<()> {
        if coeffs.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: coeffs.len(),
            });
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Exact check of a point against every constraint.
    pub fn is_feasible_point(&self, x: &[BigRational]) -> bool {
        self.constraints.iter().all(|c| {
            let lhs: BigRational = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
                Relation::Eq => lhs == c.rhs,
            }
        })
    }
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &BigRational {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . x` over the current basic feasible solution.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[BigRational], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let entering = (0..self.cols).filter(|&j| allowed(j)).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut reduced = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.rows[i][j].is_zero() {
                        reduced -= &cost[b] * &self.rows[i][j];
                    }
                }
                reduced.is_positive()
            });
            let Some(j) = entering else {
                return true;
            };
            let mut best: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return false,
            }
        }
    }
}

/// Solves the LP exactly. Variables are free; they are split as `x+ - x-`
/// internally.
pub fn lp_solve(lp: &RationalLP) -> LpOutcome {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    let slack_count = lp
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let structural = 2 * n + slack_count;
    let cols = structural + m;

    let mut rows = Vec::with_capacity(m);
    let mut slack = 2 * n;
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![BigRational::zero(); cols + 1];
        for (j, a) in c.coeffs.iter().enumerate() {
            row[j] = a.clone();
            row[n + j] = -a;
        }
        match c.relation {
            Relation::Le => {
                row[slack] = BigRational::one();
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -BigRational::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[cols] = c.rhs.clone();
        if row[cols].is_negative() {
            for v in row.iter_mut() {
                *v = -&*v;
            }
        }
        row[structural + i] = BigRational::one();
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (structural..cols).collect(),
        cols,
    };

    // phase 1: maximize -(sum of artificials)
    let mut phase1 = vec![BigRational::zero(); cols];
    for c in phase1.iter_mut().skip(structural) {
        *c = -BigRational::one();
    }
    t.optimize(&phase1, &|_| true);
    let infeasibility: BigRational = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= structural)
        .map(|(i, _)| t.rhs(i).clone())
        .sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }

    // drive zero-valued artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= structural {
            match (0..structural).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    let mut phase2 = vec![BigRational::zero(); cols];
    for j in 0..n {
        phase2[j] = lp.objective[j].clone();
        phase2[n + j] = -&lp.objective[j];
    }
    if !t.optimize(&phase2, &|j| j < structural) {
        return LpOutcome::Unbounded;
    }

    let mut raw = vec![BigRational::zero(); structural];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < structural {
            raw[b] = t.rhs(i).clone();
        }
    }
    let solution: Vec<BigRational> = (0..n).map(|j| &raw[j] - &raw[n + j]).collect();
    let value = lp
        .objective
        .iter()
        .zip(&solution)
        .map(|(c, x)| c * x)
        .sum();
    LpOutcome::Optimal { value, solution }
}
