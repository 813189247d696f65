//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Intended for tiny problems (at most [`MAX_VARIABLES`] decision variables);
//! all decision variables are nonnegative.

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

pub const MAX_VARIABLES: usize = 64;
pub const MAX_CONSTRAINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<S> {
    pub coefficients: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

impl<S> LinearConstraint<S> {
    pub fn new(coefficients: Vec<S>, relation: Relation, rhs: S) -> Self {
        Self {
            coefficients,
            relation,
            rhs,
        }
    }
}

/// `optimize ⟨objective, x⟩` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    pub objective: Vec<S>,
    pub sense: Sense,
    pub constraints: Vec<LinearConstraint<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { value: S, solution: Vec<S> },
    Infeasible,
    Unbounded,
}

impl<S: Scalar> LpOutcome<S> {
    pub fn value(&self) -> Option<S> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    tol: S,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v = *v / p;
        }
        self.rhs[r] = self.rhs[r] / p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][col];
            if factor == S::zero() {
                continue;
            }
            for (v, &pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                *v = *v - factor * pr;
            }
            self.rows[i][col] = S::zero();
            self.rhs[i] = self.rhs[i] - factor * pivot_rhs;
            if self.rhs[i] < S::zero() && self.rhs[i] > -self.tol {
                self.rhs[i] = S::zero();
            }
        }
        self.basis[r] = col;
    }

    /// Minimizes `⟨cost, x⟩` over columns flagged in `allowed`.
    fn optimize(&mut self, cost: &[S], allowed: &[bool]) -> Phase {
        let ncols = cost.len();
        for _ in 0..100_000 {
            // reduced costs, recomputed from the current basis
            let mut entering = None;
            for j in 0..ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut reduced = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    reduced = reduced - cost[b] * self.rows[i][j];
                }
                if reduced < -self.tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Phase::Optimal;
            };
            let mut leaving: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > self.tol {
                    let ratio = self.rhs[i] / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            let slack = self.tol * (S::one() + best.abs());
                            if ratio < best - slack || ((ratio - best).abs() <= slack && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leaving else {
                return Phase::Unbounded;
            };
            self.pivot(r, col);
        }
        Phase::Optimal
    }
}

/// Solves a small linear program. See [`LinearProgram`].
pub fn simplex_solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpOutcome<S>> {
    let n = lp.objective.len();
    if n > MAX_VARIABLES {
        return Err(Error::TooLarge {
            what: "simplex variables",
            size: n,
            limit: MAX_VARIABLES,
        });
    }
    if lp.constraints.len() > MAX_CONSTRAINTS {
        return Err(Error::TooLarge {
            what: "simplex constraints",
            size: lp.constraints.len(),
            limit: MAX_CONSTRAINTS,
        });
    }
    for c in &lp.constraints {
        check_dim("constraint coefficients", n, c.coefficients.len())?;
    }
    let finite = lp
        .objective
        .iter()
        .chain(
            lp.constraints
                .iter()
                .flat_map(|c| c.coefficients.iter().chain(std::iter::once(&c.rhs))),
        )
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidInput("linear program data must be finite".into()));
    }

    // normalize to nonnegative right-hand sides
    let normalized: Vec<(Vec<S>, Relation, S)> = lp
        .constraints
        .iter()
        .map(|c| {
            let flip = c.rhs < S::zero() || (c.rhs == S::zero() && c.relation == Relation::GreaterEq);
            if flip {
                let rel = match c.relation {
                    Relation::LessEq => Relation::GreaterEq,
                    Relation::GreaterEq => Relation::LessEq,
                    Relation::Equal => Relation::Equal,
                };
                (c.coefficients.iter().map(|&v| -v).collect(), rel, -c.rhs)
            } else {
                (c.coefficients.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let m = normalized.len();
    let n_slack = normalized.iter().filter(|(_, r, _)| *r != Relation::Equal).count();
    let n_art = normalized.iter().filter(|(_, r, _)| *r != Relation::LessEq).count();
    let ncols = n + n_slack + n_art;
    let art_start = n + n_slack;

    let scale = normalized
        .iter()
        .flat_map(|(a, _, b)| a.iter().chain(std::iter::once(b)))
        .fold(S::one(), |acc, v| acc.max(v.abs()));
    let tol = S::lit(1e-11).max(S::epsilon() * S::lit(1e3)) * scale;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        tol,
    };
    let (mut next_slack, mut next_art) = (n, art_start);
    for (coeffs, rel, b) in &normalized {
        let mut row = vec![S::zero(); ncols];
        row[..n].copy_from_slice(coeffs);
        match rel {
            Relation::LessEq => {
                row[next_slack] = S::one();
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::GreaterEq => {
                row[next_slack] = -S::one();
                next_slack += 1;
                row[next_art] = S::one();
                tab.basis.push(next_art);
                next_art += 1;
            }
            Relation::Equal => {
                row[next_art] = S::one();
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
        tab.rhs.push(*b);
    }

    if n_art > 0 {
        let mut phase1 = vec![S::zero(); ncols];
        phase1[art_start..].iter_mut().for_each(|c| *c = S::one());
        let allowed = vec![true; ncols];
        tab.optimize(&phase1, &allowed);
        let infeasibility: S = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&b, _)| b >= art_start)
            .map(|(_, &v)| v)
            .sum();
        if infeasibility > S::lit(1e-9).max(S::epsilon() * S::lit(1e4)) * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // drive remaining artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                let col = (0..art_start).find(|&j| tab.rows[r][j].abs() > tol && !tab.basis.contains(&j));
                match col {
                    Some(j) => {
                        tab.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.rhs.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut cost = vec![S::zero(); ncols];
    for (j, &c) in lp.objective.iter().enumerate() {
        cost[j] = match lp.sense {
            Sense::Minimize => c,
            Sense::Maximize => -c,
        };
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < art_start).collect();
    if let Phase::Unbounded = tab.optimize(&cost, &allowed) {
        return Ok(LpOutcome::Unbounded);
    }
    let mut solution = vec![S::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            solution[b] = tab.rhs[i].max(S::zero());
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&solution)
        .fold(S::zero(), |acc, (&c, &x)| acc + c * x);
    Ok(LpOutcome::Optimal { value, solution })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_lp() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            sense: Sense::Minimize,
            constraints: vec![LinearConstraint::new(vec![1.0, 1.0], Relation::GreaterEq, 1.0)],
        };
        assert_eq!(simplex_solve(&lp).unwrap().value(), Some(1.0));
    }

    #[test]
    fn midpoint_witness() {
        // variables (q1, q2, t): max t, q1 + q2 = 1, q2 = 1/2, q - t >= 0
        let lp = LinearProgram {
            objective: vec![0.0f64, 0.0, 1.0],
            sense: Sense::Maximize,
            constraints: vec![
                LinearConstraint::new(vec![1.0, 1.0, 0.0], Relation::Equal, 1.0),
                LinearConstraint::new(vec![0.0, 1.0, 0.0], Relation::Equal, 0.5),
                LinearConstraint::new(vec![1.0, 0.0, -1.0], Relation::GreaterEq, 0.0),
                LinearConstraint::new(vec![0.0, 1.0, -1.0], Relation::GreaterEq, 0.0),
            ],
        };
        match simplex_solve(&lp).unwrap() {
            LpOutcome::Optimal { value, solution } => {
                assert!((value - 0.5).abs() < 1e-12);
                assert!((solution[0] - 0.5).abs() < 1e-12);
                assert!((solution[1] - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            objective: vec![1.0],
            sense: Sense::Minimize,
            constraints: vec![
                LinearConstraint::new(vec![1.0], Relation::GreaterEq, 1.0),
                LinearConstraint::new(vec![1.0], Relation::LessEq, 0.0),
            ],
        };
        assert_eq!(simplex_solve(&lp).unwrap(), LpOutcome::Infeasible);
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            sense: Sense::Maximize,
            constraints: vec![LinearConstraint::new(vec![1.0, -1.0], Relation::LessEq, 1.0)],
        };
        assert_eq!(simplex_solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            sense: Sense::Minimize,
            constraints: vec![
                LinearConstraint::new(vec![1.0, 1.0], Relation::Equal, 1.0),
                LinearConstraint::new(vec![2.0, 2.0], Relation::Equal, 2.0),
            ],
        };
        assert_eq!(simplex_solve(&lp).unwrap().value(), Some(1.0));
    }

    #[test]
    fn size_limits() {
        let lp = LinearProgram {
            objective: vec![0.0f64; MAX_VARIABLES + 1],
            sense: Sense::Minimize,
            constraints: vec![],
        };
        assert!(matches!(simplex_solve(&lp), Err(Error::TooLarge { .. })));
    }
}
