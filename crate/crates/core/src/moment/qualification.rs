//! Relative-interior test for a moment target.
//!
//! The achievable moments are `{T Q : Q_z/R_z ∈ dom γ*_z}`. A target is
//! qualified when it is the image of a measure strictly inside every finite
//! domain bound. With `dom γ*_z = [a_z, b_z]` this is the linear program
//!
//! ```text
//! maximize t  s.t.  Σ_z θ(z) Q_z = x̂,  Q_z − a_z R_z ≥ t,  b_z R_z − Q_z ≥ t,  0 ≤ t ≤ 1,
//! ```
//!
//! where the bound rows are present only for finite ends. The cap on `t`
//! keeps the program bounded when all domains are unbounded.

use crate::certificates::Qualification;
use crate::error::{check_dim, Error, Result};
use crate::moment::MomentProblem;
use crate::oracles::simplex::{
    simplex_solve, LinearConstraint, LinearProgram, LpOutcome, Relation, Sense, MAX_VARIABLES,
};
use crate::scalar::Scalar;

/// Margin below which a feasible target counts as boundary.
pub const QUALIFICATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QualificationReport<S> {
    pub status: Qualification,
    /// Optimal `t`, when the program is feasible.
    pub margin: Option<S>,
    /// Weights `Q` attaining the margin.
    pub witness: Option<Vec<S>>,
}

/// Moment rows of the feasibility program: equalities, or the finite sides
/// of a box.
pub(crate) enum MomentRows<'a, S> {
    Equal(&'a [S]),
    Between(&'a [S], &'a [S]),
}

/// How a weight `Q_z` is written in terms of nonnegative LP variables.
#[derive(Clone, Copy)]
enum Param<S> {
    /// `Q_z = offset + v`.
    Up { var: usize, offset: S },
    /// `Q_z = offset − v`.
    Down { var: usize, offset: S },
    /// `Q_z = v⁺ − v⁻`.
    Free { plus: usize, minus: usize },
}

pub(crate) struct Feasibility<S> {
    pub(crate) margin: S,
    pub(crate) witness: Vec<S>,
}

/// Maximizes the interior margin `t`; `Ok(None)` when infeasible.
pub(crate) fn max_margin<S: Scalar>(p: &MomentProblem<S>, rows: MomentRows<'_, S>) -> Result<Option<Feasibility<S>>> {
    let n = p.n_points();
    let fam = p.family();
    let r = p.reference().weights();
    let mut params = Vec::with_capacity(n);
    let mut n_vars = 0;
    for z in 0..n {
        let dom = fam.conjugate_domain(z);
        let param = if dom.lo.is_finite() {
            n_vars += 1;
            Param::Up {
                var: n_vars - 1,
                offset: dom.lo * r[z],
            }
        } else if dom.hi.is_finite() {
            n_vars += 1;
            Param::Down {
                var: n_vars - 1,
                offset: dom.hi * r[z],
            }
        } else {
            n_vars += 2;
            Param::Free {
                plus: n_vars - 2,
                minus: n_vars - 1,
            }
        };
        params.push(param);
    }
    let t = n_vars;
    n_vars += 1;
    if n_vars > MAX_VARIABLES {
        return Err(Error::DiagnosticUnavailable(format!(
            "qualification program needs {n_vars} variables, limit is {MAX_VARIABLES}"
        )));
    }

    let mut constraints = Vec::new();
    // Σ_z θ_k(z) Q_z expressed in LP variables, plus its constant part
    let moment_row = |k: usize| {
        let mut coeffs = vec![S::zero(); n_vars];
        let mut constant = S::zero();
        for (z, param) in params.iter().enumerate() {
            let theta = p.features().entry(z, k);
            match *param {
                Param::Up { var, offset } => {
                    coeffs[var] = coeffs[var] + theta;
                    constant = constant + theta * offset;
                }
                Param::Down { var, offset } => {
                    coeffs[var] = coeffs[var] - theta;
                    constant = constant + theta * offset;
                }
                Param::Free { plus, minus } => {
                    coeffs[plus] = coeffs[plus] + theta;
                    coeffs[minus] = coeffs[minus] - theta;
                }
            }
        }
        (coeffs, constant)
    };
    for k in 0..p.n_features() {
        let (coeffs, constant) = moment_row(k);
        match rows {
            MomentRows::Equal(x) => {
                constraints.push(LinearConstraint::new(coeffs, Relation::Equal, x[k] - constant));
            }
            MomentRows::Between(lower, upper) => {
                if lower[k] == upper[k] {
                    constraints.push(LinearConstraint::new(coeffs, Relation::Equal, lower[k] - constant));
                    continue;
                }
                if lower[k].is_finite() {
                    constraints.push(LinearConstraint::new(
                        coeffs.clone(),
                        Relation::GreaterEq,
                        lower[k] - constant,
                    ));
                }
                if upper[k].is_finite() {
                    constraints.push(LinearConstraint::new(coeffs, Relation::LessEq, upper[k] - constant));
                }
            }
        }
    }
    for (z, param) in params.iter().enumerate() {
        let dom = fam.conjugate_domain(z);
        match *param {
            Param::Up { var, offset } => {
                let mut c = vec![S::zero(); n_vars];
                c[var] = S::one();
                c[t] = -S::one();
                constraints.push(LinearConstraint::new(c, Relation::GreaterEq, S::zero()));
                if dom.hi.is_finite() {
                    let mut c = vec![S::zero(); n_vars];
                    c[var] = S::one();
                    c[t] = S::one();
                    constraints.push(LinearConstraint::new(c, Relation::LessEq, dom.hi * r[z] - offset));
                }
            }
            Param::Down { var, .. } => {
                let mut c = vec![S::zero(); n_vars];
                c[var] = S::one();
                c[t] = -S::one();
                constraints.push(LinearConstraint::new(c, Relation::GreaterEq, S::zero()));
            }
            Param::Free { .. } => {}
        }
    }
    let mut cap = vec![S::zero(); n_vars];
    cap[t] = S::one();
    constraints.push(LinearConstraint::new(cap, Relation::LessEq, S::one()));
    let mut objective = vec![S::zero(); n_vars];
    objective[t] = S::one();
    let lp = LinearProgram {
        objective,
        sense: Sense::Maximize,
        constraints,
    };
    Ok(match simplex_solve(&lp)? {
        LpOutcome::Optimal { value, solution } => {
            let witness = params
                .iter()
                .map(|param| match *param {
                    Param::Up { var, offset } => offset + solution[var],
                    Param::Down { var, offset } => offset - solution[var],
                    Param::Free { plus, minus } => solution[plus] - solution[minus],
                })
                .collect();
            Some(Feasibility { margin: value, witness })
        }
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("margin is capped"),
    })
}

/// Classifies `x̂` as interior, boundary or outside the achievable moments.
///
/// Errors with [`Error::DiagnosticUnavailable`] when the program exceeds the
/// size of the dense simplex.
pub fn qualification_check<S: Scalar>(p: &MomentProblem<S>, target: &[S]) -> Result<QualificationReport<S>> {
    check_dim("qualification target", p.n_features(), target.len())?;
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("qualification target must be finite".into()));
    }
    Ok(match max_margin(p, MomentRows::Equal(target))? {
        None => QualificationReport {
            status: Qualification::Outside,
            margin: None,
            witness: None,
        },
        Some(f) => QualificationReport {
            status: if f.margin > S::lit(QUALIFICATION_EPS) {
                Qualification::Interior
            } else {
                Qualification::Boundary
            },
            margin: Some(f.margin),
            witness: Some(f.witness),
        },
    })
}
