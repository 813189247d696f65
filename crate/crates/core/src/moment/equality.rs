//! Damped Newton ascent on the dual of an equality-constrained problem.

use crate::certificates::{certify_moment, Certificate, Qualification, Tolerances};
use crate::error::{check_dim, Error, Result};
use crate::linalg::regularized_solve;
use crate::moment::qualification::{qualification_check, QualificationReport};
use crate::moment::{evaluate, DualState, MomentProblem, PrimalSolution, SolveOptions, SolveStatus};
use crate::scalar::{dot, norm_inf, Scalar};

const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct EqualitySolution<S> {
    pub dual: DualState<S>,
    pub primal: PrimalSolution<S>,
    pub certificate: Certificate<S>,
    /// `None` when the check was unavailable for this family or size.
    pub qualification: Option<QualificationReport<S>>,
}

/// Newton ascent from `y0` on `⟨y, target⟩ − Γ(y)`.
///
/// Each step solves `(−H + μI) d = ∇D` with `μ = 1e-10·tr(−H)/K`, escalated
/// ×10 on factorization failure, then backtracks by halving until the Armijo
/// condition (slope `1e-4`) holds at a domain-feasible point. A full step
/// whose value agrees to rounding and whose gradient is smaller is also
/// accepted, so that the last digits of the gradient can be driven out.
pub(crate) fn newton<S: Scalar>(p: &MomentProblem<S>, target: &[S], y0: &[S], opts: &SolveOptions<S>) -> DualState<S> {
    let k = p.n_features();
    let mut y = y0.to_vec();
    let mut e = evaluate(p, target, &y);
    if !e.feasible {
        y = vec![S::zero(); k];
        e = evaluate(p, target, &y);
    }
    let mut max_iterate_norm = norm_inf(&y);
    let mut iterations = 0;
    let rounding = S::epsilon() * S::lit(1e3);
    let status = loop {
        let gnorm = norm_inf(&e.gradient);
        if gnorm <= opts.tol {
            break SolveStatus::Converged;
        }
        if norm_inf(&y) > opts.divergence {
            break SolveStatus::Diverged;
        }
        if iterations >= opts.max_iter {
            break SolveStatus::MaxIterations;
        }
        let neg_h: Vec<S> = e.hessian.iter().map(|&h| -h).collect();
        let trace = (0..k).fold(S::zero(), |acc, i| acc + neg_h[i * k + i]) / S::from_index(k);
        let shift = S::lit(1e-10) * if trace > S::zero() { trace } else { S::one() };
        let (d, _) = regularized_solve(&neg_h, k, &e.gradient, shift);
        let slope = dot(&e.gradient, &d);
        let mut step = S::one();
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<S> = y.iter().zip(&d).map(|(&a, &b)| a + step * b).collect();
            let te = evaluate(p, target, &trial);
            if te.feasible {
                let armijo = te.value >= e.value + S::lit(ARMIJO_SLOPE) * step * slope;
                let polish = step == S::one()
                    && te.value >= e.value - rounding * (S::one() + e.value.abs())
                    && norm_inf(&te.gradient) < gnorm;
                if armijo || polish {
                    accepted = Some((trial, te));
                    break;
                }
            }
            step = step * S::lit(0.5);
        }
        match accepted {
            Some((trial, te)) => {
                y = trial;
                e = te;
                max_iterate_norm = max_iterate_norm.max(norm_inf(&y));
                iterations += 1;
            }
            None => break SolveStatus::Stalled,
        }
    };
    DualState {
        y,
        dual_value: e.value,
        gradient: e.gradient,
        iterations,
        converged: status == SolveStatus::Converged,
        status,
        max_iterate_norm,
    }
}

fn run_qualification<S: Scalar>(p: &MomentProblem<S>, target: &[S]) -> Result<Option<QualificationReport<S>>> {
    match qualification_check(p, target) {
        Ok(r) => Ok(Some(r)),
        Err(Error::DiagnosticUnavailable(_)) | Err(Error::TooLarge { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn assemble<S: Scalar>(
    p: &MomentProblem<S>,
    dual: DualState<S>,
    qualification: Option<QualificationReport<S>>,
) -> Result<EqualitySolution<S>> {
    let primal = p.recover_primal(&dual.y)?;
    let status = qualification.as_ref().map_or(Qualification::Unavailable, |q| q.status);
    let certificate = certify_moment(p, &primal.q, &dual.y, status, dual.converged, Tolerances::entropy())?;
    Ok(EqualitySolution {
        dual,
        primal,
        certificate,
        qualification,
    })
}

/// Solves `min I(Q)` subject to `T Q = x̂` through the dual, starting at `y = 0`.
///
/// The qualification check runs first when available; a target outside the
/// achievable moments skips the ascent and returns status `Infeasible`.
pub fn solve_equality<S: Scalar>(p: &MomentProblem<S>, opts: &SolveOptions<S>) -> Result<EqualitySolution<S>> {
    solve_equality_from(p, &vec![S::zero(); p.n_features()], opts)
}

/// [`solve_equality`] with a warm start.
pub fn solve_equality_from<S: Scalar>(
    p: &MomentProblem<S>,
    y0: &[S],
    opts: &SolveOptions<S>,
) -> Result<EqualitySolution<S>> {
    let target = p
        .target()
        .ok_or_else(|| Error::InvalidInput("solve_equality needs an equality constraint".into()))?
        .to_vec();
    check_dim("warm start", p.n_features(), y0.len())?;
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("warm start must be finite".into()));
    }
    let qualification = run_qualification(p, &target)?;
    if qualification.as_ref().map(|q| q.status) == Some(Qualification::Outside) {
        let y = vec![S::zero(); p.n_features()];
        let e = evaluate(p, &target, &y);
        let dual = DualState {
            y,
            dual_value: e.value,
            gradient: e.gradient,
            iterations: 0,
            converged: false,
            status: SolveStatus::Infeasible,
            max_iterate_norm: S::zero(),
        };
        return assemble(p, dual, qualification);
    }
    let dual = newton(p, &target, y0, opts);
    assemble(p, dual, qualification)
}
