//! Box-constrained problems, solved in moment space.
//!
//! The value function `Γ*(x) = min{I(Q) : T Q = x}` is minimized over the box
//! by a projected Newton method. Its gradient is the equality-dual optimizer
//! `ȳ(x)` and its Hessian is `(−H(ȳ))⁻¹`, so every outer iterate comes from
//! a certified inner equality solve.

use crate::certificates::{certify_moment, Certificate, Qualification, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{regularized_solve, spd_inverse};
use crate::measures::{push_weights, MomentVector};
use crate::moment::equality::{newton, solve_equality, EqualitySolution};
use crate::moment::qualification::{max_margin, qualification_check, MomentRows, QUALIFICATION_EPS};
use crate::moment::{evaluate, Constraint, DualState, MomentProblem, PrimalSolution, SolveOptions, SolveStatus};
use crate::scalar::{dot, norm_inf, Scalar};

const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Position of an optimal moment coordinate relative to its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundState {
    Free,
    Lower,
    Upper,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSolution<S> {
    /// Optimal moments `x̂*`.
    pub target: MomentVector<S>,
    /// Equality dual at `x̂*`; `converged` and `status` describe the whole solve.
    pub dual: DualState<S>,
    pub primal: PrimalSolution<S>,
    pub certificate: Certificate<S>,
    pub bounds: Vec<BoundState>,
    pub outer_iterations: usize,
}

fn from_equality<S: Scalar>(
    target: MomentVector<S>,
    s: EqualitySolution<S>,
    lower: &[S],
    upper: &[S],
) -> BoxSolution<S> {
    let bounds = bound_states(lower, upper, &target);
    BoxSolution {
        target,
        dual: s.dual,
        primal: s.primal,
        certificate: s.certificate,
        bounds,
        outer_iterations: 0,
    }
}

fn bound_states<S: Scalar>(lower: &[S], upper: &[S], x: &[S]) -> Vec<BoundState> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| {
            if l == u {
                BoundState::Fixed
            } else if v <= l {
                BoundState::Lower
            } else if v >= u {
                BoundState::Upper
            } else {
                BoundState::Free
            }
        })
        .collect()
}

/// `‖x − P(x − g)‖_∞`.
fn projected_residual<S: Scalar>(c: &Constraint<S>, x: &[S], g: &[S]) -> S {
    let moved: Vec<S> = x.iter().zip(g).map(|(&a, &b)| a - b).collect();
    let projected = c.project(&moved);
    crate::scalar::max_abs_diff(x, &projected)
}

fn is_unavailable(e: &Error) -> bool {
    matches!(e, Error::DiagnosticUnavailable(_) | Error::TooLarge { .. })
}

/// Solves `min I(Q)` subject to `l ≤ T Q ≤ u`.
///
/// Starts from the projection of the unconstrained moments `T(mR)` onto the
/// box, or from an interior point found by linear programming when that
/// projection is not achievable. Stops when `‖x − P(x − ȳ(x))‖_∞ ≤ tol`;
/// multipliers of coordinates strictly inside the box are then set to zero.
/// A box with `l = u` is handed to [`solve_equality`] unchanged.
pub fn solve_box<S: Scalar>(p: &MomentProblem<S>, opts: &SolveOptions<S>) -> Result<BoxSolution<S>> {
    let (lower, upper) = match p.constraint() {
        Constraint::Box { lower, upper } => (lower.clone(), upper.clone()),
        Constraint::Equality(x) => {
            let s = solve_equality(p, opts)?;
            return Ok(from_equality(x.clone(), s, x, x));
        }
    };
    if lower == upper {
        let target = MomentVector::new(lower.clone())?;
        let eq = p.with_constraint(Constraint::Equality(target.clone()))?;
        let s = solve_equality(&eq, opts)?;
        return Ok(from_equality(target, s, &lower, &upper));
    }
    let c = p.constraint();
    let k = p.n_features();
    let fam = p.family();
    let unconstrained: Vec<S> = p
        .reference()
        .weights()
        .iter()
        .enumerate()
        .map(|(z, &r)| fam.normalizer(z) * r)
        .collect();
    let mut x = c.project(&push_weights(p.features(), &unconstrained));

    let mut qualification = Qualification::Unavailable;
    match qualification_check(p, &x) {
        Ok(r) if r.status == Qualification::Interior => qualification = Qualification::Interior,
        Ok(_) => match max_margin(p, MomentRows::Between(&lower, &upper)) {
            Ok(Some(f)) => {
                x = c.project(&push_weights(p.features(), &f.witness));
                qualification = if f.margin > S::lit(QUALIFICATION_EPS) {
                    Qualification::Interior
                } else {
                    Qualification::Boundary
                };
            }
            Ok(None) => return finish(p, x, infeasible_state(k), Qualification::Outside, 0),
            Err(e) if is_unavailable(&e) => {}
            Err(e) => return Err(e),
        },
        Err(e) if is_unavailable(&e) => {}
        Err(e) => return Err(e),
    }

    let zeros = vec![S::zero(); k];
    let mut state = inner_solve(p, &x, &zeros, opts);
    if !state.converged {
        return finish(p, x, state, qualification, 0);
    }
    let rounding = S::epsilon() * S::lit(1e3);
    let outer_tol = opts.tol;
    let mut outer = 0;
    let status = loop {
        let residual = projected_residual(c, &x, &state.y);
        if residual <= outer_tol {
            break SolveStatus::Converged;
        }
        if outer >= opts.max_iter {
            break SolveStatus::MaxIterations;
        }
        outer += 1;
        let g = state.y.clone();
        let value = state.dual_value;
        let direction = newton_direction(p, &x, &g, &lower, &upper, residual);

        let mut accepted = None;
        for dir in [direction, g.iter().map(|&v| -v).collect::<Vec<S>>()] {
            let mut step = S::one();
            for _ in 0..MAX_BACKTRACKS {
                let moved: Vec<S> = x.iter().zip(&dir).map(|(&a, &b)| a + step * b).collect();
                let trial_x = c.project(&moved);
                let delta: Vec<S> = trial_x.iter().zip(&x).map(|(&a, &b)| a - b).collect();
                if norm_inf(&delta) == S::zero() {
                    break;
                }
                let trial = inner_solve(p, &trial_x, &state.y, opts);
                if trial.converged {
                    let decrease = dot(&g, &delta);
                    let armijo = trial.dual_value <= value + S::lit(ARMIJO_SLOPE) * decrease;
                    let polish = step == S::one()
                        && trial.dual_value <= value + rounding * (S::one() + value.abs())
                        && projected_residual(c, &trial_x, &trial.y) < residual;
                    if armijo || polish {
                        accepted = Some((trial_x, trial));
                        break;
                    }
                }
                step = step * S::lit(0.5);
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((nx, ns)) => {
                x = nx;
                state = ns;
            }
            None => break SolveStatus::Stalled,
        }
    };
    state.status = status;
    state.converged = status == SolveStatus::Converged;
    if state.converged {
        release_free_multipliers(p, &x, &lower, &upper, outer_tol, &mut state);
    }
    finish(p, x, state, qualification, outer)
}

/// Equality dual at `x`, solved well below `opts.tol`: the outer gradient
/// `ȳ(x)` carries the inner error amplified by the conditioning of `H`.
/// Accepted as converged when the requested tolerance itself is met.
fn inner_solve<S: Scalar>(p: &MomentProblem<S>, x: &[S], y0: &[S], opts: &SolveOptions<S>) -> DualState<S> {
    let tight = SolveOptions {
        tol: (opts.tol * S::lit(1e-4)).max(S::epsilon() * S::lit(16.0)),
        ..*opts
    };
    let mut state = newton(p, x, y0, &tight);
    if !state.converged && state.status != SolveStatus::Diverged && norm_inf(&state.gradient) <= opts.tol {
        state.converged = true;
        state.status = SolveStatus::Converged;
    }
    state
}

/// Projected Newton direction: a Newton step in the coordinates away from
/// their bounds, a scaled gradient step in the coordinates held at a bound.
fn newton_direction<S: Scalar>(
    p: &MomentProblem<S>,
    x: &[S],
    g: &[S],
    lower: &[S],
    upper: &[S],
    residual: S,
) -> Vec<S> {
    let k = g.len();
    let e = evaluate(p, x, g);
    let neg_h: Vec<S> = e.hessian.iter().map(|&h| -h).collect();
    let m = spd_inverse(&neg_h, k).unwrap_or_else(|| {
        let mut id = vec![S::zero(); k * k];
        (0..k).for_each(|i| id[i * k + i] = S::one());
        id
    });
    let eps = residual.min(S::lit(1e-4));
    let held: Vec<bool> = (0..k)
        .map(|i| {
            lower[i] == upper[i]
                || (x[i] <= lower[i] + eps && g[i] > S::zero())
                || (x[i] >= upper[i] - eps && g[i] < S::zero())
        })
        .collect();
    let free: Vec<usize> = (0..k).filter(|&i| !held[i]).collect();
    let mut d = vec![S::zero(); k];
    for i in 0..k {
        if held[i] && lower[i] != upper[i] {
            d[i] = -g[i] * m[i * k + i];
        }
    }
    if !free.is_empty() {
        let f = free.len();
        let mut sub = vec![S::zero(); f * f];
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                sub[a * f + b] = m[i * k + j];
            }
        }
        let rhs: Vec<S> = free.iter().map(|&i| -g[i]).collect();
        let trace = (0..f).fold(S::zero(), |acc, a| acc + sub[a * f + a]) / S::from_index(f);
        let (df, _) = regularized_solve(&sub, f, &rhs, S::lit(1e-12) * trace.max(S::min_positive_value()));
        for (a, &i) in free.iter().enumerate() {
            d[i] = df[a];
        }
    }
    d
}

/// Sets `y_k = 0` for coordinates strictly inside the box whose multiplier
/// is already below the outer tolerance, as complementary slackness requires.
fn release_free_multipliers<S: Scalar>(
    p: &MomentProblem<S>,
    x: &[S],
    lower: &[S],
    upper: &[S],
    tol: S,
    state: &mut DualState<S>,
) {
    let mut changed = false;
    for k in 0..x.len() {
        let inside = lower[k] < x[k] && x[k] < upper[k];
        if inside && state.y[k] != S::zero() && state.y[k].abs() <= tol {
            state.y[k] = S::zero();
            changed = true;
        }
    }
    if changed {
        let e = evaluate(p, x, &state.y);
        state.dual_value = e.value;
        state.gradient = e.gradient;
    }
}

fn infeasible_state<S: Scalar>(k: usize) -> DualState<S> {
    DualState {
        y: vec![S::zero(); k],
        dual_value: S::neg_infinity(),
        gradient: vec![S::zero(); k],
        iterations: 0,
        converged: false,
        status: SolveStatus::Infeasible,
        max_iterate_norm: S::zero(),
    }
}

fn finish<S: Scalar>(
    p: &MomentProblem<S>,
    x: Vec<S>,
    dual: DualState<S>,
    qualification: Qualification,
    outer_iterations: usize,
) -> Result<BoxSolution<S>> {
    let primal = p.recover_primal(&dual.y)?;
    let certificate = certify_moment(
        p,
        &primal.q,
        &dual.y,
        qualification,
        dual.converged,
        Tolerances::entropy(),
    )?;
    let (lower, upper) = match p.constraint() {
        Constraint::Box { lower, upper } => (lower.as_slice(), upper.as_slice()),
        Constraint::Equality(t) => (&t[..], &t[..]),
    };
    let bounds = bound_states(lower, upper, &x);
    Ok(BoxSolution {
        target: MomentVector(x),
        dual,
        primal,
        certificate,
        bounds,
        outer_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::box_sign_violations;
    use crate::integrands::IntegrandFamily;
    use crate::measures::{DiscreteMeasure, FeatureMap};

    fn bernoulli_box(lo: f64, hi: f64) -> MomentProblem<f64> {
        MomentProblem::new(
            DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
            IntegrandFamily::relative_entropy(),
            FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            Constraint::Box {
                lower: vec![1.0, lo],
                upper: vec![1.0, hi],
            },
        )
        .unwrap()
    }

    #[test]
    fn interior_minimizer() {
        let s = solve_box(&bernoulli_box(0.4, 0.6), &SolveOptions::default()).unwrap();
        assert_eq!(s.target.0, vec![1.0, 0.5]);
        assert_eq!(s.primal.value, 0.0);
        assert!(s.certificate.passes());
        assert_eq!(s.bounds, vec![BoundState::Fixed, BoundState::Free]);
    }

    #[test]
    fn active_lower_bound() {
        let s = solve_box(&bernoulli_box(0.7, 0.9), &SolveOptions::default()).unwrap();
        let expected = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        assert!((s.primal.value - expected).abs() < 1e-10);
        assert!(s.dual.y[1] >= 0.0);
        assert_eq!(s.bounds[1], BoundState::Lower);
        assert!(s.certificate.passes(), "{:?}", s.certificate);
        assert!(box_sign_violations(&[1.0, 0.7], &[1.0, 0.9], &s.target, &s.dual.y, 1e-8).is_empty());
    }

    #[test]
    fn degenerate_box_matches_equality() {
        let b = solve_box(&bernoulli_box(0.75, 0.75), &SolveOptions::default()).unwrap();
        let p = bernoulli_box(0.75, 0.75)
            .with_constraint(Constraint::Equality(MomentVector(vec![1.0, 0.75])))
            .unwrap();
        let e = solve_equality(&p, &SolveOptions::default()).unwrap();
        assert_eq!(b.dual.y, e.dual.y);
        assert_eq!(b.primal, e.primal);
    }

    #[test]
    fn unreachable_box() {
        let s = solve_box(&bernoulli_box(1.2, 1.5), &SolveOptions::default()).unwrap();
        assert_eq!(s.dual.status, SolveStatus::Infeasible);
        assert_eq!(s.certificate.qualification, Qualification::Outside);
    }

    #[test]
    fn projection_not_achievable() {
        // mean in [-1, 0.2] with mass in [2, 3]: T(mR) = (1, ½) projects to (2, 0.2)
        let p = MomentProblem::new(
            DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
            IntegrandFamily::relative_entropy(),
            FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            Constraint::Box {
                lower: vec![2.0, -1.0],
                upper: vec![3.0, 0.2],
            },
        )
        .unwrap();
        let s = solve_box(&p, &SolveOptions::default()).unwrap();
        assert!(s.certificate.passes(), "{:?}", s.certificate);
    }
}
