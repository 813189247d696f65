//! Entropy minimization under moment constraints, solved through its dual.
//!
//! For a reference measure `R`, an integrand family `γ` and features `θ`,
//! the primal problem minimizes `I(Q) = Σ_z γ*_z(Q_z/R_z) R_z` subject to
//! `Σ_z θ(z) Q_z ∈ C`. The dual objective for an equality constraint
//! `C = {x̂}` is
//!
//! ```text
//! D(y) = ⟨y, x̂⟩ − Γ(y),    Γ(y) = Σ_z γ_z(⟨y, θ(z)⟩) R_z,
//! ```
//!
//! maximized over `y ∈ ℝ^K` by damped Newton ascent; the primal minimizer is
//! recovered as `Q̂_z = γ′_z(⟨ȳ, θ(z)⟩) R_z`. The feature space is taken to be
//! `ℝ^K` itself, which is all the finite support requires.

mod box_solve;
mod equality;
mod qualification;

pub use box_solve::{solve_box, BoundState, BoxSolution};
pub use equality::{solve_equality, solve_equality_from, EqualitySolution};
pub use qualification::{qualification_check, QualificationReport};

use crate::error::{check_dim, Error, Result};
use crate::integrands::{entropy_of_weights, IntegrandFamily};
use crate::measures::{adjoint_raw, push_weights, DiscreteMeasure, FeatureMap, MomentVector};
use crate::scalar::{dot, Scalar};

/// Constraint set `C` on the moments.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint<S> {
    Equality(MomentVector<S>),
    /// Coordinatewise bounds; entries may be infinite.
    Box {
        lower: Vec<S>,
        upper: Vec<S>,
    },
}

impl<S: Scalar> Constraint<S> {
    pub fn dim(&self) -> usize {
        match self {
            Constraint::Equality(x) => x.len(),
            Constraint::Box { lower, .. } => lower.len(),
        }
    }

    /// `∞`-norm distance from `x` to the set.
    pub fn distance(&self, x: &[S]) -> S {
        match self {
            Constraint::Equality(t) => crate::scalar::max_abs_diff(x, t),
            Constraint::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .fold(S::zero(), |acc, (&v, (&l, &u))| acc.max(l - v).max(v - u)),
        }
    }

    /// `min_{x ∈ C} ⟨y, x⟩`, possibly `−∞`.
    pub fn support_min(&self, y: &[S]) -> S {
        match self {
            Constraint::Equality(t) => dot(y, t),
            Constraint::Box { lower, upper } => {
                let mut total = S::zero();
                for (&yk, (&l, &u)) in y.iter().zip(lower.iter().zip(upper)) {
                    let term = if yk > S::zero() {
                        yk * l
                    } else if yk < S::zero() {
                        yk * u
                    } else {
                        S::zero()
                    };
                    total = total + term;
                }
                total
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[S]) -> Vec<S> {
        match self {
            Constraint::Equality(t) => t.to_vec(),
            Constraint::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&l, &u))| v.max(l).min(u))
                .collect(),
        }
    }
}

/// Reference measure, integrand family, features and constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProblem<S> {
    reference: DiscreteMeasure<S>,
    family: IntegrandFamily<S>,
    features: FeatureMap<S>,
    constraint: Constraint<S>,
}

impl<S: Scalar> MomentProblem<S> {
    pub fn new(
        reference: DiscreteMeasure<S>,
        family: IntegrandFamily<S>,
        features: FeatureMap<S>,
        constraint: Constraint<S>,
    ) -> Result<Self> {
        reference.ensure_positive()?;
        family.validate_for(reference.len())?;
        check_dim("feature rows", reference.len(), features.n_points())?;
        check_dim("constraint dimension", features.n_features(), constraint.dim())?;
        if let Constraint::Box { lower, upper } = &constraint {
            check_dim("box upper bound", lower.len(), upper.len())?;
            for (k, (&l, &u)) in lower.iter().zip(upper).enumerate() {
                if l.is_nan() || u.is_nan() {
                    return Err(Error::NotANumber("box bounds"));
                }
                if l > u || l == S::infinity() || u == S::neg_infinity() {
                    return Err(Error::EmptyBox(k));
                }
            }
        }
        Ok(Self {
            reference,
            family,
            features,
            constraint,
        })
    }

    /// Equality-constrained problem `T Q = x̂`.
    pub fn equality(
        reference: DiscreteMeasure<S>,
        family: IntegrandFamily<S>,
        features: FeatureMap<S>,
        target: Vec<S>,
    ) -> Result<Self> {
        Self::new(
            reference,
            family,
            features,
            Constraint::Equality(MomentVector::new(target)?),
        )
    }

    pub fn reference(&self) -> &DiscreteMeasure<S> {
        &self.reference
    }

    pub fn family(&self) -> &IntegrandFamily<S> {
        &self.family
    }

    pub fn features(&self) -> &FeatureMap<S> {
        &self.features
    }

    pub fn constraint(&self) -> &Constraint<S> {
        &self.constraint
    }

    pub fn n_points(&self) -> usize {
        self.reference.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_features()
    }

    /// `x̂` for equality problems.
    pub fn target(&self) -> Option<&MomentVector<S>> {
        match &self.constraint {
            Constraint::Equality(x) => Some(x),
            Constraint::Box { .. } => None,
        }
    }

    /// Same data with another constraint.
    pub fn with_constraint(&self, constraint: Constraint<S>) -> Result<Self> {
        Self::new(
            self.reference.clone(),
            self.family.clone(),
            self.features.clone(),
            constraint,
        )
    }

    /// `Γ(y) = Σ_z γ_z(⟨y, θ(z)⟩) R_z`; `+∞` outside the dual domain.
    pub fn log_partition(&self, y: &[S]) -> S {
        let mut total = S::zero();
        for (z, (row, &r)) in self.features.rows().zip(self.reference.weights()).enumerate() {
            let g = self.family.gamma(z, dot(y, row));
            if g == S::infinity() || g.is_nan() {
                return S::infinity();
            }
            total = total + g * r;
        }
        total
    }

    /// `Q̂_z = γ′_z(⟨y, θ(z)⟩) R_z`.
    pub fn recover_weights(&self, y: &[S]) -> Vec<S> {
        adjoint_raw(&self.features, y)
            .into_iter()
            .zip(self.reference.weights())
            .enumerate()
            .map(|(z, (s, &r))| self.family.gamma_prime(z, s) * r)
            .collect()
    }

    /// Primal measure recovered from `y`, with its entropy and moments.
    pub fn recover_primal(&self, y: &[S]) -> Result<PrimalSolution<S>> {
        check_dim("dual vector", self.n_features(), y.len())?;
        let weights = self.recover_weights(y);
        let value = entropy_of_weights(&self.family, self.reference.weights(), &weights);
        let moments = MomentVector(push_weights(&self.features, &weights));
        let q = self.reference.with_weights(weights)?;
        Ok(PrimalSolution { q, value, moments })
    }
}

/// Dual objective with its gradient and Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation<S> {
    /// `⟨y, x̂⟩ − Γ(y)`, or `−∞` outside the dual domain.
    pub value: S,
    pub gradient: Vec<S>,
    /// Row-major `K×K`, negative semidefinite.
    pub hessian: Vec<S>,
    /// `false` when some `⟨y, θ(z)⟩` leaves the domain of `γ_z`.
    pub feasible: bool,
}

pub(crate) fn evaluate<S: Scalar>(p: &MomentProblem<S>, target: &[S], y: &[S]) -> DualEvaluation<S> {
    let k = p.n_features();
    let mut value = dot(y, target);
    let mut gradient = target.to_vec();
    let mut hessian = vec![S::zero(); k * k];
    let fam = &p.family;
    for (z, (row, &r)) in p.features.rows().zip(p.reference.weights()).enumerate() {
        let s = dot(y, row);
        let g = fam.gamma(z, s);
        if !g.is_finite() || !s.is_finite() {
            return DualEvaluation {
                value: S::neg_infinity(),
                gradient,
                hessian,
                feasible: false,
            };
        }
        let gp = fam.gamma_prime(z, s) * r;
        let gs = fam.gamma_second(z, s) * r;
        value = value - g * r;
        for a in 0..k {
            gradient[a] = gradient[a] - row[a] * gp;
            let ra = row[a] * gs;
            for b in a..k {
                hessian[a * k + b] = hessian[a * k + b] - ra * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            hessian[a * k + b] = hessian[b * k + a];
        }
    }
    DualEvaluation {
        value,
        gradient,
        hessian,
        feasible: true,
    }
}

/// Dual objective `⟨y, x̂⟩ − Γ(y)` of an equality problem.
pub fn dual_objective<S: Scalar>(p: &MomentProblem<S>, y: &[S]) -> Result<DualEvaluation<S>> {
    let target = p.target().ok_or_else(|| {
        Error::InvalidInput("dual_objective needs an equality constraint; see dual_objective_at".into())
    })?;
    dual_objective_at(p, target, y)
}

/// Dual objective of the equality problem with target `x̂`, ignoring the
/// problem's own constraint.
pub fn dual_objective_at<S: Scalar>(p: &MomentProblem<S>, target: &[S], y: &[S]) -> Result<DualEvaluation<S>> {
    check_dim("dual target", p.n_features(), target.len())?;
    check_dim("dual vector", p.n_features(), y.len())?;
    if y.iter().chain(target).any(|v| v.is_nan()) {
        return Err(Error::NotANumber("dual objective arguments"));
    }
    Ok(evaluate(p, target, y))
}

/// Stopping rules of the Newton ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<S> {
    /// Stop when `‖∇D‖_∞ ≤ tol`.
    pub tol: S,
    pub max_iter: usize,
    /// Iterates with `‖y‖_∞` beyond this are declared divergent.
    pub divergence: S,
}

impl<S: Scalar> Default for SolveOptions<S> {
    fn default() -> Self {
        Self {
            tol: S::default_tolerance(),
            max_iter: 200,
            divergence: S::lit(1e8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Dual iterates escaped to infinity: `x̂` is outside the closure of the
    /// achievable moments or the qualification fails.
    Diverged,
    /// No ascent step could be found.
    Stalled,
    /// The feasibility phase placed the target outside the achievable moments.
    Infeasible,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Diverged => "diverged",
            SolveStatus::Stalled => "stalled",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Final dual iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState<S> {
    pub y: Vec<S>,
    pub dual_value: S,
    pub gradient: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Largest `‖y‖_∞` over accepted iterates.
    pub max_iterate_norm: S,
}

/// Recovered primal measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution<S> {
    pub q: DiscreteMeasure<S>,
    /// `I(Q̂)`.
    pub value: S,
    /// `T Q̂`.
    pub moments: MomentVector<S>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bernoulli(target: [f64; 2]) -> MomentProblem<f64> {
        MomentProblem::equality(
            DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
            IntegrandFamily::relative_entropy(),
            FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            target.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn dual_at_zero() {
        let p = bernoulli([1.0, 0.75]);
        let e = dual_objective(&p, &[0.0, 0.0]).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, vec![0.0, 0.25]);
        assert!(e.feasible);
    }

    #[test]
    fn tilt_gradient_vanishes() {
        let p = bernoulli([1.0, 0.75]);
        let e = dual_objective(&p, &[0.5f64.ln(), 3.0f64.ln()]).unwrap();
        assert!(e.gradient.iter().all(|g| g.abs() < 1e-15));
        // hessian = −Σ θθᵀ Q̂ with Q̂ = (¼, ¾)
        assert!((e.hessian[0] + 1.0).abs() < 1e-15);
        assert!((e.hessian[1] + 0.75).abs() < 1e-15);
        assert!((e.hessian[3] + 0.75).abs() < 1e-15);
        assert_eq!(e.hessian[1], e.hessian[2]);
    }

    #[test]
    fn burg_domain_violation() {
        let p = MomentProblem::equality(
            DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
            IntegrandFamily::burg(),
            FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            vec![1.0, 0.5],
        )
        .unwrap();
        let e = dual_objective(&p, &[0.5, 0.6]).unwrap();
        assert!(!e.feasible);
        assert_eq!(e.value, f64::NEG_INFINITY);
    }

    #[test]
    fn box_geometry() {
        let c = Constraint::Box {
            lower: vec![1.0, 0.7],
            upper: vec![1.0, f64::INFINITY],
        };
        assert_eq!(c.support_min(&[-1.0, 2.0]), -1.0 + 1.4);
        assert_eq!(c.support_min(&[0.0, -1.0]), f64::NEG_INFINITY);
        assert_eq!(c.project(&[0.5, 0.2]), vec![1.0, 0.7]);
        assert!((c.distance(&[1.0, 0.5]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn empty_box_rejected() {
        let p = bernoulli([1.0, 0.5]);
        let err = p.with_constraint(Constraint::Box {
            lower: vec![1.0, 0.8],
            upper: vec![1.0, 0.7],
        });
        assert_eq!(err.unwrap_err(), Error::EmptyBox(1));
    }
}
