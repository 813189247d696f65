//! Optimality certificates: duality gap, Young residual and KKT residuals.
//!
//! A candidate pair `(Q̂, ȳ)` for a moment problem is optimal exactly when
//!
//! * (a) `T Q̂ ∈ C`,
//! * (b) `⟨ȳ, T Q̂⟩ = min_{x ∈ C} ⟨ȳ, x⟩`,
//! * (c) `Q̂_z = γ′_z(⟨ȳ, θ(z)⟩) R_z` for every `z`,
//!
//! and each condition is reported as its own nonnegative residual. The gap
//! is judged relative to the primal value, `|gap| ≤ tol·(1 + |primal|)`;
//! residuals are absolute.

use crate::error::{check_dim, Result};
use crate::integrands::entropy_of_weights;
use crate::measures::{push_weights, DiscreteMeasure};
use crate::moment::MomentProblem;
use crate::scalar::{dot, Scalar};
use crate::transport::{Potentials, TransportPlan, TransportProblem};

/// Outcome of the constraint qualification check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qualification {
    /// Target in the relative interior of the achievable moments.
    Interior,
    /// Achievable only on the relative boundary; the dual may be unattained.
    Boundary,
    /// Not achievable by any measure in the domain of `I`.
    Outside,
    /// The family or size does not support the check.
    Unavailable,
    /// No qualification is involved (transport certificates).
    NotApplicable,
}

impl Qualification {
    pub fn name(self) -> &'static str {
        match self {
            Qualification::Interior => "interior",
            Qualification::Boundary => "boundary",
            Qualification::Outside => "outside",
            Qualification::Unavailable => "unavailable",
            Qualification::NotApplicable => "not_applicable",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Qualification::Interior,
            Qualification::Boundary,
            Qualification::Outside,
            Qualification::Unavailable,
            Qualification::NotApplicable,
        ]
        .into_iter()
        .find(|q| q.name() == name)
    }
}

/// The three KKT residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport<S> {
    /// (a) `∞`-norm distance of the achieved moments to `C`.
    pub constraint_residual: S,
    /// (b) `⟨ȳ, x⟩ − min_C ⟨ȳ, ·⟩` at the point `x` of `C` nearest the moments.
    pub support_condition_residual: S,
    /// (c) `max_z |Q̂_z − γ′_z(⟨ȳ, θ(z)⟩) R_z|`.
    pub representation_residual: S,
}

impl<S: Scalar> KktReport<S> {
    pub fn max(&self) -> S {
        self.constraint_residual
            .max(self.support_condition_residual)
            .max(self.representation_residual)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<S> {
    /// Relative gap tolerance.
    pub gap: S,
    /// Absolute tolerance on every residual.
    pub residual: S,
}

impl<S: Scalar> Tolerances<S> {
    pub fn entropy() -> Self {
        Self {
            gap: S::lit(1e-8),
            residual: S::lit(1e-8),
        }
    }

    pub fn transport() -> Self {
        Self {
            gap: S::lit(1e-9),
            residual: S::lit(1e-9),
        }
    }

    pub fn uniform(tol: S) -> Self {
        Self {
            gap: tol,
            residual: tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate<S> {
    pub primal_value: S,
    pub dual_value: S,
    /// `primal_value − dual_value`.
    pub gap: S,
    pub young_residual: S,
    pub kkt: KktReport<S>,
    pub qualification: Qualification,
    pub converged: bool,
    pub tolerances: Tolerances<S>,
}

impl<S: Scalar> Certificate<S> {
    pub fn gap_ok(&self) -> bool {
        saddle_check(self.primal_value, self.dual_value, self.tolerances.gap)
    }

    pub fn residuals_ok(&self) -> bool {
        let tol = self.tolerances.residual;
        self.young_residual <= tol && self.kkt.max() <= tol
    }

    /// Converged, gap within tolerance and every residual within tolerance.
    pub fn passes(&self) -> bool {
        self.converged && self.gap_ok() && self.residuals_ok()
    }

    /// Names of the failed checks, for diagnostics.
    pub fn failures(&self) -> Vec<&'static str> {
        let tol = self.tolerances.residual;
        let mut out = Vec::new();
        if !self.converged {
            out.push("converged");
        }
        if !self.gap_ok() {
            out.push("gap");
        }
        if !(self.young_residual <= tol) {
            out.push("young_residual");
        }
        if !(self.kkt.constraint_residual <= tol) {
            out.push("constraint_residual");
        }
        if !(self.kkt.support_condition_residual <= tol) {
            out.push("support_condition_residual");
        }
        if !(self.kkt.representation_residual <= tol) {
            out.push("representation_residual");
        }
        out
    }
}

/// `true` iff `|primal − dual| ≤ tol·(1 + |primal|)`.
pub fn saddle_check<S: Scalar>(primal_value: S, dual_value: S, tol: S) -> bool {
    let gap = primal_value - dual_value;
    gap.abs() <= tol * (S::one() + primal_value.abs())
}

fn check_pair<S: Scalar>(p: &MomentProblem<S>, q: &DiscreteMeasure<S>, y: &[S]) -> Result<()> {
    p.reference().same_support(q)?;
    check_dim("dual vector", p.n_features(), y.len())
}

/// `|I(Q̂) + Γ(ȳ) − ⟨ȳ, T Q̂⟩|`, which vanishes exactly when `(Q̂, ȳ)` is a
/// Young pair; `+∞` if either side leaves its domain.
pub fn young_residual<S: Scalar>(p: &MomentProblem<S>, q: &DiscreteMeasure<S>, y: &[S]) -> Result<S> {
    check_pair(p, q, y)?;
    let entropy = entropy_of_weights(p.family(), p.reference().weights(), q.weights());
    let gamma = p.log_partition(y);
    let pairing = dot(y, &push_weights(p.features(), q.weights()));
    let r = (entropy + gamma - pairing).abs();
    Ok(if r.is_nan() { S::infinity() } else { r })
}

/// KKT residuals (a), (b), (c) of `(Q̂, ȳ)` for the problem's constraint.
pub fn kkt_report<S: Scalar>(p: &MomentProblem<S>, q: &DiscreteMeasure<S>, y: &[S]) -> Result<KktReport<S>> {
    check_pair(p, q, y)?;
    let c = p.constraint();
    let moments = push_weights(p.features(), q.weights());
    let constraint_residual = c.distance(&moments);
    let nearest = c.project(&moments);
    let support = dot(y, &nearest) - c.support_min(y);
    let support_condition_residual = if support.is_nan() {
        S::infinity()
    } else {
        support.max(S::zero())
    };
    let representation_residual = q
        .weights()
        .iter()
        .zip(p.recover_weights(y))
        .fold(S::zero(), |acc, (&w, r)| acc.max((w - r).abs()));
    Ok(KktReport {
        constraint_residual,
        support_condition_residual,
        representation_residual,
    })
}

/// Full certificate for a candidate pair of a moment problem. The dual value
/// is `min_{x ∈ C} ⟨ȳ, x⟩ − Γ(ȳ)`.
pub fn certify_moment<S: Scalar>(
    p: &MomentProblem<S>,
    q: &DiscreteMeasure<S>,
    y: &[S],
    qualification: Qualification,
    converged: bool,
    tolerances: Tolerances<S>,
) -> Result<Certificate<S>> {
    check_pair(p, q, y)?;
    let primal_value = entropy_of_weights(p.family(), p.reference().weights(), q.weights());
    let dual_value = p.constraint().support_min(y) - p.log_partition(y);
    Ok(Certificate {
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        young_residual: young_residual(p, q, y)?,
        kkt: kkt_report(p, q, y)?,
        qualification,
        converged,
        tolerances,
    })
}

/// Coordinates where the box sign conditions fail: `ȳ_k ≥ −tol` at an active
/// lower bound, `ȳ_k ≤ tol` at an active upper bound, `|ȳ_k| ≤ tol` at inactive
/// coordinates. Fixed coordinates (`l_k = u_k`) carry no condition.
pub fn box_sign_violations<S: Scalar>(lower: &[S], upper: &[S], x: &[S], y: &[S], tol: S) -> Vec<usize> {
    let near = |a: S, b: S| (a - b).abs() <= S::lit(1e-9) * (S::one() + b.abs());
    (0..y.len())
        .filter(|&k| {
            let (l, u) = (lower[k], upper[k]);
            if l == u {
                return false;
            }
            let at_lower = l.is_finite() && near(x[k], l);
            let at_upper = u.is_finite() && near(x[k], u);
            match (at_lower, at_upper) {
                (true, false) => y[k] < -tol,
                (false, true) => y[k] > tol,
                (true, true) => false,
                (false, false) => y[k].abs() > tol,
            }
        })
        .collect()
}

/// Certificate of a transport plan and potentials.
///
/// Young residual: `|Σ π_ij (c_ij − f_i − g_j)|`. Constraint residual: largest
/// marginal error. Support condition: largest violation of `f ⊕ g ≤ c`.
/// Representation: largest slack `c_ij − f_i − g_j` on cells with
/// `π_ij > tol`.
pub fn certify_transport<S: Scalar>(
    p: &TransportProblem<S>,
    plan: &TransportPlan<S>,
    potentials: &Potentials<S>,
    tolerances: Tolerances<S>,
) -> Result<Certificate<S>> {
    let (m, n) = (p.m(), p.n());
    check_dim("plan rows", m, plan.m())?;
    check_dim("plan columns", n, plan.n())?;
    check_dim("row potentials", m, potentials.f.len())?;
    check_dim("column potentials", n, potentials.g.len())?;
    let primal_value = p.cost_of(plan);
    let dual_value = dot(&potentials.f, p.mu()) + dot(&potentials.g, p.nu());
    let mut young = S::zero();
    let mut infeasibility = S::zero();
    let mut slack_on_support = S::zero();
    for i in 0..m {
        for j in 0..n {
            let slack = p.cost(i, j) - potentials.f[i] - potentials.g[j];
            let pij = plan.get(i, j);
            young = young + pij * slack;
            infeasibility = infeasibility.max(-slack);
            if pij > tolerances.residual {
                slack_on_support = slack_on_support.max(slack.abs());
            }
        }
    }
    let rows = plan.row_sums();
    let cols = plan.col_sums();
    let marginal_error = crate::scalar::max_abs_diff(&rows, p.mu()).max(crate::scalar::max_abs_diff(&cols, p.nu()));
    let negative = plan
        .entries()
        .iter()
        .fold(S::zero(), |acc, &v| if -v > acc { -v } else { acc });
    Ok(Certificate {
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        young_residual: young.abs(),
        kkt: KktReport {
            constraint_residual: marginal_error.max(negative),
            support_condition_residual: infeasibility,
            representation_residual: slack_on_support,
        },
        qualification: Qualification::NotApplicable,
        converged: true,
        tolerances,
    })
}

/// Certificate for an equality or box problem given only `(Q̂, ȳ)`; the
/// qualification is not recomputed.
pub fn certify_candidate<S: Scalar>(
    p: &MomentProblem<S>,
    q: &DiscreteMeasure<S>,
    y: &[S],
    tolerances: Tolerances<S>,
) -> Result<Certificate<S>> {
    certify_moment(p, q, y, Qualification::Unavailable, true, tolerances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrands::IntegrandFamily;
    use crate::measures::FeatureMap;
    use crate::moment::Constraint;

    fn bernoulli(target: [f64; 2]) -> MomentProblem<f64> {
        MomentProblem::equality(
            DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
            IntegrandFamily::relative_entropy(),
            FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            target.to_vec(),
        )
        .unwrap()
    }

    fn tilt() -> Vec<f64> {
        vec![0.5f64.ln(), 3.0f64.ln()]
    }

    #[test]
    fn young_examples() {
        let p = bernoulli([1.0, 0.75]);
        let q = p.reference().with_weights(vec![0.25, 0.75]).unwrap();
        assert!(young_residual(&p, &q, &tilt()).unwrap() <= 1e-10);
        let wrong = young_residual(&p, &q, &[0.0, 0.0]).unwrap();
        assert!((wrong - 0.130812).abs() < 1e-6);
        let r = p.reference().clone();
        assert_eq!(young_residual(&p, &r, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn saddle_examples() {
        assert!(saddle_check(0.130812, 0.130812, 1e-8));
        assert!(saddle_check(0.3, 0.3, 1e-9));
        assert!(!saddle_check(1.0, 0.0, 1e-8));
    }

    #[test]
    fn kkt_at_optimum_and_perturbed() {
        let p = bernoulli([1.0, 0.75]);
        let y = tilt();
        let q = p.recover_primal(&y).unwrap().q;
        let k = kkt_report(&p, &q, &y).unwrap();
        assert!(k.max() <= 1e-12);
        let bumped = {
            let mut w = q.weights().to_vec();
            w[0] += 0.01;
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let qp = q.with_weights(bumped).unwrap();
        assert!(kkt_report(&p, &qp, &y).unwrap().representation_residual >= 5e-3);
    }

    #[test]
    fn each_condition_raises_its_own_residual() {
        // (a): consistent Young pair at the wrong dual point
        let p = bernoulli([1.0, 0.75]);
        let y = vec![0.0, 0.0];
        let q = p.recover_primal(&y).unwrap().q;
        let k = kkt_report(&p, &q, &y).unwrap();
        assert!(k.constraint_residual > 1e-7);
        assert!(k.support_condition_residual == 0.0 && k.representation_residual == 0.0);

        // (b): moments inside the box but the dual sign is wrong
        let boxed = p
            .with_constraint(Constraint::Box {
                lower: vec![1.0, 0.7],
                upper: vec![1.0, 0.9],
            })
            .unwrap();
        let y = tilt(); // optimal dual for mean 0.75, positive mean component
        let q = boxed.recover_primal(&y).unwrap().q;
        let k = kkt_report(&boxed, &q, &y).unwrap();
        assert!(k.support_condition_residual > 1e-7);
        assert!(k.constraint_residual < 1e-12 && k.representation_residual == 0.0);

        // (c): same moments, different measure
        let p3 = MomentProblem::equality(
            DiscreteMeasure::from_weights(vec![1.0 / 3.0; 3]).unwrap(),
            IntegrandFamily::relative_entropy(),
            FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap(),
            vec![1.0, 1.0],
        )
        .unwrap();
        let y = vec![0.0, 0.0];
        let w: Vec<f64> = vec![1.0 / 3.0 + 0.01, 1.0 / 3.0 - 0.02, 1.0 / 3.0 + 0.01];
        let q = p3.reference().with_weights(w).unwrap();
        let k = kkt_report(&p3, &q, &y).unwrap();
        assert!(k.representation_residual > 1e-7);
        assert!(k.constraint_residual < 1e-15 && k.support_condition_residual == 0.0);
    }

    #[test]
    fn sign_conditions() {
        let lower = [1.0, 0.7, f64::NEG_INFINITY];
        let upper = [1.0, 0.9, 5.0];
        assert!(box_sign_violations(&lower, &upper, &[1.0, 0.7, 5.0], &[-3.0, 0.2, -0.1], 1e-8).is_empty());
        assert_eq!(
            box_sign_violations(&lower, &upper, &[1.0, 0.7, 2.0], &[-3.0, -0.2, 0.1], 1e-8),
            vec![1, 2]
        );
    }

    #[test]
    fn qualification_names_round_trip() {
        for q in [
            Qualification::Interior,
            Qualification::Outside,
            Qualification::NotApplicable,
        ] {
            assert_eq!(Qualification::from_name(q.name()), Some(q));
        }
    }
}
