//! Conjugate-duality solvers for entropy minimization under moment
//! constraints and for discrete optimal transport.
//!
//! Every solve returns a [`Certificate`] with the primal and dual values,
//! the Young residual and KKT residuals, so callers can check a result
//! without trusting the solver that produced it. Small instances can also be
//! cross-checked against the brute-force routines in [`oracles`].
//!
//! ```
//! use saddlepoint::{solve_equality, DiscreteMeasure, FeatureMap, IntegrandFamily, MomentProblem, SolveOptions};
//!
//! let p = MomentProblem::equality(
//!     DiscreteMeasure::from_weights(vec![0.5f64, 0.5])?,
//!     IntegrandFamily::relative_entropy(),
//!     FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]])?,
//!     vec![1.0, 0.75],
//! )?;
//! let s = solve_equality(&p, &SolveOptions::default())?;
//! assert!(s.certificate.passes());
//! assert!((s.primal.value - 0.130812).abs() < 1e-6);
//! # Ok::<(), saddlepoint::Error>(())
//! ```
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`); the
//! `F64*` aliases below name the double-precision instantiations.

// `!(a <= b)` is used on purpose: it is true when either side is NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod gauge;
pub mod generate;
pub mod integrands;
pub(crate) mod linalg;
pub mod measures;
pub mod moment;
pub mod oracles;
pub mod scalar;
pub mod search;
pub mod transport;

pub use certificates::{
    box_sign_violations, certify_candidate, certify_moment, certify_transport, kkt_report, saddle_check,
    young_residual, Certificate, KktReport, Qualification, Tolerances,
};
pub use error::{Error, Result};
pub use gauge::{
    conjugate_nd, gauge, norm_identity_check, norm_lambda, norm_phi, pgauge_sandwich, support_of_levelset,
    ConvexGaugeSpec, NormIdentity, Sandwich, Theta,
};
pub use integrands::{
    entropy_value, integrand_eval, numeric_conjugate, FamilyKind, FamilyTag, IntegrandFamily, Quantity,
    TabulatedIntegrand,
};
pub use measures::{
    adjoint_features, marginal_feature_map, product_support, push_moments, DiscreteMeasure, FeatureMap, MomentVector,
    SupportPoint,
};
pub use moment::{
    dual_objective, dual_objective_at, qualification_check, solve_box, solve_equality, solve_equality_from, BoundState,
    BoxSolution, Constraint, DualEvaluation, DualState, EqualitySolution, MomentProblem, PrimalSolution,
    QualificationReport, SolveOptions, SolveStatus,
};
pub use oracles::{entropy_oracle_grid, ot_oracle_vertices, simplex_solve, GridReport, VertexReport};
pub use scalar::Scalar;
pub use transport::{
    c_transform, c_transform_cols, potentials_from_plan, slackness_check, solve_ot, OtSolution, Potentials,
    TransportPlan, TransportProblem,
};

pub type F64Measure = DiscreteMeasure<f64>;
pub type F64Features = FeatureMap<f64>;
pub type F64Family = IntegrandFamily<f64>;
pub type F64MomentProblem = MomentProblem<f64>;
pub type F64TransportProblem = TransportProblem<f64>;
pub type F64TransportPlan = TransportPlan<f64>;
pub type F64Certificate = Certificate<f64>;
pub type F64GaugeSpec = ConvexGaugeSpec<f64>;
