//! Independent brute-force verifiers and a small dense LP solver.
//!
//! Nothing here calls into the solvers it is meant to check.

pub mod grid;
pub mod simplex;
pub mod vertices;

pub use grid::{entropy_oracle_grid, entropy_oracle_grid_capped, GridReport};
pub use simplex::{simplex_solve, LinearConstraint, LinearProgram, LpOutcome, Relation, Sense};
pub use vertices::{ot_oracle_vertices, VertexReport};
