//! Modified Nystrom solver for the exterior Neumann problem of Laplace's
//! equation on planar domains with corners.
//!
//! The pipeline is: describe a [`Boundary`], cut it into corner and central
//! pieces with [`Decomposition`], assemble the collocation system with
//! [`build_system`], solve it and evaluate the harmonic field through
//! [`SolutionField`]. The [`harness`] module wires this into convergence
//! tables for manufactured solutions.

// Guards written as `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod rhs;
pub mod solve;

pub use assembly::{build_system, DenseSystem, DiscretizationParams, RhsProvider, UnknownMap};
pub use error::{Error, Result};
pub use geometry::{make_example_domain, Boundary, Decomposition, DomainFamily, MacroArc, Vec2};
pub use harness::{run_example, ExactSolution, RunConfig, TableRow};
pub use linalg::DenseMatrix;
pub use quadrature::{gauss_legendre, gauss_radau_left, QuadratureRule};
pub use rhs::{NeumannDatum, ProductRuleRhs};
pub use solve::{cond_inf, solve_dense, SolutionField};
