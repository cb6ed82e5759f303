//! Primal-dual hybrid gradient (Chambolle-Pock) with a mismatched adjoint.
//!
//! The iteration replaces the adjoint `Aᵀ` in the primal update by the
//! transpose of a surrogate operator `V`:
//!
//! ```text
//! x⁺ = prox_{τG}(x − τ Vᵀ y)
//! x̄  = x⁺ + ω (x⁺ − x)
//! y⁺ = prox_{σF*}(y + σ A x̄)
//! ```
//!
//! The crate is split into:
//!
//! * [`operators`]: matrix-free linear maps, dense maps, stacking, norm estimation.
//! * [`prox`]: proximal operators of every `G` / `F*` used in the experiments.
//! * [`stepsize`]: constant-stepsize planners and the scalar step-length certificate.
//! * [`solver`]: the mismatched iteration, its accelerated variant and run traces.
//! * [`analysis`]: closed-form fixed points of the quadratic testbed, the
//!   fixed-point error bound and convergence-rate fits.
//! * [`problems`]: scenario builders (quadratic, counterexamples, TV-regularized CT).
//! * [`io`]: plain-text matrix format, CSV and PGM export.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod io;
pub mod operators;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod stepsize;
mod vecops;

pub use operators::{DenseMap, LinearMap, MismatchedPair, StackedMap};
pub use prox::Prox;
pub use solver::{IterateState, RunTrace, SaddleProblem};
pub use stepsize::{ConvexityData, NormData, StepPlan};
