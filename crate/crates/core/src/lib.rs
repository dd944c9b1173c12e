//! Moment maps, energy flows and structure theorems for pairs `(μ, φ)` of a
//! Lie bracket on `ℝⁿ` and a homomorphism into a real semi-simple Lie algebra.

#![cfg_attr(test, allow(clippy::erasing_op, clippy::identity_op))]

pub mod algebra;
pub mod catalog;
pub mod error;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod moment;
pub mod pairs;
pub mod random;
pub mod rational;
pub mod structure;

pub use algebra::{centralizer, killing_form, validate_algebra, QuadraticLieAlgebra, Subspace, ValidationReport};
pub use error::{Error, Result};
pub use flow::{
    flow_energy, kempf_ness_minimize, FlowOptions, FlowResult, MinimizeOptions, MinimizeResult, Subgroup, Verdict,
};
pub use moment::{energy, moment_definitional, moment_explicit, MomentValue};
pub use pairs::{
    derivation_space, group_act, inf_act, pair_adjoint, residuals, DerivationSpace, GroupElement, Pair, Residuals,
    TangentElement,
};
pub use random::RandomMode;
