//! Numerics for steady gradient Kähler–Ricci solitons on asymptotically
//! cylindrical model geometries: radial models, cross-section spectra,
//! critical weights, a drift-Laplacian solver, a continuity-method
//! Monge–Ampère solver, cut-off gluing and verification diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Stencil loops index several arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod continuity;
pub mod diagnostics;
pub mod drift;
pub mod error;
pub mod glue;
pub mod grid;
pub mod indicial;
pub mod linalg;
pub mod ma2d;
pub mod manufactured;
pub mod model;
pub mod norms;
pub mod potential;
pub mod spectrum;

pub use continuity::{
    continuity_solve, linearized_operator, ma_residual_radial, ma_residual_values, uniqueness_check, ContinuityConfig,
    ContinuityFailure, FailureKind, LinearizedOperator, SolitonSolution, StepRecord,
};
pub use diagnostics::{poincare_rayleigh, rayleigh_quotient, verify_solution, VerificationReport, VerifyOptions};
pub use drift::{assemble_mode_operator, solve_field, solve_mode, Boundary, DriftOperator, ModeProblem};
pub use error::{Error, Result};
pub use glue::{auto_rho, glue_coefficient, glued_model, potential_of, GlueSpec};
pub use grid::{Grid, GridFunction, GridFunction2D};
pub use indicial::{critical_weights, fredholm_window_check, CriticalWeightSet};
pub use ma2d::ma_residual_2d;
pub use model::{cigar_model, cylinder_model, ricci_coefficient, soliton_residual, ModelKind, RadialKahlerModel};
pub use norms::{decay_rate_fit, weighted_sup_norm, WeightedNormSpec};
pub use potential::{InnerStencil, RadialPotential};
pub use spectrum::{CrossSection, Mode, Quotient};
