//! Generalized inverses of rank-deficient linear maps with prescribed
//! complements, and analysis of their stable perturbations.
//!
//! For `T` with generalized inverse `T⁺` and a perturbation `δT`, the map
//! `T̄ = T + δT` has generalized inverse `G = T⁺(I + δT T⁺)⁻¹` exactly when
//! `R(T̄) ∩ N(T⁺) = {0}`. This crate decides the carrier-map bijectivity,
//! the stability condition and the conditions equivalent to it, computes
//! `G` and the perturbed idempotents, and cross-checks each verdict with
//! independent subspace arithmetic.

pub mod cli;
pub mod dense;
pub mod diagmodel;
pub mod error;
pub mod geninv;
pub mod matrix;
pub mod oracle;
pub mod perturb;
pub mod subspace;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use subspace::Subspace;

/// Default relative tolerance for rank, subspace and residual decisions.
pub const DEFAULT_TOL: f64 = 1e-10;
