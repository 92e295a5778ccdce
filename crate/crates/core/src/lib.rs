//! Numerical verification workbench for the Haydys-Witten family of gauge
//! equations: residual operators on sampled fields, dimensional-reduction
//! dictionaries, explicit singular model solutions, Nahm flows and the
//! indicial-root analysis of the Nahm pole.
//!
//! Conventions used throughout (see the individual modules for detail):
//!
//! * su(2) triples satisfy `[t_i, t_j] = ε_ijk t_k` (no factor of `i`).
//! * Lie algebra elements are dense complex matrices; the compact real form
//!   is anti-Hermitian and traceless.
//! * Two-form components `ω_μν` are stored for `μ < ν` only.
//! * Angles are radians.

pub mod checks;
pub mod error;
pub mod indicial;
pub mod lattice;
pub mod lie;
pub mod models;
pub mod nahm;
pub mod octonion;
pub mod reduction;
pub mod report;
pub mod residual;

pub use error::{Error, Result};
pub use lie::{Mat, C64};
