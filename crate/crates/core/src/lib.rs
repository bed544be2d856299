//! Numerical library for radial diffusion with superlinear power-law
//! absorption driven by a time-independent point source.
//!
//! The crate computes:
//! - exact linear point-source solutions and their asymptotics ([`specialfn`]),
//! - closed-form model quantities and admissibility checks ([`model`]),
//! - the self-similar profile by collocation and by energy minimization
//!   ([`profile`]),
//! - the time-dependent mollified problem ([`evolve`]) and its stationary
//!   limit ([`stationary`]),
//! - comparison-principle audits: operator residuals, sub/super-solution
//!   sandwich bounds, the similarity frame and its convergence metric, and a
//!   weak-form residual ([`verify`]).
//!
//! Heavy audits fan out over rayon when the default `parallel` feature is
//! enabled; disabling it yields a fully sequential build with identical
//! results.

pub mod error;
pub mod evolve;
pub mod grid;
pub mod interp;
mod linalg;
pub mod model;
pub mod mollifier;
pub mod par;
pub mod profile;
pub mod quad;
pub mod specialfn;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
