//! Structural identifiability of inertial parameters for rigid-body trees.
//!
//! The [`rpna`] module runs the per-joint recursion, [`nullspace`] assembles
//! system-level bases and per-parameter classifications, [`regressor`]
//! provides an independent sampled check, and [`identify`] runs a
//! least-squares identification experiment on simulated data.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod identify;
pub mod linalg;
pub mod model;
pub mod nullspace;
mod par;
pub mod regressor;
pub mod rpna;
pub mod spatial;
pub mod urdf;

pub use error::{Error, Result};
pub use model::{Joint, Model, Rotor};
pub use nullspace::{Classification, SystemNullspace};
pub use rpna::{JointAnalysis, RpnaOptions};
