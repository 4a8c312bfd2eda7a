//! Spacecraft multidisciplinary analysis and trajectory optimization.
//!
//! Discipline models (orbit, attitude, illumination, communication), a
//! JSON mission-specification layer that assembles them, and a gradient-based
//! formation trajectory optimizer driven by discrete-adjoint derivatives.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod astro;
pub mod attitude;
pub mod cli;
pub mod comms;
pub mod error;
pub mod gravity;
pub mod illumination;
pub mod mission;
pub mod ode;
pub mod trajopt;

pub use error::{Error, Result};
