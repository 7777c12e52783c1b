//! Noise engine for an anti-resonant end-mirror cavity: compound-mirror
//! optics, coating thermal noise, sideband-control quantum noise with
//! phase or variational readout, and loss-constrained layer optimization.
//!
//! Grid evaluations run on rayon when the `parallel` feature (default) is
//! enabled; see [`exec`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod optics;
pub mod optimize;
pub mod quantum;
pub mod thermal;

pub use error::{Error, Result};
pub use exec::Execution;
