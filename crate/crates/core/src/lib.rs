//! Bounds engine for binary multi-channel discrimination with Gaussian probes.
//!
//! Channel patterns are binary strings of background (0) and target (1)
//! channels. Probes are zero-mean Gaussian states irradiated over probe
//! domains; the engine turns the resulting output fidelities into lower and
//! upper bounds on the error probability and compares them with classical
//! single-mode probing.

pub mod bounds;
pub mod channels;
pub mod error;
pub mod gaussian;
pub mod oracle;
pub mod patterns;
pub mod protocol;

pub use error::{Error, Result};
