//! Two-timescale rate analysis for active and passive RIS-aided links.
//!
//! The crate covers uniform planar array geometry, Rician channel synthesis,
//! closed-form ergodic-rate approximations, a brute-force Monte-Carlo oracle,
//! a genetic phase-shift optimizer and the sweep and plotting pipeline used by
//! the `ris-sim` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod channel;
pub mod closed_form;
pub mod config;
pub mod error;
pub mod experiment;
pub mod monte_carlo;
pub mod optimizer;
pub mod plot;
pub mod validation;

pub use array::{Link, PhaseConfig};
pub use closed_form::Mode;
pub use config::SystemConfig;
pub use error::{Error, Result};
