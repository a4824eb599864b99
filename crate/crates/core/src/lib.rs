//! Stochastic cell-adhesion model: exact jump-process simulation of bond
//! dynamics, deterministic and diffusive scaling limits, and first-passage
//! analytics for the cell stopping time.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cir;
pub mod diffusion;
pub mod error;
pub mod fpt;
pub mod limits;
pub mod model;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod ssa;
pub mod stats;

pub use error::{Error, Result};
pub use model::{ModelParams, RegimeKind, ScalingRegime};
pub use ssa::{StopReason, Trajectory};
pub use stats::SummaryStats;
