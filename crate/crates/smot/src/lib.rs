//! Shadow martingale optimal transport for convex-decreasing peacocks.
//!
//! The crate computes one-period decreasing and increasing supermartingale
//! couplings, the continuous-time transition curves `x1(t)`, `m_t` and the
//! jump maps `T_u`, `T_d`, simulates the associated jump processes and builds
//! the dual superhedging strategies.

pub mod cli;
pub mod coupling1p;
pub mod curve;
pub mod duality;
pub mod error;
pub mod marginals;
pub mod numerics;
pub mod simulate;

pub use error::{Result, SmotError};
