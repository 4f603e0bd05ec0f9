//! Numerics for modular position/momentum observables on multislit
//! interference states.
//!
//! The crate builds the uniformly illuminated `m`-slit states, evaluates the
//! modular decomposition `Q = Q_mod + Q_T`, `P = P_mod + P_K`, and computes the
//! standard deviations and uncertainty products that go with them. Every
//! headline number is reachable by at least two independent routes (closed
//! form, single-fringe quadrature, full-line brute force) so the routes can
//! be checked against each other.
//!
//! Units: `hbar = 1`, lengths in arbitrary user units, wavenumbers in inverse
//! user units.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aperture;
pub mod cli;
pub mod error;
pub mod exec;
pub mod gridlab;
pub mod identities;
pub mod modular;
pub mod moments;
pub mod quadrature;

pub use aperture::{MomentumEvaluator, PositionState, SlitConfig};
pub use error::{Error, Result};
pub use exec::Execution;
pub use moments::{MomentReport, Moments, SweepRow};
