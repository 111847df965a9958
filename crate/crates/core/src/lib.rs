//! Unitary, collapse-free simulation of quantum observations.
//!
//! The engine never applies a projection. At each scheduled observation it
//! samples an outcome by the Born rule and assigns the outcome macrostate by a
//! unitary acting on a still-unassigned sector of the state space, recording
//! every assignment in an append-only ledger. A textbook projection-postulate
//! simulator ([`collapse_oracle`]) is kept alongside as the statistical
//! reference.

// `!(x <= tol)` is used deliberately so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod collapse_oracle;
pub mod commutant;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod macrostate;
pub mod physication;
pub mod scenarios;

pub use error::{PhysimError, Result};
