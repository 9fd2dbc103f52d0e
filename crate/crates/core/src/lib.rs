//! Numerical toolkit for the cusp (A₃) slow-fast system.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod blowup;
pub mod cusp;
pub mod error;
pub mod exp_maps;
pub mod odeflow;
pub mod sdi;
pub mod transition;
pub mod verify;

pub use error::{Error, Result};
