//! Generalized hydrogen coherent states: radial Klauder-type weights,
//! SO(4) angular factors, time evolution, revivals, position-space fields
//! and resolution-of-identity checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hydrogen;
pub mod identity;
pub mod io;
pub mod numeric;
pub mod position;
pub mod state;
pub mod su2;
pub mod weights;

pub use error::{Error, Result};
