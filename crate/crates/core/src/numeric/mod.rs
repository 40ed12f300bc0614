//! Numerical building blocks shared by the physics modules.

pub mod dd;
pub mod logspace;
pub mod quadrature;
pub mod special;

pub use logspace::{log_add_exp, log_sum_exp, LogComplex, LogMagnitude};
pub use special::{ln_binomial, ln_factorial, ln_gamma};
