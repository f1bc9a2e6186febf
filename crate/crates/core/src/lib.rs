//! Numerical laboratory for linear stochastic evolution equations
//! `dy + Ay dt = beta0 y dt + beta1 y dW` with multiplicative scalar noise.
//!
//! The state is truncated to the first `N` eigenmodes of `A` and advanced by
//! the drift-implicit Euler-Maruyama scheme. Closed-form stability conditions,
//! exact-solution oracles and Monte Carlo estimators sit alongside, and the
//! [`experiments`] module strings them together into reproducible runs.

pub mod experiments;
pub mod io;
pub mod montecarlo;
pub mod operators;
pub mod sde;
pub mod stability;

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;
