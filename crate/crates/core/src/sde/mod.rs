//! Spectral Galerkin truncation advanced by the drift-implicit Euler-Maruyama
//! scheme, plus closed-form oracles for the continuous and discrete laws.

mod brownian;
mod exact;
mod galerkin;
mod scheme;

use thiserror::Error;

pub use brownian::{
    generate_path, generate_path_indexed, philox4x32_10, standard_normal, BrownianPath, Discretization, NoiseSource,
};
pub use exact::{
    discrete_second_moment_rate, discrete_second_moment_recursion, discrete_second_moment_series, exact_mode_moment, exact_solution,
    exact_trajectory,
};
pub(crate) use galerkin::norm_pow_from_sq;
pub use galerkin::{project_initial_condition, InitialCondition, StateVector};
pub use scheme::{implicit_em_step, simulate_path, StepOperator, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("time step too large for this drift: 1 + tau*(lambda_k - beta0) = {denominator} <= 0 at mode k = {mode}")]
    StepTooLarge { mode: usize, denominator: f64 },
    #[error("dimension mismatch: expected {expected} modes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Brownian path has {got} increments but {needed} steps are required")]
    PathTooShort { needed: usize, got: usize },
    #[error("Brownian path step {path_tau} does not match the grid step {grid_tau}")]
    StepMismatch { path_tau: f64, grid_tau: f64 },
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("quadrature failed its self-consistency check ({panels} panels, last change {change:e})")]
    Quadrature { panels: usize, change: f64 },
    #[error("second-moment recursion needs p = 2, got p = {0}")]
    NotSecondMoment(f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
}
