//! Closed forms: the pathwise solution `y(t) = exp(beta1 W - beta1^2 t / 2) S(t) y0`,
//! its single-mode p-th moments, and the exact second moment of the discrete scheme.

use super::brownian::step_denominators;
use super::{BrownianPath, SdeError, StateVector, Trajectory};
use crate::operators::EigenSpectrum;
use crate::stability::ModelParams;

fn check_modes(y0: &StateVector, spectrum: &EigenSpectrum) -> Result<(), SdeError> {
    if spectrum.n_modes() < y0.len() {
        return Err(SdeError::DimensionMismatch { expected: y0.len(), got: spectrum.n_modes() });
    }
    Ok(())
}

/// Exact solution at time `t` given the Brownian value `W(t) = w_t`.
pub fn exact_solution(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    t: f64,
    w_t: f64,
) -> Result<StateVector, SdeError> {
    if t < 0.0 {
        return Err(SdeError::NegativeTime(t));
    }
    check_modes(y0, spectrum)?;
    let b1 = params.beta1;
    let noise = (b1 * w_t - 0.5 * b1 * b1 * t).exp();
    let coeffs = y0
        .coeffs()
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(y, l)| y * (-(l - params.beta0) * t).exp() * noise)
        .collect();
    Ok(StateVector::new(coeffs))
}

/// Exact solution sampled on the grid of `path`.
pub fn exact_trajectory(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    path: &BrownianPath,
) -> Result<Trajectory, SdeError> {
    let points = path
        .cumulative
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let t = n as f64 * path.tau;
            exact_solution(y0, params, spectrum, t, *w).map(|y| (t, y))
        })
        .collect::<Result<_, _>>()?;
    Ok(Trajectory { points })
}

/// `E|y_k(t)|^p` for a deterministic initial coefficient, from
/// `E exp(p beta1 W(t)) = exp(p^2 beta1^2 t / 2)`.
pub fn exact_mode_moment(y0_k: f64, params: &ModelParams, lambda_k: f64, t: f64) -> Result<f64, SdeError> {
    if t < 0.0 {
        return Err(SdeError::NegativeTime(t));
    }
    let ModelParams { beta0, beta1, p } = *params;
    let drift = -p * (lambda_k - beta0) - 0.5 * p * beta1 * beta1;
    let lognormal = 0.5 * p * p * beta1 * beta1;
    Ok(y0_k.abs().powf(p) * ((drift + lognormal) * t).exp())
}

fn second_moment_factor(params: &ModelParams, lambda_k: f64, tau: f64) -> Result<f64, SdeError> {
    if params.p != 2.0 {
        return Err(SdeError::NotSecondMoment(params.p));
    }
    let d = step_denominators(&[lambda_k], params.beta0, tau)?[0];
    let a = 1.0 / d;
    Ok(a * a * (1.0 + params.beta1 * params.beta1 * tau))
}

/// `E|Y_n^k|^2 = |y0_k|^2 [a_k(tau)^2 (1 + beta1^2 tau)]^n`, exact for the scheme.
pub fn discrete_second_moment_recursion(
    y0_k: f64,
    params: &ModelParams,
    lambda_k: f64,
    tau: f64,
    n: usize,
) -> Result<f64, SdeError> {
    let rho = second_moment_factor(params, lambda_k, tau)?;
    Ok(y0_k * y0_k * pow_usize(rho, n))
}

/// Per-unit-time decay rate `-ln(a_k^2 (1 + beta1^2 tau)) / tau` of the
/// discrete second moment of mode `k`.
pub fn discrete_second_moment_rate(params: &ModelParams, lambda_k: f64, tau: f64) -> Result<f64, SdeError> {
    Ok(-second_moment_factor(params, lambda_k, tau)?.ln() / tau)
}

/// `E||Y_n||^2` for every `n` in `steps`, summed over modes.
pub fn discrete_second_moment_series(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    tau: f64,
    steps: &[usize],
) -> Result<Vec<f64>, SdeError> {
    check_modes(y0, spectrum)?;
    let rhos = y0
        .coeffs()
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(_, l)| second_moment_factor(params, *l, tau))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(steps
        .iter()
        .map(|&n| y0.coeffs().iter().zip(&rhos).map(|(y, r)| y * y * pow_usize(*r, n)).sum())
        .collect())
}

fn pow_usize(x: f64, n: usize) -> f64 {
    match i32::try_from(n) {
        Ok(n) => x.powi(n),
        Err(_) => (n as f64 * x.ln()).exp(),
    }
}
