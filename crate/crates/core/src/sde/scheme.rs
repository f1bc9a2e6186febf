use super::brownian::step_denominators;
use super::{BrownianPath, Discretization, SdeError, StateVector};
use crate::io::fmt_f64;
use crate::operators::EigenSpectrum;
use crate::stability::ModelParams;

/// Per-mode map `Y^k <- Y^k (1 + beta1 dW) / (1 + tau (lambda_k - beta0))`
/// with the denominators validated once.
#[derive(Debug, Clone)]
pub struct StepOperator {
    beta1: f64,
    denominators: Vec<f64>,
}

impl StepOperator {
    pub fn new(params: &ModelParams, spectrum: &EigenSpectrum, n_modes: usize, tau: f64) -> Result<Self, SdeError> {
        if spectrum.n_modes() < n_modes {
            return Err(SdeError::DimensionMismatch { expected: n_modes, got: spectrum.n_modes() });
        }
        let denominators = step_denominators(&spectrum.eigenvalues()[..n_modes], params.beta0, tau)?;
        Ok(Self { beta1: params.beta1, denominators })
    }

    pub fn n_modes(&self) -> usize {
        self.denominators.len()
    }

    /// Amplification `a_k(tau) = 1 / (1 + tau (lambda_k - beta0))`.
    pub fn amplification(&self, k: usize) -> f64 {
        1.0 / self.denominators[k]
    }

    #[inline]
    pub fn apply(&self, coeffs: &mut [f64], dw: f64) {
        let g = 1.0 + self.beta1 * dw;
        for (y, d) in coeffs.iter_mut().zip(&self.denominators) {
            *y = *y * g / *d;
        }
    }

    /// Applies one step and returns the new squared norm.
    #[inline]
    pub fn apply_norm_sq(&self, coeffs: &mut [f64], dw: f64) -> f64 {
        let g = 1.0 + self.beta1 * dw;
        let mut s = 0.0;
        for (y, d) in coeffs.iter_mut().zip(&self.denominators) {
            *y = *y * g / *d;
            s += *y * *y;
        }
        s
    }
}

/// One implicit Euler-Maruyama step on all modes of `state`.
pub fn implicit_em_step(
    state: &StateVector,
    dw: f64,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    tau: f64,
) -> Result<StateVector, SdeError> {
    if spectrum.n_modes() != state.len() {
        return Err(SdeError::DimensionMismatch { expected: state.len(), got: spectrum.n_modes() });
    }
    let op = StepOperator::new(params, spectrum, state.len(), tau)?;
    let mut next = state.clone();
    op.apply(next.coeffs_mut(), dw);
    Ok(next)
}

/// Sequence of `(t_n, Y_n)` for `n = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<(f64, StateVector)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(t_n, ||Y_n||^p)`.
    pub fn norm_pow_series(&self, p: f64) -> Vec<(f64, f64)> {
        self.points.iter().map(|(t, y)| (*t, y.norm_pow(p))).collect()
    }

    /// `t,norm_sq[,Y_1..Y_N]` CSV, keeping every `stride`-th point and the last one.
    pub fn to_csv(&self, include_coeffs: bool, stride: usize) -> String {
        let stride = stride.max(1);
        let n_modes = self.points.first().map_or(0, |(_, y)| y.len());
        let mut out = String::from("t,norm_sq");
        if include_coeffs {
            for k in 1..=n_modes {
                out.push_str(&format!(",Y_{k}"));
            }
        }
        out.push('\n');
        let last = self.points.len().saturating_sub(1);
        for (i, (t, y)) in self.points.iter().enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            out.push_str(&fmt_f64(*t));
            out.push(',');
            out.push_str(&fmt_f64(y.norm_sq()));
            if include_coeffs {
                for c in y.coeffs() {
                    out.push(',');
                    out.push_str(&fmt_f64(*c));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Iterates [`implicit_em_step`] along `path` from `y0`.
pub fn simulate_path(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    disc: &Discretization,
    path: &BrownianPath,
) -> Result<Trajectory, SdeError> {
    if y0.len() != disc.n_modes() {
        return Err(SdeError::DimensionMismatch { expected: disc.n_modes(), got: y0.len() });
    }
    if path.n_steps() < disc.n_steps() {
        return Err(SdeError::PathTooShort { needed: disc.n_steps(), got: path.n_steps() });
    }
    if disc.n_steps() > 0 && (path.tau - disc.tau()).abs() > 1e-12 * disc.tau() {
        return Err(SdeError::StepMismatch { path_tau: path.tau, grid_tau: disc.tau() });
    }
    let op = StepOperator::new(params, spectrum, disc.n_modes(), disc.tau())?;
    let mut points = Vec::with_capacity(disc.n_steps() + 1);
    points.push((0.0, y0.clone()));
    let mut y = y0.clone();
    for (n, dw) in path.increments[..disc.n_steps()].iter().enumerate() {
        op.apply(y.coeffs_mut(), *dw);
        points.push((disc.time(n + 1), y.clone()));
    }
    Ok(Trajectory { points })
}
