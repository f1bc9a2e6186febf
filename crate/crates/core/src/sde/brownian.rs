//! Time grid and reproducible Brownian increments.
//!
//! Every increment is a pure function of `(seed, path_index, step_index)`:
//! a Philox4x32-10 block is computed for the counter `(step, path)` under the
//! key `seed`, and the first two 64-bit words feed one Box-Muller draw (cosine
//! branch only). Ensembles are therefore identical under any schedule.

use super::SdeError;
use crate::operators::EigenSpectrum;
use crate::stability::ModelParams;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Standard normal variate for `(seed, path, step)`.
pub fn standard_normal(seed: u64, path: u64, step: u64) -> f64 {
    let out = philox4x32_10(
        [step as u32, (step >> 32) as u32, path as u32, (path >> 32) as u32],
        [seed as u32, (seed >> 32) as u32],
    );
    let a = ((out[1] as u64) << 32) | out[0] as u64;
    let b = ((out[3] as u64) << 32) | out[2] as u64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a >> 11) + 1) as f64 * TWO_POW_M53;
    let u2 = (b >> 11) as f64 * TWO_POW_M53;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Source of `N(0, tau)` increments for one master seed.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSource {
    seed: u64,
    sqrt_tau: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, tau: f64) -> Self {
        Self { seed, sqrt_tau: tau.sqrt() }
    }

    #[inline]
    pub fn increment(&self, path: u64, step: u64) -> f64 {
        self.sqrt_tau * standard_normal(self.seed, path, step)
    }
}

/// Uniform grid `t_n = n tau`, `n = 0..=n_steps`, over `N` modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    n_modes: usize,
    tau: f64,
    horizon: f64,
    n_steps: usize,
}

impl Discretization {
    /// `n_steps = ceil(horizon / tau)`; the horizon is then reset to
    /// `n_steps * tau` so every step has the same length. A ratio within
    /// `1e-9` of an integer is rounded instead of ceiled.
    pub fn new(n_modes: usize, tau: f64, horizon: f64) -> Result<Self, SdeError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(SdeError::InvalidDiscretization(format!("tau = {tau} must be positive")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SdeError::InvalidDiscretization(format!("horizon = {horizon} must be positive")));
        }
        let ratio = horizon / tau;
        let nearest = ratio.round();
        let steps = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) { nearest } else { ratio.ceil() };
        if steps > u32::MAX as f64 {
            return Err(SdeError::InvalidDiscretization(format!("{steps} steps is too many")));
        }
        Self::from_steps(n_modes, tau, steps as usize)
    }

    /// Grid with an explicit step count (zero allowed).
    pub fn from_steps(n_modes: usize, tau: f64, n_steps: usize) -> Result<Self, SdeError> {
        if n_modes == 0 {
            return Err(SdeError::InvalidDiscretization("n_modes must be at least 1".into()));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(SdeError::InvalidDiscretization(format!("tau = {tau} must be positive")));
        }
        Ok(Self { n_modes, tau, horizon: n_steps as f64 * tau, n_steps })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    /// Implicit-step denominators `1 + tau (lambda_k - beta0)` for the first
    /// `n_modes` modes; fails on the first non-positive one.
    pub fn check_invertible(&self, params: &ModelParams, spectrum: &EigenSpectrum) -> Result<Vec<f64>, SdeError> {
        if spectrum.n_modes() < self.n_modes {
            return Err(SdeError::DimensionMismatch { expected: self.n_modes, got: spectrum.n_modes() });
        }
        step_denominators(&spectrum.eigenvalues()[..self.n_modes], params.beta0, self.tau)
    }
}

pub(crate) fn step_denominators(eigenvalues: &[f64], beta0: f64, tau: f64) -> Result<Vec<f64>, SdeError> {
    eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let d = 1.0 + tau * (l - beta0);
            if d > 0.0 && d.is_finite() {
                Ok(d)
            } else {
                Err(SdeError::StepTooLarge { mode: k + 1, denominator: d })
            }
        })
        .collect()
}

/// Increments `dW_0..dW_{n-1}` and cumulative values `W(t_0) = 0..W(t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub seed: u64,
    pub path_index: u64,
    pub tau: f64,
    pub increments: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl BrownianPath {
    pub fn from_increments(seed: u64, path_index: u64, tau: f64, increments: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(increments.len() + 1);
        let mut w = 0.0;
        cumulative.push(w);
        for dw in &increments {
            w += dw;
            cumulative.push(w);
        }
        Self { seed, path_index, tau, increments, cumulative }
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    /// The same path on a grid `factor` times coarser: increments are summed
    /// in consecutive groups. Trailing steps that do not fill a group are
    /// dropped.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor >= 1, "coarsening factor must be positive");
        let increments = self.increments.chunks_exact(factor).map(|c| c.iter().sum()).collect();
        Self::from_increments(self.seed, self.path_index, self.tau * factor as f64, increments)
    }
}

/// Path 0 of `seed` on the grid of `disc`.
pub fn generate_path(seed: u64, disc: &Discretization) -> BrownianPath {
    generate_path_indexed(seed, 0, disc)
}

pub fn generate_path_indexed(seed: u64, path_index: u64, disc: &Discretization) -> BrownianPath {
    let noise = NoiseSource::new(seed, disc.tau());
    let increments = (0..disc.n_steps() as u64).map(|n| noise.increment(path_index, n)).collect();
    BrownianPath::from_increments(seed, path_index, disc.tau(), increments)
}
