//! Closed-form moment and almost-sure stability conditions for
//! `dy + Ay dt = beta0 y dt + beta1 y dW` and the boundaries of the
//! corresponding stability regions in the `(beta1, beta0)` plane.

use thiserror::Error;

use crate::io::csv_from_rows;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("moment order p = {0} must be a finite number >= 1")]
    MomentOrder(f64),
    #[error("coefficient {name} = {value} is not finite")]
    NotFinite { name: &'static str, value: f64 },
    #[error("principal eigenvalue must be positive, got {0}")]
    Lambda1(f64),
    #[error("region boundary needs at least one beta1 sample")]
    NoSamples,
}

/// Drift `beta0`, noise intensity `beta1` and moment order `p >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta0: f64,
    pub beta1: f64,
    pub p: f64,
}

impl ModelParams {
    pub fn new(beta0: f64, beta1: f64, p: f64) -> Result<Self, StabilityError> {
        if !beta0.is_finite() {
            return Err(StabilityError::NotFinite { name: "beta0", value: beta0 });
        }
        if !beta1.is_finite() {
            return Err(StabilityError::NotFinite { name: "beta1", value: beta1 });
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(StabilityError::MomentOrder(p));
        }
        Ok(Self { beta0, beta1, p })
    }

    pub fn with_p(self, p: f64) -> Result<Self, StabilityError> {
        Self::new(self.beta0, self.beta1, p)
    }
}

fn check_lambda1(lambda1: f64) -> Result<(), StabilityError> {
    if lambda1.is_finite() && lambda1 > 0.0 {
        Ok(())
    } else {
        Err(StabilityError::Lambda1(lambda1))
    }
}

/// `mu_p = p (lambda1 - beta0) - p (p - 1) beta1^2 / 2`. Any sign.
pub fn moment_decay_rate(params: &ModelParams, lambda1: f64) -> Result<f64, StabilityError> {
    check_lambda1(lambda1)?;
    Ok(moment_rate_unchecked(params, lambda1))
}

/// `mu_as = p beta1^2 / 2 + p (lambda1 - beta0)`. Any sign.
pub fn as_decay_rate(params: &ModelParams, lambda1: f64) -> Result<f64, StabilityError> {
    check_lambda1(lambda1)?;
    Ok(as_rate_unchecked(params, lambda1))
}

pub(crate) fn moment_rate_unchecked(params: &ModelParams, lambda: f64) -> f64 {
    let ModelParams { beta0, beta1, p } = *params;
    p * (lambda - beta0) - 0.5 * p * (p - 1.0) * beta1 * beta1
}

fn as_rate_unchecked(params: &ModelParams, lambda1: f64) -> f64 {
    let ModelParams { beta0, beta1, p } = *params;
    0.5 * p * beta1 * beta1 + p * (lambda1 - beta0)
}

/// Outcome of the two sufficient conditions. A rate is only attached when its
/// condition holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub moment_stable: bool,
    pub as_stable: bool,
    pub mu_p: Option<f64>,
    pub mu_as: Option<f64>,
}

/// Evaluates `(p-1) beta1^2 < 2 (lambda1 - beta0)` and
/// `beta1^2 > 2 (beta0 - lambda1)`. Equality counts as not stable.
pub fn classify(params: &ModelParams, lambda1: f64) -> Result<StabilityVerdict, StabilityError> {
    check_lambda1(lambda1)?;
    let ModelParams { beta0, beta1, p } = *params;
    let b2 = beta1 * beta1;
    let moment_stable = (p - 1.0) * b2 < 2.0 * (lambda1 - beta0);
    let as_stable = b2 > 2.0 * (beta0 - lambda1);
    Ok(StabilityVerdict {
        moment_stable,
        as_stable,
        mu_p: moment_stable.then(|| moment_rate_unchecked(params, lambda1)),
        mu_as: as_stable.then(|| as_rate_unchecked(params, lambda1)),
    })
}

/// Threshold `sqrt(2 (beta0 - lambda1))` above which noise stabilizes paths
/// almost surely; zero when the deterministic system is already stable.
pub fn as_noise_threshold(beta0: f64, lambda1: f64) -> f64 {
    (2.0 * (beta0 - lambda1)).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// p-th moment boundary `beta0 = lambda1 - (p-1)/2 beta1^2`
    MomentMe,
    /// almost-sure boundary `beta0 = lambda1 + beta1^2 / 2`
    AlmostSure,
}

/// Samples the boundary curve `beta0(beta1)` of the chosen stability region.
/// `p` only matters for [`RegionKind::MomentMe`].
pub fn region_boundary(
    kind: RegionKind,
    lambda1: f64,
    p: f64,
    beta1_samples: &[f64],
) -> Result<Vec<(f64, f64)>, StabilityError> {
    check_lambda1(lambda1)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(StabilityError::MomentOrder(p));
    }
    if beta1_samples.is_empty() {
        return Err(StabilityError::NoSamples);
    }
    let coeff = match kind {
        RegionKind::MomentMe => -0.5 * (p - 1.0),
        RegionKind::AlmostSure => 0.5,
    };
    Ok(beta1_samples.iter().map(|&b| (b, lambda1 + coeff * b * b)).collect())
}

/// `beta1,beta0` CSV.
pub fn boundary_csv(points: &[(f64, f64)]) -> String {
    let rows: Vec<[f64; 2]> = points.iter().map(|&(a, b)| [a, b]).collect();
    csv_from_rows(&["beta1", "beta0"], rows.iter().map(|r| &r[..]))
}

/// Evenly spaced samples on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
