//! Truncated spectra of the example operators: Dirichlet Laplacian, hinged
//! biharmonic, spectral fractional Laplacian (all on the unit interval) and the
//! principal eigenvalue of the power-degenerate diffusion `-(x^alpha v_x)_x`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::io::fmt_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("number of modes must be at least 1")]
    NoModes,
    #[error("fractional order s = {0} is outside (0, 1]")]
    FractionalOrder(f64),
    #[error("fractional power needs a Heat1D base spectrum, got {0}")]
    FractionalBase(SpectrumKind),
    #[error("degeneracy alpha = {0} is outside [0, 2)")]
    Degeneracy(f64),
    #[error("degenerate eigensolver needs at least {min} grid points, got {got}")]
    TooFewGridPoints { got: usize, min: usize },
    #[error("inverse iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },
    #[error("eigenvalue list violates spectrum invariants: {0}")]
    InvalidEigenvalues(String),
}

/// Which operator a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumKind {
    Heat1D,
    BiharmonicHinged1D,
    Fractional { s: f64 },
    Degenerate { alpha: f64 },
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumKind::Heat1D => write!(f, "heat"),
            SpectrumKind::BiharmonicHinged1D => write!(f, "biharmonic"),
            SpectrumKind::Fractional { s } => write!(f, "fractional(s={s})"),
            SpectrumKind::Degenerate { alpha } => write!(f, "degenerate(alpha={alpha})"),
        }
    }
}

/// Ascending, strictly positive eigenvalues `lambda_1 <= ... <= lambda_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    kind: SpectrumKind,
    eigenvalues: Vec<f64>,
}

impl EigenSpectrum {
    /// Wraps an externally supplied eigenvalue list after checking the
    /// ordering and positivity invariants.
    pub fn new(kind: SpectrumKind, eigenvalues: Vec<f64>) -> Result<Self, OperatorError> {
        if eigenvalues.is_empty() {
            return Err(OperatorError::NoModes);
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(OperatorError::InvalidEigenvalues(format!(
                "{bad} is not a finite positive number"
            )));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(OperatorError::InvalidEigenvalues("not non-decreasing".into()));
        }
        Ok(Self { kind, eigenvalues })
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Principal eigenvalue.
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Keeps the first `n` modes.
    pub fn truncate(&self, n: usize) -> Result<Self, OperatorError> {
        if n == 0 {
            return Err(OperatorError::NoModes);
        }
        let n = n.min(self.eigenvalues.len());
        Ok(Self { kind: self.kind, eigenvalues: self.eigenvalues[..n].to_vec() })
    }

    /// `k,lambda_k` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda_k\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, fmt_f64(*l)));
        }
        out
    }
}

fn closed_form(n_modes: usize, kind: SpectrumKind, f: impl Fn(f64) -> f64) -> Result<EigenSpectrum, OperatorError> {
    if n_modes == 0 {
        return Err(OperatorError::NoModes);
    }
    let eigenvalues = (1..=n_modes).map(|k| f(k as f64 * PI)).collect();
    Ok(EigenSpectrum { kind, eigenvalues })
}

/// Dirichlet Laplacian on (0,1): `lambda_k = (k pi)^2`.
pub fn heat_spectrum(n_modes: usize) -> Result<EigenSpectrum, OperatorError> {
    closed_form(n_modes, SpectrumKind::Heat1D, |kp| kp * kp)
}

/// Biharmonic operator with hinged ends on (0,1): `lambda_k = (k pi)^4`.
pub fn biharmonic_hinged_spectrum(n_modes: usize) -> Result<EigenSpectrum, OperatorError> {
    closed_form(n_modes, SpectrumKind::BiharmonicHinged1D, |kp| {
        let sq = kp * kp;
        sq * sq
    })
}

/// Spectral fractional power `(-Delta)^s` of a Dirichlet Laplacian spectrum.
pub fn fractional_spectrum(base: &EigenSpectrum, s: f64) -> Result<EigenSpectrum, OperatorError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(OperatorError::FractionalOrder(s));
    }
    if base.kind != SpectrumKind::Heat1D {
        return Err(OperatorError::FractionalBase(base.kind));
    }
    let eigenvalues = if s == 1.0 {
        base.eigenvalues.clone()
    } else {
        base.eigenvalues.iter().map(|l| l.powf(s)).collect()
    };
    Ok(EigenSpectrum { kind: SpectrumKind::Fractional { s }, eigenvalues })
}

pub const MIN_GRID_POINTS: usize = 64;
const MAX_INVERSE_ITERATIONS: usize = 1000;
const INVERSE_ITERATION_TOL: f64 = 1e-13;

/// Finite-volume discretization of `-(x^alpha v_x)_x` on a uniform grid with
/// `grid_points` cells, as the symmetric tridiagonal pencil `K v = lambda M v`
/// with diagonal `M`.
///
/// The weight is evaluated at cell midpoints. For `alpha < 1` the unknowns are
/// the interior nodes (Dirichlet at both ends); for `alpha >= 1` node 0 is
/// kept with a half control volume and zero flux through `x = 0`.
#[derive(Debug, Clone)]
pub struct DegeneratePencil {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub mass: Vec<f64>,
}

impl DegeneratePencil {
    pub fn assemble(alpha: f64, grid_points: usize) -> Result<Self, OperatorError> {
        if !(0.0..2.0).contains(&alpha) {
            return Err(OperatorError::Degeneracy(alpha));
        }
        if grid_points < MIN_GRID_POINTS {
            return Err(OperatorError::TooFewGridPoints { got: grid_points, min: MIN_GRID_POINTS });
        }
        let n = grid_points;
        let h = 1.0 / n as f64;
        // w[i] = weight at x_{i+1/2}
        let w: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * h).powf(alpha)).collect();
        let pencil = if alpha < 1.0 {
            // nodes 1..n-1
            let diag = (1..n).map(|i| (w[i - 1] + w[i]) / h).collect();
            let off = (1..n - 1).map(|i| -w[i] / h).collect();
            let mass = vec![h; n - 1];
            Self { diag, off, mass }
        } else {
            // nodes 0..n-1, zero flux at x = 0
            let mut diag = Vec::with_capacity(n);
            diag.push(w[0] / h);
            diag.extend((1..n).map(|i| (w[i - 1] + w[i]) / h));
            let off = (0..n - 1).map(|i| -w[i] / h).collect();
            let mut mass = vec![h; n];
            mass[0] = 0.5 * h;
            Self { diag, off, mass }
        };
        Ok(pencil)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Solves `K x = rhs` by the Thomas algorithm (K is SPD, no pivoting needed).
    fn solve_k(&self, rhs: &[f64], scratch: &mut [f64], x: &mut [f64]) {
        let n = self.len();
        let mut denom = self.diag[0];
        scratch[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.off[i - 1] * scratch[i - 1];
            if i + 1 < n {
                scratch[i] = self.off[i] / denom;
            }
            x[i] = (rhs[i] - self.off[i - 1] * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] -= scratch[i] * x[i + 1];
        }
    }

    /// Smallest eigenvalue by unshifted inverse iteration.
    ///
    /// The estimate is `1 / ||K^{-1} M v||_M` with `||v||_M = 1`; it decreases
    /// monotonically to `lambda_1` and avoids the cancellation of forming
    /// `v^T K v` on fine grids.
    pub fn smallest_eigenvalue(&self) -> Result<f64, OperatorError> {
        let n = self.len();
        let mut v = vec![1.0; n];
        let mut rhs = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut lambda = f64::INFINITY;
        let mut change = f64::INFINITY;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            for i in 0..n {
                rhs[i] = self.mass[i] * v[i];
            }
            self.solve_k(&rhs, &mut scratch, &mut x);
            let norm = x.iter().zip(&self.mass).map(|(a, m)| a * a * m).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            for (vi, xi) in v.iter_mut().zip(&x) {
                *vi = xi / norm;
            }
            let next = 1.0 / norm;
            change = (next - lambda).abs();
            lambda = next;
            if change <= INVERSE_ITERATION_TOL * lambda {
                return Ok(lambda);
            }
        }
        Err(OperatorError::NotConverged { iterations: MAX_INVERSE_ITERATIONS, last_change: change })
    }
}

/// Principal eigenvalue of `-(x^alpha v_x)_x` on (0,1) with `v(1) = 0` and,
/// at `x = 0`, Dirichlet for `alpha < 1` or zero weighted flux for
/// `alpha >= 1`.
pub fn degenerate_principal_eigenvalue(alpha: f64, grid_points: usize) -> Result<f64, OperatorError> {
    DegeneratePencil::assemble(alpha, grid_points)?.smallest_eigenvalue()
}

/// One-mode spectrum holding the degenerate principal eigenvalue.
pub fn degenerate_spectrum(alpha: f64, grid_points: usize) -> Result<EigenSpectrum, OperatorError> {
    let l1 = degenerate_principal_eigenvalue(alpha, grid_points)?;
    Ok(EigenSpectrum { kind: SpectrumKind::Degenerate { alpha }, eigenvalues: vec![l1] })
}
