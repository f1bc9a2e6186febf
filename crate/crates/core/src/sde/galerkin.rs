//! Galerkin coefficients in the sine basis `phi_k(x) = sqrt(2) sin(k pi x)`.

use std::f64::consts::{PI, SQRT_2};

use super::SdeError;

/// Coefficients `Y^1..Y^N` of the truncated state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Squared Euclidean norm of the coefficients (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|y| y * y).sum()
    }

    /// `||Y||^p`.
    pub fn norm_pow(&self, p: f64) -> f64 {
        norm_pow_from_sq(self.norm_sq(), p)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|y| c * y).collect())
    }

    /// First `n` coefficients.
    pub fn truncated(&self, n: usize) -> Self {
        Self(self.0[..n.min(self.0.len())].to_vec())
    }
}

#[inline]
pub(crate) fn norm_pow_from_sq(norm_sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        norm_sq
    } else {
        norm_sq.powf(0.5 * p)
    }
}

/// Initial profile on (0,1).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `y0(x) = x^4 - 2x^3 + x`
    PaperPolynomial,
    /// Values at the uniform nodes `x_j = j / (m - 1)`, `j = 0..m`,
    /// interpolated piecewise linearly.
    Custom(Vec<f64>),
}

impl InitialCondition {
    fn eval(&self, x: f64) -> f64 {
        match self {
            InitialCondition::PaperPolynomial => x * (1.0 + x * x * (x - 2.0)),
            InitialCondition::Custom(samples) => {
                let m = samples.len() - 1;
                let s = (x * m as f64).clamp(0.0, m as f64);
                let j = (s.floor() as usize).min(m - 1);
                let frac = s - j as f64;
                samples[j] + frac * (samples[j + 1] - samples[j])
            }
        }
    }

    /// Breakpoints the quadrature panels must respect.
    fn base_panels(&self) -> usize {
        match self {
            InitialCondition::PaperPolynomial => 1,
            InitialCondition::Custom(samples) => samples.len() - 1,
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and P_n'
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_ORDER: usize = 20;
const QUADRATURE_TOL: f64 = 1e-12;
const MAX_PANELS: usize = 1 << 18;

fn sine_coefficients(ic: &InitialCondition, n_modes: usize, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> Vec<f64> {
    let (nodes, weights) = rule;
    let h = 1.0 / panels as f64;
    let mut out = vec![0.0; n_modes];
    for j in 0..panels {
        let a = j as f64 * h;
        for (xi, wi) in nodes.iter().zip(weights) {
            let x = a + 0.5 * h * (xi + 1.0);
            let fw = ic.eval(x) * wi * 0.5 * h * SQRT_2;
            for (k, c) in out.iter_mut().enumerate() {
                *c += fw * ((k + 1) as f64 * PI * x).sin();
            }
        }
    }
    out
}

/// First `n_modes` coefficients `<y0, phi_k>` by composite Gauss-Legendre,
/// doubling the panel count until two successive refinements agree to 1e-12.
pub fn project_initial_condition(ic: &InitialCondition, n_modes: usize) -> Result<StateVector, SdeError> {
    if n_modes == 0 {
        return Err(SdeError::InvalidDiscretization("n_modes must be at least 1".into()));
    }
    if let InitialCondition::Custom(samples) = ic {
        if samples.len() < 2 {
            return Err(SdeError::InvalidInitialCondition("need at least two samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(SdeError::InvalidInitialCondition("samples must be finite".into()));
        }
    }
    let rule = gauss_legendre(GL_ORDER);
    let base = ic.base_panels();
    let mut panels = base * n_modes.div_ceil(base).max(4);
    let mut prev = sine_coefficients(ic, n_modes, panels, &rule);
    let mut last_change;
    loop {
        panels *= 2;
        let next = sine_coefficients(ic, n_modes, panels, &rule);
        last_change = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if last_change <= QUADRATURE_TOL {
            return Ok(StateVector(next));
        }
        if panels >= MAX_PANELS {
            break;
        }
        prev = next;
    }
    Err(SdeError::Quadrature { panels, change: last_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact for degree 2n-1
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((i - 2.0 / 39.0).abs() < 1e-14);
        let (x3, w3) = gauss_legendre(3);
        assert!((x3[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    // independent oracle: composite trapezoid on 10^6 cells
    fn trapezoid_coefficient(f: impl Fn(f64) -> f64, k: usize) -> f64 {
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let g = |x: f64| f(x) * SQRT_2 * (k as f64 * PI * x).sin();
        let mut s = 0.5 * (g(0.0) + g(1.0));
        for i in 1..n {
            s += g(i as f64 * h);
        }
        s * h
    }

    #[test]
    fn paper_polynomial_coefficients() {
        let y = project_initial_condition(&InitialCondition::PaperPolynomial, 16).unwrap();
        // frozen from the trapezoid oracle (and equal to 48 sqrt(2) / pi^5)
        assert!((y.coeffs()[0] - 0.221_823_151_806_519).abs() < 1e-12);
        let oracle = trapezoid_coefficient(|x| x.powi(4) - 2.0 * x.powi(3) + x, 1);
        assert!((y.coeffs()[0] - oracle).abs() < 1e-11);
        for (i, c) in y.coeffs().iter().enumerate() {
            let k = i + 1;
            if k % 2 == 0 {
                assert!(c.abs() < 1e-12, "k={k}: {c}");
            } else {
                let exact = 48.0 * SQRT_2 / (k as f64 * PI).powi(5);
                assert!((c - exact).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn custom_samples_of_first_mode() {
        let m = 2001;
        let samples: Vec<f64> =
            (0..m).map(|j| (PI * j as f64 / (m - 1) as f64).sin() / SQRT_2).collect();
        let y = project_initial_condition(&InitialCondition::Custom(samples), 4).unwrap();
        // <sin(pi x)/sqrt(2), sqrt(2) sin(pi x)> = 1/2; linear interpolation error ~ h^2
        assert!((y.coeffs()[0] - 0.5).abs() < 1e-6);
        for c in &y.coeffs()[1..] {
            assert!(c.abs() < 1e-6);
        }
    }

    #[test]
    fn custom_rejects_bad_samples() {
        assert!(project_initial_condition(&InitialCondition::Custom(vec![1.0]), 2).is_err());
        assert!(project_initial_condition(&InitialCondition::Custom(vec![0.0, f64::NAN]), 2).is_err());
        assert!(project_initial_condition(&InitialCondition::PaperPolynomial, 0).is_err());
    }

    #[test]
    fn norms() {
        let y = StateVector::new(vec![3.0, 4.0]);
        assert_eq!(y.norm_sq(), 25.0);
        assert_eq!(y.norm_pow(1.0), 5.0);
        assert_eq!(y.norm_pow(2.0), 25.0);
        assert!((y.norm_pow(3.0) - 125.0).abs() < 1e-12);
    }
}
