//! Monte Carlo moment estimation over path ensembles, exponential decay-rate
//! fits and pathwise (Lyapunov-type) exponent estimates.
//!
//! Paths are simulated in fixed blocks of [`BLOCK_PATHS`]; each block keeps
//! running means and centred second moments in path order, and the blocks are
//! merged along a balanced binary tree keyed by block index. The result is
//! bit-identical for any number of worker threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::io::csv_from_rows;
use crate::operators::EigenSpectrum;
use crate::sde::{
    exact_trajectory, generate_path_indexed, norm_pow_from_sq, simulate_path, Discretization, NoiseSource, SdeError,
    StateVector, StepOperator,
};
use crate::stability::{ModelParams, StabilityError};

pub const BLOCK_PATHS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Params(#[from] StabilityError),
    #[error("ensemble needs at least one path")]
    NoPaths,
    #[error("output stride must be at least 1")]
    ZeroStride,
    #[error("cannot normalize: initial moment is zero")]
    ZeroInitialMoment,
    #[error("fit window [{lo}, {hi}] holds {got} points, need at least 3")]
    TooFewPoints { lo: f64, hi: f64, got: usize },
    #[error("non-positive value {value} at t = {t}; logarithm undefined")]
    NonPositive { t: f64, value: f64 },
    #[error("tail fraction {0} is outside (0, 1)")]
    TailFraction(f64),
    #[error("no points with t > 0 in the trajectory tail")]
    EmptyTail,
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Ensemble size and bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Record every `output_stride`-th step (the last step is always recorded).
    pub output_stride: usize,
    /// Divide values and standard errors by the `t = 0` estimate.
    pub normalize: bool,
    /// Worker threads; 0 uses the ambient rayon pool. Results do not depend on it.
    pub workers: usize,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, master_seed: u64) -> Self {
        Self { n_paths, master_seed, output_stride: 1, normalize: false, workers: 0 }
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n_paths == 0 {
            return Err(MonteCarloError::NoPaths);
        }
        if self.output_stride == 0 {
            return Err(MonteCarloError::ZeroStride);
        }
        Ok(())
    }
}

/// Time-indexed estimates of `E||Y_n||^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_paths: usize,
    pub p: f64,
}

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t,value,stderr` CSV.
    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 3]> =
            (0..self.len()).map(|i| [self.times[i], self.values[i], self.stderr[i]]).collect();
        csv_from_rows(&["t", "value", "stderr"], rows.iter().map(|r| &r[..]))
    }
}

/// Step indices recorded for a given stride: `0, s, 2s, ...` and `n_steps`.
pub fn recorded_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n_steps).step_by(stride.max(1)).collect();
    if *steps.last().unwrap() != n_steps {
        steps.push(n_steps);
    }
    steps
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0.0 {
            return b;
        }
        if b.count == 0.0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        Moments {
            count,
            mean: a.mean + delta * (b.count / count),
            m2: a.m2 + b.m2 + delta * delta * (a.count * b.count / count),
        }
    }

    fn stderr(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.m2 / (self.count - 1.0) / self.count).sqrt()
        }
    }
}

struct BlockStats {
    // [record index * n_orders + order index]
    acc: Vec<Moments>,
}

fn merge_tree(blocks: &[BlockStats]) -> Vec<Moments> {
    match blocks.len() {
        0 => Vec::new(),
        1 => blocks[0].acc.clone(),
        n => {
            let (l, r) = blocks.split_at(n / 2);
            let (l, r) = (merge_tree(l), merge_tree(r));
            l.into_iter().zip(r).map(|(a, b)| Moments::merge(a, b)).collect()
        }
    }
}

pub(crate) fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, MonteCarloError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| MonteCarloError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Estimates `E||Y_n||^{params.p}` over `cfg.n_paths` scheme paths.
pub fn run_ensemble(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    disc: &Discretization,
    cfg: &EnsembleConfig,
) -> Result<MomentSeries, MonteCarloError> {
    Ok(run_ensemble_orders(y0, params, spectrum, disc, cfg, &[params.p])?.remove(0))
}

/// Like [`run_ensemble`] but estimates several moment orders from the same
/// paths (`params.p` is ignored).
pub fn run_ensemble_orders(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    disc: &Discretization,
    cfg: &EnsembleConfig,
    orders: &[f64],
) -> Result<Vec<MomentSeries>, MonteCarloError> {
    cfg.validate()?;
    for &p in orders {
        params.with_p(p)?;
    }
    if y0.len() != disc.n_modes() {
        return Err(SdeError::DimensionMismatch { expected: disc.n_modes(), got: y0.len() }.into());
    }
    let op = StepOperator::new(params, spectrum, disc.n_modes(), disc.tau())?;
    let noise = NoiseSource::new(cfg.master_seed, disc.tau());
    let steps = recorded_steps(disc.n_steps(), cfg.output_stride);
    let n_orders = orders.len();
    let n_blocks = cfg.n_paths.div_ceil(BLOCK_PATHS);

    let simulate_block = |b: usize| -> BlockStats {
        let mut acc = vec![Moments::default(); steps.len() * n_orders];
        let mut y = vec![0.0; y0.len()];
        let first = b * BLOCK_PATHS;
        let last = (first + BLOCK_PATHS).min(cfg.n_paths);
        for path in first..last {
            y.copy_from_slice(y0.coeffs());
            let mut norm_sq = y0.norm_sq();
            let mut next_record = 0;
            for n in 0..=disc.n_steps() {
                if n > 0 {
                    norm_sq = op.apply_norm_sq(&mut y, noise.increment(path as u64, (n - 1) as u64));
                }
                if steps[next_record] == n {
                    let slot = &mut acc[next_record * n_orders..(next_record + 1) * n_orders];
                    for (m, &p) in slot.iter_mut().zip(orders) {
                        m.push(norm_pow_from_sq(norm_sq, p));
                    }
                    next_record += 1;
                }
            }
        }
        BlockStats { acc }
    };

    let blocks: Vec<BlockStats> =
        in_pool(cfg.workers, || (0..n_blocks).into_par_iter().map(simulate_block).collect())?;
    let merged = merge_tree(&blocks);

    let times: Vec<f64> = steps.iter().map(|&n| disc.time(n)).collect();
    let mut out = Vec::with_capacity(n_orders);
    for (j, &p) in orders.iter().enumerate() {
        let mut values: Vec<f64> = (0..steps.len()).map(|i| merged[i * n_orders + j].mean).collect();
        let mut stderr: Vec<f64> = (0..steps.len()).map(|i| merged[i * n_orders + j].stderr()).collect();
        if cfg.normalize {
            let v0 = values[0];
            if v0 == 0.0 {
                return Err(MonteCarloError::ZeroInitialMoment);
            }
            values.iter_mut().for_each(|v| *v /= v0);
            stderr.iter_mut().for_each(|s| *s /= v0);
        }
        out.push(MomentSeries { times: times.clone(), values, stderr, n_paths: cfg.n_paths, p });
    }
    Ok(out)
}

/// Least-squares fit of `log(value) = c - rate * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Positive means decay.
    pub rate: f64,
    pub r_squared: f64,
    /// `sum_i |w_i| stderr_i / value_i` with `w_i` the slope weights: the
    /// standard error of the rate if the per-time errors were perfectly
    /// correlated, which bounds it from above.
    pub rate_stderr: f64,
    pub n_points: usize,
}

/// Second half of the recorded horizon.
pub fn default_fit_window(series: &MomentSeries) -> (f64, f64) {
    let t_end = series.times.last().copied().unwrap_or(0.0);
    (0.5 * t_end, t_end)
}

pub fn fit_decay_rate(series: &MomentSeries, window: (f64, f64)) -> Result<DecayFit, MonteCarloError> {
    let (lo, hi) = window;
    let slack = 1e-9 * lo.abs().max(hi.abs()).max(1e-300);
    let idx: Vec<usize> =
        (0..series.len()).filter(|&i| series.times[i] >= lo - slack && series.times[i] <= hi + slack).collect();
    if idx.len() < 3 {
        return Err(MonteCarloError::TooFewPoints { lo, hi, got: idx.len() });
    }
    for &i in &idx {
        let v = series.values[i];
        if !(v > 0.0) {
            return Err(MonteCarloError::NonPositive { t: series.times[i], value: v });
        }
    }
    let n = idx.len() as f64;
    let ts: Vec<f64> = idx.iter().map(|&i| series.times[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| series.values[i].ln()).collect();
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - t_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = ts.iter().zip(&ys).map(|(t, y)| (y - intercept - slope * t).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let rate_stderr = idx
        .iter()
        .zip(&ts)
        .map(|(&i, t)| ((t - t_mean) / sxx).abs() * series.stderr[i] / series.values[i])
        .sum();
    Ok(DecayFit { rate: -slope, r_squared, rate_stderr, n_points: idx.len() })
}

fn tail(trajectory: &[(f64, f64)], tail_fraction: f64) -> Result<&[(f64, f64)], MonteCarloError> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(MonteCarloError::TailFraction(tail_fraction));
    }
    let n = trajectory.len();
    let keep = ((tail_fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
    let tail = &trajectory[n.saturating_sub(keep)..];
    let first_positive = tail.iter().position(|(t, _)| *t > 0.0).ok_or(MonteCarloError::EmptyTail)?;
    Ok(&tail[first_positive..])
}

/// Mean of `log(norm^p) / t` over the last `tail_fraction` of the recorded
/// points `(t, norm^p)`. Negative means decay.
pub fn pathwise_exponent(trajectory: &[(f64, f64)], tail_fraction: f64) -> Result<f64, MonteCarloError> {
    let tail = tail(trajectory, tail_fraction)?;
    let mut sum = 0.0;
    for &(t, v) in tail {
        if !(v > 0.0) {
            return Err(MonteCarloError::NonPositive { t, value: v });
        }
        sum += v.ln() / t;
    }
    Ok(sum / tail.len() as f64)
}

/// [`pathwise_exponent`] with zeros (underflow) clamped to the smallest
/// positive normal number; returns the exponent and the number of clamped
/// points.
pub fn pathwise_exponent_clamped(
    trajectory: &[(f64, f64)],
    tail_fraction: f64,
) -> Result<(f64, usize), MonteCarloError> {
    let tail = tail(trajectory, tail_fraction)?;
    let mut clamped = 0;
    let mut sum = 0.0;
    for &(t, v) in tail {
        let v = if v > 0.0 {
            v
        } else {
            clamped += 1;
            f64::MIN_POSITIVE
        };
        sum += v.ln() / t;
    }
    Ok((sum / tail.len() as f64, clamped))
}

/// Mean over paths of `max_n ||Y_n - y(t_n)||` at one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongErrorLevel {
    pub tau: f64,
    pub error: f64,
    pub stderr: f64,
}

/// Strong error of the scheme against the exact solution on shared Brownian
/// paths at `tau, tau/2, ..., tau/2^(levels-1)`, where `tau` and the horizon
/// come from `coarse`. Each path is drawn on the finest grid and summed into
/// the coarser ones.
pub fn strong_error_study(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    coarse: &Discretization,
    levels: usize,
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<StrongErrorLevel>, MonteCarloError> {
    if n_paths == 0 || levels == 0 {
        return Err(MonteCarloError::NoPaths);
    }
    let finest = 1usize << (levels - 1);
    let fine = Discretization::from_steps(coarse.n_modes(), coarse.tau() / finest as f64, coarse.n_steps() * finest)?;
    let one_path = |i: usize| -> Result<Vec<f64>, SdeError> {
        let path = generate_path_indexed(seed, i as u64, &fine);
        (0..levels)
            .map(|j| {
                let factor = finest >> j;
                let p = if factor == 1 { path.clone() } else { path.coarsen(factor) };
                let disc = Discretization::from_steps(coarse.n_modes(), p.tau, p.n_steps())?;
                let scheme = simulate_path(y0, params, spectrum, &disc, &p)?;
                let exact = exact_trajectory(y0, params, spectrum, &p)?;
                Ok(scheme
                    .points
                    .iter()
                    .zip(&exact.points)
                    .map(|((_, a), (_, b))| {
                        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max))
            })
            .collect()
    };
    let per_path: Vec<Vec<f64>> = in_pool(workers, || {
        (0..n_paths).into_par_iter().map(one_path).collect::<Result<Vec<_>, _>>()
    })??;
    Ok((0..levels)
        .map(|j| {
            let mut m = Moments::default();
            for errs in &per_path {
                m.push(errs[j]);
            }
            StrongErrorLevel { tau: coarse.tau() / (1usize << j) as f64, error: m.mean, stderr: m.stderr() }
        })
        .collect())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64, MonteCarloError> {
    if points.len() < 2 {
        return Err(MonteCarloError::TooFewPoints { lo: f64::NAN, hi: f64::NAN, got: points.len() });
    }
    if let Some(&(t, value)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(MonteCarloError::NonPositive { t, value });
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{biharmonic_hinged_spectrum, heat_spectrum};
    use crate::sde::{discrete_second_moment_series, generate_path, simulate_path};
    use std::f64::consts::PI;

    fn series(times: Vec<f64>, values: Vec<f64>) -> MomentSeries {
        let n = times.len();
        MomentSeries { times, values, stderr: vec![0.0; n], n_paths: 1, p: 2.0 }
    }

    #[test]
    fn recorded_steps_include_last() {
        assert_eq!(recorded_steps(10, 3), vec![0, 3, 6, 9, 10]);
        assert_eq!(recorded_steps(10, 5), vec![0, 5, 10]);
        assert_eq!(recorded_steps(0, 4), vec![0]);
    }

    #[test]
    fn single_deterministic_path() {
        let spec = biharmonic_hinged_spectrum(3).unwrap();
        let params = ModelParams::new(1.0, 0.0, 3.0).unwrap();
        let disc = Discretization::new(3, 1e-3, 0.05).unwrap();
        let y0 = StateVector::new(vec![0.2, 0.0, 0.001]);
        let s = run_ensemble(&y0, &params, &spec, &disc, &EnsembleConfig::new(1, 5)).unwrap();
        let tr = simulate_path(&y0, &params, &spec, &disc, &generate_path(5, &disc)).unwrap();
        for (i, (_, y)) in tr.points.iter().enumerate() {
            assert_eq!(s.values[i], y.norm_pow(3.0));
            assert_eq!(s.stderr[i], 0.0);
        }
    }

    #[test]
    fn ensemble_path_matches_simulate_path() {
        // path index 0 of the ensemble is generate_path(seed)
        let spec = heat_spectrum(2).unwrap();
        let params = ModelParams::new(0.0, 2.0, 2.0).unwrap();
        let disc = Discretization::new(2, 1e-2, 0.5).unwrap();
        let y0 = StateVector::new(vec![1.0, 0.3]);
        let s = run_ensemble(&y0, &params, &spec, &disc, &EnsembleConfig::new(1, 77)).unwrap();
        let tr = simulate_path(&y0, &params, &spec, &disc, &generate_path(77, &disc)).unwrap();
        for (i, (_, y)) in tr.points.iter().enumerate() {
            assert_eq!(s.values[i].to_bits(), y.norm_sq().to_bits());
        }
    }

    #[test]
    fn rejects_bad_config() {
        let spec = heat_spectrum(1).unwrap();
        let params = ModelParams::new(0.0, 1.0, 2.0).unwrap();
        let disc = Discretization::new(1, 1e-2, 0.1).unwrap();
        let y0 = StateVector::new(vec![1.0]);
        assert_eq!(
            run_ensemble(&y0, &params, &spec, &disc, &EnsembleConfig::new(0, 1)),
            Err(MonteCarloError::NoPaths)
        );
        let mut cfg = EnsembleConfig::new(1, 1);
        cfg.output_stride = 0;
        assert_eq!(run_ensemble(&y0, &params, &spec, &disc, &cfg), Err(MonteCarloError::ZeroStride));
        cfg.output_stride = 1;
        cfg.normalize = true;
        assert_eq!(
            run_ensemble(&StateVector::zeros(1), &params, &spec, &disc, &cfg),
            Err(MonteCarloError::ZeroInitialMoment)
        );
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let spec = biharmonic_hinged_spectrum(4).unwrap();
        let params = ModelParams::new(1.0, 6.0, 2.0).unwrap();
        let disc = Discretization::new(4, 1e-3, 0.05).unwrap();
        let y0 = StateVector::new(vec![0.22, 0.0, 9e-4, 0.0]);
        let mut cfg = EnsembleConfig::new(300, 9);
        cfg.workers = 1;
        let a = run_ensemble(&y0, &params, &spec, &disc, &cfg).unwrap();
        cfg.workers = 8;
        let b = run_ensemble(&y0, &params, &spec, &disc, &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn matches_exact_discrete_second_moment() {
        let spec = biharmonic_hinged_spectrum(1).unwrap();
        let params = ModelParams::new(1.0, 2.0, 2.0).unwrap();
        let disc = Discretization::new(1, 1e-3, 0.1).unwrap();
        let y0 = StateVector::new(vec![1.0]);
        let mut cfg = EnsembleConfig::new(1000, 3);
        cfg.output_stride = 10;
        let s = run_ensemble(&y0, &params, &spec, &disc, &cfg).unwrap();
        let steps = recorded_steps(disc.n_steps(), 10);
        let exact = discrete_second_moment_series(&y0, &params, &spec, disc.tau(), &steps).unwrap();
        for i in 0..s.len() {
            assert!((s.values[i] - exact[i]).abs() <= 4.0 * s.stderr[i] + 1e-15 * exact[i], "i={i}");
        }
    }

    #[test]
    fn normalized_starts_at_one() {
        let spec = heat_spectrum(2).unwrap();
        let params = ModelParams::new(0.0, 1.0, 1.0).unwrap();
        let disc = Discretization::new(2, 1e-2, 0.2).unwrap();
        let mut cfg = EnsembleConfig::new(50, 1);
        cfg.normalize = true;
        let s = run_ensemble(&StateVector::new(vec![3.0, 4.0]), &params, &spec, &disc, &cfg).unwrap();
        assert_eq!(s.values[0], 1.0);
        assert!(s.to_csv().starts_with("t,value,stderr\n"));
    }

    #[test]
    fn fit_exact_exponential() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let values = times.iter().map(|t| (-5.0 * t).exp()).collect();
        let fit = fit_decay_rate(&series(times, values), (0.0, 1.0)).unwrap();
        assert!((fit.rate - 5.0).abs() < 1e-9);
        assert!(fit.r_squared > 0.999_999);
        assert_eq!(fit.rate_stderr, 0.0);
    }

    #[test]
    fn fit_discrete_recursion_rate() {
        let l = PI.powi(4);
        let tau = 1e-3;
        let params = ModelParams::new(1.0, 2.0, 2.0).unwrap();
        let spec = biharmonic_hinged_spectrum(1).unwrap();
        let steps: Vec<usize> = (0..=200).collect();
        let values =
            discrete_second_moment_series(&StateVector::new(vec![1.0]), &params, &spec, tau, &steps).unwrap();
        let times = steps.iter().map(|&n| n as f64 * tau).collect();
        let fit = fit_decay_rate(&series(times, values), (0.1, 0.2)).unwrap();
        let a = 1.0 / (1.0 + tau * (l - 1.0));
        let rho = a * a * (1.0 + 4.0 * tau);
        assert!((fit.rate + rho.ln() / tau).abs() < 1e-9);
    }

    #[test]
    fn fit_constant_and_errors() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let fit = fit_decay_rate(&series(times.clone(), vec![2.5; 4]), (0.0, 3.0)).unwrap();
        assert!(fit.rate.abs() < 1e-12);
        assert!(matches!(
            fit_decay_rate(&series(times.clone(), vec![1.0, 0.0, 1.0, 1.0]), (0.0, 3.0)),
            Err(MonteCarloError::NonPositive { .. })
        ));
        assert!(matches!(
            fit_decay_rate(&series(times, vec![1.0; 4]), (2.5, 3.0)),
            Err(MonteCarloError::TooFewPoints { got: 1, .. })
        ));
    }

    #[test]
    fn exponent_of_pure_exponential() {
        let traj: Vec<(f64, f64)> = (0..=1000).map(|i| i as f64 * 0.01).map(|t| (t, (-t).exp())).collect();
        assert!((pathwise_exponent(&traj, 0.5).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponent_errors_and_clamping() {
        let traj = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)];
        assert!(matches!(pathwise_exponent(&traj, 0.5), Err(MonteCarloError::NonPositive { .. })));
        let (e, clamped) = pathwise_exponent_clamped(&traj, 0.3).unwrap();
        assert_eq!(clamped, 1);
        assert!((e - f64::MIN_POSITIVE.ln() / 2.0).abs() < 1e-12);
        assert!(matches!(pathwise_exponent(&[(0.0, 1.0)], 0.5), Err(MonteCarloError::EmptyTail)));
        assert!(matches!(pathwise_exponent(&traj, 1.0), Err(MonteCarloError::TailFraction(_))));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125].iter().map(|&t: &f64| (t, 3.0 * t.powf(0.75))).collect();
        assert!((log_log_slope(&pts).unwrap() - 0.75).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_err());
    }

    #[test]
    fn strong_error_without_noise_is_first_order() {
        // beta1 = 0: implicit Euler on y' = -y, global error ~ tau
        let spec = crate::operators::EigenSpectrum::new(crate::operators::SpectrumKind::Heat1D, vec![2.0]).unwrap();
        let params = ModelParams::new(1.0, 0.0, 2.0).unwrap();
        let disc = Discretization::new(1, 1.0 / 64.0, 1.0).unwrap();
        let levels =
            strong_error_study(&StateVector::new(vec![1.0]), &params, &spec, &disc, 4, 2, 0, 0).unwrap();
        assert_eq!(levels.len(), 4);
        assert_eq!(levels[3].tau, 1.0 / 512.0);
        assert_eq!(levels[0].stderr, 0.0);
        let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.tau, l.error)).collect();
        assert!((log_log_slope(&pts).unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn stderr_scales_with_sample_size() {
        // one step of pure noise: Y_1 = 1 + dW, so ||Y||^2 has variance ~ 2 tau^2 + 4 tau
        let spec = crate::operators::EigenSpectrum::new(crate::operators::SpectrumKind::Heat1D, vec![1e-12]).unwrap();
        let params = ModelParams::new(0.0, 1.0, 2.0).unwrap();
        let disc = Discretization::from_steps(1, 0.25, 1).unwrap();
        let y0 = StateVector::new(vec![1.0]);
        let se = |n| run_ensemble(&y0, &params, &spec, &disc, &EnsembleConfig::new(n, 4)).unwrap().stderr[1];
        let ratio = se(40_000) / se(20_000);
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.1 * std::f64::consts::FRAC_1_SQRT_2, "{ratio}");
    }
}
