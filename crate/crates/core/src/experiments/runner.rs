//! Executes a resolved [`ExperimentConfig`] and writes its CSV files, figures
//! and manifest.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{lex_key_values, ConfigError, ExperimentConfig, Study};
use super::plot::{gnuplot_script, render_svg, Figure, PlotSeries};
use crate::io::{csv_from_rows, fmt_f64};
use crate::montecarlo::{
    default_fit_window, fit_decay_rate, log_log_slope, pathwise_exponent_clamped, recorded_steps,
    run_ensemble_orders, strong_error_study, EnsembleConfig, MomentSeries, MonteCarloError,
};
use crate::operators::{EigenSpectrum, OperatorError};
use crate::sde::{
    discrete_second_moment_rate, discrete_second_moment_series, exact_solution, generate_path, norm_pow_from_sq,
    Discretization, NoiseSource, SdeError, StateVector, StepOperator,
};
use crate::stability::{
    as_decay_rate, as_noise_threshold, boundary_csv, classify, linspace, moment_decay_rate, region_boundary,
    ModelParams, RegionKind, StabilityError,
};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn sde_is_validation(e: &SdeError) -> bool {
    !matches!(e, SdeError::Quadrature { .. })
}

impl ExperimentError {
    /// Bad input as opposed to a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            ExperimentError::Config(_) | ExperimentError::Stability(_) => true,
            ExperimentError::Operator(e) => !matches!(e, OperatorError::NotConverged { .. }),
            ExperimentError::Sde(e) => sde_is_validation(e),
            ExperimentError::MonteCarlo(e) => match e {
                MonteCarloError::Sde(e) => sde_is_validation(e),
                MonteCarloError::Params(_)
                | MonteCarloError::NoPaths
                | MonteCarloError::ZeroStride
                | MonteCarloError::TailFraction(_) => true,
                _ => false,
            },
            ExperimentError::Io { .. } => false,
        }
    }
}

/// Ordered flat key-value record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(Self { entries: lex_key_values(text)?.into_iter().map(|(_, k, v)| (k, v)).collect() })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    /// Written files relative to `dir`, in write order.
    pub files: Vec<String>,
    pub manifest: Manifest,
}

/// File-name and key fragment for a number: `0.25 -> 0p25`, `-1e-5 -> m1em5`.
pub fn token(x: f64) -> String {
    fmt_f64(x).replace('.', "p").replace('-', "m").replace('+', "")
}

/// Directory-safe name of a (beta0, beta1) variant.
pub fn variant_label(beta0: f64, beta1: f64) -> String {
    format!("beta0_{}_beta1_{}", token(beta0), token(beta1))
}

#[derive(Default)]
struct Artifacts {
    files: Vec<(String, String)>,
    figures: Vec<Figure>,
    manifest: Manifest,
}

impl Artifacts {
    fn file(&mut self, name: String, contents: String) {
        self.files.push((name, contents));
    }
}

/// Theoretical rates and verdicts under `prefix`.
fn push_theory(m: &mut Manifest, prefix: &str, params: &ModelParams, lambda1: f64) -> Result<(), StabilityError> {
    let v = classify(params, lambda1)?;
    m.push(format!("{prefix}.moment_stable"), v.moment_stable);
    m.push(format!("{prefix}.as_stable"), v.as_stable);
    m.push_f64(format!("{prefix}.mu_p"), moment_decay_rate(params, lambda1)?);
    m.push_f64(format!("{prefix}.mu_as"), as_decay_rate(params, lambda1)?);
    Ok(())
}

/// Runs the experiment and writes everything under `cfg.out_dir`.
/// `workers` only affects speed.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate().map_err(|(key, m)| ConfigError { line: None, message: format!("{key}: {m}") })?;
    let spectrum = cfg.operator.build()?;
    let mut art = Artifacts::default();
    for (k, v) in cfg.entries() {
        art.manifest.push(k, v);
    }
    art.manifest.push_f64("derived.lambda1", spectrum.lambda1());
    art.file("spectrum.csv".into(), spectrum.to_csv());
    art.manifest.push("derived.spectrum_file", "spectrum.csv");

    match cfg.study {
        Study::Moments => moments_study(cfg, &spectrum, workers, &mut art)?,
        Study::Paths | Study::ExactPaths => paths_study(cfg, &spectrum, &mut art)?,
        Study::Regions => regions_study(cfg, &spectrum, &mut art)?,
        Study::Convergence => convergence_study(cfg, &spectrum, workers, &mut art)?,
    }
    if let Some(note) = choice_note(cfg) {
        art.manifest.push("derived.beta1_choice", note);
    }

    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|source| ExperimentError::Io { path: dir.clone(), source })?;
    let mut files = Vec::new();
    let mut write = |name: &str, contents: &str| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| ExperimentError::Io { path, source })?;
        files.push(name.to_string());
        Ok(())
    };
    for (name, contents) in &art.files {
        write(name, contents)?;
    }
    if cfg.format.wants_svg() {
        for fig in &art.figures {
            write(&format!("{}.svg", fig.name), &render_svg(fig))?;
        }
    }
    if cfg.format.wants_script() && cfg.plot_script && !art.figures.is_empty() {
        write("plot.gp", &gnuplot_script(&art.figures))?;
    }
    write(MANIFEST_FILE, &art.manifest.to_text())?;
    Ok(ExperimentOutput { dir, files, manifest: art.manifest })
}

fn choice_note(cfg: &ExperimentConfig) -> Option<&'static str> {
    let default = ExperimentConfig::builtin(&cfg.name, cfg.scale).ok()?;
    if cfg.beta1 != default.beta1 {
        return None;
    }
    match cfg.name.as_str() {
        "test3_pathwise_stabilization" => {
            Some("illustrative values: one just above the almost-sure threshold, one well above it")
        }
        "test5_sharpness" => Some("illustrative values bracketing the almost-sure threshold sqrt(2 (beta0 - lambda1))"),
        _ => None,
    }
}

fn moments_study(
    cfg: &ExperimentConfig,
    spectrum: &EigenSpectrum,
    workers: usize,
    art: &mut Artifacts,
) -> Result<(), ExperimentError> {
    let disc = cfg.discretization()?;
    let y0 = cfg.initial.resolve(disc.n_modes())?;
    let lambda1 = spectrum.lambda1();
    let ens = EnsembleConfig {
        n_paths: cfg.n_paths,
        master_seed: cfg.seed,
        output_stride: cfg.stride,
        normalize: cfg.normalize,
        workers,
    };
    let steps = recorded_steps(disc.n_steps(), cfg.stride);
    let mut figure = Figure {
        name: cfg.name.clone(),
        title: format!("{}: {}moments", cfg.name, if cfg.normalize { "normalized " } else { "" }),
        x_label: "t".into(),
        y_label: if cfg.normalize { "E||Y_n||^p / E||Y_0||^p" } else { "E||Y_n||^p" }.into(),
        log_x: false,
        log_y: true,
        series: Vec::new(),
    };
    for (b0, b1) in cfg.variants() {
        let label = variant_label(b0, b1);
        let params = ModelParams::new(b0, b1, cfg.p[0])?;
        art.manifest.push_f64(format!("derived.{label}.as_threshold"), as_noise_threshold(b0, lambda1));
        let all = run_ensemble_orders(&y0, &params, spectrum, &disc, &ens, &cfg.p)?;
        for series in all {
            let p = series.p;
            let file = format!("{label}_p_{}.csv", token(p));
            let prefix = format!("derived.{label}.p_{}", token(p));
            let pparams = params.with_p(p)?;
            art.manifest.push(format!("{prefix}.file"), &file);
            push_theory(&mut art.manifest, &prefix, &pparams, lambda1)?;
            let window = cfg.fit_window.unwrap_or_else(|| default_fit_window(&series));
            art.manifest.push(format!("{prefix}.fit_window"), format!("{}, {}", fmt_f64(window.0), fmt_f64(window.1)));
            match fit_decay_rate(&series, window) {
                Ok(fit) => {
                    art.manifest.push_f64(format!("{prefix}.fit_rate"), fit.rate);
                    art.manifest.push_f64(format!("{prefix}.fit_rate_stderr"), fit.rate_stderr);
                    art.manifest.push_f64(format!("{prefix}.fit_r_squared"), fit.r_squared);
                    art.manifest.push(format!("{prefix}.fit_points"), fit.n_points);
                }
                Err(e) => art.manifest.push(format!("{prefix}.fit_error"), e),
            }
            let (peak_idx, peak) = series
                .values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
            let v0 = series.values[0];
            art.manifest.push_f64(format!("{prefix}.peak_ratio"), peak / v0);
            art.manifest.push_f64(format!("{prefix}.peak_time"), series.times[peak_idx]);
            art.manifest.push_f64(format!("{prefix}.final_ratio"), series.values[series.len() - 1] / v0);
            if p == 2.0 {
                // exact discrete law of the scheme, fitted over the same window
                let mut exact = discrete_second_moment_series(&y0, &pparams, spectrum, disc.tau(), &steps)?;
                if cfg.normalize {
                    let e0 = exact[0];
                    exact.iter_mut().for_each(|v| *v /= e0);
                }
                let exact_series = MomentSeries {
                    times: series.times.clone(),
                    stderr: vec![0.0; exact.len()],
                    values: exact,
                    n_paths: 0,
                    p,
                };
                match fit_decay_rate(&exact_series, window) {
                    Ok(fit) => art.manifest.push_f64(format!("{prefix}.discrete_rate"), fit.rate),
                    Err(e) => art.manifest.push(format!("{prefix}.discrete_rate_error"), e),
                }
                art.manifest.push_f64(
                    format!("{prefix}.discrete_rate_mode1"),
                    discrete_second_moment_rate(&pparams, lambda1, disc.tau())?,
                );
            }
            figure.series.push(PlotSeries {
                label: format!("beta0={} beta1={} p={}", fmt_f64(b0), fmt_f64(b1), fmt_f64(p)),
                file: file.clone(),
                using: "1:2".into(),
                points: series.times.iter().copied().zip(series.values.iter().copied()).collect(),
            });
            art.file(file, series.to_csv());
        }
    }
    art.figures.push(figure);
    Ok(())
}

/// `(t, ||Y||^2)` of the scheme on path 0 of `seed`, at the recorded steps;
/// also returns `W(T)`.
fn scheme_norms(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    disc: &Discretization,
    seed: u64,
    stride: usize,
) -> Result<(Vec<(f64, f64)>, f64), SdeError> {
    let op = StepOperator::new(params, spectrum, disc.n_modes(), disc.tau())?;
    let noise = NoiseSource::new(seed, disc.tau());
    let steps = recorded_steps(disc.n_steps(), stride);
    let mut y = y0.coeffs().to_vec();
    let mut norm_sq = y0.norm_sq();
    let mut w = 0.0;
    let mut out = Vec::with_capacity(steps.len());
    let mut next = 0;
    for n in 0..=disc.n_steps() {
        if n > 0 {
            let dw = noise.increment(0, (n - 1) as u64);
            w += dw;
            norm_sq = op.apply_norm_sq(&mut y, dw);
        }
        if steps[next] == n {
            out.push((disc.time(n), norm_sq));
            next += 1;
        }
    }
    Ok((out, w))
}

fn exact_norms(
    y0: &StateVector,
    params: &ModelParams,
    spectrum: &EigenSpectrum,
    disc: &Discretization,
    seed: u64,
    stride: usize,
) -> Result<(Vec<(f64, f64)>, f64), SdeError> {
    let path = generate_path(seed, disc);
    let out = recorded_steps(disc.n_steps(), stride)
        .into_iter()
        .map(|n| {
            let t = disc.time(n);
            exact_solution(y0, params, spectrum, t, path.cumulative[n]).map(|y| (t, y.norm_sq()))
        })
        .collect::<Result<_, _>>()?;
    Ok((out, path.cumulative[disc.n_steps()]))
}

fn paths_study(cfg: &ExperimentConfig, spectrum: &EigenSpectrum, art: &mut Artifacts) -> Result<(), ExperimentError> {
    let disc = cfg.discretization()?;
    let y0 = cfg.initial.resolve(disc.n_modes())?;
    let lambda1 = spectrum.lambda1();
    let exact = cfg.study == Study::ExactPaths;
    let kind = if exact { "exact_path" } else { "path" };
    let mut overall = Figure {
        name: cfg.name.clone(),
        title: format!("{}: pathwise ||Y||^p", cfg.name),
        x_label: "t".into(),
        y_label: "||Y_n||^p".into(),
        log_x: false,
        log_y: true,
        series: Vec::new(),
    };
    for (b0, b1) in cfg.variants() {
        let label = variant_label(b0, b1);
        let params = ModelParams::new(b0, b1, cfg.p[0])?;
        art.manifest.push_f64(format!("derived.{label}.as_threshold"), as_noise_threshold(b0, lambda1));
        for &p in &cfg.p {
            push_theory(&mut art.manifest, &format!("derived.{label}.p_{}", token(p)), &params.with_p(p)?, lambda1)?;
        }
        let mut fig = Figure {
            name: label.clone(),
            title: format!("{} {label}", cfg.name),
            series: Vec::new(),
            ..overall.clone()
        };
        for r in 0..cfg.n_paths {
            let seed = cfg.seed.wrapping_add(r as u64);
            let (norms, w_end) = if exact {
                exact_norms(&y0, &params, spectrum, &disc, seed, cfg.stride)?
            } else {
                scheme_norms(&y0, &params, spectrum, &disc, seed, cfg.stride)?
            };
            let file = format!("{label}_{kind}_{r}.csv");
            let prefix = format!("derived.{label}.{kind}_{r}");
            art.manifest.push(format!("{prefix}.file"), &file);
            art.manifest.push(format!("{prefix}.seed"), seed);
            art.manifest.push_f64(format!("{prefix}.brownian_end"), w_end);
            for &p in &cfg.p {
                let pow: Vec<(f64, f64)> = norms.iter().map(|&(t, n2)| (t, norm_pow_from_sq(n2, p))).collect();
                let (rate, clamped) = pathwise_exponent_clamped(&pow, cfg.tail_fraction)?;
                art.manifest.push_f64(format!("{prefix}.p_{}.pathwise_exponent", token(p)), rate);
                art.manifest.push(format!("{prefix}.p_{}.clamped_points", token(p)), clamped);
                let using = if p == 2.0 { "1:2".to_string() } else { format!("1:($2**{})", fmt_f64(0.5 * p)) };
                fig.series.push(PlotSeries {
                    label: format!("beta1={} {kind} {r} p={}", fmt_f64(b1), fmt_f64(p)),
                    file: file.clone(),
                    using,
                    points: pow,
                });
            }
            let rows: Vec<[f64; 2]> = norms.iter().map(|&(t, n)| [t, n]).collect();
            art.file(file, csv_from_rows(&["t", "norm_sq"], rows.iter().map(|r| &r[..])));
        }
        if exact {
            overall.series.extend(fig.series);
        } else {
            art.figures.push(fig);
        }
    }
    if exact {
        art.figures.push(overall);
    }
    Ok(())
}

fn regions_study(cfg: &ExperimentConfig, spectrum: &EigenSpectrum, art: &mut Artifacts) -> Result<(), ExperimentError> {
    let lambda1 = spectrum.lambda1();
    let b1 = linspace(0.0, cfg.regions_beta1_max, cfg.regions_samples);
    let mut fig = Figure {
        name: cfg.name.clone(),
        title: format!("stability region boundaries, lambda1 = {}", fmt_f64(lambda1)),
        x_label: "beta1".into(),
        y_label: "beta0".into(),
        log_x: false,
        log_y: false,
        series: Vec::new(),
    };
    let mut curves: Vec<(String, String, Vec<(f64, f64)>)> = cfg
        .p
        .iter()
        .map(|&p| {
            region_boundary(RegionKind::MomentMe, lambda1, p, &b1)
                .map(|c| (format!("moment_boundary_p_{}", token(p)), format!("moment p={}", fmt_f64(p)), c))
        })
        .collect::<Result<_, _>>()?;
    curves.push(("as_boundary".into(), "almost sure".into(), region_boundary(RegionKind::AlmostSure, lambda1, 1.0, &b1)?));
    for (stem, label, curve) in curves {
        let file = format!("{stem}.csv");
        art.manifest.push(format!("derived.{stem}.file"), &file);
        art.manifest.push_f64(format!("derived.{stem}.intercept"), curve[0].1);
        art.file(file.clone(), boundary_csv(&curve));
        fig.series.push(PlotSeries { label, file, using: "1:2".into(), points: curve });
    }
    for (b0, b1) in cfg.variants() {
        let label = variant_label(b0, b1);
        for &p in &cfg.p {
            let params = ModelParams::new(b0, b1, p)?;
            push_theory(&mut art.manifest, &format!("derived.{label}.p_{}", token(p)), &params, lambda1)?;
        }
    }
    art.figures.push(fig);
    Ok(())
}

fn convergence_study(
    cfg: &ExperimentConfig,
    spectrum: &EigenSpectrum,
    workers: usize,
    art: &mut Artifacts,
) -> Result<(), ExperimentError> {
    let disc = cfg.discretization()?;
    let y0 = cfg.initial.resolve(disc.n_modes())?;
    let lambda1 = spectrum.lambda1();
    let mut err_fig = Figure {
        name: format!("{}_strong_error", cfg.name),
        title: "strong error vs step size".into(),
        x_label: "tau".into(),
        y_label: "E max_n ||Y_n - y(t_n)||".into(),
        log_x: true,
        log_y: true,
        series: Vec::new(),
    };
    let mut rate_fig = Figure {
        name: format!("{}_discrete_rate", cfg.name),
        title: "second-moment decay rate of the scheme vs step size".into(),
        x_label: "tau".into(),
        y_label: "rate".into(),
        log_x: true,
        log_y: false,
        series: Vec::new(),
    };
    for (b0, b1) in cfg.variants() {
        let label = variant_label(b0, b1);
        let params = ModelParams::new(b0, b1, cfg.p[0])?;
        for &p in &cfg.p {
            push_theory(&mut art.manifest, &format!("derived.{label}.p_{}", token(p)), &params.with_p(p)?, lambda1)?;
        }
        let levels =
            strong_error_study(&y0, &params, spectrum, &disc, cfg.convergence_levels, cfg.n_paths, cfg.seed, workers)?;
        let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.tau, l.error)).collect();
        let file = format!("{label}_strong_error.csv");
        art.manifest.push(format!("derived.{label}.strong_error_file"), &file);
        match log_log_slope(&pts) {
            Ok(order) => art.manifest.push_f64(format!("derived.{label}.strong_order"), order),
            Err(e) => art.manifest.push(format!("derived.{label}.strong_order_error"), e),
        }
        let rows: Vec<[f64; 3]> = levels.iter().map(|l| [l.tau, l.error, l.stderr]).collect();
        art.file(file.clone(), csv_from_rows(&["tau", "error", "stderr"], rows.iter().map(|r| &r[..])));
        err_fig.series.push(PlotSeries { label: label.clone(), file, using: "1:2".into(), points: pts });

        // exact discrete second-moment rate of mode 1 against mu_2
        let p2 = params.with_p(2.0)?;
        let mu = moment_decay_rate(&p2, lambda1)?;
        let mut rows = Vec::new();
        for l in &levels {
            let rate = discrete_second_moment_rate(&p2, lambda1, l.tau)?;
            rows.push([l.tau, rate, (rate - mu).abs() / mu.abs()]);
        }
        let monotone = rows.windows(2).all(|w| w[1][2] < w[0][2]);
        let file = format!("{label}_discrete_rate.csv");
        art.manifest.push(format!("derived.{label}.discrete_rate_file"), &file);
        art.manifest.push_f64(format!("derived.{label}.mu_2"), mu);
        art.manifest.push_f64(format!("derived.{label}.final_rate_gap"), rows[rows.len() - 1][2]);
        art.manifest.push(format!("derived.{label}.rate_gap_monotone"), monotone);
        rate_fig.series.push(PlotSeries {
            label,
            file: file.clone(),
            using: "1:2".into(),
            points: rows.iter().map(|r| (r[0], r[1])).collect(),
        });
        art.file(file, csv_from_rows(&["tau", "rate", "gap"], rows.iter().map(|r| &r[..])));
    }
    art.figures.push(err_fig);
    art.figures.push(rate_fig);
    Ok(())
}

/// Relative paths of all regular files under `dir`, sorted.
pub fn list_tree(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.push(path.strip_prefix(root).unwrap_or(&path).to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Scale;

    fn small(name: &str, dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::builtin(name, Scale::Desk).unwrap();
        c.out_dir = dir.to_path_buf();
        c.n_paths = c.n_paths.min(50);
        c
    }

    #[test]
    fn tokens() {
        assert_eq!(token(0.25), "0p25");
        assert_eq!(token(-2.0), "m2");
        assert_eq!(token(1e-5), "1em5");
    }

    #[test]
    fn moments_manifest_and_files() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = small("test2_moment_orders", tmp.path());
        c.format = super::super::config::OutputFormat::Both;
        let out = run_experiment(&c, 0).unwrap();
        for f in ["beta0_1_beta1_11_p_1.csv", "beta0_1_beta1_11_p_3.csv", "manifest.txt", "plot.gp", "spectrum.csv"] {
            assert!(out.files.iter().any(|x| x == f), "{f} missing");
        }
        assert!(out.files.iter().any(|x| x.ends_with(".svg")));
        assert_eq!(out.manifest.get("derived.beta0_1_beta1_11.p_3.moment_stable"), Some("false"));
        assert_eq!(out.manifest.get("derived.beta0_1_beta1_11.p_2.moment_stable"), Some("true"));
        assert!(out.manifest.get("derived.beta0_1_beta1_11.p_2.discrete_rate").is_some());
        assert!(out.manifest.get("output.dir").is_none());
        let text = fs::read_to_string(tmp.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(Manifest::parse(&text).unwrap(), out.manifest);
    }

    #[test]
    fn regions_intercept() {
        let tmp = tempfile::tempdir().unwrap();
        let out = run_experiment(&small("regions", tmp.path()), 0).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(out.manifest.get("derived.moment_boundary_p_2.intercept"), Some(fmt_f64(pi2).as_str()));
    }

    #[test]
    fn exact_paths_record_exponents() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = small("test5_sharpness", tmp.path());
        c.horizon = 5.0;
        let out = run_experiment(&c, 0).unwrap();
        assert!(out.manifest.get("derived.beta0_97p8_beta1_0p5.exact_path_0.p_1.pathwise_exponent").is_some());
        assert!(out.manifest.get("derived.beta1_choice").is_some());
    }

    #[test]
    fn validation_error_is_classified() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = small("custom", tmp.path());
        c.beta0 = vec![1e6];
        let e = run_experiment(&c, 0).unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("time step too large"));
    }
}
