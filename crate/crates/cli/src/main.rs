use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stochstab::experiments::plot::{render_svg, Figure, PlotSeries};
use stochstab::experiments::{
    parse_config_with, run_experiment, ExperimentConfig, ExperimentError, OperatorKind, OperatorSpec, OutputFormat,
    Scale, BUILTIN_NAMES, CONFIG_KEYS, OUTPUT_KEYS,
};
use stochstab::io::fmt_f64;
use stochstab::montecarlo::{default_fit_window, fit_decay_rate, run_ensemble, EnsembleConfig};
use stochstab::sde::{generate_path, simulate_path, Discretization, StateVector};
use stochstab::stability::{
    as_decay_rate, as_noise_threshold, boundary_csv, classify, linspace, moment_decay_rate, region_boundary,
    ModelParams, RegionKind,
};
use stochstab::DEFAULT_SEED;

fn config_help() -> String {
    let mut s = String::from("Config file format (used by `experiment` and `convergence` with --config):\n");
    s.push_str("  one `key = value` per line, `#` starts a comment, lists are comma separated.\n");
    s.push_str("  The built-in named by `name` supplies defaults; every other key overrides one field.\n\nKeys:\n");
    for (k, d) in CONFIG_KEYS.iter().chain(OUTPUT_KEYS.iter()) {
        s.push_str(&format!("  {k:<24} {d}\n"));
    }
    s.push_str(&format!("\nExperiments: {}\n", BUILTIN_NAMES.join(", ")));
    s.push_str("\nExit status: 0 success, 1 invalid input or usage, 2 runtime failure.\n");
    s
}

/// Stability classification, simulation and experiment runner for linear
/// parabolic equations with multiplicative noise.
#[derive(Parser)]
#[command(name = "stochstab", version, after_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed (defaults to the experiment's seed, 42 for built-ins).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Without it, single-result commands print CSV to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Figure output alongside the CSV data.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Experiment config file (see the key list below).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Start from the full-size defaults instead of the desk-scale ones.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads for ensembles (0 = all cores). Does not change results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Svg => OutputFormat::Svg,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OperatorArg {
    Heat,
    Biharmonic,
    Fractional,
    Degenerate,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    Moment,
    As,
}

#[derive(Args)]
struct OperatorArgs {
    #[arg(long, value_enum, default_value = "biharmonic")]
    operator: OperatorArg,
    /// Galerkin modes N.
    #[arg(long, default_value_t = 16)]
    modes: usize,
    /// Fractional order s in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Degeneracy alpha in [0, 2).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Cells of the degenerate eigenvalue grid.
    #[arg(long, default_value_t = 2048)]
    grid_points: usize,
}

impl OperatorArgs {
    fn spec(&self) -> OperatorSpec {
        let kind = match self.operator {
            OperatorArg::Heat => OperatorKind::Heat,
            OperatorArg::Biharmonic => OperatorKind::Biharmonic,
            OperatorArg::Fractional => OperatorKind::Fractional,
            OperatorArg::Degenerate => OperatorKind::Degenerate,
        };
        OperatorSpec { kind, modes: self.modes, s: self.s, alpha: self.alpha, grid_points: self.grid_points }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    #[arg(long, allow_hyphen_values = true)]
    beta0: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta1: f64,
    #[arg(long, default_value_t = 1e-3)]
    tau: f64,
    #[arg(long, default_value_t = 0.2)]
    horizon: f64,
    /// Record every stride-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Initial coefficients Y^1..Y^N instead of projecting x^4 - 2x^3 + x.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial_coeffs: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the moment and almost-sure stability conditions.
    Classify {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        lambda1: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta0: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta1: f64,
    },
    /// Sample a stability-region boundary beta0(beta1) as `beta1,beta0` CSV.
    Region {
        #[arg(long, value_enum, default_value = "moment")]
        kind: RegionArg,
        #[arg(long)]
        lambda1: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 5.0)]
        beta1_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Simulate one path of the scheme; `t,norm_sq[,Y_1..]` CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Include the coefficients Y_1..Y_N in the output.
        #[arg(long)]
        coeffs: bool,
    },
    /// Monte Carlo p-th moments; `t,value,stderr` CSV.
    Ensemble {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2000)]
        paths: usize,
        /// Divide by the t = 0 moment.
        #[arg(long)]
        normalize: bool,
    },
    /// Run a built-in experiment (or `custom` with --config).
    Experiment {
        /// One of the built-in names; may be omitted when --config names one.
        name: Option<String>,
    },
    /// Strong-error and discrete-rate convergence study.
    Convergence,
    /// Eigenvalues of an operator as `k,lambda_k` CSV.
    Eigen {
        #[command(flatten)]
        operator: OperatorArgs,
    },
}

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

macro_rules! failure_from {
    ($($t:ty),+) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                ExperimentError::from(e).into()
            }
        }
    )+};
}

failure_from!(
    stochstab::experiments::ConfigError,
    stochstab::operators::OperatorError,
    stochstab::sde::SdeError,
    stochstab::montecarlo::MonteCarloError,
    stochstab::stability::StabilityError
);

fn invalid(msg: impl std::fmt::Display) -> Failure {
    Failure::Validation(anyhow!("{msg}"))
}

fn runtime(e: anyhow::Error) -> Failure {
    Failure::Runtime(e)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(runtime)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display())).map_err(runtime)
}

/// CSV to `<out_dir>/<name>.csv` (plus an SVG when asked) or to stdout.
fn emit(cli: &Cli, stem: &str, csv: &str, figure: impl FnOnce() -> Figure) -> Result<(), Failure> {
    match &cli.out_dir {
        None => {
            print!("{csv}");
            Ok(())
        }
        Some(dir) => {
            write_file(dir, &format!("{stem}.csv"), csv)?;
            if cli.format.map(OutputFormat::from).is_some_and(|f| f.wants_svg()) {
                write_file(dir, &format!("{stem}.svg"), &render_svg(&figure()))?;
            }
            Ok(())
        }
    }
}

fn initial_state(run: &RunArgs, n_modes: usize) -> Result<StateVector, Failure> {
    let spec = match &run.initial_coeffs {
        Some(c) => stochstab::experiments::InitialSpec {
            kind: stochstab::experiments::InitialKind::Coefficients,
            values: c.clone(),
        },
        None if run.operator.operator == OperatorArg::Degenerate => stochstab::experiments::InitialSpec {
            kind: stochstab::experiments::InitialKind::Coefficients,
            values: vec![1.0],
        },
        None => stochstab::experiments::InitialSpec::polynomial(),
    };
    Ok(spec.resolve(n_modes)?)
}

fn experiment_config(cli: &Cli, name: Option<&str>) -> Result<ExperimentConfig, Failure> {
    let scale = cli.paper_scale.then_some(Scale::Paper);
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Validation)?;
            parse_config_with(&text, name, scale)?
        }
        None => {
            let name = name.ok_or_else(|| {
                invalid(format!("experiment name required (one of {}) or --config", BUILTIN_NAMES.join(", ")))
            })?;
            ExperimentConfig::builtin(name, scale.unwrap_or(Scale::Desk))?
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f.into();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.config.is_some() && !matches!(cli.command, Command::Experiment { .. } | Command::Convergence) {
        return Err(invalid("--config only applies to `experiment` and `convergence`"));
    }
    match &cli.command {
        Command::Classify { p, lambda1, beta0, beta1 } => {
            let params = ModelParams::new(*beta0, *beta1, *p)?;
            let v = classify(&params, *lambda1)?;
            let verdict = match (v.moment_stable, v.as_stable) {
                (true, true) => "stable in p-th moment and almost surely",
                (false, true) => "almost surely stable; p-th moment condition fails",
                (true, false) => "stable in p-th moment; almost-sure condition fails",
                (false, false) => "neither condition holds",
            };
            println!("lambda1 = {}", fmt_f64(*lambda1));
            println!("beta0 = {}", fmt_f64(*beta0));
            println!("beta1 = {}", fmt_f64(*beta1));
            println!("p = {}", fmt_f64(*p));
            println!("moment_stable = {}", v.moment_stable);
            println!("as_stable = {}", v.as_stable);
            println!("verdict = {verdict}");
            println!("mu_p = {}", fmt_f64(moment_decay_rate(&params, *lambda1)?));
            println!("mu_as = {}", fmt_f64(as_decay_rate(&params, *lambda1)?));
            println!("as_threshold = {}", fmt_f64(as_noise_threshold(*beta0, *lambda1)));
            Ok(())
        }
        Command::Region { kind, lambda1, p, beta1_max, samples } => {
            if !(beta1_max.is_finite() && *beta1_max > 0.0) || *samples < 2 {
                return Err(invalid("need --beta1-max > 0 and --samples >= 2"));
            }
            let (k, stem) = match kind {
                RegionArg::Moment => (RegionKind::MomentMe, "moment_boundary"),
                RegionArg::As => (RegionKind::AlmostSure, "as_boundary"),
            };
            let curve = region_boundary(k, *lambda1, *p, &linspace(0.0, *beta1_max, *samples))?;
            emit(cli, stem, &boundary_csv(&curve), || Figure {
                name: stem.into(),
                title: format!("{stem}, lambda1 = {}", fmt_f64(*lambda1)),
                x_label: "beta1".into(),
                y_label: "beta0".into(),
                log_x: false,
                log_y: false,
                series: vec![PlotSeries { label: stem.into(), file: format!("{stem}.csv"), using: "1:2".into(), points: curve.clone() }],
            })
        }
        Command::Simulate { run, coeffs } => {
            let spectrum = run.operator.spec().build()?;
            let disc = Discretization::new(run.operator.spec().effective_modes(), run.tau, run.horizon)?;
            let params = ModelParams::new(run.beta0, run.beta1, 2.0)?;
            disc.check_invertible(&params, &spectrum)?;
            if run.stride == 0 {
                return Err(invalid("--stride must be at least 1"));
            }
            let y0 = initial_state(run, disc.n_modes())?;
            let path = generate_path(cli.seed.unwrap_or(DEFAULT_SEED), &disc);
            let traj = simulate_path(&y0, &params, &spectrum, &disc, &path)?;
            let points = traj.norm_pow_series(2.0);
            emit(cli, "trajectory", &traj.to_csv(*coeffs, run.stride), || Figure {
                name: "trajectory".into(),
                title: "||Y_n||^2".into(),
                x_label: "t".into(),
                y_label: "||Y_n||^2".into(),
                log_x: false,
                log_y: true,
                series: vec![PlotSeries { label: "path".into(), file: "trajectory.csv".into(), using: "1:2".into(), points }],
            })
        }
        Command::Ensemble { run, p, paths, normalize } => {
            let spectrum = run.operator.spec().build()?;
            let disc = Discretization::new(run.operator.spec().effective_modes(), run.tau, run.horizon)?;
            let params = ModelParams::new(run.beta0, run.beta1, *p)?;
            let y0 = initial_state(run, disc.n_modes())?;
            let cfg = EnsembleConfig {
                n_paths: *paths,
                master_seed: cli.seed.unwrap_or(DEFAULT_SEED),
                output_stride: run.stride,
                normalize: *normalize,
                workers: cli.workers,
            };
            let series = run_ensemble(&y0, &params, &spectrum, &disc, &cfg)?;
            match fit_decay_rate(&series, default_fit_window(&series)) {
                Ok(fit) => eprintln!(
                    "fit_rate = {} +- {} (r^2 = {}); mu_p = {}",
                    fmt_f64(fit.rate),
                    fmt_f64(fit.rate_stderr),
                    fmt_f64(fit.r_squared),
                    fmt_f64(moment_decay_rate(&params, spectrum.lambda1())?)
                ),
                Err(e) => eprintln!("fit unavailable: {e}"),
            }
            let points = series.times.iter().copied().zip(series.values.iter().copied()).collect();
            emit(cli, "moments", &series.to_csv(), || Figure {
                name: "moments".into(),
                title: format!("E||Y_n||^{}", fmt_f64(*p)),
                x_label: "t".into(),
                y_label: "moment".into(),
                log_x: false,
                log_y: true,
                series: vec![PlotSeries { label: "MC".into(), file: "moments.csv".into(), using: "1:2".into(), points }],
            })
        }
        Command::Experiment { name } => {
            let cfg = experiment_config(cli, name.as_deref())?;
            let out = run_experiment(&cfg, cli.workers)?;
            for f in &out.files {
                println!("{}", out.dir.join(f).display());
            }
            Ok(())
        }
        Command::Convergence => {
            let cfg = experiment_config(cli, Some("convergence"))?;
            let out = run_experiment(&cfg, cli.workers)?;
            for (k, v) in out.manifest.entries.iter().filter(|(k, _)| k.ends_with("strong_order") || k.ends_with("final_rate_gap")) {
                println!("{k} = {v}");
            }
            Ok(())
        }
        Command::Eigen { operator } => {
            let spectrum = operator.spec().build()?;
            let points = spectrum.eigenvalues().iter().enumerate().map(|(i, l)| ((i + 1) as f64, *l)).collect();
            emit(cli, "spectrum", &spectrum.to_csv(), || Figure {
                name: "spectrum".into(),
                title: format!("{} spectrum", spectrum.kind()),
                x_label: "k".into(),
                y_label: "lambda_k".into(),
                log_x: false,
                log_y: true,
                series: vec![PlotSeries { label: "lambda_k".into(), file: "spectrum.csv".into(), using: "1:2".into(), points }],
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
