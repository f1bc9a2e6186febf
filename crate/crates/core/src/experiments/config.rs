//! Flat `key = value` experiment configuration.
//!
//! A file names a built-in experiment (`name`) and a `scale`; the built-in's
//! defaults are loaded first and every other key overrides one field. Lists
//! are comma separated, `#` starts a comment.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::io::fmt_f64;
use crate::operators::{
    biharmonic_hinged_spectrum, degenerate_spectrum, fractional_spectrum, heat_spectrum, EigenSpectrum,
    OperatorError,
};
use crate::sde::{project_initial_condition, Discretization, InitialCondition, SdeError, StateVector};
use crate::stability::ModelParams;
use crate::DEFAULT_SEED;

pub const BUILTIN_NAMES: [&str; 8] = [
    "test1_noise_intensity",
    "test2_moment_orders",
    "test3_pathwise_stabilization",
    "test4_power_sensitivity",
    "test5_sharpness",
    "regions",
    "convergence",
    "custom",
];

/// Every accepted key with a one-line description, in serialization order.
pub const CONFIG_KEYS: [(&str, &str); 25] = [
    ("name", "built-in experiment whose defaults are loaded first (see BUILTIN_NAMES)"),
    ("scale", "desk | paper: which set of built-in defaults to start from"),
    ("study", "moments | paths | exact_paths | regions | convergence"),
    ("operator.kind", "heat | biharmonic | fractional | degenerate"),
    ("operator.modes", "number of Galerkin modes N (ignored by degenerate, which has one mode)"),
    ("operator.s", "fractional order s in (0, 1] of the Dirichlet Laplacian"),
    ("operator.alpha", "degeneracy alpha in [0, 2) of -(x^alpha v')'"),
    ("operator.grid_points", "finite-volume cells for the degenerate eigenvalue"),
    ("initial.kind", "polynomial (x^4 - 2x^3 + x) | samples | coefficients"),
    ("initial.values", "samples on a uniform grid of [0,1], or the coefficients Y^1..Y^N"),
    ("params.beta0", "list of drift coefficients"),
    ("params.beta1", "list of noise intensities; variants are all (beta0, beta1) pairs"),
    ("params.p", "list of moment orders / powers p >= 1"),
    ("disc.tau", "time step (coarsest step for the convergence study)"),
    ("disc.horizon", "final time T; rounded up to a whole number of steps"),
    ("ensemble.n_paths", "Monte Carlo paths, or realizations for path studies"),
    ("ensemble.seed", "master seed; path studies use seed, seed+1, ... per realization"),
    ("ensemble.stride", "record every stride-th step (the last step is always recorded)"),
    ("ensemble.normalize", "true | false: divide moments by their t = 0 value"),
    ("analysis.fit_window", "auto (second half of the horizon) or `t_lo, t_hi` for decay fits"),
    ("analysis.tail_fraction", "fraction in (0,1) of recorded times averaged by the pathwise exponent"),
    ("regions.beta1_max", "largest beta1 sampled by the regions study"),
    ("regions.samples", "number of beta1 samples on [0, beta1_max]"),
    ("convergence.levels", "number of step sizes tau, tau/2, ... in the convergence study"),
    ("output.format", "csv (data + gnuplot script) | svg (data + SVG figures) | both"),
];

/// Keys that configure where output goes; they never enter a manifest.
pub const OUTPUT_KEYS: [(&str, &str); 2] = [
    ("output.dir", "output directory"),
    ("output.plot_script", "true | false: write plot.gp when the format includes csv"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn parse(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!("expected one of {}, got `{s}`", [$($text),+].join(" | "))),
                }
            }
        }
    };
}

keyword_enum!(Scale { Desk => "desk", Paper => "paper" });
keyword_enum!(Study {
    Moments => "moments",
    Paths => "paths",
    ExactPaths => "exact_paths",
    Regions => "regions",
    Convergence => "convergence",
});
keyword_enum!(OperatorKind {
    Heat => "heat",
    Biharmonic => "biharmonic",
    Fractional => "fractional",
    Degenerate => "degenerate",
});
keyword_enum!(InitialKind { Polynomial => "polynomial", Samples => "samples", Coefficients => "coefficients" });
keyword_enum!(OutputFormat { Csv => "csv", Svg => "svg", Both => "both" });

impl OutputFormat {
    pub fn wants_script(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
    pub fn wants_svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub modes: usize,
    pub s: f64,
    pub alpha: f64,
    pub grid_points: usize,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, modes: usize) -> Self {
        Self { kind, modes, s: 0.5, alpha: 0.5, grid_points: 2048 }
    }

    pub fn build(&self) -> Result<EigenSpectrum, OperatorError> {
        match self.kind {
            OperatorKind::Heat => heat_spectrum(self.modes),
            OperatorKind::Biharmonic => biharmonic_hinged_spectrum(self.modes),
            OperatorKind::Fractional => fractional_spectrum(&heat_spectrum(self.modes)?, self.s),
            OperatorKind::Degenerate => degenerate_spectrum(self.alpha, self.grid_points),
        }
    }

    /// Modes actually simulated.
    pub fn effective_modes(&self) -> usize {
        match self.kind {
            OperatorKind::Degenerate => 1,
            _ => self.modes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub values: Vec<f64>,
}

impl InitialSpec {
    pub fn polynomial() -> Self {
        Self { kind: InitialKind::Polynomial, values: Vec::new() }
    }

    /// Coefficient vector of length `n_modes` (coefficient lists are padded
    /// with zeros or truncated).
    pub fn resolve(&self, n_modes: usize) -> Result<StateVector, SdeError> {
        match self.kind {
            InitialKind::Polynomial => project_initial_condition(&InitialCondition::PaperPolynomial, n_modes),
            InitialKind::Samples => project_initial_condition(&InitialCondition::Custom(self.values.clone()), n_modes),
            InitialKind::Coefficients => {
                let mut c = self.values.clone();
                c.resize(n_modes, 0.0);
                Ok(StateVector::new(c))
            }
        }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub scale: Scale,
    pub study: Study,
    pub operator: OperatorSpec,
    pub initial: InitialSpec,
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub p: Vec<f64>,
    pub tau: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub stride: usize,
    pub normalize: bool,
    pub fit_window: Option<(f64, f64)>,
    pub tail_fraction: f64,
    pub regions_beta1_max: f64,
    pub regions_samples: usize,
    pub convergence_levels: usize,
    pub format: OutputFormat,
    pub out_dir: PathBuf,
    pub plot_script: bool,
}

impl ExperimentConfig {
    /// Defaults of a built-in experiment.
    pub fn builtin(name: &str, scale: Scale) -> Result<Self, ConfigError> {
        let paper = scale == Scale::Paper;
        let pick = |desk: usize, full: usize| if paper { full } else { desk };
        let pickf = |desk: f64, full: f64| if paper { full } else { desk };
        let mut c = ExperimentConfig {
            name: name.to_string(),
            scale,
            study: Study::Moments,
            operator: OperatorSpec::new(OperatorKind::Biharmonic, pick(16, 100)),
            initial: InitialSpec::polynomial(),
            beta0: vec![1.0],
            beta1: vec![2.0],
            p: vec![2.0],
            tau: pickf(1e-3, 1e-4),
            horizon: 0.2,
            n_paths: pick(2000, 50_000),
            seed: DEFAULT_SEED,
            stride: pick(1, 10),
            normalize: false,
            fit_window: None,
            tail_fraction: 0.1,
            regions_beta1_max: 5.0,
            regions_samples: 101,
            convergence_levels: 4,
            format: OutputFormat::Csv,
            out_dir: PathBuf::from("out").join(name),
            plot_script: true,
        };
        match name {
            "test1_noise_intensity" => {
                c.beta1 = vec![2.0, 6.0, 9.0];
            }
            "test2_moment_orders" => {
                c.beta1 = vec![11.0];
                c.p = vec![1.0, 2.0, 3.0];
                c.n_paths = pick(2000, 100_000);
                c.normalize = true;
            }
            "test3_pathwise_stabilization" => {
                c.study = Study::Paths;
                c.beta0 = vec![100.0];
                c.beta1 = vec![2.4, 6.0];
                c.horizon = 8.0;
                c.n_paths = 3;
                c.stride = pick(10, 100);
            }
            "test4_power_sensitivity" => {
                c.study = Study::Paths;
                c.beta0 = vec![100.0];
                c.beta1 = vec![2.7];
                c.p = vec![1.0, 2.0, 3.0];
                c.horizon = 3.0;
                c.n_paths = 1;
                c.stride = pick(1, 10);
            }
            "test5_sharpness" => {
                c.study = Study::ExactPaths;
                c.beta0 = vec![97.8];
                c.beta1 = vec![0.25, 0.5, 1.5, 2.5];
                c.p = vec![1.0];
                c.tau = pickf(1e-2, 1e-3);
                c.horizon = 100.0;
                c.n_paths = 1;
                c.stride = 1;
            }
            "regions" => {
                c.study = Study::Regions;
                c.operator = OperatorSpec::new(OperatorKind::Heat, 1);
                c.beta0 = vec![0.0];
                c.beta1 = vec![0.0];
                c.n_paths = 1;
                c.stride = 1;
                c.regions_samples = pick(101, 1001);
            }
            "convergence" => {
                c.study = Study::Convergence;
                c.operator = OperatorSpec::new(OperatorKind::Heat, 1);
                c.initial = InitialSpec { kind: InitialKind::Coefficients, values: vec![1.0] };
                c.beta1 = vec![1.0];
                c.tau = 1.0 / 256.0;
                c.horizon = 1.0;
                c.n_paths = pick(64, 1024);
                c.stride = 1;
                c.convergence_levels = pick(4, 6);
            }
            "custom" => {
                c.operator = OperatorSpec::new(OperatorKind::Heat, pick(8, 100));
                c.beta0 = vec![0.0];
                c.beta1 = vec![1.0];
                c.horizon = 1.0;
                c.n_paths = pick(500, 50_000);
            }
            other => {
                return Err(ConfigError {
                    line: None,
                    message: format!("unknown experiment `{other}`; expected one of {}", BUILTIN_NAMES.join(", ")),
                })
            }
        }
        Ok(c)
    }

    /// All `(beta0, beta1)` pairs, `beta0` outermost.
    pub fn variants(&self) -> Vec<(f64, f64)> {
        self.beta0.iter().flat_map(|&b0| self.beta1.iter().map(move |&b1| (b0, b1))).collect()
    }

    pub fn discretization(&self) -> Result<Discretization, SdeError> {
        Discretization::new(self.operator.effective_modes(), self.tau, self.horizon)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "name" => {
                if !BUILTIN_NAMES.contains(&value) {
                    return Err(format!("unknown experiment `{value}`; expected one of {}", BUILTIN_NAMES.join(", ")));
                }
                self.name = value.to_string();
            }
            "scale" => self.scale = Scale::parse(value)?,
            "study" => self.study = Study::parse(value)?,
            "operator.kind" => self.operator.kind = OperatorKind::parse(value)?,
            "operator.modes" => self.operator.modes = parse_usize(value)?,
            "operator.s" => self.operator.s = parse_f64(value)?,
            "operator.alpha" => self.operator.alpha = parse_f64(value)?,
            "operator.grid_points" => self.operator.grid_points = parse_usize(value)?,
            "initial.kind" => self.initial.kind = InitialKind::parse(value)?,
            "initial.values" => self.initial.values = parse_list(value, true)?,
            "params.beta0" => self.beta0 = parse_list(value, false)?,
            "params.beta1" => self.beta1 = parse_list(value, false)?,
            "params.p" => self.p = parse_list(value, false)?,
            "disc.tau" => self.tau = parse_f64(value)?,
            "disc.horizon" => self.horizon = parse_f64(value)?,
            "ensemble.n_paths" => self.n_paths = parse_usize(value)?,
            "ensemble.seed" => self.seed = value.parse().map_err(|_| format!("expected an unsigned integer, got `{value}`"))?,
            "ensemble.stride" => self.stride = parse_usize(value)?,
            "ensemble.normalize" => self.normalize = parse_bool(value)?,
            "analysis.fit_window" => {
                self.fit_window = if value == "auto" {
                    None
                } else {
                    match parse_list(value, false)?.as_slice() {
                        [lo, hi] => Some((*lo, *hi)),
                        _ => return Err(format!("expected `auto` or two numbers, got `{value}`")),
                    }
                }
            }
            "analysis.tail_fraction" => self.tail_fraction = parse_f64(value)?,
            "regions.beta1_max" => self.regions_beta1_max = parse_f64(value)?,
            "regions.samples" => self.regions_samples = parse_usize(value)?,
            "convergence.levels" => self.convergence_levels = parse_usize(value)?,
            "output.format" => self.format = OutputFormat::parse(value)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            "output.plot_script" => self.plot_script = parse_bool(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// `(key, value)` pairs for every key of [`CONFIG_KEYS`], in order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ");
        let values = [
            self.name.clone(),
            self.scale.as_str().into(),
            self.study.as_str().into(),
            self.operator.kind.as_str().into(),
            self.operator.modes.to_string(),
            fmt_f64(self.operator.s),
            fmt_f64(self.operator.alpha),
            self.operator.grid_points.to_string(),
            self.initial.kind.as_str().into(),
            list(&self.initial.values),
            list(&self.beta0),
            list(&self.beta1),
            list(&self.p),
            fmt_f64(self.tau),
            fmt_f64(self.horizon),
            self.n_paths.to_string(),
            self.seed.to_string(),
            self.stride.to_string(),
            self.normalize.to_string(),
            match self.fit_window {
                None => "auto".into(),
                Some((lo, hi)) => list(&[lo, hi]),
            },
            fmt_f64(self.tail_fraction),
            fmt_f64(self.regions_beta1_max),
            self.regions_samples.to_string(),
            self.convergence_levels.to_string(),
            self.format.as_str().into(),
        ];
        CONFIG_KEYS.iter().zip(values).map(|((k, _), v)| (k.to_string(), v)).collect()
    }

    /// Config file text that parses back to `self`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(&format!("output.dir = {}\n", self.out_dir.display()));
        out.push_str(&format!("output.plot_script = {}\n", self.plot_script));
        out
    }

    /// Checks that the experiment can run; the error names the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let finite = |key: &'static str, v: &[f64]| -> Result<(), (&'static str, String)> {
            match v.iter().find(|x| !x.is_finite()) {
                Some(x) => Err((key, format!("value {x} is not finite"))),
                None => Ok(()),
            }
        };
        finite("params.beta0", &self.beta0)?;
        finite("params.beta1", &self.beta1)?;
        finite("params.p", &self.p)?;
        finite("initial.values", &self.initial.values)?;
        for (key, list) in [("params.beta0", &self.beta0), ("params.beta1", &self.beta1), ("params.p", &self.p)] {
            if list.is_empty() {
                return Err((key, "list must not be empty".into()));
            }
        }
        if let Some(p) = self.p.iter().find(|p| **p < 1.0) {
            return Err(("params.p", format!("moment order {p} must be >= 1")));
        }
        if self.n_paths == 0 {
            return Err(("ensemble.n_paths", "must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(("ensemble.stride", "must be at least 1".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return Err(("analysis.tail_fraction", format!("{} is outside (0, 1)", self.tail_fraction)));
        }
        if let Some((lo, hi)) = self.fit_window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(("analysis.fit_window", format!("need t_lo < t_hi, got {lo}, {hi}")));
            }
        }
        let spectrum = self.operator.build().map_err(|e| ("operator.kind", e.to_string()))?;
        match self.initial.kind {
            InitialKind::Polynomial | InitialKind::Samples if self.operator.kind == OperatorKind::Degenerate => {
                return Err((
                    "initial.kind",
                    "profiles are projected on the sine basis; the degenerate operator needs initial.kind = coefficients"
                        .into(),
                ))
            }
            InitialKind::Samples if self.initial.values.len() < 2 => {
                return Err(("initial.values", "need at least two samples".into()))
            }
            InitialKind::Coefficients if self.initial.values.is_empty() => {
                return Err(("initial.values", "need at least one coefficient".into()))
            }
            _ => {}
        }
        if self.study == Study::Regions {
            if !(self.regions_beta1_max.is_finite() && self.regions_beta1_max > 0.0) {
                return Err(("regions.beta1_max", "must be positive".into()));
            }
            if self.regions_samples < 2 {
                return Err(("regions.samples", "need at least 2 samples".into()));
            }
            return Ok(());
        }
        let disc = self.discretization().map_err(|e| {
            let key = if self.tau.is_finite() && self.tau > 0.0 { "disc.horizon" } else { "disc.tau" };
            (key, e.to_string())
        })?;
        if self.study == Study::Convergence && self.convergence_levels < 2 {
            return Err(("convergence.levels", "need at least 2 levels".into()));
        }
        if matches!(self.study, Study::Moments | Study::Paths | Study::Convergence) {
            for (b0, b1) in self.variants() {
                let params = ModelParams::new(b0, b1, self.p[0]).map_err(|e| ("params.beta0", e.to_string()))?;
                disc.check_invertible(&params, &spectrum).map_err(|e| ("disc.tau", format!("beta0 = {b0}: {e}")))?;
            }
        }
        Ok(())
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("expected a number, got `{s}`"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn parse_list(s: &str, allow_empty: bool) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return if allow_empty { Ok(Vec::new()) } else { Err("list must not be empty".into()) };
    }
    s.split(',').map(|item| parse_f64(item.trim())).collect()
}

/// Splits text into `(line number, key, value)` triples.
pub fn lex_key_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError { line: Some(line), message: format!("expected `key = value`, got `{content}`") });
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError { line: Some(line), message: "missing key before `=`".into() });
        }
        if let Some(first) = seen.insert(key.clone(), line) {
            return Err(ConfigError { line: Some(line), message: format!("duplicate key `{key}` (first set on line {first})") });
        }
        out.push((line, key, value.trim().to_string()));
    }
    Ok(out)
}

/// Parses and validates a config file. `name` and `scale`, when given,
/// take precedence over the file (a conflicting `name` is an error).
pub fn parse_config_with(
    text: &str,
    name: Option<&str>,
    scale: Option<Scale>,
) -> Result<ExperimentConfig, ConfigError> {
    let entries = lex_key_values(text)?;
    let find = |k: &str| entries.iter().find(|(_, key, _)| key == k);

    let resolved_name = match (name, find("name")) {
        (Some(n), Some((line, _, v))) if v != n => {
            return Err(ConfigError {
                line: Some(*line),
                message: format!("file configures `{v}` but `{n}` was requested"),
            })
        }
        (Some(n), _) => n.to_string(),
        (None, Some((_, _, v))) => v.clone(),
        (None, None) => "custom".to_string(),
    };
    let resolved_scale = match (scale, find("scale")) {
        (Some(s), _) => s,
        (None, Some((line, _, v))) => Scale::parse(v).map_err(|m| ConfigError { line: Some(*line), message: m })?,
        (None, None) => Scale::Desk,
    };
    let mut cfg = ExperimentConfig::builtin(&resolved_name, resolved_scale)
        .map_err(|e| ConfigError { line: find("name").map(|(l, _, _)| *l), ..e })?;
    for (line, key, value) in &entries {
        if key == "name" || key == "scale" {
            continue;
        }
        cfg.set(key, value).map_err(|m| ConfigError { line: Some(*line), message: format!("{key}: {m}") })?;
    }
    cfg.validate().map_err(|(key, m)| ConfigError {
        line: find(key).map(|(l, _, _)| *l),
        message: format!("{key}: {m}"),
    })?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, None, None)
}
