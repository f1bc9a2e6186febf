//! Named experiment configurations and the runner that turns them into CSV
//! files, figures and a manifest.

pub mod config;
pub mod plot;
pub mod runner;

pub use config::{
    parse_config, parse_config_with, ConfigError, ExperimentConfig, InitialKind, InitialSpec, OperatorKind,
    OperatorSpec, OutputFormat, Scale, Study, BUILTIN_NAMES, CONFIG_KEYS, OUTPUT_KEYS,
};
pub use runner::{list_tree, run_experiment, token, variant_label, ExperimentError, ExperimentOutput, Manifest, MANIFEST_FILE};
