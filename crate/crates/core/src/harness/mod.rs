//! Experiment harness: configuration, presets, manifests, and artifact
//! layout. One invocation runs one preset and writes everything (CSVs,
//! checkpoints, a resolved-config echo, and a manifest) under its output
//! directory.

mod config;
mod presets;

pub use config::{
    parse_config, serialize_config, ArchSpec, DistillSection, DqnSection, EvalSection,
    ExperimentConfig, MultitaskSection, NetSection, Preset,
};
pub use presets::{published_architectures, run, RunOutput};
