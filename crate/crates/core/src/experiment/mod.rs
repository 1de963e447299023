//! Experiment orchestration: configuration, cross-validated runs of one model
//! family, persisted reports, significance tables and per-table presets.

mod compare;
mod config;
mod presets;
mod run;
pub mod synthetic;

pub use compare::{compare, CompareRow, CompareTable};
pub use config::{
    apply_override, DatasetConfig, ExperimentConfig, Family, FeatureConfig, GridMode, ModelConfig, SvmConfig,
};
pub use presets::{neural_candidates, neural_grid_axes, table_preset, TableOptions, TablePreset, TABLES};
pub use run::{
    evaluate, format_param, persist, prepare_corpus, run_experiment, run_stem, Manifest, NeuralTrial, Outcome,
    PreparedCorpus, RunFiles, Tuning,
};
