//! Experiment runs: configuration, cached pipeline stages and sweeps.

mod config;
mod pipeline;

pub use config::{Baseline, ExperimentConfig};
pub use pipeline::{
    cached_pca, cmd_features, cmd_network, cmd_sweep, cmd_train, compute_features, ensure_features,
    feature_cache_path, feature_key, load_features, reservoir_distributions, train_on_features, FeatureOutcome,
    Inputs, SweepAxis, SweepRow, TrainOutcome,
};
