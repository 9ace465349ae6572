//! Experiment orchestration: configuration, training loops, grid search,
//! the variant matrix and report emission.

mod config;
mod data;
mod experiment;
mod gap_study;
mod train;

pub use config::{
    AugmentationConfig, BudgetMode, DatasetConfig, EncoderConfig, ExperimentConfig, GridAxes, OptimizerSettings,
};
pub use data::{Environment, SplitData, SplitView};
pub use experiment::{
    evaluate_outcome, evaluate_params, generate_splits, grid_search, run_jobs, run_variant_matrix, select_grid_cell,
    train_variant, worker_count, GridRow, GridSearchResult, MatrixResult, SplitResult, WORKERS_ENV,
};
pub use gap_study::{emit_embedding_gap_study, matched_uniform, GapStudy, Scheme};
pub use train::{
    classifier_accuracy, drop_probabilities, embed_view, test_accuracy, train_contrastive, train_supervised,
    validation_accuracy, TrainLog, TrainOutcome, ValidationPoint,
};
