use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::Split;
use crate::downstream::{EvaluationReport, VariantTag};
use crate::error::{Error, Result};
use crate::rng;
use crate::scnn::ScnnParameters;

use super::config::{ExperimentConfig, GridAxes, OptimizerSettings};
use super::data::{Environment, SplitData};
use super::train::{
    classifier_accuracy, drop_probabilities, test_accuracy, train_contrastive, train_supervised, validation_accuracy,
    TrainLog, TrainOutcome,
};

/// Environment variable holding the worker count of the job pool.
pub const WORKERS_ENV: &str = "HODGECL_WORKERS";

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `jobs` on a bounded pool; results come back in input order.
pub fn run_jobs<T, R, F>(jobs: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| jobs.into_par_iter().map(f).collect())
}

/// Trains one variant on one split.
pub fn train_variant(
    cfg: &ExperimentConfig,
    variant: VariantTag,
    env: &Environment,
    data: &SplitData,
    drop: Option<&[Vec<f64>]>,
) -> Result<TrainOutcome> {
    if variant.is_supervised() {
        train_supervised(cfg, env, data)
    } else {
        train_contrastive(cfg, variant, env, data, drop)
    }
}

/// Test accuracy of a trained variant (best validation checkpoint).
pub fn evaluate_outcome(
    cfg: &ExperimentConfig,
    variant: VariantTag,
    env: &Environment,
    data: &SplitData,
    outcome: &TrainOutcome,
) -> Result<f64> {
    evaluate_params(cfg, variant, env, data, &outcome.best_params)
}

/// Test accuracy of an encoder: its own head for the supervised variant,
/// a downstream SVM on the pooled embedding otherwise.
pub fn evaluate_params(
    cfg: &ExperimentConfig,
    variant: VariantTag,
    env: &Environment,
    data: &SplitData,
    params: &ScnnParameters,
) -> Result<f64> {
    if variant.is_supervised() {
        let test = data.view(Split::Test);
        test.require(Split::Test)?;
        classifier_accuracy(params, env, &test)
    } else {
        test_accuracy(cfg, env, params, data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub variant: VariantTag,
    pub split_id: usize,
    pub accuracy: f64,
    pub log: TrainLog,
}

/// Reports of every variant plus the individual runs behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub reports: Vec<EvaluationReport>,
    pub runs: Vec<SplitResult>,
}

/// Generates the configured number of splits.
pub fn generate_splits(cfg: &ExperimentConfig) -> Result<Vec<SplitData>> {
    run_jobs((0..cfg.num_splits).collect(), |k| SplitData::generate(cfg, k))
}

/// Trains and evaluates `variants` on every split.
pub fn run_variant_matrix(
    cfg: &ExperimentConfig,
    env: &Environment,
    splits: &[SplitData],
    variants: &[VariantTag],
) -> Result<MatrixResult> {
    // optimized probabilities are shared by both spectral variants of a split
    let spectral = if variants.iter().any(|v| v.spectral_augmentation()) {
        run_jobs(splits.iter().collect(), |d| {
            drop_probabilities(cfg, VariantTag::SsclSpec, env, &d.view(Split::Train)).map(Some)
        })?
    } else {
        vec![None; splits.len()]
    };
    let jobs: Vec<(VariantTag, usize)> = variants
        .iter()
        .flat_map(|&v| (0..splits.len()).map(move |k| (v, k)))
        .collect();
    let runs = run_jobs(jobs, |(variant, k)| {
        let data = &splits[k];
        let drop = if variant.spectral_augmentation() {
            spectral[k].as_deref()
        } else {
            None
        };
        let outcome = train_variant(cfg, variant, env, data, drop)?;
        let accuracy = evaluate_outcome(cfg, variant, env, data, &outcome)?;
        Ok(SplitResult {
            variant,
            split_id: data.split_id,
            accuracy,
            log: outcome.log,
        })
    })?;
    let reports = variants
        .iter()
        .map(|&v| {
            let accs = runs.iter().filter(|r| r.variant == v).map(|r| r.accuracy).collect();
            EvaluationReport::from_accuracies(v, accs)
        })
        .collect();
    Ok(MatrixResult { reports, runs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub variant: VariantTag,
    pub best: OptimizerSettings,
    pub rows: Vec<GridRow>,
}

/// Cell with the highest validation accuracy; ties go to the smaller
/// learning rate, then the smaller weight decay.
pub fn select_grid_cell(rows: &[GridRow]) -> Option<GridRow> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        a.learning_rate
            .total_cmp(&b.learning_rate)
            .then(a.weight_decay.total_cmp(&b.weight_decay))
    });
    let mut best: Option<GridRow> = None;
    for r in sorted {
        if best.is_none_or(|b| r.val_accuracy > b.val_accuracy) {
            best = Some(r);
        }
    }
    best
}

/// Trains every (learning rate, weight decay) cell on `data` and scores it
/// on the validation split.
pub fn grid_search(
    cfg: &ExperimentConfig,
    variant: VariantTag,
    env: &Environment,
    data: &SplitData,
    axes: &GridAxes,
) -> Result<GridSearchResult> {
    if axes.learning_rates.is_empty() || axes.weight_decays.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if data.dataset.count(Split::Val) == 0 {
        return Err(Error::InsufficientData("grid search needs a validation split".into()));
    }
    let drop = if variant.spectral_augmentation() {
        Some(drop_probabilities(cfg, variant, env, &data.view(Split::Train))?)
    } else {
        None
    };
    let cells: Vec<(f64, f64)> = axes
        .learning_rates
        .iter()
        .flat_map(|&lr| axes.weight_decays.iter().map(move |&wd| (lr, wd)))
        .collect();
    let rows = run_jobs(cells, |(lr, wd)| {
        let mut c = cfg.clone();
        c.per_variant.insert(
            variant,
            OptimizerSettings {
                learning_rate: lr,
                weight_decay: wd,
            },
        );
        let outcome = train_variant(&c, variant, env, data, drop.as_deref())?;
        let best_val = outcome
            .log
            .validation
            .iter()
            .map(|p| p.accuracy)
            .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.max(a))));
        let val_accuracy = match best_val {
            Some(a) => a,
            None if variant.is_supervised() => classifier_accuracy(&outcome.best_params, env, &data.view(Split::Val))?,
            None => {
                let mut r = rng::stream(data.seed, &[rng::tag("svm-grid")]);
                validation_accuracy(&c, env, &outcome.best_params, data, &mut r)?
            }
        };
        Ok(GridRow {
            learning_rate: lr,
            weight_decay: wd,
            val_accuracy,
        })
    })?;
    let best = select_grid_cell(&rows).expect("non-empty grid");
    Ok(GridSearchResult {
        variant,
        best: OptimizerSettings {
            learning_rate: best.learning_rate,
            weight_decay: best.weight_decay,
        },
        rows,
    })
}
