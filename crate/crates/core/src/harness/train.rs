use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::{optimize_probabilities, MaskProbabilities};
use crate::contrastive::{build_batch, contrastive_loss, BatchItem, SimilarityCache};
use crate::datasets::Split;
use crate::downstream::{
    downstream_accuracy, select_penalty_on_validation, LabeledEmbeddings, Standardizer, VariantTag,
};
use crate::error::{Error, Result};
use crate::hodge::hodge_project;
use crate::rng::{self, StreamRng};
use crate::scnn::{init_parameters, make_lower_only, scnn_backward_acc, scnn_embed, scnn_forward, ScnnParameters};

use super::config::ExperimentConfig;
use super::data::{Environment, SplitData, SplitView};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub epoch: usize,
    pub accuracy: f64,
}

/// Record of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub variant: VariantTag,
    pub split_id: usize,
    /// Mean loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub validation: Vec<ValidationPoint>,
    /// Epoch (1-based) of the best validation checkpoint, if any was scored.
    pub best_epoch: Option<usize>,
    pub wall_clock_secs: f64,
    pub config_hash: String,
    /// Where the final checkpoint was written, when it was.
    pub checkpoint: Option<String>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub final_params: ScnnParameters,
    /// Best validation checkpoint; equals the final one without validation data.
    pub best_params: ScnnParameters,
    pub log: TrainLog,
}

fn split_stream(data: &SplitData, label: &str) -> StreamRng {
    rng::stream(data.seed, &[rng::tag(label)])
}

/// Batches of `order`, merging a trailing singleton into the previous batch.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size.max(1)).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let n = order.len();
        out.pop();
        let start = (out.len() - 1) * size;
        *out.last_mut().unwrap() = &order[start..n];
    }
    out
}

/// Per-anchor drop probabilities for the training flows: optimized for the
/// spectral variants, uniform otherwise.
pub fn drop_probabilities(
    cfg: &ExperimentConfig,
    variant: VariantTag,
    env: &Environment,
    train: &SplitView<'_>,
) -> Result<Vec<Vec<f64>>> {
    train.require(Split::Train)?;
    let n = env.num_edges();
    let aug = &cfg.augmentation;
    if !variant.spectral_augmentation() {
        let p = MaskProbabilities::uniform(n, aug.uniform_probability(n)).p;
        return Ok(vec![p; train.len()]);
    }
    train
        .flows
        .iter()
        .map(|f| {
            optimize_probabilities(
                &f.flow,
                &env.context.basis,
                &aug.objective,
                aug.budget(n),
                aug.step,
                aug.iters,
            )
            .map(|r| r.probabilities.p)
        })
        .collect()
}

/// Frozen-encoder embeddings (pooled SCNN output) of a split.
pub fn embed_view(params: &ScnnParameters, env: &Environment, view: &SplitView<'_>) -> Result<Vec<Vec<f64>>> {
    view.flows
        .iter()
        .map(|f| scnn_embed(params, &env.operators, &f.flow))
        .collect()
}

/// Validation accuracy of a linear SVM on the encoder's embeddings, with the
/// penalty chosen on the validation split itself.
pub fn validation_accuracy(
    cfg: &ExperimentConfig,
    env: &Environment,
    params: &ScnnParameters,
    data: &SplitData,
    rng: &mut StreamRng,
) -> Result<f64> {
    let train = data.view(Split::Train);
    let val = data.view(Split::Val);
    train.require(Split::Train)?;
    val.require(Split::Val)?;
    let (tr_y, va_y) = (train.labels(), val.labels());
    let mut tr = embed_view(params, env, &train)?;
    let mut va = embed_view(params, env, &val)?;
    if cfg.svm.standardize {
        let s = Standardizer::fit(&tr);
        tr = s.apply(&tr);
        va = s.apply(&va);
    }
    let c = select_penalty_on_validation((&tr, &tr_y), (&va, &va_y), &cfg.svm.c_grid, cfg.svm.epochs, rng)?;
    let model = crate::downstream::fit_linear_svm(&tr, &tr_y, c, cfg.svm.epochs, rng)?;
    Ok(model.accuracy(&va, &va_y))
}

/// Test accuracy of the downstream SVM on a frozen encoder. The penalty is
/// chosen on the validation split when there is one, by cross-validation on
/// the training split otherwise.
pub fn test_accuracy(
    cfg: &ExperimentConfig,
    env: &Environment,
    params: &ScnnParameters,
    data: &SplitData,
) -> Result<f64> {
    let train = data.view(Split::Train);
    let val = data.view(Split::Val);
    let test = data.view(Split::Test);
    train.require(Split::Train)?;
    val.require(Split::Val)?;
    test.require(Split::Test)?;
    let (tr_y, va_y, te_y) = (train.labels(), val.labels(), test.labels());
    let tr = embed_view(params, env, &train)?;
    let va = embed_view(params, env, &val)?;
    let te = embed_view(params, env, &test)?;
    let val_set = (!va.is_empty()).then_some(LabeledEmbeddings { z: &va, labels: &va_y });
    let mut r = rng::stream(data.seed, &[rng::tag("svm-test")]);
    downstream_accuracy(
        LabeledEmbeddings { z: &tr, labels: &tr_y },
        val_set,
        LabeledEmbeddings { z: &te, labels: &te_y },
        &cfg.svm,
        &mut r,
    )
}

/// Self-supervised training of the encoder on the training split.
///
/// `drop` gives per-anchor drop probabilities; when absent they are
/// computed with [`drop_probabilities`].
pub fn train_contrastive(
    cfg: &ExperimentConfig,
    variant: VariantTag,
    env: &Environment,
    data: &SplitData,
    drop: Option<&[Vec<f64>]>,
) -> Result<TrainOutcome> {
    if variant.is_supervised() {
        return Err(Error::InvalidConfig(
            "supervised variant has no contrastive objective".into(),
        ));
    }
    let started = Instant::now();
    let train = data.view(Split::Train);
    train.require(Split::Train)?;
    if train.len() < 2 {
        return Err(Error::BatchTooSmall(train.len()));
    }
    let owned;
    let drop = match drop {
        Some(d) => d,
        None => {
            owned = drop_probabilities(cfg, variant, env, &train)?;
            &owned
        }
    };
    if drop.len() != train.len() {
        return Err(crate::error::dim_mismatch("one drop vector per training flow"));
    }
    let cache = if variant.weighted_loss() {
        let emb = train
            .flows
            .iter()
            .map(|f| hodge_project(&f.flow, &env.context.basis))
            .collect::<Result<Vec<_>>>()?;
        Some(SimilarityCache::new(&emb, cfg.gammas))
    } else {
        None
    };

    let mut params = init_parameters(
        &mut split_stream(data, "init"),
        &cfg.encoder.shape(cfg.encoder.embed_dim),
    )?;
    params.activation = cfg.encoder.activation;
    if variant.lower_only() {
        params = make_lower_only(&params);
    }
    let opt = cfg.optimizer(variant);
    let has_val = data.dataset.count(Split::Val) > 0;

    let mut order_rng = split_stream(data, "batch");
    let mut mask_rng = split_stream(data, "mask");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut validation = Vec::new();
    let mut best: Option<(f64, usize, ScnnParameters)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        let groups = batches(&order, cfg.batch_size);
        for group in &groups {
            let items: Vec<BatchItem<'_>> = group
                .iter()
                .map(|&i| BatchItem {
                    index: i,
                    flow: &train.flows[i].flow,
                    drop: &drop[i],
                })
                .collect();
            let (batch, tapes) = build_batch(&items, &params, &env.operators, &mut mask_rng)?;
            let weights = match &cache {
                Some(c) => Some(c.batch_weights(&batch)?.weights),
                None => None,
            };
            let out =
                contrastive_loss(&batch, cfg.tau, weights.as_deref(), cfg.include_positive).map_err(|e| match e {
                    Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { epoch },
                    other => other,
                })?;
            let scale = 1.0 / batch.num_pairs() as f64;
            let mut grad = params.zeros_like();
            for (tape, g) in tapes.iter().zip(&out.grads) {
                let dz: Vec<f64> = g.iter().map(|v| v * scale).collect();
                scnn_backward_acc(&params, &env.operators, tape, &dz, &mut grad)?;
            }
            // a shared offset makes every cosine approach one; keep it at zero
            grad.bias.iter_mut().for_each(|b| *b = 0.0);
            params.sgd_step(&grad, opt.learning_rate, opt.weight_decay)?;
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            total += out.loss * scale;
        }
        let mean = total / groups.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);

        let due = cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs);
        if has_val && due {
            let mut r = rng::stream(data.seed, &[rng::tag("svm-val"), epoch as u64]);
            let acc = validation_accuracy(cfg, env, &params, data, &mut r)?;
            validation.push(ValidationPoint {
                epoch: epoch + 1,
                accuracy: acc,
            });
            // ties go to the later checkpoint
            if best.as_ref().is_none_or(|b| acc >= b.0) {
                best = Some((acc, epoch + 1, params.clone()));
            }
        }
    }
    let (best_epoch, best_params) = match best {
        Some((_, e, p)) => (Some(e), p),
        None => (None, params.clone()),
    };
    Ok(TrainOutcome {
        final_params: params,
        best_params,
        log: TrainLog {
            variant,
            split_id: data.split_id,
            epoch_losses,
            validation,
            best_epoch,
            wall_clock_secs: started.elapsed().as_secs_f64(),
            config_hash: cfg.hash(),
            checkpoint: None,
        },
    })
}

fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let shift = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|v| (v - shift).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() + shift - logits[label];
    let grad = exps
        .iter()
        .enumerate()
        .map(|(k, e)| e / total - if k == label { 1.0 } else { 0.0 })
        .collect();
    (loss, grad)
}

fn argmax(v: &[f64]) -> usize {
    (1..v.len()).fold(0, |best, k| if v[k] > v[best] { k } else { best })
}

/// Classification accuracy of the encoder's head logits on a split.
pub fn classifier_accuracy(params: &ScnnParameters, env: &Environment, view: &SplitView<'_>) -> Result<f64> {
    if view.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for f in &view.flows {
        let (_, z) = scnn_forward(params, &env.operators, &f.flow)?;
        hits += usize::from(argmax(&z) == f.label);
    }
    Ok(hits as f64 / view.len() as f64)
}

/// Supervised baseline: the same encoder with a two-logit head trained on
/// softmax cross-entropy.
pub fn train_supervised(cfg: &ExperimentConfig, env: &Environment, data: &SplitData) -> Result<TrainOutcome> {
    let variant = VariantTag::ScnnSupervised;
    let started = Instant::now();
    let train = data.view(Split::Train);
    train.require(Split::Train)?;
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training split".into()));
    }
    let mut params = init_parameters(&mut split_stream(data, "init"), &cfg.encoder.shape(2))?;
    params.activation = cfg.encoder.activation;
    let opt = cfg.optimizer(variant);
    let val = data.view(Split::Val);
    val.require(Split::Val)?;

    let mut order_rng = split_stream(data, "batch");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut validation = Vec::new();
    let mut best: Option<(f64, usize, ScnnParameters)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for group in order.chunks(cfg.batch_size.max(1)) {
            let scale = 1.0 / group.len() as f64;
            let mut grad = params.zeros_like();
            for &i in group {
                let f = train.flows[i];
                let (tape, z) = scnn_forward(&params, &env.operators, &f.flow)?;
                let (loss, dz) = softmax_cross_entropy(&z, f.label);
                let dz: Vec<f64> = dz.iter().map(|v| v * scale).collect();
                scnn_backward_acc(&params, &env.operators, &tape, &dz, &mut grad)?;
                total += loss;
            }
            params.sgd_step(&grad, opt.learning_rate, opt.weight_decay)?;
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
        }
        let mean = total / train.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);

        let due = cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs);
        if !val.is_empty() && due {
            let acc = classifier_accuracy(&params, env, &val)?;
            validation.push(ValidationPoint {
                epoch: epoch + 1,
                accuracy: acc,
            });
            if best.as_ref().is_none_or(|b| acc >= b.0) {
                best = Some((acc, epoch + 1, params.clone()));
            }
        }
    }
    let (best_epoch, best_params) = match best {
        Some((_, e, p)) => (Some(e), p),
        None => (None, params.clone()),
    };
    Ok(TrainOutcome {
        final_params: params,
        best_params,
        log: TrainLog {
            variant,
            split_id: data.split_id,
            epoch_losses,
            validation,
            best_epoch,
            wall_clock_secs: started.elapsed().as_secs_f64(),
            config_hash: cfg.hash(),
            checkpoint: None,
        },
    })
}
