//! InfoNCE and its variant with spectrally reweighted negatives.
//!
//! Each anchor contributes two views and two ordered positive pairs
//! (view 1 anchored, view 2 anchored). The negatives of an anchor are all
//! views of the other anchors in the batch. The denominator sums over
//! negatives only unless `include_positive` is set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::mask_flow;
use crate::error::{Error, Result};
use crate::hodge::{hodge_project, HodgeBasis, HodgeEmbedding};
use crate::linalg::{dot, norm};
use crate::scnn::{scnn_forward, EdgeOperators, ForwardTape, ScnnParameters};

const MIN_NORM: f64 = 1e-12;

/// `uᵀv / (||u|| ||v||)`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    let (nu, nv) = (norm(u), norm(v));
    if nu <= MIN_NORM || nv <= MIN_NORM {
        return Err(Error::DegenerateVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Similarity plus its gradients with respect to both arguments.
fn cosine_with_grad(u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (nu, nv) = (norm(u), norm(v));
    if nu <= MIN_NORM || nv <= MIN_NORM {
        return Err(Error::DegenerateVector);
    }
    let s = dot(u, v) / (nu * nv);
    let du = u
        .iter()
        .zip(v)
        .map(|(ui, vi)| vi / (nu * nv) - s * ui / (nu * nu))
        .collect();
    let dv = u
        .iter()
        .zip(v)
        .map(|(ui, vi)| ui / (nu * nv) - s * vi / (nv * nv))
        .collect();
    Ok((s, du, dv))
}

/// Two augmented views per anchor and their encoder outputs.
#[derive(Clone, Debug)]
pub struct ContrastiveBatch {
    /// Dataset index of each anchor.
    pub anchors: Vec<usize>,
    pub views: Vec<[Vec<f64>; 2]>,
    /// Representation of view `v` of anchor `i` is at `2 * i + v`.
    pub representations: Vec<Vec<f64>>,
    /// Indices into `representations`, per anchor.
    pub negatives: Vec<Vec<usize>>,
}

impl ContrastiveBatch {
    /// Builds the batch structure around precomputed representations.
    pub fn from_representations(anchors: Vec<usize>, representations: Vec<Vec<f64>>) -> Result<Self> {
        let b = anchors.len();
        if b < 2 {
            return Err(Error::BatchTooSmall(b));
        }
        if representations.len() != 2 * b {
            return Err(Error::DimensionMismatch(format!(
                "{} representations for {b} anchors",
                representations.len()
            )));
        }
        let d = representations[0].len();
        if representations.iter().any(|z| z.len() != d) {
            return Err(Error::DimensionMismatch("representations differ in length".into()));
        }
        let negatives = (0..b).map(|i| (0..2 * b).filter(|&r| r / 2 != i).collect()).collect();
        Ok(Self {
            anchors,
            views: Vec::new(),
            representations,
            negatives,
        })
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.len()
    }

    /// Ordered positive pairs `(anchor view, positive view, anchor)`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.num_anchors()).flat_map(|i| [(2 * i, 2 * i + 1, i), (2 * i + 1, 2 * i, i)])
    }

    pub fn num_pairs(&self) -> usize {
        2 * self.num_anchors()
    }
}

/// One anchor fed to [`build_batch`].
#[derive(Clone, Copy, Debug)]
pub struct BatchItem<'a> {
    pub index: usize,
    pub flow: &'a [f64],
    /// Drop probabilities used for both views.
    pub drop: &'a [f64],
}

/// Redraws of a view before the unmasked flow is used instead.
pub const MAX_VIEW_REDRAWS: usize = 100;

/// Masks `item` and encodes the view, redrawing while the representation
/// has zero norm (an all-zero view, or features that cancel under the odd
/// activation and mean pooling). Such a view has no defined cosine
/// similarity. After [`MAX_VIEW_REDRAWS`] attempts the unmasked flow is
/// encoded; if that is degenerate too the loss reports it.
fn draw_view<R: Rng + ?Sized>(
    item: &BatchItem<'_>,
    params: &ScnnParameters,
    ops: &EdgeOperators,
    rng: &mut R,
) -> Result<(Vec<f64>, ForwardTape, Vec<f64>)> {
    for _ in 0..MAX_VIEW_REDRAWS {
        let v = mask_flow(item.flow, item.drop, rng)?;
        let (tape, z) = scnn_forward(params, ops, &v)?;
        if norm(&z) > MIN_NORM {
            return Ok((v, tape, z));
        }
    }
    let (tape, z) = scnn_forward(params, ops, item.flow)?;
    Ok((item.flow.to_vec(), tape, z))
}

/// Draws two masked views per anchor and encodes each once.
///
/// Returns the batch and one forward tape per representation.
pub fn build_batch<R: Rng + ?Sized>(
    items: &[BatchItem<'_>],
    params: &ScnnParameters,
    ops: &EdgeOperators,
    rng: &mut R,
) -> Result<(ContrastiveBatch, Vec<ForwardTape>)> {
    if items.len() < 2 {
        return Err(Error::BatchTooSmall(items.len()));
    }
    let mut views = Vec::with_capacity(items.len());
    let mut reps = Vec::with_capacity(2 * items.len());
    let mut tapes = Vec::with_capacity(2 * items.len());
    for item in items {
        let (v1, t1, z1) = draw_view(item, params, ops, rng)?;
        let (v2, t2, z2) = draw_view(item, params, ops, rng)?;
        reps.extend([z1, z2]);
        tapes.extend([t1, t2]);
        views.push([v1, v2]);
    }
    let mut batch = ContrastiveBatch::from_representations(items.iter().map(|i| i.index).collect(), reps)?;
    batch.views = views;
    Ok((batch, tapes))
}

/// Loss value and its gradient with respect to every representation.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Vec<Vec<f64>>,
}

/// Plain InfoNCE as a sum over positive pairs.
pub fn infonce_loss(batch: &ContrastiveBatch, tau: f64) -> Result<LossOutput> {
    contrastive_loss(batch, tau, None, false)
}

/// InfoNCE with each negative's denominator term scaled by a fixed weight.
pub fn weighted_infonce_loss(batch: &ContrastiveBatch, tau: f64, weights: &SpectralWeights) -> Result<LossOutput> {
    contrastive_loss(batch, tau, Some(&weights.weights), false)
}

/// Shared implementation; `weights[i][k]` scales negative `batch.negatives[i][k]`.
pub fn contrastive_loss(
    batch: &ContrastiveBatch,
    tau: f64,
    weights: Option<&[Vec<f64>]>,
    include_positive: bool,
) -> Result<LossOutput> {
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("temperature {tau} must be positive")));
    }
    if let Some(w) = weights {
        if w.len() != batch.num_anchors() || w.iter().zip(&batch.negatives).any(|(wi, ni)| wi.len() != ni.len()) {
            return Err(Error::WeightDimensionMismatch(format!(
                "weights {:?} for negatives {:?}",
                w.iter().map(Vec::len).collect::<Vec<_>>(),
                batch.negatives.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
    }
    let z = &batch.representations;
    let mut grads: Vec<Vec<f64>> = z.iter().map(|zi| vec![0.0; zi.len()]).collect();
    let mut loss = 0.0;

    for (a, p, i) in batch.pairs() {
        let negs = &batch.negatives[i];
        if negs.is_empty() {
            return Err(Error::EmptyNegatives { anchor: i });
        }
        let (s_pos, da_pos, dp_pos) = cosine_with_grad(&z[a], &z[p])?;
        let mut terms = Vec::with_capacity(negs.len() + 1);
        for (k, &m) in negs.iter().enumerate() {
            let (s, da, dm) = cosine_with_grad(&z[a], &z[m])?;
            let w = weights.map_or(1.0, |w| w[i][k]);
            terms.push((s / tau, w, Some((m, da, dm))));
        }
        if include_positive {
            terms.push((s_pos / tau, 1.0, None));
        }
        let shift = terms.iter().fold(f64::NEG_INFINITY, |m, t| m.max(t.0));
        let denom: f64 = terms.iter().map(|(s, w, _)| w * (s - shift).exp()).sum();
        loss += -s_pos / tau + shift + denom.ln();

        // d(loss)/d(s_k) = w_k e^{s_k} / D for every denominator term
        let mut coef_pos = -1.0 / tau;
        for (s, w, extra) in &terms {
            let c = w * (s - shift).exp() / denom / tau;
            match extra {
                Some((m, da, dm)) => {
                    axpy(&mut grads[a], c, da);
                    axpy(&mut grads[*m], c, dm);
                }
                None => coef_pos += c,
            }
        }
        axpy(&mut grads[a], coef_pos, &da_pos);
        axpy(&mut grads[p], coef_pos, &dp_pos);
    }
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: 0 });
    }
    Ok(LossOutput { loss, grads })
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Nonnegative weights of the per-block cosine distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGammas {
    pub h: f64,
    pub g: f64,
    pub c: f64,
}

impl Default for SpectralGammas {
    fn default() -> Self {
        Self { h: 1.0, g: 1.0, c: 1.0 }
    }
}

/// Normalized negative weights for a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralWeights {
    pub gammas: SpectralGammas,
    /// `weights[i][k]` belongs to `batch.negatives[i][k]`; each row sums to one.
    pub weights: Vec<Vec<f64>>,
}

/// `1 - cos(a, b)`, or 1 when either vector is (numerically) zero.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    cosine_similarity(a, b).map_or(1.0, |s| 1.0 - s)
}

/// Weighted sum of per-block cosine distances between two embeddings.
pub fn embedding_similarity(a: &HodgeEmbedding, b: &HodgeEmbedding, gammas: &SpectralGammas) -> f64 {
    let mut s = 0.0;
    for (gamma, x, y) in [
        (gammas.h, &a.tilde_h, &b.tilde_h),
        (gammas.g, &a.tilde_g, &b.tilde_g),
        (gammas.c, &a.tilde_c, &b.tilde_c),
    ] {
        if gamma != 0.0 {
            s += gamma * cosine_distance(x, y);
        }
    }
    s
}

/// Spectral dissimilarity score of two flows.
///
/// A block whose embedding vanishes on either side contributes a neutral
/// distance of 1.
pub fn spectral_similarity(xi: &[f64], xm: &[f64], basis: &HodgeBasis, gammas: &SpectralGammas) -> Result<f64> {
    let a = hodge_project(xi, basis)?;
    let b = hodge_project(xm, basis)?;
    Ok(embedding_similarity(&a, &b, gammas))
}

/// Like [`spectral_similarity`] but fails on a zero block with positive weight.
pub fn spectral_similarity_strict(xi: &[f64], xm: &[f64], basis: &HodgeBasis, gammas: &SpectralGammas) -> Result<f64> {
    let a = hodge_project(xi, basis)?;
    let b = hodge_project(xm, basis)?;
    for (gamma, name, x, y) in [
        (gammas.h, "harmonic", &a.tilde_h, &b.tilde_h),
        (gammas.g, "gradient", &a.tilde_g, &b.tilde_g),
        (gammas.c, "curl", &a.tilde_c, &b.tilde_c),
    ] {
        if gamma > 0.0 && (norm(x) <= MIN_NORM || norm(y) <= MIN_NORM) {
            return Err(Error::DegenerateComponent { component: name });
        }
    }
    Ok(embedding_similarity(&a, &b, gammas))
}

/// `w_m = S_m / Σ S`.
pub fn normalize_weights(scores: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = scores.iter().sum();
    if !(total > MIN_NORM) {
        return Err(Error::AllZeroScores);
    }
    Ok(scores.iter().map(|s| s / total).collect())
}

/// Pairwise spectral scores over a fixed set of flows; they do not depend on
/// the encoder, so they are computed once and reused every epoch.
#[derive(Clone, Debug)]
pub struct SimilarityCache {
    n: usize,
    scores: Vec<f64>,
    pub gammas: SpectralGammas,
}

impl SimilarityCache {
    pub fn new(embeddings: &[HodgeEmbedding], gammas: SpectralGammas) -> Self {
        let n = embeddings.len();
        let mut scores = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let s = embedding_similarity(&embeddings[i], &embeddings[j], &gammas);
                scores[i * n + j] = s;
                scores[j * n + i] = s;
            }
        }
        Self { n, scores, gammas }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn score(&self, i: usize, m: usize) -> f64 {
        self.scores[i * self.n + m]
    }

    /// Normalized weights for every anchor's negatives in `batch`; dataset
    /// indices of the batch index into this cache.
    pub fn batch_weights(&self, batch: &ContrastiveBatch) -> Result<SpectralWeights> {
        let weights = batch
            .negatives
            .iter()
            .enumerate()
            .map(|(i, negs)| {
                let a = batch.anchors[i];
                let scores: Vec<f64> = negs.iter().map(|&r| self.score(a, batch.anchors[r / 2])).collect();
                normalize_weights(&scores)
            })
            .collect::<Result<_>>()?;
        Ok(SpectralWeights {
            gammas: self.gammas,
            weights,
        })
    }
}
