//! Linear SVM on frozen embeddings, penalty selection and accuracy reports.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::dot;

/// The six model variants compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantTag {
    #[serde(rename = "SSCL_Spec")]
    SsclSpec,
    #[serde(rename = "SSCL")]
    Sscl,
    #[serde(rename = "SCL_Spec")]
    SclSpec,
    #[serde(rename = "SCL")]
    Scl,
    #[serde(rename = "SCL_low")]
    SclLow,
    #[serde(rename = "SCNN_supervised")]
    ScnnSupervised,
}

impl VariantTag {
    pub const ALL: [VariantTag; 6] = [
        VariantTag::SsclSpec,
        VariantTag::Sscl,
        VariantTag::SclSpec,
        VariantTag::Scl,
        VariantTag::SclLow,
        VariantTag::ScnnSupervised,
    ];

    /// Name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            VariantTag::SsclSpec => "SSCL_Spec",
            VariantTag::Sscl => "SSCL",
            VariantTag::SclSpec => "SCL_Spec",
            VariantTag::Scl => "SCL",
            VariantTag::SclLow => "SCL_low",
            VariantTag::ScnnSupervised => "SCNN_supervised",
        }
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            VariantTag::SsclSpec => "sscl-spec",
            VariantTag::Sscl => "sscl",
            VariantTag::SclSpec => "scl-spec",
            VariantTag::Scl => "scl",
            VariantTag::SclLow => "scl-low",
            VariantTag::ScnnSupervised => "supervised",
        }
    }

    pub fn is_supervised(self) -> bool {
        self == VariantTag::ScnnSupervised
    }

    /// Uses the spectrally reweighted negatives.
    pub fn weighted_loss(self) -> bool {
        matches!(self, VariantTag::SsclSpec | VariantTag::Sscl)
    }

    /// Uses optimized rather than uniform drop probabilities.
    pub fn spectral_augmentation(self) -> bool {
        matches!(self, VariantTag::SsclSpec | VariantTag::SclSpec)
    }

    pub fn lower_only(self) -> bool {
        self == VariantTag::SclLow
    }
}

impl FromStr for VariantTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VariantTag::ALL
            .into_iter()
            .find(|v| v.cli_name() == s || v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl LinearSvmModel {
    pub fn decision(&self, z: &[f64]) -> f64 {
        dot(&self.weights, z) + self.bias
    }

    pub fn predict(&self, z: &[f64]) -> usize {
        usize::from(self.decision(z) > 0.0)
    }

    pub fn accuracy(&self, z: &[Vec<f64>], labels: &[usize]) -> f64 {
        if z.is_empty() {
            return 0.0;
        }
        let hits = z.iter().zip(labels).filter(|(zi, &y)| self.predict(zi) == y).count();
        hits as f64 / z.len() as f64
    }

    /// `(1/n) Σ hinge + (1/(2Cn)) ‖w‖²`.
    pub fn objective(&self, z: &[Vec<f64>], labels: &[usize]) -> f64 {
        svm_objective(&self.weights, self.bias, self.c, z, labels)
    }
}

fn sign(label: usize) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

fn svm_objective(w: &[f64], b: f64, c: f64, z: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = z.len() as f64;
    let hinge: f64 = z
        .iter()
        .zip(labels)
        .map(|(zi, &y)| (1.0 - sign(y) * (dot(w, zi) + b)).max(0.0))
        .sum();
    hinge / n + dot(w, w) / (2.0 * c * n)
}

/// Settings of the SVM solver and penalty search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c_grid: Vec<f64>,
    pub epochs: usize,
    pub folds: usize,
    /// Standardize embeddings with training-split statistics before fitting.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            epochs: 60,
            folds: 10,
            standardize: true,
        }
    }
}

fn check_training_set(z: &[Vec<f64>], labels: &[usize]) -> Result<usize> {
    if z.len() != labels.len() {
        return Err(dim_mismatch(format!("{} embeddings, {} labels", z.len(), labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::UnknownLabel(bad as i64));
    }
    let dim = z.first().map_or(0, Vec::len);
    if z.iter().any(|zi| zi.len() != dim) {
        return Err(dim_mismatch("embeddings of unequal length"));
    }
    let ones = labels.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::SingleClassInput);
    }
    Ok(dim)
}

/// Pegasos-style primal subgradient descent.
///
/// The bias is learned as the weight of an extra constant feature whose
/// value is the largest embedding norm, so it shares the step schedule and
/// scales with the data. The returned model is the best, by objective, of
/// the zero model and the last and running-average iterates at the end of
/// every epoch.
pub fn fit_linear_svm<R: Rng + ?Sized>(
    z: &[Vec<f64>],
    labels: &[usize],
    c: f64,
    epochs: usize,
    rng: &mut R,
) -> Result<LinearSvmModel> {
    let dim = check_training_set(z, labels)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("penalty C must be positive, got {c}")));
    }
    let n = z.len();
    let scale = z.iter().map(|zi| dot(zi, zi).sqrt()).fold(0.0, f64::max).max(1e-12);
    let lambda = 1.0 / (c * n as f64);

    // augmented weights: w[..dim] and w[dim] for the constant feature
    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let mut best = LinearSvmModel {
        weights: vec![0.0; dim],
        bias: 0.0,
        c,
    };
    let mut best_obj = best.objective(z, labels);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = sign(labels[i]);
            let margin = y * (dot(&w[..dim], &z[i]) + w[dim] * scale);
            let shrink = 1.0 - eta * lambda;
            for wk in w.iter_mut() {
                *wk *= shrink;
            }
            if margin < 1.0 {
                for (wk, zk) in w[..dim].iter_mut().zip(&z[i]) {
                    *wk += eta * y * zk;
                }
                w[dim] += eta * y * scale;
            }
            let k = 1.0 / t as f64;
            for (a, wk) in avg.iter_mut().zip(&w) {
                *a += (wk - *a) * k;
            }
        }
        for v in [&avg, &w] {
            let candidate = LinearSvmModel {
                weights: v[..dim].to_vec(),
                bias: v[dim] * scale,
                c,
            };
            let obj = candidate.objective(z, labels);
            if obj < best_obj {
                best_obj = obj;
                best = candidate;
            }
        }
    }
    Ok(best)
}

/// Stratified fold assignment: `fold[i]` for every sample.
pub fn fold_assignment<R: Rng + ?Sized>(labels: &[usize], folds: usize, rng: &mut R) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..2 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            fold[i] = next % folds;
            next += 1;
        }
    }
    fold
}

fn argmax_smallest_c(scores: &[(f64, f64)]) -> f64 {
    let mut best = scores[0];
    for &(c, acc) in &scores[1..] {
        if acc > best.1 || (acc == best.1 && c < best.0) {
            best = (c, acc);
        }
    }
    best.0
}

/// Penalty with the highest mean k-fold accuracy; ties go to the smaller C.
pub fn cross_validate_penalty<R: Rng + ?Sized>(
    z: &[Vec<f64>],
    labels: &[usize],
    c_grid: &[f64],
    folds: usize,
    epochs: usize,
    rng: &mut R,
) -> Result<f64> {
    if c_grid.is_empty() {
        return Err(Error::InvalidConfig("empty penalty grid".into()));
    }
    if folds < 2 || z.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} samples for {folds}-fold cross-validation",
            z.len()
        )));
    }
    check_training_set(z, labels)?;
    if c_grid.len() == 1 {
        return Ok(c_grid[0]);
    }
    let fold = fold_assignment(labels, folds, rng);
    let fit_seed: u64 = rng.gen();
    let mut scores = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let mut total = 0.0;
        for f in 0..folds {
            let (mut tr_z, mut tr_y, mut va_z, mut va_y) = (vec![], vec![], vec![], vec![]);
            for i in 0..z.len() {
                if fold[i] == f {
                    va_z.push(z[i].clone());
                    va_y.push(labels[i]);
                } else {
                    tr_z.push(z[i].clone());
                    tr_y.push(labels[i]);
                }
            }
            let mut r = crate::rng::stream(fit_seed, &[f as u64]);
            let model = fit_linear_svm(&tr_z, &tr_y, c, epochs, &mut r)?;
            total += model.accuracy(&va_z, &va_y);
        }
        scores.push((c, total / folds as f64));
    }
    Ok(argmax_smallest_c(&scores))
}

/// Penalty with the highest accuracy on a held-out validation set.
pub fn select_penalty_on_validation<R: Rng + ?Sized>(
    train: (&[Vec<f64>], &[usize]),
    val: (&[Vec<f64>], &[usize]),
    c_grid: &[f64],
    epochs: usize,
    rng: &mut R,
) -> Result<f64> {
    if c_grid.is_empty() {
        return Err(Error::InvalidConfig("empty penalty grid".into()));
    }
    let fit_seed: u64 = rng.gen();
    let mut scores = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let mut r = crate::rng::stream(fit_seed, &[]);
        let model = fit_linear_svm(train.0, train.1, c, epochs, &mut r)?;
        scores.push((c, model.accuracy(val.0, val.1)));
    }
    Ok(argmax_smallest_c(&scores))
}

/// Per-coordinate affine map fitted on one set and applied to others.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(z: &[Vec<f64>]) -> Self {
        let dim = z.first().map_or(0, Vec::len);
        let n = z.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for zi in z {
            for (m, v) in mean.iter_mut().zip(zi) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for zi in z {
            for ((s, v), m) in var.iter_mut().zip(zi).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let inv_std = var
            .iter()
            .map(|&v| if v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, inv_std }
    }

    pub fn apply(&self, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        z.iter()
            .map(|zi| {
                zi.iter()
                    .zip(&self.mean)
                    .zip(&self.inv_std)
                    .map(|((v, m), s)| (v - m) * s)
                    .collect()
            })
            .collect()
    }
}

/// Embeddings and labels of one split.
#[derive(Clone, Copy, Debug)]
pub struct LabeledEmbeddings<'a> {
    pub z: &'a [Vec<f64>],
    pub labels: &'a [usize],
}

/// Test accuracy of an SVM fitted on `train`, with C chosen on `val` when
/// given and by cross-validation on `train` otherwise.
pub fn downstream_accuracy<R: Rng + ?Sized>(
    train: LabeledEmbeddings<'_>,
    val: Option<LabeledEmbeddings<'_>>,
    test: LabeledEmbeddings<'_>,
    cfg: &SvmConfig,
    rng: &mut R,
) -> Result<f64> {
    let (tr, va, te) = if cfg.standardize {
        let s = Standardizer::fit(train.z);
        (s.apply(train.z), val.map(|v| s.apply(v.z)), s.apply(test.z))
    } else {
        (train.z.to_vec(), val.map(|v| v.z.to_vec()), test.z.to_vec())
    };
    let c = match (&va, val) {
        (Some(va), Some(v)) => {
            select_penalty_on_validation((&tr, train.labels), (va, v.labels), &cfg.c_grid, cfg.epochs, rng)?
        }
        _ => cross_validate_penalty(&tr, train.labels, &cfg.c_grid, cfg.folds, cfg.epochs, rng)?,
    };
    let model = fit_linear_svm(&tr, train.labels, c, cfg.epochs, rng)?;
    Ok(model.accuracy(&te, test.labels))
}

/// Accuracy of one variant across data splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub variant: VariantTag,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √n).
    pub stderr: f64,
}

impl EvaluationReport {
    pub fn from_accuracies(variant: VariantTag, accuracies: Vec<f64>) -> Self {
        let n = accuracies.len() as f64;
        let mean = if accuracies.is_empty() {
            0.0
        } else {
            accuracies.iter().sum::<f64>() / n
        };
        let stderr = if accuracies.len() < 2 {
            0.0
        } else {
            let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self {
            variant,
            accuracies,
            mean,
            stderr,
        }
    }
}

/// Evaluates a variant on every split via `accuracy_of(split_id)`.
pub fn evaluate_variant(
    variant: VariantTag,
    num_splits: usize,
    mut accuracy_of: impl FnMut(usize) -> Result<f64>,
) -> Result<EvaluationReport> {
    let accs = (0..num_splits).map(&mut accuracy_of).collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::from_accuracies(variant, accs))
}

/// `variant,dataset,split_id,accuracy` rows.
pub fn per_split_csv(reports: &[EvaluationReport], dataset: &str) -> String {
    let mut s = String::from("variant,dataset,split_id,accuracy\n");
    for r in reports {
        for (i, a) in r.accuracies.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{:.6}", r.variant.name(), dataset, i, a);
        }
    }
    s
}

/// `variant,mean,stderr` rows, in percent.
pub fn summary_csv(reports: &[EvaluationReport]) -> String {
    let mut s = String::from("variant,mean,stderr\n");
    for r in reports {
        let _ = writeln!(s, "{},{:.2},{:.2}", r.variant.name(), 100.0 * r.mean, 100.0 * r.stderr);
    }
    s
}
