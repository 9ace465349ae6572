use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::SpectralGapObjective;
use crate::contrastive::SpectralGammas;
use crate::datasets::TriangularGridSpec;
use crate::downstream::{SvmConfig, VariantTag};
use crate::error::{Error, Result};
use crate::scnn::{Activation, EncoderShape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub map: TriangularGridSpec,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            map: TriangularGridSpec::desk_default(),
            n_train: 200,
            n_val: 100,
            n_test: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Channels of each filter layer.
    pub hidden: Vec<usize>,
    /// Polynomial order of both the lower and the upper filter part.
    pub order: usize,
    /// Output size of the projection head used by the contrastive loss.
    pub embed_dim: usize,
    pub activation: Activation,
    /// Divide both Laplacians by their largest eigenvalue before filtering.
    pub normalize_operators: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            order: 2,
            embed_dim: 32,
            activation: Activation::Tanh,
            normalize_operators: true,
        }
    }
}

impl EncoderConfig {
    pub fn shape(&self, embed_dim: usize) -> EncoderShape {
        EncoderShape {
            hidden: self.hidden.clone(),
            order_low: self.order,
            order_up: self.order,
            embed_dim,
        }
    }
}

/// How `epsilon` maps to an ℓ1 budget on `N` edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    /// Budget `epsilon · N`; the uniform baseline drops each edge with `epsilon`.
    #[default]
    Fraction,
    /// Budget `epsilon`; the uniform baseline drops each edge with `epsilon / N`.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub epsilon: f64,
    pub budget_mode: BudgetMode,
    pub objective: SpectralGapObjective,
    pub step: f64,
    pub iters: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            budget_mode: BudgetMode::Fraction,
            objective: SpectralGapObjective::default(),
            step: 0.05,
            iters: 100,
        }
    }
}

impl AugmentationConfig {
    pub fn budget(&self, num_edges: usize) -> f64 {
        match self.budget_mode {
            BudgetMode::Fraction => self.epsilon * num_edges as f64,
            BudgetMode::Absolute => self.epsilon,
        }
    }

    pub fn uniform_probability(&self, num_edges: usize) -> f64 {
        (self.budget(num_edges) / num_edges as f64).min(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    pub weight_decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridAxes {
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
}

impl Default for GridAxes {
    /// Powers of ten from 1e-5 to 1 on both axes.
    fn default() -> Self {
        let decades: Vec<f64> = (0..6).map(|k| 10f64.powi(k - 5)).collect();
        Self {
            learning_rates: decades.clone(),
            weight_decays: decades,
        }
    }
}

/// Everything a training or evaluation run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub encoder: EncoderConfig,
    pub tau: f64,
    pub gammas: SpectralGammas,
    pub augmentation: AugmentationConfig,
    /// Add the positive pair to the InfoNCE denominator.
    pub include_positive: bool,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Learning rate and weight decay per variant, overriding the two above.
    pub per_variant: BTreeMap<VariantTag, OptimizerSettings>,
    pub epochs: usize,
    pub batch_size: usize,
    /// Validation accuracy is checked every this many epochs (0 disables).
    pub eval_every: usize,
    pub seed: u64,
    pub num_splits: usize,
    pub svm: SvmConfig,
    pub grid: GridAxes,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            encoder: EncoderConfig::default(),
            tau: 0.5,
            gammas: SpectralGammas::default(),
            augmentation: AugmentationConfig::default(),
            include_positive: false,
            learning_rate: 0.1,
            weight_decay: 1e-4,
            per_variant: BTreeMap::new(),
            epochs: 200,
            batch_size: 100,
            eval_every: 20,
            seed: 0,
            num_splits: 16,
            svm: SvmConfig::default(),
            grid: GridAxes::default(),
        }
    }
}

fn in_grid_range(v: f64) -> bool {
    (1e-5..=1.0).contains(&v)
}

impl ExperimentConfig {
    /// Smaller single-core profile: three 16-channel layers, 40 epochs,
    /// batches of 10. The defaults keep two 32-channel layers and 200 epochs.
    pub fn desk() -> Self {
        Self {
            encoder: EncoderConfig {
                hidden: vec![16, 16, 16],
                embed_dim: 16,
                ..EncoderConfig::default()
            },
            learning_rate: 1.0,
            epochs: 40,
            batch_size: 10,
            ..Self::default()
        }
    }

    /// Learning rate and weight decay used for `variant`.
    pub fn optimizer(&self, variant: VariantTag) -> OptimizerSettings {
        self.per_variant.get(&variant).copied().unwrap_or(OptimizerSettings {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let mut opts: Vec<OptimizerSettings> = self.per_variant.values().copied().collect();
        opts.push(OptimizerSettings {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
        });
        for o in opts {
            if !in_grid_range(o.learning_rate) || !in_grid_range(o.weight_decay) {
                return bad(format!(
                    "learning rate {} and weight decay {} must lie in [1e-5, 1]",
                    o.learning_rate, o.weight_decay
                ));
            }
        }
        if self.epochs == 0 || self.batch_size < 2 || self.num_splits == 0 {
            return bad("epochs and split count must be positive, batch size at least 2".into());
        }
        if !(self.tau > 0.0) {
            return bad(format!("temperature {} must be positive", self.tau));
        }
        if !(self.augmentation.epsilon > 0.0) {
            return bad(format!("budget {} must be positive", self.augmentation.epsilon));
        }
        if self.augmentation.budget_mode == BudgetMode::Fraction && self.augmentation.epsilon > 1.0 {
            return bad(format!("budget fraction {} exceeds 1", self.augmentation.epsilon));
        }
        if self.encoder.hidden.is_empty() || self.encoder.hidden.contains(&0) || self.encoder.embed_dim == 0 {
            return bad("encoder needs at least one layer and positive widths".into());
        }
        let g = &self.gammas;
        if [g.h, g.g, g.c].iter().any(|&v| !(v >= 0.0)) {
            return bad("spectral weights must be nonnegative".into());
        }
        let ax = &self.grid;
        if ax
            .learning_rates
            .iter()
            .chain(&ax.weight_decays)
            .any(|&v| !in_grid_range(v))
        {
            return bad("grid values must lie in [1e-5, 1]".into());
        }
        if self.svm.c_grid.is_empty() || self.svm.c_grid.iter().any(|&c| !(c > 0.0)) {
            return bad("penalty grid must be non-empty and positive".into());
        }
        Ok(())
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn from_str_auto(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_str_auto(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Stable hex digest of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", crate::rng::tag(&json))
    }
}
