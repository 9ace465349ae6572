use crate::datasets::{build_two_hole_map, generate_dataset, Dataset, LabeledFlow, Split};
use crate::error::{Error, Result};
use crate::hodge::HodgeContext;
use crate::rng;
use crate::scnn::EdgeOperators;

use super::config::ExperimentConfig;

/// Complex-level quantities shared by every split and variant.
#[derive(Clone, Debug)]
pub struct Environment {
    pub context: HodgeContext,
    pub operators: EdgeOperators,
}

impl Environment {
    pub fn new(context: HodgeContext, normalize_operators: bool) -> Self {
        let operators = if normalize_operators {
            EdgeOperators::normalized(&context.laplacians, &context.basis)
        } else {
            EdgeOperators::from_laplacians(&context.laplacians)
        };
        Self { context, operators }
    }

    /// Builds the trajectory map of `cfg` and its Hodge quantities.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let map = build_two_hole_map(&cfg.dataset.map)?;
        Ok(Self::new(
            HodgeContext::new(map.complex)?,
            cfg.encoder.normalize_operators,
        ))
    }

    pub fn num_edges(&self) -> usize {
        self.context.num_edges()
    }
}

/// Flows of one split, carrying the tag they were requested under.
#[derive(Clone, Debug)]
pub struct SplitView<'a> {
    pub split: Split,
    pub flows: Vec<&'a LabeledFlow>,
}

impl<'a> SplitView<'a> {
    /// Fails unless this view and every flow in it belong to `expected`.
    pub fn require(&self, expected: Split) -> Result<()> {
        let leak = |found: Split| Error::SplitLeak {
            expected: expected.name(),
            found: found.name(),
        };
        if self.split != expected {
            return Err(leak(self.split));
        }
        match self.flows.iter().find(|f| f.split != expected) {
            Some(f) => Err(leak(f.split)),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.flows.iter().map(|f| f.label).collect()
    }
}

/// One data split (a full train/val/test draw) of the experiment.
#[derive(Clone, Debug)]
pub struct SplitData {
    pub split_id: usize,
    /// Seed all per-split random streams derive from.
    pub seed: u64,
    pub dataset: Dataset,
}

impl SplitData {
    pub fn seed_for(cfg: &ExperimentConfig, split_id: usize) -> u64 {
        rng::derive_seed(cfg.seed, &[rng::tag("split"), split_id as u64])
    }

    pub fn generate(cfg: &ExperimentConfig, split_id: usize) -> Result<Self> {
        let map = build_two_hole_map(&cfg.dataset.map)?;
        let seed = Self::seed_for(cfg, split_id);
        let d = &cfg.dataset;
        let dataset = generate_dataset(&map, d.n_train, d.n_val, d.n_test, seed)?;
        Ok(Self {
            split_id,
            seed,
            dataset,
        })
    }

    /// Wraps an existing dataset, e.g. one read from disk.
    pub fn from_dataset(dataset: Dataset, split_id: usize, seed: u64) -> Self {
        Self {
            split_id,
            seed,
            dataset,
        }
    }

    pub fn view(&self, split: Split) -> SplitView<'_> {
        SplitView {
            split,
            flows: self.dataset.split(split),
        }
    }
}
