//! `hodgecl` command line: data generation, augmentation optimization,
//! training, grid search, evaluation and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hodgecl::augment::{optimize_probabilities, read_probability_cache, write_probability_cache, ProbabilityRecord};
use hodgecl::datasets::{load_external_flows, save_dataset, Split};
use hodgecl::downstream::{per_split_csv, summary_csv, VariantTag};
use hodgecl::harness::{
    drop_probabilities, emit_embedding_gap_study, evaluate_params, generate_splits, grid_search, matched_uniform,
    run_variant_matrix, train_variant, Environment, ExperimentConfig, SplitData, TrainOutcome,
};
use hodgecl::hodge::{Component, HodgeContext};
use hodgecl::scnn::Checkpoint;
use hodgecl::{Error, Result};

#[derive(Parser)]
#[command(name = "hodgecl", version, about = "Self-supervised edge-flow encoders on simplicial complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// Two 32-channel layers, 200 epochs.
    Default,
    /// Three 16-channel layers, 40 epochs, batches of 10.
    Desk,
}

#[derive(Args, Clone, Debug)]
struct ConfigArgs {
    /// TOML or JSON experiment configuration; overrides the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "default")]
    profile: Profile,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Drop budget as a fraction of the edge count.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    num_splits: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.profile) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Profile::Default) => ExperimentConfig::default(),
            (None, Profile::Desk) => ExperimentConfig::desk(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.epsilon {
            cfg.augmentation.epsilon = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.num_splits {
            cfg.num_splits = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Where the flows of one split come from.
#[derive(Args, Clone, Debug)]
struct DataArgs {
    /// Split index; its data is generated from the master seed.
    #[arg(long, default_value_t = 0)]
    split: usize,
    /// Dataset file (JSON lines) used instead of generated data.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate trajectory datasets, one file per split.
    GenData {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize per-flow drop probabilities for the training split.
    OptimizeAug {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one variant; writes checkpoints and the training log.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        variant: VariantTag,
        /// Cached drop probabilities from `optimize-aug`.
        #[arg(long)]
        probabilities: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search over learning rate and weight decay on the validation split.
    GridSearch {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        variant: VariantTag,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test accuracy of a checkpoint.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        variant: VariantTag,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train and evaluate variants on every split; writes the CSV reports.
    Report {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma separated variants; all six by default.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<VariantTag>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embedding distances under uniform and optimized masking.
    FigGap {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: impl AsRef<Path>, text: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn load_split(cfg: &ExperimentConfig, args: &DataArgs) -> Result<(Environment, SplitData)> {
    match &args.data {
        Some(path) => {
            let ds = load_external_flows(path)?;
            let ctx = HodgeContext::new(ds.complex.clone())?;
            let env = Environment::new(ctx, cfg.encoder.normalize_operators);
            let seed = SplitData::seed_for(cfg, args.split);
            Ok((env, SplitData::from_dataset(ds, args.split, seed)))
        }
        None => Ok((Environment::from_config(cfg)?, SplitData::generate(cfg, args.split)?)),
    }
}

fn read_probabilities(path: &Path, expected: usize) -> Result<Vec<Vec<f64>>> {
    let mut records = read_probability_cache(&fs::read_to_string(path)?)?;
    records.sort_by_key(|r| r.index);
    if records.len() != expected || records.iter().enumerate().any(|(i, r)| r.index != i) {
        return Err(Error::DimensionMismatch(format!(
            "{} cached probability vectors for {expected} training flows",
            records.len()
        )));
    }
    Ok(records.into_iter().map(|r| r.p).collect())
}

fn save_outcome(out: &Path, outcome: &mut TrainOutcome) -> Result<()> {
    let final_path = out.join("final.json");
    write(&final_path, Checkpoint::new(outcome.final_params.clone()).to_json())?;
    write(
        out.join("best.json"),
        Checkpoint::new(outcome.best_params.clone()).to_json(),
    )?;
    outcome.log.checkpoint = Some(final_path.display().to_string());
    write(out.join("train_log.json"), serde_json::to_string_pretty(&outcome.log)?)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::GenData { cfg, out } => {
            let cfg = cfg.resolve()?;
            let splits = generate_splits(&cfg)?;
            fs::create_dir_all(&out)?;
            let mut files = Vec::new();
            for s in &splits {
                let path = out.join(format!("split-{}.jsonl", s.split_id));
                save_dataset(&s.dataset, &path)?;
                files.push(path.display().to_string());
            }
            write(out.join("config.toml"), cfg.to_toml())?;
            Ok(json!({ "files": files }))
        }
        Command::OptimizeAug { cfg, data, out } => {
            let cfg = cfg.resolve()?;
            let (env, split) = load_split(&cfg, &data)?;
            let train = split.view(Split::Train);
            train.require(Split::Train)?;
            let aug = &cfg.augmentation;
            let budget = aug.budget(env.num_edges());
            let records = train
                .flows
                .iter()
                .enumerate()
                .map(|(index, f)| {
                    let r = optimize_probabilities(
                        &f.flow,
                        &env.context.basis,
                        &aug.objective,
                        budget,
                        aug.step,
                        aug.iters,
                    )?;
                    Ok(ProbabilityRecord {
                        index,
                        p: r.probabilities.p,
                        objective: r.objective,
                        budget,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write(&out, write_probability_cache(&records))?;
            Ok(json!({ "flows": records.len(), "budget": budget, "out": out }))
        }
        Command::Train {
            cfg,
            data,
            variant,
            probabilities,
            out,
        } => {
            let cfg = cfg.resolve()?;
            let (env, split) = load_split(&cfg, &data)?;
            let drop = match &probabilities {
                Some(path) if variant.spectral_augmentation() => {
                    Some(read_probabilities(path, split.dataset.count(Split::Train))?)
                }
                _ => None,
            };
            let mut outcome = train_variant(&cfg, variant, &env, &split, drop.as_deref())?;
            save_outcome(&out, &mut outcome)?;
            Ok(json!({
                "variant": variant,
                "final_loss": outcome.log.epoch_losses.last(),
                "best_epoch": outcome.log.best_epoch,
                "out": out,
            }))
        }
        Command::GridSearch {
            cfg,
            data,
            variant,
            out,
        } => {
            let cfg = cfg.resolve()?;
            let (env, split) = load_split(&cfg, &data)?;
            let result = grid_search(&cfg, variant, &env, &split, &cfg.grid)?;
            write(&out, serde_json::to_string_pretty(&result)?)?;
            Ok(json!({ "variant": variant, "best": result.best, "cells": result.rows.len() }))
        }
        Command::Evaluate {
            cfg,
            data,
            variant,
            checkpoint,
        } => {
            let cfg = cfg.resolve()?;
            let (env, split) = load_split(&cfg, &data)?;
            let params = Checkpoint::from_json(&fs::read_to_string(&checkpoint)?)?.params;
            let accuracy = evaluate_params(&cfg, variant, &env, &split, &params)?;
            Ok(json!({ "variant": variant, "split": split.split_id, "accuracy": accuracy }))
        }
        Command::Report { cfg, variants, out } => {
            let cfg = cfg.resolve()?;
            let variants = if variants.is_empty() {
                VariantTag::ALL.to_vec()
            } else {
                variants
            };
            let env = Environment::from_config(&cfg)?;
            let splits = generate_splits(&cfg)?;
            let result = run_variant_matrix(&cfg, &env, &splits, &variants)?;
            fs::create_dir_all(&out)?;
            write(out.join("per_split.csv"), per_split_csv(&result.reports, "trajectory"))?;
            write(out.join("summary.csv"), summary_csv(&result.reports))?;
            let logs: Vec<_> = result.runs.iter().map(|r| &r.log).collect();
            write(out.join("train_logs.json"), serde_json::to_string_pretty(&logs)?)?;
            let rows: Vec<_> = result
                .reports
                .iter()
                .map(|r| json!({ "variant": r.variant, "mean": r.mean, "stderr": r.stderr }))
                .collect();
            Ok(json!({ "reports": rows, "out": out }))
        }
        Command::FigGap {
            cfg,
            data,
            draws,
            bins,
            out,
        } => {
            let cfg = cfg.resolve()?;
            let (env, split) = load_split(&cfg, &data)?;
            let train = split.view(Split::Train);
            let spectral = drop_probabilities(&cfg, VariantTag::SsclSpec, &env, &train)?;
            let uniform: Vec<Vec<f64>> = spectral.iter().map(|p| matched_uniform(p)).collect();
            let flows: Vec<&[f64]> = train.flows.iter().map(|f| &f.flow[..]).collect();
            let mut rng = hodgecl::rng::stream(split.seed, &[hodgecl::rng::tag("fig-gap")]);
            let study = emit_embedding_gap_study(&flows, &env.context.basis, &uniform, &spectral, draws, &mut rng)?;
            fs::create_dir_all(&out)?;
            write(out.join("gap.csv"), study.to_csv())?;
            let mut means = serde_json::Map::new();
            for c in Component::ALL {
                write(out.join(format!("gap_{}.svg", c.name())), study.histogram_svg(c, bins))?;
                means.insert(
                    c.name().into(),
                    json!({
                        "uniform": study.mean(hodgecl::harness::Scheme::Uniform, c),
                        "spectral": study.mean(hodgecl::harness::Scheme::Spectral, c),
                    }),
                );
            }
            Ok(json!({ "draws": draws, "mean_distance": means, "out": out }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
