//! Batch commands behind the `rulevae` binary.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 training
//! failure, 4 model/data mismatch, 5 report merge failure.

pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rulevae::clustering::{
    fuzzy_cmeans, harden, kmeans, refine, AssignmentFile, FcmConfig, KMeansConfig,
};
use rulevae::features::{generate_synthetic, load_dataset, save_dataset, SyntheticSpec};
use rulevae::metrics::{evaluate, merge_reports, RunMetadata};
use rulevae::model::{embed, load_checkpoint, save_checkpoint, train, write_history, write_latent};
use rulevae::{Dataset, Error, EvaluationReport, ModelConfig, RuleSet};

pub use config::{ClusteringConfig, Method, ModelSizes, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.dvae";
pub const HISTORY_FILE: &str = "history.csv";
pub const ASSIGNMENT_FILE: &str = "assignment.json";
pub const LATENT_FILE: &str = "latent.csv";
pub const REPORT_FILE: &str = "report.json";
pub const COMPARE_FILE: &str = "compare.csv";

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_MERGE: i32 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new(EXIT_CONFIG, message)
    }

    /// Default exit code for a library error.
    pub fn from_core(e: Error) -> Self {
        let code = match &e {
            Error::Training { .. } | Error::Numeric { .. } => EXIT_TRAINING,
            Error::Shape(_) | Error::Checkpoint(_) => EXIT_MISMATCH,
            Error::Merge(_) => EXIT_MERGE,
            _ => EXIT_CONFIG,
        };
        CliError::new(code, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::from_core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rulevae", version, about = "Rule-guided VAE clustering")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration or spec.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (manifest.json + records.jsonl).
    Generate {
        /// Synthetic dataset spec (JSON).
        spec: PathBuf,
    },
    /// Train a model; writes checkpoint.dvae and history.csv.
    Train,
    /// Embed, cluster and evaluate; writes assignment.json, latent.csv and report.json.
    Cluster {
        /// Defaults to checkpoint.dvae in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Tabulate report.json files into one CSV.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let load_config = |path: &Option<PathBuf>| -> CliResult<RunConfig> {
        let path = path
            .as_deref()
            .ok_or_else(|| CliError::config("this command needs --config"))?;
        Ok(RunConfig::load(path)?.with_seed(cli.seed))
    };
    match &cli.command {
        Command::Generate { spec } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            cmd_generate(spec, cli.seed, &out).map(drop)
        }
        Command::Train => {
            let config = load_config(&cli.config)?;
            cmd_train(&config, cli.out.as_deref())
        }
        Command::Cluster { checkpoint } => {
            let config = load_config(&cli.config)?;
            cmd_cluster(&config, checkpoint.as_deref(), cli.out.as_deref()).map(drop)
        }
        Command::Compare { reports } => {
            let csv = cmd_compare(reports, cli.out.as_deref())?;
            if cli.out.is_none() {
                print!("{csv}");
            }
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn output_dir(config: &RunConfig, out: Option<&Path>) -> CliResult<PathBuf> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .ok_or_else(|| CliError::config("no output directory: pass --out or set \"out\""))?;
    create_dir(&dir)?;
    Ok(dir)
}

fn load_inputs(config: &RunConfig) -> CliResult<(Dataset, RuleSet)> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset)?;
    let text = fs::read_to_string(&config.rules)
        .map_err(|e| CliError::config(format!("{}: {e}", config.rules.display())))?;
    let rules = RuleSet::parse(&text)?;
    Ok((dataset, rules))
}

/// Writes a synthetic dataset under `out` and returns the manifest path.
/// `seed` replaces the synthetic spec's seed; without it the file must carry one.
pub fn cmd_generate(spec_path: &Path, seed: Option<u64>, out: &Path) -> CliResult<PathBuf> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;
    if let (Some(s), Some(obj)) = (seed, value.as_object_mut()) {
        obj.insert("seed".into(), s.into());
    }
    let spec: SyntheticSpec = serde_json::from_value(value)
        .map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;
    let dataset = generate_synthetic(&spec)?;
    create_dir(out)?;
    let manifest = out.join(MANIFEST_FILE);
    save_dataset(&dataset, &manifest)?;
    Ok(manifest)
}

/// Model dimensions for a dataset/rule pair with the config's size overrides.
pub fn model_config(config: &RunConfig, dataset: &Dataset, rules: &RuleSet) -> ModelConfig {
    config.model.apply(ModelConfig::new(
        dataset.visual_dim(),
        dataset.semantic_dim(),
        rules.schema.encoded_width(),
        rules.len(),
    ))
}

pub fn cmd_train(config: &RunConfig, out: Option<&Path>) -> CliResult<()> {
    let (dataset, rules) = load_inputs(config)?;
    let model_config = model_config(config, &dataset, &rules);
    model_config.validate()?;
    let dir = output_dir(config, out)?;
    let outcome = train(&dataset, &rules, &model_config, &config.train)?;
    save_checkpoint(&outcome.model, dir.join(CHECKPOINT_FILE))?;
    write_history(&outcome.history, dir.join(HISTORY_FILE))?;
    Ok(())
}

pub fn cmd_cluster(
    config: &RunConfig,
    checkpoint: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<EvaluationReport> {
    let (dataset, rules) = load_inputs(config)?;
    let dir = output_dir(config, out)?;
    let checkpoint = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(CHECKPOINT_FILE));
    let model = load_checkpoint(&checkpoint).map_err(|e| match e {
        Error::Io { .. } => CliError::config(e.to_string()),
        other => CliError::new(EXIT_MISMATCH, other.to_string()),
    })?;
    if model.preprocessor.schema != rules.schema {
        return Err(CliError::new(
            EXIT_MISMATCH,
            "the rule file's attribute schema differs from the checkpoint's",
        ));
    }
    let z = embed(&model, &dataset).map_err(|e| CliError::new(EXIT_MISMATCH, e.to_string()))?;

    let c = &config.clustering;
    let (hard, soft) = match c.method {
        Method::Kmeans => {
            let cfg = KMeansConfig {
                seed: c.seed,
                ..KMeansConfig::default()
            };
            (kmeans(&z, c.k, &cfg)?, None)
        }
        Method::Fcm => {
            let cfg = FcmConfig {
                m: c.m,
                seed: c.seed,
                ..FcmConfig::default()
            };
            let soft = fuzzy_cmeans(&z, c.k, &cfg)?;
            (harden(&soft, &z)?, Some(soft))
        }
    };
    let attrs = dataset.attributes();
    let ids = dataset.ids();
    let (hard, log) = if config.refine {
        let (refined, log) = refine(&hard, &rules, &attrs, &z, &ids)?;
        (refined, Some(log))
    } else {
        (hard, None)
    };

    let metadata = RunMetadata {
        config_id: config.config_id.clone(),
        method: c.method.name().into(),
        k: c.k,
        seed: c.seed,
        refined: config.refine,
    };
    let report = evaluate(&z, &hard, soft.as_ref(), &rules, &attrs, metadata)?;

    let assignment = AssignmentFile::new(&hard, soft.as_ref(), log.as_ref());
    let assignment_json = serde_json::to_string_pretty(&assignment).map_err(Error::from)?;
    write_file(&dir.join(ASSIGNMENT_FILE), &assignment_json)?;
    write_latent(&ids, &z, dir.join(LATENT_FILE))?;
    write_file(&dir.join(REPORT_FILE), &report.to_json()?)?;
    Ok(report)
}

/// Merges reports into one CSV; writes `compare.csv` under `out` when given.
pub fn cmd_compare(report_paths: &[PathBuf], out: Option<&Path>) -> CliResult<String> {
    let reports = report_paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            EvaluationReport::from_json(&text)
                .map_err(|e| CliError::new(EXIT_MERGE, format!("{}: {e}", p.display())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let csv = merge_reports(&reports)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join(COMPARE_FILE), &csv)?;
    }
    Ok(csv)
}
