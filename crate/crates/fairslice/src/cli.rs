//! Command-line interface: `audit`, `split`, `train`, `predict`, and
//! `compare` subcommands over the file formats in [`crate::io`].
//!
//! Every parameter can come from a `key=value` config file (`--config`);
//! explicit flags always win. Commands that sample or train require an
//! explicit seed so every run is reproducible. Exit codes: 0 success,
//! 1 validation failure, 2 I/O failure; messages go to standard error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use fairslice_core::{
    bias_report, build_split, overall_auc, run_comparison, score_histogram, split_stats,
    DatasetError, ExperimentError, MetricValue, MetricsError, ModelConfig, ModelError, SplitMode,
    SplitSpec, SubgroupSlice, TfidfClassifier, TrainConfig, DEFAULT_IDENTITIES,
};

use crate::io::{self, ColumnMap, IoError};
use crate::report::{self, ReportBundle, ReportError, RunMetadata};

#[derive(Debug)]
enum AppError {
    Validation(String),
    Io(String),
}

impl AppError {
    fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Validation(m) | AppError::Io(m) => m,
        }
    }
}

impl From<IoError> for AppError {
    fn from(e: IoError) -> Self {
        if e.is_io() {
            AppError::Io(e.to_string())
        } else {
            AppError::Validation(e.to_string())
        }
    }
}

impl From<ReportError> for AppError {
    fn from(e: ReportError) -> Self {
        if e.is_io() {
            AppError::Io(e.to_string())
        } else {
            AppError::Validation(e.to_string())
        }
    }
}

impl From<DatasetError> for AppError {
    fn from(e: DatasetError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<MetricsError> for AppError {
    fn from(e: MetricsError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<ExperimentError> for AppError {
    fn from(e: ExperimentError) -> Self {
        AppError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "fairslice",
    version,
    about = "Audit identity-subgroup bias in binary toxicity classifiers",
    long_about = "Measures Subgroup, BPSN, and BNSP AUC over identity slices of a labeled \
                  comment dataset, builds seeded mixed/naive training splits, and trains a \
                  TFIDF + logistic-regression baseline for end-to-end comparisons."
)]
struct Cli {
    /// Optional key=value file supplying defaults for any long flag
    /// (without the leading dashes); explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit an external prediction file against a labeled dataset.
    Audit(AuditArgs),
    /// Build a seeded mixed or naive training split.
    Split(SplitArgs),
    /// Train the TFIDF + logistic-regression baseline.
    Train(TrainArgs),
    /// Score a dataset with a trained baseline model.
    Predict(PredictArgs),
    /// Run the full mixed-vs-naive comparison end to end.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ColumnArgs {
    /// Dataset column holding the record id [default: id]
    #[arg(long = "col-id", value_name = "NAME")]
    col_id: Option<String>,
    /// Dataset column holding the comment text [default: comment_text]
    #[arg(long = "col-text", value_name = "NAME")]
    col_text: Option<String>,
    /// Dataset column holding fractional toxicity [default: target]
    #[arg(long = "col-target", value_name = "NAME")]
    col_target: Option<String>,
}

#[derive(Args)]
struct HyperArgs {
    /// Vocabulary cap for the TFIDF vectorizer [default: 50000]
    #[arg(long, value_name = "N")]
    max_features: Option<usize>,
    /// Gradient-descent step size [default: 0.1]
    #[arg(long, value_name = "RATE")]
    learning_rate: Option<f64>,
    /// Mini-batch size [default: 1024]
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Maximum training epochs [default: 10]
    #[arg(long, value_name = "N")]
    max_epochs: Option<usize>,
    /// L2 regularization strength [default: 0.0001]
    #[arg(long, value_name = "LAMBDA")]
    l2_lambda: Option<f64>,
    /// Stop once epoch-mean loss improves by less than this [default: 0.00001]
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    /// Labeled dataset CSV
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Prediction CSV (`id,score`) covering the dataset
    #[arg(long, value_name = "FILE")]
    predictions: Option<PathBuf>,
    /// Output directory for the report bundle
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Toxicity cutoff for the binary label [default: 0.5]
    #[arg(long, value_name = "T")]
    label_threshold: Option<f64>,
    /// Annotation cutoff for slice membership [default: 0.5]
    #[arg(long, value_name = "T")]
    membership_threshold: Option<f64>,
    /// Comma-separated identity columns to audit [default: the nine
    /// standard subgroups]
    #[arg(long, value_name = "LIST")]
    identities: Option<String>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct SplitArgs {
    /// Labeled dataset CSV
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Split mode: `mixed` (unfiltered sample) or `naive` (identity-free)
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Number of records to sample
    #[arg(long, value_name = "N")]
    size: Option<usize>,
    /// Sampling seed (required)
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output directory for the id list and statistics
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Naive filter: drop records with identity_targeted at or above this
    /// [default: 0.25]
    #[arg(long, value_name = "T")]
    filter_threshold: Option<f64>,
    /// Toxicity cutoff for the binary label [default: 0.5]
    #[arg(long, value_name = "T")]
    label_threshold: Option<f64>,
    /// Annotation cutoff for the subgroup cells of the statistics
    /// [default: 0.5]
    #[arg(long, value_name = "T")]
    membership_threshold: Option<f64>,
    /// Comma-separated identity columns [default: the nine standard
    /// subgroups]
    #[arg(long, value_name = "LIST")]
    identities: Option<String>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled training dataset CSV
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Optional id-list CSV restricting training to those records
    #[arg(long, value_name = "FILE")]
    ids: Option<PathBuf>,
    /// Where to write the trained model
    #[arg(long, value_name = "FILE")]
    out_model: Option<PathBuf>,
    /// Training seed (required)
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Toxicity cutoff for the binary label [default: 0.5]
    #[arg(long, value_name = "T")]
    label_threshold: Option<f64>,
    /// Comma-separated identity columns the dataset carries [default: none]
    #[arg(long, value_name = "LIST")]
    identities: Option<String>,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Dataset CSV to score
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Output prediction CSV (`id,score`)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Comma-separated identity columns the dataset carries [default: none]
    #[arg(long, value_name = "LIST")]
    identities: Option<String>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Labeled training dataset CSV
    #[arg(long, value_name = "FILE")]
    data_train: Option<PathBuf>,
    /// Labeled evaluation dataset CSV (ids must not overlap training)
    #[arg(long, value_name = "FILE")]
    data_test: Option<PathBuf>,
    /// Size of each training split
    #[arg(long, value_name = "N")]
    size: Option<usize>,
    /// Seed for sampling and training (required)
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output directory for the report bundle
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Naive filter threshold [default: 0.25]
    #[arg(long, value_name = "T")]
    filter_threshold: Option<f64>,
    /// Toxicity cutoff for the binary label [default: 0.5]
    #[arg(long, value_name = "T")]
    label_threshold: Option<f64>,
    /// Annotation cutoff for slice membership [default: 0.5]
    #[arg(long, value_name = "T")]
    membership_threshold: Option<f64>,
    /// Bins per score-distribution histogram [default: 10]
    #[arg(long, value_name = "N")]
    bins: Option<usize>,
    /// Comma-separated identity columns [default: the nine standard
    /// subgroups]
    #[arg(long, value_name = "LIST")]
    identities: Option<String>,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    hyper: HyperArgs,
}

/// Defaults loaded from a `key=value` config file.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn empty() -> Self {
        Settings {
            values: BTreeMap::new(),
        }
    }

    fn load(path: &Path) -> Result<Self, AppError> {
        let contents = std::fs::read_to_string(path)
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (number, raw) in contents.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                AppError::Validation(format!(
                    "{}:{}: expected `key=value`, got `{line}`",
                    path.display(),
                    number + 1
                ))
            })?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    fn get<T>(&self, key: &str) -> Result<Option<T>, AppError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                AppError::Validation(format!("config value for `{key}` ({raw}): {e}"))
            }),
        }
    }
}

fn resolve<T>(flag: Option<T>, settings: &Settings, key: &str) -> Result<Option<T>, AppError>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => settings.get(key),
    }
}

fn resolve_or<T>(flag: Option<T>, settings: &Settings, key: &str, default: T) -> Result<T, AppError>
where
    T: FromStr,
    T::Err: Display,
{
    Ok(resolve(flag, settings, key)?.unwrap_or(default))
}

fn require<T>(flag: Option<T>, settings: &Settings, key: &str) -> Result<T, AppError>
where
    T: FromStr,
    T::Err: Display,
{
    resolve(flag, settings, key)?
        .ok_or_else(|| AppError::Validation(format!("missing required --{key}")))
}

fn column_map(args: &ColumnArgs, settings: &Settings) -> Result<ColumnMap, AppError> {
    let defaults = ColumnMap::default();
    Ok(ColumnMap {
        id: resolve_or(args.col_id.clone(), settings, "col-id", defaults.id)?,
        text: resolve_or(args.col_text.clone(), settings, "col-text", defaults.text)?,
        target: resolve_or(
            args.col_target.clone(),
            settings,
            "col-target",
            defaults.target,
        )?,
    })
}

/// Parses a comma-separated identity list; falls back to the nine standard
/// subgroups or to none, depending on the command.
fn identity_list(
    flag: Option<String>,
    settings: &Settings,
    default_standard: bool,
) -> Result<Vec<String>, AppError> {
    let raw = resolve(flag, settings, "identities")?;
    let identities: Vec<String> = match raw {
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        None if default_standard => DEFAULT_IDENTITIES.iter().map(|s| s.to_string()).collect(),
        None => Vec::new(),
    };
    let mut seen = std::collections::BTreeSet::new();
    for identity in &identities {
        if !seen.insert(identity) {
            return Err(AppError::Validation(format!(
                "duplicate identity `{identity}` in --identities"
            )));
        }
    }
    Ok(identities)
}

fn model_config(
    hyper: &HyperArgs,
    seed: u64,
    settings: &Settings,
) -> Result<ModelConfig, AppError> {
    let defaults = ModelConfig::new(seed);
    Ok(ModelConfig {
        max_features: resolve_or(
            hyper.max_features,
            settings,
            "max-features",
            defaults.max_features,
        )?,
        train: TrainConfig {
            learning_rate: resolve_or(
                hyper.learning_rate,
                settings,
                "learning-rate",
                defaults.train.learning_rate,
            )?,
            batch_size: resolve_or(
                hyper.batch_size,
                settings,
                "batch-size",
                defaults.train.batch_size,
            )?,
            max_epochs: resolve_or(
                hyper.max_epochs,
                settings,
                "max-epochs",
                defaults.train.max_epochs,
            )?,
            l2_lambda: resolve_or(
                hyper.l2_lambda,
                settings,
                "l2-lambda",
                defaults.train.l2_lambda,
            )?,
            tol: resolve_or(hyper.tol, settings, "tol", defaults.train.tol)?,
            seed,
        },
    })
}

fn make_slices(identities: &[String], membership: f64) -> Result<Vec<SubgroupSlice>, AppError> {
    identities
        .iter()
        .map(|identity| SubgroupSlice::with_threshold(identity, membership))
        .collect::<Result<_, _>>()
        .map_err(AppError::from)
}

/// Label thresholds must lie strictly inside (0, 1); membership thresholds
/// may reach 1.0.
fn check_threshold(name: &str, value: f64, allow_one: bool) -> Result<f64, AppError> {
    let ok = value > 0.0 && if allow_one { value <= 1.0 } else { value < 1.0 };
    if ok {
        Ok(value)
    } else {
        let range = if allow_one { "(0, 1]" } else { "(0, 1)" };
        Err(AppError::Validation(format!(
            "--{name} must lie in {range}, got {value}"
        )))
    }
}

fn fmt_metric(value: &MetricValue) -> String {
    value
        .value()
        .map_or_else(|| "N/A".to_string(), |v| format!("{v:.3}"))
}

fn insert_model_config(config: &mut BTreeMap<String, String>, model: &ModelConfig) {
    config.insert("model.max_features".into(), model.max_features.to_string());
    config.insert(
        "model.learning_rate".into(),
        model.train.learning_rate.to_string(),
    );
    config.insert(
        "model.batch_size".into(),
        model.train.batch_size.to_string(),
    );
    config.insert(
        "model.max_epochs".into(),
        model.train.max_epochs.to_string(),
    );
    config.insert("model.l2_lambda".into(), model.train.l2_lambda.to_string());
    config.insert("model.tol".into(), model.train.tol.to_string());
    config.insert("model.seed".into(), model.train.seed.to_string());
}

fn insert_split_spec(config: &mut BTreeMap<String, String>, prefix: &str, spec: &SplitSpec) {
    config.insert(format!("{prefix}.mode"), spec.mode.as_str().to_string());
    config.insert(format!("{prefix}.size"), spec.size.to_string());
    config.insert(
        format!("{prefix}.identity_filter_threshold"),
        spec.identity_filter_threshold.to_string(),
    );
    config.insert(format!("{prefix}.seed"), spec.seed.to_string());
    config.insert(
        format!("{prefix}.label_threshold"),
        spec.label_threshold.to_string(),
    );
}

fn cmd_audit(args: AuditArgs, settings: &Settings) -> Result<(), AppError> {
    let data_path: PathBuf = require(args.data, settings, "data")?;
    let predictions_path: PathBuf = require(args.predictions, settings, "predictions")?;
    let out: PathBuf = require(args.out, settings, "out")?;
    let label_threshold = check_threshold(
        "label-threshold",
        resolve_or(args.label_threshold, settings, "label-threshold", 0.5)?,
        false,
    )?;
    let membership = check_threshold(
        "membership-threshold",
        resolve_or(
            args.membership_threshold,
            settings,
            "membership-threshold",
            0.5,
        )?,
        true,
    )?;
    let columns = column_map(&args.columns, settings)?;
    let identities = identity_list(args.identities, settings, true)?;

    let dataset = io::load_dataset(&data_path, &columns, &identities)?;
    let predictions = io::import_predictions(&predictions_path, &dataset)?;
    let slices = make_slices(&identities, membership)?;
    let report = bias_report(&dataset, &predictions, &slices, label_threshold)?;

    let mut metadata = RunMetadata::new("audit");
    metadata
        .config
        .insert("data".into(), data_path.display().to_string());
    metadata
        .config
        .insert("predictions".into(), predictions_path.display().to_string());
    metadata
        .config
        .insert("label_threshold".into(), label_threshold.to_string());
    metadata
        .config
        .insert("membership_threshold".into(), membership.to_string());
    metadata
        .config
        .insert("identities".into(), identities.join(","));
    metadata.input_digests.insert(
        data_path.display().to_string(),
        io::file_digest(&data_path)?,
    );
    metadata.input_digests.insert(
        predictions_path.display().to_string(),
        io::file_digest(&predictions_path)?,
    );

    println!("overall AUC: {}", fmt_metric(&report.overall));

    let mut bundle = ReportBundle::new(metadata);
    bundle.add_bias_report("audit", report)?;
    let files = report::export_csv(&bundle, &out)?;
    report::write_markdown_report(&bundle, &out.join("report.md"))?;
    println!("wrote {} files to {}", files.len() + 1, out.display());
    Ok(())
}

fn cmd_split(args: SplitArgs, settings: &Settings) -> Result<(), AppError> {
    let data_path: PathBuf = require(args.data, settings, "data")?;
    let mode_raw: String = require(args.mode, settings, "mode")?;
    let mode = match mode_raw.as_str() {
        "mixed" => SplitMode::Mixed,
        "naive" => SplitMode::Naive,
        other => {
            return Err(AppError::Validation(format!(
                "--mode must be `mixed` or `naive`, got `{other}`"
            )))
        }
    };
    let size = require(args.size, settings, "size")?;
    let seed = require(args.seed, settings, "seed")?;
    let out: PathBuf = require(args.out, settings, "out")?;
    let filter = resolve_or(
        args.filter_threshold,
        settings,
        "filter-threshold",
        SplitSpec::DEFAULT_FILTER_THRESHOLD,
    )?;
    let label_threshold = check_threshold(
        "label-threshold",
        resolve_or(args.label_threshold, settings, "label-threshold", 0.5)?,
        false,
    )?;
    let membership = check_threshold(
        "membership-threshold",
        resolve_or(
            args.membership_threshold,
            settings,
            "membership-threshold",
            0.5,
        )?,
        true,
    )?;
    let columns = column_map(&args.columns, settings)?;
    let identities = identity_list(args.identities, settings, true)?;

    let dataset = io::load_dataset(&data_path, &columns, &identities)?;
    let spec = SplitSpec {
        mode,
        size,
        identity_filter_threshold: filter,
        seed,
        label_threshold,
    };
    let split = build_split(&dataset, &spec)?;
    let stats = split_stats(&split, label_threshold, membership);

    std::fs::create_dir_all(&out).map_err(|e| AppError::Io(format!("{}: {e}", out.display())))?;
    io::write_id_list(split.iter().map(|r| r.id()), &out.join("split_ids.csv"))?;

    let mut metadata = RunMetadata::new("split");
    metadata.seed = Some(seed);
    insert_split_spec(&mut metadata.config, mode.as_str(), &spec);
    metadata
        .config
        .insert("membership_threshold".into(), membership.to_string());
    metadata.input_digests.insert(
        data_path.display().to_string(),
        io::file_digest(&data_path)?,
    );
    let mut bundle = ReportBundle::new(metadata);
    bundle.add_stats(mode.as_str(), stats)?;
    report::export_csv(&bundle, &out)?;
    println!(
        "sampled {} records from {} ({} mode) into {}",
        split.len(),
        dataset.len(),
        mode.as_str(),
        out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, settings: &Settings) -> Result<(), AppError> {
    let data_path: PathBuf = require(args.data, settings, "data")?;
    let out_model: PathBuf = require(args.out_model, settings, "out-model")?;
    let seed = require(args.seed, settings, "seed")?;
    let ids_path: Option<PathBuf> = resolve(args.ids, settings, "ids")?;
    let label_threshold = check_threshold(
        "label-threshold",
        resolve_or(args.label_threshold, settings, "label-threshold", 0.5)?,
        false,
    )?;
    let columns = column_map(&args.columns, settings)?;
    let identities = identity_list(args.identities, settings, false)?;
    let config = model_config(&args.hyper, seed, settings)?;

    let mut dataset = io::load_dataset(&data_path, &columns, &identities)?;
    if let Some(path) = &ids_path {
        let ids = io::read_id_list(path)?;
        dataset = dataset.subset_by_ids(&ids.into_iter().collect())?;
    }
    let corpus: Vec<&str> = dataset.iter().map(|r| r.text()).collect();
    let labels: Vec<bool> = dataset
        .iter()
        .map(|r| r.is_toxic(label_threshold))
        .collect();
    let classifier = TfidfClassifier::train(&corpus, &labels, &config)?;
    io::save_model(&classifier, &out_model)?;

    let predictions = classifier.predict_dataset(&dataset);
    let train_auc = overall_auc(&dataset, &predictions, label_threshold)?;
    println!("training AUC: {}", fmt_metric(&train_auc));
    println!(
        "saved model with {} features to {}",
        classifier.vocabulary().len(),
        out_model.display()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs, settings: &Settings) -> Result<(), AppError> {
    let model_path: PathBuf = require(args.model, settings, "model")?;
    let data_path: PathBuf = require(args.data, settings, "data")?;
    let out: PathBuf = require(args.out, settings, "out")?;
    let columns = column_map(&args.columns, settings)?;
    let identities = identity_list(args.identities, settings, false)?;

    let classifier = io::load_model(&model_path)?;
    let dataset = io::load_dataset(&data_path, &columns, &identities)?;
    let predictions = classifier.predict_dataset(&dataset);
    io::write_predictions_csv(&predictions, &out)?;
    println!(
        "wrote {} predictions to {}",
        predictions.len(),
        out.display()
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs, settings: &Settings) -> Result<(), AppError> {
    let train_path: PathBuf = require(args.data_train, settings, "data-train")?;
    let test_path: PathBuf = require(args.data_test, settings, "data-test")?;
    let size = require(args.size, settings, "size")?;
    let seed = require(args.seed, settings, "seed")?;
    let out: PathBuf = require(args.out, settings, "out")?;
    let filter = resolve_or(
        args.filter_threshold,
        settings,
        "filter-threshold",
        SplitSpec::DEFAULT_FILTER_THRESHOLD,
    )?;
    let label_threshold = check_threshold(
        "label-threshold",
        resolve_or(args.label_threshold, settings, "label-threshold", 0.5)?,
        false,
    )?;
    let membership = check_threshold(
        "membership-threshold",
        resolve_or(
            args.membership_threshold,
            settings,
            "membership-threshold",
            0.5,
        )?,
        true,
    )?;
    let bins = resolve_or(args.bins, settings, "bins", 10)?;
    let columns = column_map(&args.columns, settings)?;
    let identities = identity_list(args.identities, settings, true)?;
    let config = model_config(&args.hyper, seed, settings)?;

    let train = io::load_dataset(&train_path, &columns, &identities)?;
    let test = io::load_dataset(&test_path, &columns, &identities)?;

    let spec_mixed = SplitSpec {
        mode: SplitMode::Mixed,
        size,
        identity_filter_threshold: filter,
        seed,
        label_threshold,
    };
    let spec_naive = SplitSpec {
        mode: SplitMode::Naive,
        ..spec_mixed.clone()
    };

    let comparison = run_comparison(&train, &test, &spec_mixed, &spec_naive, &config, membership)?;

    println!(
        "mixed overall AUC: {}",
        fmt_metric(&comparison.mixed_report.overall)
    );
    println!(
        "naive overall AUC: {}",
        fmt_metric(&comparison.naive_report.overall)
    );

    let mut metadata = RunMetadata::new("compare");
    metadata.seed = Some(seed);
    insert_split_spec(&mut metadata.config, "mixed", &spec_mixed);
    insert_split_spec(&mut metadata.config, "naive", &spec_naive);
    insert_model_config(&mut metadata.config, &config);
    metadata
        .config
        .insert("membership_threshold".into(), membership.to_string());
    metadata.config.insert("bins".into(), bins.to_string());
    metadata
        .config
        .insert("identities".into(), identities.join(","));
    metadata.input_digests.insert(
        train_path.display().to_string(),
        io::file_digest(&train_path)?,
    );
    metadata.input_digests.insert(
        test_path.display().to_string(),
        io::file_digest(&test_path)?,
    );

    let mut bundle = ReportBundle::new(metadata);
    for identity in &identities {
        let slice = SubgroupSlice::with_threshold(identity, membership)?;
        let mixed_hist = score_histogram(
            &test,
            &comparison.mixed_predictions,
            &slice,
            label_threshold,
            bins,
        )?;
        bundle.add_histogram("mixed", identity, mixed_hist)?;
        let naive_hist = score_histogram(
            &test,
            &comparison.naive_predictions,
            &slice,
            label_threshold,
            bins,
        )?;
        bundle.add_histogram("naive", identity, naive_hist)?;
    }
    bundle.add_bias_report("mixed", comparison.mixed_report)?;
    bundle.add_bias_report("naive", comparison.naive_report)?;
    bundle.add_stats("mixed", comparison.mixed_stats)?;
    bundle.add_stats("naive", comparison.naive_stats)?;

    let files = report::export_csv(&bundle, &out)?;
    report::write_markdown_report(&bundle, &out.join("report.md"))?;
    println!("wrote {} files to {}", files.len() + 1, out.display());
    Ok(())
}

/// Parses arguments and runs the selected command, returning the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let settings = match &cli.config {
        Some(path) => match Settings::load(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {}", e.message());
                return e.exit_code();
            }
        },
        None => Settings::empty(),
    };

    let result = match cli.command {
        Command::Audit(args) => cmd_audit(args, &settings),
        Command::Split(args) => cmd_split(args, &settings),
        Command::Train(args) => cmd_train(args, &settings),
        Command::Predict(args) => cmd_predict(args, &settings),
        Command::Compare(args) => cmd_compare(args, &settings),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
