//! Command-line entry point.
//!
//! Every command resolves a [`RunConfig`] from defaults, then an optional JSON
//! file (`--config`), then `--set key.path=value` overrides, then dedicated flags.
//! The resolved config, including the seed, is echoed into every report.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::AugmentSpec;
use crate::contrastive::ContrastiveConfig;
use crate::data::{self, PretrainPool};
use crate::diagnostics::{self, GRAD_TOLERANCE};
use crate::error::{Error, Result};
use crate::eval::{
    compare_augmentations, compute_metrics, emit_report, run_loso, sweep_label_fraction, sweep_train_subjects,
    Executor, Method, Report, ReportFormat, DEFAULT_LABEL_COUNTS,
};
use crate::eval::report::write_atomic;
use crate::nn::checkpoint::{encoder_hash, Checkpoint};
use crate::nn::{AdamConfig, ClassifierConfig, EncoderConfig};
use crate::protocol::{self, TrainConfig};
use crate::synth::{self, SynthConfig};

/// Environment variable consulted for the seed when neither flag nor file sets one.
pub const SEED_ENV: &str = "SSLTSC_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub window_minutes: usize,
    pub stride_minutes: usize,
    /// Per-subject standardization before writing segments.
    pub standardize: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { window_minutes: 60, stride_minutes: 10, standardize: true }
    }
}

/// Scalar training settings. Architecture and augmentation live in their own sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub pretrain_epochs: usize,
    pub classifier_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub pretrain_pool: PretrainPool,
    pub adam: AdamConfig,
    /// Subjects whose labels the `train` command uses; all subjects when absent.
    pub labeled_subjects: Option<Vec<String>>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            pretrain_epochs: t.pretrain_epochs,
            classifier_epochs: t.classifier_epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            pretrain_pool: t.pretrain_pool,
            adam: t.adam,
            labeled_subjects: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub method: Method,
    /// Labeled training subjects per LOSO fold; all of them when absent.
    pub label_subjects: Option<usize>,
    pub label_counts: Vec<usize>,
    pub reps: usize,
    /// Training-subject counts for the subject sweep; `1..=subjects-1` when absent.
    pub subject_counts: Option<Vec<usize>>,
    pub grad_check_epsilon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            method: Method::Cudle,
            label_subjects: None,
            label_counts: DEFAULT_LABEL_COUNTS.to_vec(),
            reps: 1,
            subject_counts: None,
            grad_check_epsilon: diagnostics::FD_STEP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Input dataset CSV.
    pub data: Option<PathBuf>,
    /// Output file of `synth` (dataset CSV), `pretrain` and `train` (checkpoint).
    pub out: Option<PathBuf>,
    /// Encoder checkpoint read by `train`.
    pub encoder: Option<PathBuf>,
    pub report_dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub synth: SynthConfig,
    pub data: DataConfig,
    pub train: TrainSection,
    pub augment: AugmentSpec,
    pub contrastive: ContrastiveConfig,
    pub encoder: EncoderConfig,
    pub classifier: ClassifierConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            pretrain_epochs: self.train.pretrain_epochs,
            classifier_epochs: self.train.classifier_epochs,
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            augment: self.augment,
            contrastive: self.contrastive,
            encoder: self.encoder.clone(),
            classifier: self.classifier,
            adam: self.train.adam,
            pretrain_pool: self.train.pretrain_pool,
            seed: self.seed(),
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig { seed: self.seed(), ..self.synth.clone() }
    }

    fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Debug, Parser)]
#[command(name = "ssltsc", version, about = "Contrastive pretraining and LOSO evaluation for wearable time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort and write its segmented dataset CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Number of subjects.
        #[arg(long)]
        subjects: Option<usize>,
        /// Output CSV; a `.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contrastive pretraining of an encoder on every segment (labels ignored).
    Pretrain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// Encoder checkpoint to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a classifier on a frozen encoder checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// Encoder checkpoint to read.
        #[arg(long)]
        encoder: Option<PathBuf>,
        /// Comma-separated subjects whose labels are used.
        #[arg(long, value_delimiter = ',')]
        labeled_subjects: Option<Vec<String>>,
        /// Encoder + classifier checkpoint to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-subject-out evaluation of one method.
    EvalLoso {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// cudle | supervised
        #[arg(long)]
        method: Option<Method>,
        /// Labeled training subjects per fold.
        #[arg(long)]
        label_subjects: Option<usize>,
    },
    /// LOSO for both methods over a range of labeled-subject counts.
    SweepLabels {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// Comma-separated labeled-subject counts (default 1,2,5,10,15,19).
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        /// Repeated labeled-subject draws per count.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// LOSO for both methods over a range of training-subject counts.
    SweepSubjects {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// Comma-separated training-subject counts (default 1 up to all but one subject).
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// Full-label LOSO for every augmentation and encoder architecture.
    CompareAug {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Compare analytic and finite-difference gradients on small networks.
    GradCheck {
        #[command(flatten)]
        common: Common,
        /// Base finite-difference step.
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Top-level seed; falls back to SSLTSC_SEED, then to a fresh random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Input dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Worker threads for independent folds; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override any config key, e.g. `--set contrastive.tau=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct TrainFlags {
    /// Contrastive pretraining epochs.
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    /// Classifier (and supervised baseline) epochs.
    #[arg(long)]
    classifier_epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// flip | blockout | crop_resize | gaussian_noise
    #[arg(long)]
    augment: Option<String>,
    /// Contrastive temperature.
    #[arg(long)]
    tau: Option<f64>,
    /// mlp | cnn
    #[arg(long)]
    encoder_kind: Option<String>,
}

impl TrainFlags {
    fn overrides(&self) -> Vec<(&'static str, Value)> {
        let mut out = Vec::new();
        let mut push = |k, v: Option<Value>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("train.pretrain_epochs", self.pretrain_epochs.map(Value::from));
        push("train.classifier_epochs", self.classifier_epochs.map(Value::from));
        push("train.learning_rate", self.learning_rate.map(Value::from));
        push("train.batch_size", self.batch_size.map(Value::from));
        push("augment.kind", self.augment.clone().map(Value::from));
        push("contrastive.tau", self.tau.map(Value::from));
        push("encoder.kind", self.encoder_kind.clone().map(Value::from));
        out
    }
}

/// Merge `patch` into `base`, recursing into objects.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Set a dotted key, which must already exist in the default schema.
fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::invalid(format!("config key `{key}`: `{}` is not a section", parts[..i].join("."))))?;
        if !obj.contains_key(*part) {
            return Err(Error::invalid(format!("unknown config key `{key}`")));
        }
        cur = obj.get_mut(*part).expect("checked above");
    }
    *cur = value;
    Ok(())
}

/// Parse a `--set` value as JSON, falling back to a plain string.
fn parse_set(arg: &str) -> Result<(&str, Value)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("--set expects KEY=VALUE, got `{arg}`")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim(), value))
}

fn entropy_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    crate::rng::mix64(nanos ^ (u64::from(std::process::id()) << 32))
}

/// Resolve defaults, file, `--set` and flags into a config with an explicit seed.
fn resolve(common: &Common, flags: Vec<(&str, Value)>) -> Result<RunConfig> {
    let mut tree = serde_json::to_value(RunConfig::default())?;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))?;
        if !file.is_object() {
            return Err(Error::invalid(format!("config {}: top level must be an object", path.display())));
        }
        merge(&mut tree, file);
        // Reject unknown keys with the file named in the message.
        serde_json::from_value::<RunConfig>(tree.clone())
            .map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))?;
    }
    for s in &common.set {
        let (k, v) = parse_set(s)?;
        set_path(&mut tree, k, v)?;
    }
    let mut flags = flags;
    if let Some(seed) = common.seed {
        flags.push(("seed", Value::from(seed)));
    }
    if let Some(p) = &common.data {
        flags.push(("paths.data", Value::from(p.to_string_lossy().into_owned())));
    }
    if let Some(p) = &common.report_dir {
        flags.push(("paths.report_dir", Value::from(p.to_string_lossy().into_owned())));
    }
    for (k, v) in flags {
        set_path(&mut tree, k, v)?;
    }
    let mut cfg: RunConfig =
        serde_json::from_value(tree).map_err(|e| Error::invalid(format!("invalid configuration: {e}")))?;
    if cfg.seed.is_none() {
        cfg.seed = Some(match std::env::var(SEED_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
            Err(_) => entropy_seed(),
        });
    }
    cfg.synth.seed = cfg.seed();
    cfg.synth.validate()?;
    cfg.train_config().validate()?;
    Ok(cfg)
}

fn path_value(p: &Path) -> Value {
    Value::from(p.to_string_lossy().into_owned())
}

fn require_input(path: &Option<PathBuf>, what: &str, flag: &str) -> Result<PathBuf> {
    let p = path
        .clone()
        .ok_or_else(|| Error::invalid(format!("{what} required: pass {flag} or set it in the config")))?;
    if !p.exists() {
        return Err(Error::invalid(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}

fn load_dataset(cfg: &RunConfig) -> Result<data::Dataset> {
    let path = require_input(&cfg.paths.data, "dataset", "--data")?;
    data::load_csv(&path)
}

fn report_path(cfg: &RunConfig, command: &str, ext: &str) -> PathBuf {
    cfg.paths.report_dir.join(format!("{command}.{ext}"))
}

fn write_reports(cfg: &RunConfig, report: &Report, csv: bool) -> Result<Vec<PathBuf>> {
    if !cfg.paths.report_dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&cfg.paths.report_dir).map_err(|e| Error::io(&cfg.paths.report_dir, e))?;
    }
    let mut written = vec![report_path(cfg, &report.command, "json")];
    emit_report(report, ReportFormat::Json, &written[0])?;
    if csv {
        let p = report_path(cfg, &report.command, "csv");
        emit_report(report, ReportFormat::Csv, &p)?;
        written.push(p);
    }
    Ok(written)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("cohort.csv"));
    let sc = cfg.synth_config();
    let cohort = synth::generate_cohort(&sc)?;
    let ds = data::segment_cohort(&cohort, cfg.data.window_minutes, cfg.data.stride_minutes)?;
    let (ds, warnings) = if cfg.data.standardize { data::standardize_per_subject(&ds) } else { (ds, Vec::new()) };
    let mut buf = Vec::new();
    data::write_csv(&ds, &mut buf)?;
    write_atomic(&out, &buf)?;
    let sidecar = serde_json::json!({
        "config": cfg.echo(),
        "synth": sc,
        "segments": ds.len(),
        "positives": ds.positives(),
        "segment_len": ds.segment_len(),
        "subjects": ds.subjects(),
        "warnings": warnings,
    });
    let side_path = out.with_extension("json");
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    write_atomic(&side_path, text.as_bytes())?;
    println!(
        "seed {}: {} segments ({} positive) of length {} from {} subjects",
        cfg.seed(),
        ds.len(),
        ds.positives(),
        ds.segment_len(),
        cohort.len()
    );
    print_written(&[out, side_path]);
    Ok(())
}

fn cmd_pretrain(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let tc = cfg.train_config();
    let pre = protocol::pretrain_encoder(&ds.strip_labels(), &tc, 0)?;
    let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("encoder.json"));
    Checkpoint::new(Some(pre.encoder.clone()), None).save(&out)?;
    let mut report = Report::new("pretrain", cfg.echo());
    report.details = serde_json::json!({
        "segments": ds.len(),
        "loss_curve": pre.loss_curve,
        "encoder_sha256": encoder_hash(&pre.encoder),
        "checkpoint": path_value(&out),
    });
    if let Some(last) = pre.loss_curve.last() {
        println!("final contrastive loss {last:.6}");
    }
    let mut written = vec![out];
    written.extend(write_reports(cfg, &report, false)?);
    print_written(&written);
    Ok(())
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let enc_path = require_input(&cfg.paths.encoder, "encoder checkpoint", "--encoder")?;
    let encoder = Checkpoint::load(&enc_path)?
        .encoder
        .ok_or_else(|| Error::invalid(format!("{} holds no encoder", enc_path.display())))?;
    if encoder.input_len != ds.segment_len() {
        return Err(Error::ShapeMismatch { expected: encoder.input_len, actual: ds.segment_len() });
    }
    let labeled = match &cfg.train.labeled_subjects {
        Some(list) => {
            let known = ds.subjects();
            if let Some(s) = list.iter().find(|s| !known.contains(s)) {
                return Err(Error::UnknownSubject(s.clone()));
            }
            ds.filter_subjects(list)
        }
        None => ds.clone(),
    };
    let before = encoder_hash(&encoder);
    let tc = cfg.train_config();
    let fit = protocol::train_classifier(&labeled, &encoder, &tc, 0)?;
    let after = encoder_hash(&encoder);
    let preds = protocol::predict(&labeled, &encoder, &fit.classifier)?;
    let metrics = compute_metrics(&preds, &labeled.labels())?;
    let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    Checkpoint::new(Some(encoder), Some(fit.classifier)).save(&out)?;
    let mut report = Report::new("train", cfg.echo());
    report.details = serde_json::json!({
        "labeled_segments": labeled.len(),
        "labeled_subjects": labeled.subjects(),
        "loss_curve": fit.loss_curve,
        "training_metrics": metrics,
        "encoder_sha256_before": before,
        "encoder_sha256_after": after,
        "warnings": fit.warnings,
        "checkpoint": path_value(&out),
    });
    println!("training accuracy {:.6}", metrics.accuracy);
    let mut written = vec![out];
    written.extend(write_reports(cfg, &report, false)?);
    print_written(&written);
    Ok(())
}

fn executor(common: &Common) -> Executor {
    Executor::new(common.jobs)
}

fn cmd_eval_loso(cfg: &RunConfig, exec: Executor) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let method = cfg.eval.method;
    let result = run_loso(&ds, method, &cfg.train_config(), cfg.eval.label_subjects, exec)?;
    let k = cfg.eval.label_subjects.unwrap_or(ds.subjects().len().saturating_sub(1));
    let mut report = Report::new("eval-loso", cfg.echo());
    report.add_loso(method.name(), k, &result);
    report.details = serde_json::json!({ "result": result });
    println!(
        "{} mean accuracy {:.6} f1 {:.6} over {} folds (majority {:.6})",
        method.name(),
        result.mean.accuracy,
        result.mean.f1,
        result.folds.len(),
        result.mean_majority_accuracy
    );
    print_written(&write_reports(cfg, &report, true)?);
    Ok(())
}

fn cmd_sweep_labels(cfg: &RunConfig, exec: Executor) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let rows = sweep_label_fraction(&ds, &cfg.train_config(), &cfg.eval.label_counts, cfg.eval.reps, exec)?;
    let mut report = Report::new("sweep-labels", cfg.echo());
    report.add_sweep(&rows);
    report.details = serde_json::json!({ "rows": rows });
    for r in &rows {
        println!("{} k={} accuracy {:.6} f1 {:.6}", r.method.name(), r.key, r.mean.accuracy, r.mean.f1);
    }
    print_written(&write_reports(cfg, &report, true)?);
    Ok(())
}

fn cmd_sweep_subjects(cfg: &RunConfig, exec: Executor) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let counts = match &cfg.eval.subject_counts {
        Some(c) => c.clone(),
        None => (1..ds.subjects().len()).collect(),
    };
    let rows = sweep_train_subjects(&ds, &cfg.train_config(), &counts, exec)?;
    let mut report = Report::new("sweep-subjects", cfg.echo());
    report.add_sweep(&rows);
    report.details = serde_json::json!({ "rows": rows });
    for r in &rows {
        println!("{} n={} accuracy {:.6} f1 {:.6}", r.method.name(), r.key, r.mean.accuracy, r.mean.f1);
    }
    print_written(&write_reports(cfg, &report, true)?);
    Ok(())
}

fn cmd_compare_aug(cfg: &RunConfig, exec: Executor) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let cells = compare_augmentations(&ds, &cfg.train_config(), exec)?;
    let mut report = Report::new("compare-aug", cfg.echo());
    report.add_augmentations(&cells);
    report.details = serde_json::json!({ "cells": cells });
    for c in &cells {
        let m = &c.result.mean;
        println!(
            "{:<14} {:<3} accuracy {:.6} precision {:.6} recall {:.6} f1 {:.6}",
            c.augment.name(),
            c.encoder.name(),
            m.accuracy,
            m.precision,
            m.recall,
            m.f1
        );
    }
    print_written(&write_reports(cfg, &report, true)?);
    Ok(())
}

/// Returns whether every case passed.
fn cmd_grad_check(cfg: &RunConfig) -> Result<bool> {
    let cases = diagnostics::standard_grad_checks(cfg.seed(), cfg.eval.grad_check_epsilon)?;
    let max = cases.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    for c in &cases {
        println!("{:<42} params {:>5} refined {:>3} max rel error {:.3e}", c.name, c.n_params, c.refined, c.max_rel_error);
    }
    println!("max relative error {max:.3e} (threshold {GRAD_TOLERANCE:.0e})");
    let mut report = Report::new("grad-check", cfg.echo());
    report.details = serde_json::json!({ "cases": cases, "max_rel_error": max, "threshold": GRAD_TOLERANCE });
    print_written(&write_reports(cfg, &report, false)?);
    Ok(max < GRAD_TOLERANCE)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth { common, subjects, out } => {
            let mut flags = Vec::new();
            if let Some(n) = subjects {
                flags.push(("synth.n_subjects", Value::from(n)));
            }
            if let Some(p) = out {
                flags.push(("paths.out", path_value(&p)));
            }
            cmd_synth(&resolve(&common, flags)?)?;
        }
        Command::Pretrain { common, train, out } => {
            let mut flags = train.overrides();
            if let Some(p) = out {
                flags.push(("paths.out", path_value(&p)));
            }
            cmd_pretrain(&resolve(&common, flags)?)?;
        }
        Command::Train { common, train, encoder, labeled_subjects, out } => {
            let mut flags = train.overrides();
            if let Some(p) = encoder {
                flags.push(("paths.encoder", path_value(&p)));
            }
            if let Some(list) = labeled_subjects {
                flags.push(("train.labeled_subjects", Value::from(list)));
            }
            if let Some(p) = out {
                flags.push(("paths.out", path_value(&p)));
            }
            cmd_train(&resolve(&common, flags)?)?;
        }
        Command::EvalLoso { common, train, method, label_subjects } => {
            let mut flags = train.overrides();
            if let Some(m) = method {
                flags.push(("eval.method", Value::from(m.name())));
            }
            if let Some(k) = label_subjects {
                flags.push(("eval.label_subjects", Value::from(k)));
            }
            cmd_eval_loso(&resolve(&common, flags)?, executor(&common))?;
        }
        Command::SweepLabels { common, train, counts, reps } => {
            let mut flags = train.overrides();
            if let Some(c) = counts {
                flags.push(("eval.label_counts", Value::from(c)));
            }
            if let Some(r) = reps {
                flags.push(("eval.reps", Value::from(r)));
            }
            cmd_sweep_labels(&resolve(&common, flags)?, executor(&common))?;
        }
        Command::SweepSubjects { common, train, counts } => {
            let mut flags = train.overrides();
            if let Some(c) = counts {
                flags.push(("eval.subject_counts", Value::from(c)));
            }
            cmd_sweep_subjects(&resolve(&common, flags)?, executor(&common))?;
        }
        Command::CompareAug { common, train } => {
            cmd_compare_aug(&resolve(&common, train.overrides())?, executor(&common))?;
        }
        Command::GradCheck { common, epsilon } => {
            let mut flags = Vec::new();
            if let Some(e) = epsilon {
                flags.push(("eval.grad_check_epsilon", Value::from(e)));
            }
            if !cmd_grad_check(&resolve(&common, flags)?)? {
                eprintln!("error: gradient check exceeded the {GRAD_TOLERANCE:.0e} threshold");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parse `argv` (including the program name), execute, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
