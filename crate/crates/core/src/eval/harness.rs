//! Leave-one-subject-out evaluation and the experiment sweeps built on it.
//!
//! Every fold trains with `run_id = subject_key(test_subject)`, so a fold's
//! initialisation, shuffles and views depend only on the top-level seed and the
//! held-out subject. Sweeps that reach the full training pool therefore
//! reproduce plain LOSO exactly.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MeanMetrics, MetricsReport};
use crate::augment::AugmentKind;
use crate::data::{split_loso, Dataset, PretrainPool};
use crate::error::{Error, Result, Warning};
use crate::nn::{EncoderKind, EncoderParams};
use crate::protocol::{predict, pretrain_encoder, pretrain_pool, train_classifier, train_supervised_baseline, TrainConfig};
use crate::rng::{self, subject_key, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cudle,
    Supervised,
}

impl Method {
    pub const BOTH: [Method; 2] = [Method::Cudle, Method::Supervised];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cudle => "cudle",
            Method::Supervised => "supervised",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cudle" => Ok(Method::Cudle),
            "supervised" => Ok(Method::Supervised),
            other => Err(Error::invalid(format!("unknown method {other:?} (expected cudle or supervised)"))),
        }
    }
}

/// Runs independent jobs, serially or on a dedicated thread pool. Output order
/// always matches input order.
#[derive(Debug, Clone, Copy)]
pub struct Executor {
    pub jobs: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Executor { jobs: 1 }
    }
}

impl Executor {
    pub fn new(jobs: usize) -> Self {
        Executor { jobs: jobs.max(1) }
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        if self.jobs <= 1 {
            return items.iter().map(f).collect();
        }
        use rayon::prelude::*;
        match rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
            Err(_) => items.iter().map(f).collect(),
        }
    }
}

/// One evaluated fold (or sweep cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub method: Method,
    pub test_subject: String,
    pub train_subjects: Vec<String>,
    pub labeled_subjects: Vec<String>,
    /// |labeled training segments| / |training segments|.
    pub label_fraction: f64,
    pub metrics: MetricsReport,
    /// Accuracy of always predicting the majority class of the labeled data.
    pub majority_accuracy: f64,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoResult {
    pub method: Method,
    pub folds: Vec<FoldOutcome>,
    pub mean: MeanMetrics,
    pub mean_majority_accuracy: f64,
}

impl LosoResult {
    fn from_folds(method: Method, folds: Vec<FoldOutcome>) -> Self {
        let mean = MeanMetrics::of(folds.iter().map(|f| &f.metrics));
        let mean_majority_accuracy =
            folds.iter().map(|f| f.majority_accuracy).sum::<f64>() / folds.len().max(1) as f64;
        LosoResult { method, folds, mean, mean_majority_accuracy }
    }
}

fn majority_accuracy(labeled: &Dataset, test: &Dataset) -> f64 {
    let majority = 2 * labeled.positives() > labeled.len();
    test.segments().iter().filter(|s| s.label == majority).count() as f64 / test.len().max(1) as f64
}

/// The first `k` training subjects of a seeded shuffle; all of them when `k` covers the pool.
pub fn select_labeled_subjects(train_subjects: &[String], k: usize, seed: u64, test_subject: &str, rep: u64) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::NoLabeledSubjects);
    }
    if k > train_subjects.len() {
        return Err(Error::invalid(format!(
            "{k} labeled subjects requested but the fold has only {} training subjects",
            train_subjects.len()
        )));
    }
    if k == train_subjects.len() {
        return Ok(train_subjects.to_vec());
    }
    let mut order = train_subjects.to_vec();
    order.shuffle(&mut rng::stream(seed, Stream::LabelSelection, &[subject_key(test_subject), rep]));
    order.truncate(k);
    order.sort();
    Ok(order)
}

/// Train on `train` (labels only from `labeled_subjects`) and score on `test`.
fn fit_and_score(
    method: Method,
    train: &Dataset,
    test: &Dataset,
    test_subject: &str,
    labeled_subjects: &[String],
    cfg: &TrainConfig,
    pretrained: Option<&EncoderParams>,
) -> Result<FoldOutcome> {
    let run_id = subject_key(test_subject);
    let (labeled, pool) = pretrain_pool(train, labeled_subjects, cfg)?;
    let (preds, warnings) = match method {
        Method::Cudle => {
            let owned;
            let encoder = match pretrained {
                Some(e) => e,
                None => {
                    owned = pretrain_encoder(&pool, cfg, run_id)?.encoder;
                    &owned
                }
            };
            let fit = train_classifier(&labeled, encoder, cfg, run_id)?;
            (predict(test, encoder, &fit.classifier)?, fit.warnings)
        }
        Method::Supervised => {
            let fit = train_supervised_baseline(&labeled, cfg, run_id)?;
            (predict(test, &fit.network.encoder, &fit.network.classifier)?, fit.warnings)
        }
    };
    let metrics = compute_metrics(&preds, &test.labels())?;
    log::debug!(
        "{} fold {test_subject}: {} labeled subjects, accuracy {:.4}",
        method.name(),
        labeled_subjects.len(),
        metrics.accuracy
    );
    Ok(FoldOutcome {
        method,
        test_subject: test_subject.to_owned(),
        train_subjects: train.subjects(),
        labeled_subjects: labeled_subjects.to_vec(),
        label_fraction: labeled.len() as f64 / train.len().max(1) as f64,
        metrics,
        majority_accuracy: majority_accuracy(&labeled, test),
        warnings,
    })
}

fn require_subjects(ds: &Dataset, min: usize) -> Result<Vec<String>> {
    let subjects = ds.subjects();
    if subjects.len() < min {
        return Err(Error::invalid(format!("need at least {min} subjects, dataset has {}", subjects.len())));
    }
    Ok(subjects)
}

/// Leave-one-subject-out evaluation. `labeled_per_fold = None` labels every training subject.
pub fn run_loso(
    ds: &Dataset,
    method: Method,
    cfg: &TrainConfig,
    labeled_per_fold: Option<usize>,
    exec: Executor,
) -> Result<LosoResult> {
    let subjects = require_subjects(ds, 2)?;
    let folds = exec
        .map(&subjects, |test_subject| -> Result<FoldOutcome> {
            let (train, test) = split_loso(ds, test_subject)?;
            let train_subjects = train.subjects();
            let k = labeled_per_fold.unwrap_or(train_subjects.len());
            let labeled = select_labeled_subjects(&train_subjects, k, cfg.seed, test_subject, 0)?;
            fit_and_score(method, &train, &test, test_subject, &labeled, cfg, None)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(LosoResult::from_folds(method, folds))
}

/// One aggregated row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    /// Labeled-subject count (label sweep) or training-subject count (subject sweep).
    pub key: usize,
    pub mean_label_fraction: f64,
    pub mean: MeanMetrics,
    pub folds: Vec<FoldOutcome>,
}

impl SweepRow {
    fn new(method: Method, key: usize, folds: Vec<FoldOutcome>) -> Self {
        let mean = MeanMetrics::of(folds.iter().map(|f| &f.metrics));
        let mean_label_fraction = folds.iter().map(|f| f.label_fraction).sum::<f64>() / folds.len().max(1) as f64;
        SweepRow { method, key, mean_label_fraction, mean, folds }
    }
}

pub const DEFAULT_LABEL_COUNTS: [usize; 6] = [1, 2, 5, 10, 15, 19];

/// Vary how many training subjects contribute labels. Pretraining sees the
/// full training pool regardless of `k`.
pub fn sweep_label_fraction(
    ds: &Dataset,
    cfg: &TrainConfig,
    label_counts: &[usize],
    reps: usize,
    exec: Executor,
) -> Result<Vec<SweepRow>> {
    let subjects = require_subjects(ds, 2)?;
    if let Some(&k) = label_counts.iter().find(|&&k| k == 0 || k > subjects.len() - 1) {
        return Err(Error::invalid(format!(
            "labeled-subject count {k} outside 1..={} for this dataset",
            subjects.len() - 1
        )));
    }
    let reps = reps.max(1) as u64;
    // Per fold: outcomes for each (k, method, rep).
    let per_fold = exec
        .map(&subjects, |test_subject| -> Result<Vec<(usize, FoldOutcome)>> {
            let (train, test) = split_loso(ds, test_subject)?;
            let train_subjects = train.subjects();
            let shared = match cfg.pretrain_pool {
                PretrainPool::FullTrain => Some(pretrain_encoder(&train.strip_labels(), cfg, subject_key(test_subject))?.encoder),
                PretrainPool::UnlabeledOnly => None,
            };
            let mut out = Vec::new();
            for &k in label_counts {
                let rep_count = if k == train_subjects.len() { 1 } else { reps };
                for rep in 0..rep_count {
                    let labeled = select_labeled_subjects(&train_subjects, k, cfg.seed, test_subject, rep)?;
                    for method in Method::BOTH {
                        let outcome = fit_and_score(method, &train, &test, test_subject, &labeled, cfg, shared.as_ref())?;
                        out.push((k, outcome));
                    }
                }
            }
            Ok(out)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &k in label_counts {
        for method in Method::BOTH {
            let folds: Vec<FoldOutcome> = per_fold
                .iter()
                .flatten()
                .filter(|(key, f)| *key == k && f.method == method)
                .map(|(_, f)| f.clone())
                .collect();
            rows.push(SweepRow::new(method, k, folds));
        }
    }
    Ok(rows)
}

/// Nested training-subject subsets for one held-out subject: the first `n` of a seeded shuffle.
pub fn training_subset(others: &[String], n: usize, seed: u64, test_subject: &str) -> Vec<String> {
    let mut order = others.to_vec();
    order.shuffle(&mut rng::stream(seed, Stream::SubjectSelection, &[subject_key(test_subject)]));
    order.truncate(n);
    order.sort();
    order
}

/// Vary how many subjects' data (signals and labels) are available for training.
pub fn sweep_train_subjects(ds: &Dataset, cfg: &TrainConfig, counts: &[usize], exec: Executor) -> Result<Vec<SweepRow>> {
    let subjects = require_subjects(ds, 2)?;
    if let Some(&n) = counts.iter().find(|&&n| n == 0 || n >= subjects.len()) {
        return Err(Error::invalid(format!(
            "training-subject count {n} must be in 1..={} for {} subjects",
            subjects.len() - 1,
            subjects.len()
        )));
    }
    let cells: Vec<(String, usize)> =
        subjects.iter().flat_map(|s| counts.iter().map(move |&n| (s.clone(), n))).collect();
    let outcomes = exec
        .map(&cells, |(test_subject, n)| -> Result<Vec<FoldOutcome>> {
            let (rest, test) = split_loso(ds, test_subject)?;
            let subset = training_subset(&rest.subjects(), *n, cfg.seed, test_subject);
            let train = rest.filter_subjects(&subset);
            Method::BOTH
                .into_iter()
                .map(|m| fit_and_score(m, &train, &test, test_subject, &subset, cfg, None))
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &n in counts {
        for method in Method::BOTH {
            let folds: Vec<FoldOutcome> = cells
                .iter()
                .zip(&outcomes)
                .filter(|((_, cn), _)| *cn == n)
                .flat_map(|(_, o)| o.iter().filter(|f| f.method == method).cloned())
                .collect();
            rows.push(SweepRow::new(method, n, folds));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationCell {
    pub augment: AugmentKind,
    pub encoder: EncoderKind,
    pub result: LosoResult,
}

/// Full-label LOSO for every augmentation × encoder pair.
pub fn compare_augmentations(ds: &Dataset, cfg: &TrainConfig, exec: Executor) -> Result<Vec<AugmentationCell>> {
    let mut cells = Vec::new();
    for augment in AugmentKind::ALL {
        for encoder in [EncoderKind::Cnn, EncoderKind::Mlp] {
            let mut c = cfg.clone();
            c.augment.kind = augment;
            c.encoder.kind = encoder;
            let result = run_loso(ds, Method::Cudle, &c, None, exec)?;
            log::info!("{} + {}: accuracy {:.4}", augment.name(), encoder.name(), result.mean.accuracy);
            cells.push(AugmentationCell { augment, encoder, result });
        }
    }
    Ok(cells)
}
