//! Two-phase training: contrastive pretraining of the encoder, then a classifier
//! fit on frozen embeddings. Also the end-to-end supervised baseline that shares
//! the same architecture.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentSpec;
use crate::contrastive::{contrastive_batch_grad, ContrastiveConfig};
use crate::data::{Dataset, PretrainPool, UnlabeledSet};
use crate::error::{Error, Result, Warning};
use crate::nn::{
    cross_entropy_with_grads, AdamConfig, AdamState, ClassifierConfig, ClassifierParams, EncoderConfig,
    EncoderParams, Network, Tensor2D,
};
use crate::rng::{self, subject_key, Stream};

/// Rows per forward pass when only inference is needed.
const INFERENCE_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Contrastive pretraining epochs.
    pub pretrain_epochs: usize,
    /// Classifier (and supervised baseline) epochs.
    pub classifier_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub augment: AugmentSpec,
    pub contrastive: ContrastiveConfig,
    pub encoder: EncoderConfig,
    pub classifier: ClassifierConfig,
    pub adam: AdamConfig,
    pub pretrain_pool: PretrainPool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pretrain_epochs: 100,
            classifier_epochs: 100,
            learning_rate: 0.001,
            batch_size: 64,
            augment: AugmentSpec::default(),
            contrastive: ContrastiveConfig::default(),
            encoder: EncoderConfig::default(),
            classifier: ClassifierConfig::default(),
            adam: AdamConfig::default(),
            pretrain_pool: PretrainPool::FullTrain,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be ≥ 1"));
        }
        if !(self.contrastive.tau > 0.0) {
            return Err(Error::invalid("contrastive.tau must be positive"));
        }
        self.augment.validate()
    }
}

/// Fresh encoder for the run identified by `run_id`.
pub fn init_encoder(cfg: &TrainConfig, input_len: usize, run_id: u64) -> Result<EncoderParams> {
    EncoderParams::init(&cfg.encoder, input_len, &mut rng::stream(cfg.seed, Stream::EncoderInit, &[run_id]))
}

pub fn init_classifier(cfg: &TrainConfig, embedding_dim: usize, run_id: u64) -> Result<ClassifierParams> {
    ClassifierParams::init(&cfg.classifier, embedding_dim, &mut rng::stream(cfg.seed, Stream::ClassifierInit, &[run_id]))
}

fn shuffled(n: usize, seed: u64, stream: Stream, path: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, stream, path));
    idx
}

#[derive(Debug, Clone)]
pub struct Pretrained {
    pub encoder: EncoderParams,
    /// Mean batch loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// Contrastive pretraining on a label-free pool.
pub fn pretrain_encoder(pool: &UnlabeledSet, cfg: &TrainConfig, run_id: u64) -> Result<Pretrained> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::invalid("pretraining pool is empty"));
    }
    let mut encoder = init_encoder(cfg, pool.segment_len, run_id)?;
    let mut adam = AdamState::new(&encoder, cfg.adam);
    let mut loss_curve = Vec::with_capacity(cfg.pretrain_epochs);
    for epoch in 0..cfg.pretrain_epochs as u64 {
        let order = shuffled(pool.len(), cfg.seed, Stream::PretrainShuffle, &[run_id, epoch]);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let segs: Vec<&[f64]> = chunk.iter().map(|&i| pool.segments[i].values.as_slice()).collect();
            let seeds: Vec<u64> = chunk
                .iter()
                .map(|&i| {
                    let s = &pool.segments[i];
                    rng::derive_seed(
                        cfg.seed,
                        Stream::Views,
                        &[run_id, epoch, subject_key(&s.subject_id), s.window_start as u64],
                    )
                })
                .collect();
            let (loss, grads) = contrastive_batch_grad(&segs, &seeds, &cfg.augment, &cfg.contrastive, &encoder)?;
            adam.step(&mut encoder, &grads, cfg.learning_rate)?;
            sum += loss;
            batches += 1;
        }
        loss_curve.push(sum / batches as f64);
    }
    Ok(Pretrained { encoder, loss_curve })
}

/// Encode a dataset in inference-sized chunks.
pub fn embed(ds: &Dataset, encoder: &EncoderParams) -> Result<Tensor2D> {
    let mut data = Vec::with_capacity(ds.len() * encoder.embedding_dim);
    for chunk in ds.segments().chunks(INFERENCE_CHUNK) {
        let rows: Vec<&[f64]> = chunk.iter().map(|s| s.values.as_slice()).collect();
        data.extend(encoder.encode(&Tensor2D::from_rows(&rows)?)?.into_data());
    }
    Tensor2D::from_vec(ds.len(), encoder.embedding_dim, data)
}

fn label_warnings(ds: &Dataset) -> Vec<Warning> {
    match ds.positives() {
        0 => vec![Warning::SingleClassLabels { class: false }],
        p if p == ds.len() => vec![Warning::SingleClassLabels { class: true }],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierFit {
    pub classifier: ClassifierParams,
    pub loss_curve: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// Fit the classifier head on embeddings from a frozen encoder.
pub fn train_classifier(
    labeled: &Dataset,
    encoder: &EncoderParams,
    cfg: &TrainConfig,
    run_id: u64,
) -> Result<ClassifierFit> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::NoLabeledSubjects);
    }
    let warnings = label_warnings(labeled);
    // The encoder is frozen, so embeddings are computed once.
    let z = embed(labeled, encoder)?;
    let labels = labeled.labels();
    let mut classifier = init_classifier(cfg, encoder.embedding_dim, run_id)?;
    let mut adam = AdamState::new(&classifier, cfg.adam);
    let mut loss_curve = Vec::with_capacity(cfg.classifier_epochs);
    for epoch in 0..cfg.classifier_epochs as u64 {
        let order = shuffled(labeled.len(), cfg.seed, Stream::ClassifierShuffle, &[run_id, epoch]);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let zb = z.select_rows(chunk);
            let yb: Vec<bool> = chunk.iter().map(|&i| labels[i]).collect();
            let (logits, tape) = classifier.net.forward_tape(&zb)?;
            let (loss, g) = cross_entropy_with_grads(&logits, &yb)?;
            let grads = classifier.net.param_grads(&tape, &g)?;
            adam.step(&mut classifier, &grads, cfg.learning_rate)?;
            sum += loss;
            batches += 1;
        }
        loss_curve.push(sum / batches as f64);
    }
    Ok(ClassifierFit { classifier, loss_curve, warnings })
}

#[derive(Debug, Clone)]
pub struct SupervisedFit {
    pub network: Network,
    pub loss_curve: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// Train encoder and classifier end to end with cross-entropy only.
pub fn train_supervised_baseline(labeled: &Dataset, cfg: &TrainConfig, run_id: u64) -> Result<SupervisedFit> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::NoLabeledSubjects);
    }
    let warnings = label_warnings(labeled);
    let encoder = init_encoder(cfg, labeled.segment_len(), run_id)?;
    let classifier = init_classifier(cfg, encoder.embedding_dim, run_id)?;
    let mut network = Network { encoder, classifier };
    let mut adam = AdamState::new(&network, cfg.adam);
    let labels = labeled.labels();
    let mut loss_curve = Vec::with_capacity(cfg.classifier_epochs);
    for epoch in 0..cfg.classifier_epochs as u64 {
        let order = shuffled(labeled.len(), cfg.seed, Stream::ClassifierShuffle, &[run_id, epoch]);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| labeled.segments()[i].values.as_slice()).collect();
            let x = Tensor2D::from_rows(&rows)?;
            let yb: Vec<bool> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = network.forward_backward(&x, |logits| cross_entropy_with_grads(logits, &yb))?;
            adam.step(&mut network, &grads, cfg.learning_rate)?;
            sum += loss;
            batches += 1;
        }
        loss_curve.push(sum / batches as f64);
    }
    Ok(SupervisedFit { network, loss_curve, warnings })
}

/// Predicted labels, one per segment.
pub fn predict(ds: &Dataset, encoder: &EncoderParams, classifier: &ClassifierParams) -> Result<Vec<bool>> {
    if classifier.embedding_dim != encoder.embedding_dim {
        return Err(Error::ShapeMismatch { expected: classifier.embedding_dim, actual: encoder.embedding_dim });
    }
    classifier.predict(&embed(ds, encoder)?)
}

/// Fraction of correct predictions.
pub fn accuracy(preds: &[bool], labels: &[bool]) -> f64 {
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len().max(1) as f64
}

/// Which pool pretraining sees for a given train split and labeled subject set.
pub fn pretrain_pool<S: AsRef<str>>(train: &Dataset, labeled_subjects: &[S], cfg: &TrainConfig) -> Result<(Dataset, UnlabeledSet)> {
    crate::data::partition_labels(train, labeled_subjects, cfg.pretrain_pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Segment;
    use crate::nn::{EncoderKind, Params};

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            pretrain_epochs: 2,
            classifier_epochs: 2,
            batch_size: 4,
            encoder: EncoderConfig { kind: EncoderKind::Mlp, mlp_hidden: vec![8], embedding_dim: 4, ..Default::default() },
            classifier: ClassifierConfig { hidden: 4 },
            seed: 3,
            ..Default::default()
        }
    }

    fn toy(n: usize, t: usize) -> Dataset {
        let segs = (0..n)
            .map(|i| Segment {
                subject_id: format!("S{}", i % 3),
                values: (0..t).map(|k| ((i * 7 + k) as f64 * 0.3).sin()).collect(),
                label: i % 2 == 0,
                window_start: i * 10,
            })
            .collect();
        Dataset::from_segments(segs).unwrap()
    }

    #[test]
    fn zero_epochs_return_initialisation() {
        let ds = toy(10, 16);
        let cfg = TrainConfig { pretrain_epochs: 0, classifier_epochs: 0, ..small_cfg() };
        let pre = pretrain_encoder(&ds.strip_labels(), &cfg, 5).unwrap();
        assert_eq!(pre.encoder, init_encoder(&cfg, 16, 5).unwrap());
        assert!(pre.loss_curve.is_empty());
        let fit = train_classifier(&ds, &pre.encoder, &cfg, 5).unwrap();
        assert_eq!(fit.classifier, init_classifier(&cfg, 4, 5).unwrap());
    }

    #[test]
    fn default_hyperparameters() {
        let cfg = TrainConfig::default();
        assert_eq!((cfg.pretrain_epochs, cfg.classifier_epochs), (100, 100));
        assert_eq!(cfg.learning_rate, 0.001);
        assert_eq!(cfg.contrastive.tau, 0.05);
        assert_eq!(cfg.augment.lambda, 0.1);
    }

    #[test]
    fn baseline_shares_architecture() {
        let ds = toy(12, 16);
        let cfg = small_cfg();
        let pre = pretrain_encoder(&ds.strip_labels(), &cfg, 1).unwrap();
        let fit = train_classifier(&ds, &pre.encoder, &cfg, 1).unwrap();
        let sup = train_supervised_baseline(&ds, &cfg, 1).unwrap();
        assert_eq!(sup.network.param_count(), pre.encoder.param_count() + fit.classifier.param_count());
        let empty = Dataset::new(16, vec![]).unwrap();
        assert!(train_supervised_baseline(&empty, &cfg, 1).is_err());
        assert!(train_classifier(&empty, &pre.encoder, &cfg, 1).is_err());
        assert!(pretrain_encoder(&empty.strip_labels(), &cfg, 1).is_err());
    }

    #[test]
    fn single_class_warns() {
        let mut segs = toy(6, 16).into_segments();
        segs.iter_mut().for_each(|s| s.label = true);
        let ds = Dataset::from_segments(segs).unwrap();
        let cfg = small_cfg();
        let enc = init_encoder(&cfg, 16, 0).unwrap();
        let fit = train_classifier(&ds, &enc, &cfg, 0).unwrap();
        assert_eq!(fit.warnings, vec![Warning::SingleClassLabels { class: true }]);
    }

    #[test]
    fn predictions_are_deterministic() {
        let ds = toy(9, 16);
        let cfg = small_cfg();
        let enc = init_encoder(&cfg, 16, 0).unwrap();
        let cls = init_classifier(&cfg, 4, 0).unwrap();
        let a = predict(&ds, &enc, &cls).unwrap();
        assert_eq!(a.len(), ds.len());
        assert_eq!(a, predict(&ds, &enc, &cls).unwrap());
    }
}
