mod common;

use ssltsc::augment::{AugmentKind, AugmentSpec};
use ssltsc::data::{Dataset, Segment};
use ssltsc::nn::checkpoint::{encoder_hash, Checkpoint};
use ssltsc::nn::{EncoderConfig, EncoderKind};
use ssltsc::protocol::{
    accuracy, init_encoder, predict, pretrain_encoder, train_classifier, train_supervised_baseline, TrainConfig,
};
use ssltsc::Warning;

use common::{quick_config, small_cohort};

/// Two classes that differ in level; any reasonable embedding separates them.
fn separable(n: usize, t: usize) -> Dataset {
    let segs = (0..n)
        .map(|i| {
            let label = i % 2 == 0;
            let base = if label { 1.0 } else { -1.0 };
            let values = (0..t).map(|k| base + 0.05 * ((i * 7 + k * 3) as f64).sin()).collect();
            Segment { subject_id: format!("S{:02}", i % 3), values, label, window_start: i }
        })
        .collect();
    Dataset::new(t, segs).unwrap()
}

#[test]
fn contrastive_loss_decreases_with_crop_resize() {
    let ds = small_cohort(4, 5);
    let cfg = TrainConfig {
        pretrain_epochs: 30,
        augment: AugmentSpec::new(AugmentKind::CropResize),
        ..quick_config(5)
    };
    let curve = pretrain_encoder(&ds.strip_labels(), &cfg, 1).unwrap().loss_curve;
    assert_eq!(curve.len(), 30);
    let head = curve[..3].iter().sum::<f64>() / 3.0;
    let tail = curve[27..].iter().sum::<f64>() / 3.0;
    assert!(tail < head, "loss went from {head:.4} to {tail:.4}");
    assert!(curve.iter().all(|v| v.is_finite() && *v >= 0.0));
}

#[test]
fn classifier_fits_a_separable_fixture() {
    let ds = separable(40, 24);
    let cfg = TrainConfig { classifier_epochs: 200, learning_rate: 0.01, ..quick_config(1) };
    let encoder = init_encoder(&cfg, 24, 9).unwrap();
    let fit = train_classifier(&ds, &encoder, &cfg, 9).unwrap();
    assert_eq!(accuracy(&predict(&ds, &encoder, &fit.classifier).unwrap(), &ds.labels()), 1.0);
    assert!(fit.loss_curve.last().unwrap() < &fit.loss_curve[0]);

    let sup = train_supervised_baseline(&ds, &cfg, 9).unwrap();
    let preds = predict(&ds, &sup.network.encoder, &sup.network.classifier).unwrap();
    assert_eq!(accuracy(&preds, &ds.labels()), 1.0);
}

#[test]
fn cnn_classifier_fits_a_separable_fixture() {
    let ds = separable(40, 64);
    let cfg = TrainConfig {
        classifier_epochs: 200,
        learning_rate: 0.01,
        encoder: EncoderConfig { kind: EncoderKind::Cnn, embedding_dim: 8, ..Default::default() },
        ..quick_config(1)
    };
    let encoder = init_encoder(&cfg, 64, 4).unwrap();
    let fit = train_classifier(&ds, &encoder, &cfg, 4).unwrap();
    assert_eq!(accuracy(&predict(&ds, &encoder, &fit.classifier).unwrap(), &ds.labels()), 1.0);
}

#[test]
fn classifier_training_leaves_the_encoder_untouched() {
    let ds = small_cohort(3, 2);
    let cfg = quick_config(2);
    let encoder = pretrain_encoder(&ds.strip_labels(), &cfg, 0).unwrap().encoder;
    let before = encoder_hash(&encoder);
    let snapshot = encoder.clone();
    let fit = train_classifier(&ds, &encoder, &cfg, 0).unwrap();
    assert_eq!(encoder_hash(&encoder), before);
    assert_eq!(encoder, snapshot);

    let ckpt = Checkpoint::new(Some(encoder.clone()), Some(fit.classifier.clone()));
    let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
    assert_eq!(encoder_hash(back.encoder.as_ref().unwrap()), before);
    assert_eq!(back.classifier.unwrap(), fit.classifier);
}

#[test]
fn single_class_labels_warn_but_train() {
    let ds = small_cohort(2, 3);
    let negatives: Vec<Segment> = ds.segments().iter().filter(|s| !s.label).cloned().collect();
    let ds = Dataset::new(ds.segment_len(), negatives).unwrap();
    let cfg = quick_config(3);
    let encoder = init_encoder(&cfg, ds.segment_len(), 0).unwrap();
    let fit = train_classifier(&ds, &encoder, &cfg, 0).unwrap();
    assert_eq!(fit.warnings, vec![Warning::SingleClassLabels { class: false }]);
}

#[test]
fn training_is_deterministic() {
    let ds = small_cohort(3, 8);
    let cfg = quick_config(8);
    let a = pretrain_encoder(&ds.strip_labels(), &cfg, 4).unwrap();
    let b = pretrain_encoder(&ds.strip_labels(), &cfg, 4).unwrap();
    assert_eq!(a.encoder, b.encoder);
    assert_eq!(a.loss_curve, b.loss_curve);
    let c = pretrain_encoder(&ds.strip_labels(), &TrainConfig { seed: 9, ..cfg }, 4).unwrap();
    assert_ne!(a.encoder, c.encoder);
}
