#![allow(dead_code)]

use ssltsc::data::{segment_cohort, standardize_per_subject, Dataset};
use ssltsc::nn::{ClassifierConfig, EncoderConfig, EncoderKind};
use ssltsc::protocol::TrainConfig;
use ssltsc::synth::{generate_cohort, SynthConfig};

/// Small cohort: `n` subjects of 200 minutes, 15 windows each.
pub fn small_cohort(n: usize, seed: u64) -> Dataset {
    let cfg = SynthConfig {
        n_subjects: n,
        wear_minutes: 200,
        n_events_per_subject: 2,
        seed,
        ..SynthConfig::default()
    };
    let ds = segment_cohort(&generate_cohort(&cfg).unwrap(), 60, 10).unwrap();
    standardize_per_subject(&ds).0
}

/// A few epochs of a narrow MLP: enough to exercise every code path quickly.
pub fn quick_config(seed: u64) -> TrainConfig {
    TrainConfig {
        pretrain_epochs: 2,
        classifier_epochs: 3,
        batch_size: 16,
        encoder: EncoderConfig { kind: EncoderKind::Mlp, mlp_hidden: vec![16], embedding_dim: 8, ..Default::default() },
        classifier: ClassifierConfig { hidden: 8 },
        seed,
        ..TrainConfig::default()
    }
}
