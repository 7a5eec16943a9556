//! Contrastive self-supervised pretraining for univariate time-series windows,
//! frozen-encoder classification on scarce labels, and a leave-one-subject-out
//! evaluation harness driven by a seeded synthetic electrodermal cohort.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`]: recordings, windowing, event labels, per-subject standardization,
//!   LOSO splits and the dataset CSV format.
//! * [`synth`]: the seeded synthetic EDA cohort generator.
//! * [`augment`]: flip, blockout, crop-and-resize, Gaussian noise and the
//!   view-pair policy.
//! * [`nn`]: dense / 1-D convolution layers, cross-entropy, Adam, gradient checking.
//! * [`contrastive`]: similarity and the NT-Xent loss with analytic gradients.
//! * [`protocol`]: two-phase training and the supervised baseline.
//! * [`eval`]: metrics, LOSO, the label and subject sweeps and the augmentation table.
//! * [`cli`]: the `ssltsc` command line.

pub mod augment;
#[cfg(feature = "cli")]
pub mod cli;
pub mod contrastive;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod nn;
pub mod protocol;
pub mod rng;
pub mod synth;

pub use error::{Error, Result, Warning};
