//! A small, dependency-free neural network kernel.
//!
//! Activations flow as row-major [`Tensor2D`] batches. Convolutional layers keep
//! each row channel-major (`c * len + t`). Every layer has a hand-written
//! backward pass; [`gradcheck`] verifies them against central differences.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod model;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, grad_check_refined, GradCheckReport};
pub use layers::{Conv1d, Dense, Layer, Sequential, Tape};
pub use loss::{argmax_rows, cross_entropy_with_grads};
pub use model::{
    ClassifierConfig, ClassifierParams, ConvSpec, EncoderConfig, EncoderKind, EncoderParams, Network, Params,
};
pub use tensor::Tensor2D;
