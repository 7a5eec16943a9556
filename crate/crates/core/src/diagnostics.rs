//! Finite-difference verification of every layer type under both losses.

use serde::Serialize;

use crate::augment::{AugmentKind, AugmentSpec};
use crate::contrastive::{contrastive_batch_grad, ContrastiveConfig, Similarity};
use crate::error::Result;
use crate::nn::{
    cross_entropy_with_grads, grad_check_refined, ClassifierConfig, ClassifierParams, ConvSpec, EncoderConfig, EncoderKind,
    EncoderParams, GradCheckReport, Network, Params, Tensor2D,
};
use crate::rng::{self, Stream};

/// Relative-error threshold for analytic vs central-difference gradients.
pub const GRAD_TOLERANCE: f64 = 1e-4;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckCase {
    pub name: String,
    pub n_params: usize,
    pub max_rel_error: f64,
    pub worst: Option<(String, usize)>,
    pub refined: usize,
}

impl GradCheckCase {
    fn new(name: &str, r: GradCheckReport) -> Self {
        GradCheckCase { name: name.into(), n_params: r.n_params, max_rel_error: r.max_rel_error, worst: r.worst, refined: r.refined }
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error < GRAD_TOLERANCE
    }
}

/// The base step, then retries: a larger step for gradients small enough to drown
/// in round-off, and smaller steps for parameters sitting next to a ReLU kink.
fn steps(eps: f64) -> [f64; 5] {
    [eps, eps * 100.0, eps / 10.0, eps / 100.0, eps / 1000.0]
}

fn tiny_mlp() -> EncoderConfig {
    EncoderConfig { kind: EncoderKind::Mlp, mlp_hidden: vec![16], embedding_dim: 4, ..Default::default() }
}

fn tiny_cnn() -> EncoderConfig {
    EncoderConfig {
        kind: EncoderKind::Cnn,
        cnn_layers: vec![ConvSpec { channels: 3, kernel: 4, stride: 2 }, ConvSpec { channels: 4, kernel: 3, stride: 2 }],
        embedding_dim: 5,
        ..Default::default()
    }
}

fn signal_batch(rows: usize, len: usize, rng: &mut rng::Rng) -> Tensor2D {
    use rand::Rng as _;
    Tensor2D::from_vec(rows, len, (0..rows * len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape is consistent")
}

/// Zero-initialised biases put ReLU inputs exactly on the kink wherever a
/// patch is all zero; random biases keep central differences away from it.
fn randomize_biases<M: Params>(model: &mut M, rng: &mut rng::Rng) {
    use rand::Rng as _;
    let names: Vec<bool> = model.param_tensors().iter().map(|(n, _)| n.ends_with(".bias")).collect();
    for (t, is_bias) in model.param_tensors_mut().into_iter().zip(names) {
        if is_bias {
            t.iter_mut().for_each(|v| *v = rng.random_range(-0.2..0.2));
        }
    }
}

fn ce_case(name: &str, enc_cfg: &EncoderConfig, input_len: usize, seed: u64, eps: f64) -> Result<GradCheckCase> {
    let mut rng = rng::stream(seed, Stream::GradCheck, &[input_len as u64, enc_cfg.embedding_dim as u64]);
    let encoder = EncoderParams::init(enc_cfg, input_len, &mut rng)?;
    let classifier = ClassifierParams::init(&ClassifierConfig { hidden: 6 }, enc_cfg.embedding_dim, &mut rng)?;
    let mut net = Network { encoder, classifier };
    randomize_biases(&mut net, &mut rng);
    let x = signal_batch(6, input_len, &mut rng);
    let labels = [true, false, false, true, true, false];
    let report = grad_check_refined(&net, &steps(eps), GRAD_TOLERANCE, |m: &Network| {
        m.forward_backward(&x, |logits| cross_entropy_with_grads(logits, &labels))
    })?;
    Ok(GradCheckCase::new(name, report))
}

fn nt_xent_case(
    name: &str,
    enc_cfg: &EncoderConfig,
    input_len: usize,
    similarity: Similarity,
    seed: u64,
    eps: f64,
) -> Result<GradCheckCase> {
    let mut rng = rng::stream(seed, Stream::GradCheck, &[input_len as u64, 1 + enc_cfg.embedding_dim as u64]);
    let mut encoder = EncoderParams::init(enc_cfg, input_len, &mut rng)?;
    randomize_biases(&mut encoder, &mut rng);
    let x = signal_batch(3, input_len, &mut rng);
    let segs: Vec<&[f64]> = x.iter_rows().collect();
    let seeds = [seed ^ 11, seed ^ 12, seed ^ 13];
    let spec = AugmentSpec::new(AugmentKind::GaussianNoise);
    let cfg = ContrastiveConfig { tau: 0.5, similarity };
    let report = grad_check_refined(&encoder, &steps(eps), GRAD_TOLERANCE, |e: &EncoderParams| contrastive_batch_grad(&segs, &seeds, &spec, &cfg, e))?;
    Ok(GradCheckCase::new(name, report))
}

/// Gradient checks over MLP and CNN encoders (with classifier) under cross-entropy
/// and NT-Xent in both similarity modes.
pub fn standard_grad_checks(seed: u64, eps: f64) -> Result<Vec<GradCheckCase>> {
    Ok(vec![
        ce_case("mlp 8→16→4 + classifier, cross-entropy", &tiny_mlp(), 8, seed, eps)?,
        ce_case("cnn + classifier, cross-entropy", &tiny_cnn(), 32, seed, eps)?,
        nt_xent_case("cnn, nt-xent cosine", &tiny_cnn(), 32, Similarity::Cosine, seed, eps)?,
        nt_xent_case("cnn, nt-xent dot", &tiny_cnn(), 32, Similarity::Dot, seed, eps)?,
        nt_xent_case("mlp, nt-xent cosine", &tiny_mlp(), 8, Similarity::Cosine, seed, eps)?,
    ])
}
