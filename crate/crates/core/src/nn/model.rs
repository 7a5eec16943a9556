use serde::{Deserialize, Serialize};

use super::layers::{Conv1d, Dense, Layer, Sequential, Tape};
use super::loss::argmax_rows;
use super::tensor::Tensor2D;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Access to the trainable tensors of a model, in a fixed order.
pub trait Params {
    fn param_tensors(&self) -> Vec<(String, &[f64])>;
    fn param_tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

impl Params for Sequential {
    fn param_tensors(&self) -> Vec<(String, &[f64])> {
        Sequential::param_tensors(self)
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        Sequential::param_tensors_mut(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Mlp,
    Cnn,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Mlp => "mlp",
            EncoderKind::Cnn => "cnn",
        }
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(EncoderKind::Mlp),
            "cnn" => Ok(EncoderKind::Cnn),
            other => Err(Error::invalid(format!("unknown encoder {other:?} (expected mlp or cnn)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Hidden widths of the MLP encoder; the embedding layer follows.
    pub mlp_hidden: Vec<usize>,
    pub cnn_layers: Vec<ConvSpec>,
    pub embedding_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::Mlp,
            mlp_hidden: vec![256, 128],
            cnn_layers: vec![
                ConvSpec { channels: 16, kernel: 8, stride: 4 },
                ConvSpec { channels: 32, kernel: 8, stride: 4 },
            ],
            embedding_dim: 64,
        }
    }
}

/// Encoder network mapping a `[B × T]` batch to `[B × embedding_dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub kind: EncoderKind,
    pub input_len: usize,
    pub embedding_dim: usize,
    pub net: Sequential,
}

impl EncoderParams {
    pub fn init(cfg: &EncoderConfig, input_len: usize, rng: &mut Rng) -> Result<Self> {
        if cfg.embedding_dim == 0 || input_len == 0 {
            return Err(Error::invalid("embedding_dim and input length must be positive"));
        }
        let mut layers = Vec::new();
        let last_width = match cfg.kind {
            EncoderKind::Mlp => {
                let mut width = input_len;
                for &h in &cfg.mlp_hidden {
                    layers.push(Layer::Dense(Dense::init(width, h, rng)));
                    layers.push(Layer::Relu { width: h });
                    width = h;
                }
                width
            }
            EncoderKind::Cnn => {
                if cfg.cnn_layers.is_empty() {
                    return Err(Error::invalid("cnn encoder needs at least one conv layer"));
                }
                let (mut channels, mut len) = (1, input_len);
                for spec in &cfg.cnn_layers {
                    let conv = Conv1d::init(channels, spec.channels, spec.kernel, spec.stride, len, rng)?;
                    len = conv.out_len();
                    channels = spec.channels;
                    layers.push(Layer::Conv1d(conv));
                    layers.push(Layer::Relu { width: channels * len });
                }
                layers.push(Layer::GlobalAvgPool { channels, len });
                channels
            }
        };
        layers.push(Layer::Dense(Dense::init(last_width, cfg.embedding_dim, rng)));
        Ok(EncoderParams { kind: cfg.kind, input_len, embedding_dim: cfg.embedding_dim, net: Sequential::new(layers)? })
    }

    pub fn encode(&self, batch: &Tensor2D) -> Result<Tensor2D> {
        self.net.forward(batch)
    }

    pub fn encode_tape(&self, batch: &Tensor2D) -> Result<(Tensor2D, Tape)> {
        self.net.forward_tape(batch)
    }

    pub fn backward(&self, tape: &Tape, upstream: &Tensor2D) -> Result<Vec<Vec<f64>>> {
        self.net.param_grads(tape, upstream)
    }
}

impl Params for EncoderParams {
    fn param_tensors(&self) -> Vec<(String, &[f64])> {
        self.net.param_tensors().into_iter().map(|(n, t)| (format!("encoder.{n}"), t)).collect()
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.net.param_tensors_mut()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { hidden: 32 }
    }
}

/// Shallow head: dense → ReLU → dense to two logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub embedding_dim: usize,
    pub hidden: usize,
    pub net: Sequential,
}

pub const N_CLASSES: usize = 2;

impl ClassifierParams {
    pub fn init(cfg: &ClassifierConfig, embedding_dim: usize, rng: &mut Rng) -> Result<Self> {
        if cfg.hidden == 0 {
            return Err(Error::invalid("classifier hidden width must be positive"));
        }
        let net = Sequential::new(vec![
            Layer::Dense(Dense::init(embedding_dim, cfg.hidden, rng)),
            Layer::Relu { width: cfg.hidden },
            Layer::Dense(Dense::init(cfg.hidden, N_CLASSES, rng)),
        ])?;
        Ok(ClassifierParams { embedding_dim, hidden: cfg.hidden, net })
    }

    pub fn classify(&self, embeddings: &Tensor2D) -> Result<Tensor2D> {
        self.net.forward(embeddings)
    }

    /// Argmax of the logits; ties go to class 0 (false).
    pub fn predict(&self, embeddings: &Tensor2D) -> Result<Vec<bool>> {
        Ok(argmax_rows(&self.classify(embeddings)?).into_iter().map(|c| c == 1).collect())
    }
}

impl Params for ClassifierParams {
    fn param_tensors(&self) -> Vec<(String, &[f64])> {
        self.net.param_tensors().into_iter().map(|(n, t)| (format!("classifier.{n}"), t)).collect()
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.net.param_tensors_mut()
    }
}

/// Encoder followed by classifier, trained jointly by the supervised baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub encoder: EncoderParams,
    pub classifier: ClassifierParams,
}

impl Network {
    pub fn logits(&self, batch: &Tensor2D) -> Result<Tensor2D> {
        self.classifier.classify(&self.encoder.encode(batch)?)
    }

    /// Forward through both parts and backpropagate `upstream` (gradient w.r.t. logits)
    /// via `loss_grad`, returning encoder gradients followed by classifier gradients.
    pub fn forward_backward<F>(&self, batch: &Tensor2D, loss_grad: F) -> Result<(f64, Vec<Vec<f64>>)>
    where
        F: FnOnce(&Tensor2D) -> Result<(f64, Tensor2D)>,
    {
        let (z, enc_tape) = self.encoder.encode_tape(batch)?;
        let (logits, cls_tape) = self.classifier.net.forward_tape(&z)?;
        let (loss, g_logits) = loss_grad(&logits)?;
        let (mut cls_grads, g_z) = self.classifier.net.backward(&cls_tape, &g_logits)?;
        let mut grads = self.encoder.backward(&enc_tape, &g_z)?;
        grads.append(&mut cls_grads);
        Ok((loss, grads))
    }
}

impl Params for Network {
    fn param_tensors(&self) -> Vec<(String, &[f64])> {
        let mut t = self.encoder.param_tensors();
        t.extend(self.classifier.param_tensors());
        t
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.param_tensors_mut();
        t.extend(self.classifier.param_tensors_mut());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    fn zero(params: &mut impl Params) {
        for t in params.param_tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    #[test]
    fn encoder_shapes() {
        let mut rng = from_seed(1);
        let batch = Tensor2D::from_vec(32, 240, (0..32 * 240).map(|k| (k as f64 * 0.01).sin()).collect()).unwrap();
        for kind in [EncoderKind::Mlp, EncoderKind::Cnn] {
            let cfg = EncoderConfig { kind, ..Default::default() };
            let enc = EncoderParams::init(&cfg, 240, &mut rng).unwrap();
            let z = enc.encode(&batch).unwrap();
            assert_eq!(z.shape(), (32, 64));
            assert_eq!(enc.encode(&batch).unwrap(), z);
        }
        let enc = EncoderParams::init(&EncoderConfig::default(), 240, &mut rng).unwrap();
        match enc.encode(&Tensor2D::zeros(1, 100)) {
            Err(Error::ShapeMismatch { expected: 240, actual: 100 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_weights_give_zero_embeddings() {
        let mut rng = from_seed(2);
        let mut enc = EncoderParams::init(&EncoderConfig { kind: EncoderKind::Cnn, ..Default::default() }, 240, &mut rng).unwrap();
        zero(&mut enc);
        let batch = Tensor2D::from_vec(2, 240, vec![1.5; 480]).unwrap();
        assert!(enc.encode(&batch).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_classifier_predicts_class_zero() {
        let mut rng = from_seed(3);
        let mut cls = ClassifierParams::init(&ClassifierConfig::default(), 8, &mut rng).unwrap();
        zero(&mut cls);
        let emb = Tensor2D::from_vec(3, 8, (0..24).map(f64::from).collect()).unwrap();
        let logits = cls.classify(&emb).unwrap();
        assert_eq!(logits.shape(), (3, 2));
        assert_eq!(cls.predict(&emb).unwrap(), vec![false; 3]);
        let one = cls.classify(&Tensor2D::zeros(1, 8)).unwrap();
        assert_eq!(one.shape(), (1, 2));
    }

    #[test]
    fn default_parameter_counts() {
        let mut rng = from_seed(4);
        let mlp = EncoderParams::init(&EncoderConfig::default(), 240, &mut rng).unwrap();
        assert_eq!(mlp.param_count(), 240 * 256 + 256 + 256 * 128 + 128 + 128 * 64 + 64);
        let cnn = EncoderParams::init(&EncoderConfig { kind: EncoderKind::Cnn, ..Default::default() }, 240, &mut rng).unwrap();
        assert_eq!(cnn.param_count(), 16 * 8 + 16 + 32 * 16 * 8 + 32 + 32 * 64 + 64);
    }
}
