use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, dot, Tensor2D};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fully connected layer, `y = x W + b` with `W` stored `[inputs × outputs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weight: (0..inputs * outputs).map(|_| rng.random_range(-a..a)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &Tensor2D) -> Tensor2D {
        let mut y = Tensor2D::zeros(x.rows(), self.outputs);
        for r in 0..x.rows() {
            let out = y.row_mut(r);
            out.copy_from_slice(&self.bias);
            for (i, &xi) in x.row(r).iter().enumerate() {
                if xi != 0.0 {
                    axpy(xi, &self.weight[i * self.outputs..(i + 1) * self.outputs], out);
                }
            }
        }
        y
    }

    fn backward(&self, x: &Tensor2D, g: &Tensor2D, need_dx: bool) -> (Vec<f64>, Vec<f64>, Option<Tensor2D>) {
        let mut dw = vec![0.0; self.weight.len()];
        let mut db = vec![0.0; self.outputs];
        let mut dx = need_dx.then(|| Tensor2D::zeros(x.rows(), self.inputs));
        for r in 0..x.rows() {
            let gr = g.row(r);
            axpy(1.0, gr, &mut db);
            for (i, &xi) in x.row(r).iter().enumerate() {
                if xi != 0.0 {
                    axpy(xi, gr, &mut dw[i * self.outputs..(i + 1) * self.outputs]);
                }
            }
            if let Some(dx) = dx.as_mut() {
                for (i, d) in dx.row_mut(r).iter_mut().enumerate() {
                    *d = dot(gr, &self.weight[i * self.outputs..(i + 1) * self.outputs]);
                }
            }
        }
        (dw, db, dx)
    }
}

/// Valid (unpadded) strided 1-D convolution. Weight is `[out_channels × (in_channels · kernel)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub in_len: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn init(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        in_len: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 || kernel > in_len {
            return Err(Error::invalid(format!(
                "conv kernel {kernel} / stride {stride} incompatible with input length {in_len}"
            )));
        }
        let fan_in = in_channels * kernel;
        let fan_out = out_channels * kernel;
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Ok(Conv1d {
            in_channels,
            out_channels,
            kernel,
            stride,
            in_len,
            weight: (0..out_channels * fan_in).map(|_| rng.random_range(-a..a)).collect(),
            bias: vec![0.0; out_channels],
        })
    }

    pub fn out_len(&self) -> usize {
        (self.in_len - self.kernel) / self.stride + 1
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel
    }

    /// Unfold one sample into `[out_len × (in_channels · kernel)]` patches.
    fn im2col(&self, x: &[f64], cols: &mut [f64]) {
        let pl = self.patch_len();
        for p in 0..self.out_len() {
            let patch = &mut cols[p * pl..(p + 1) * pl];
            for c in 0..self.in_channels {
                let src = c * self.in_len + p * self.stride;
                patch[c * self.kernel..(c + 1) * self.kernel].copy_from_slice(&x[src..src + self.kernel]);
            }
        }
    }

    fn forward(&self, x: &Tensor2D) -> Tensor2D {
        let (ol, pl) = (self.out_len(), self.patch_len());
        let mut y = Tensor2D::zeros(x.rows(), self.out_channels * ol);
        let mut cols = vec![0.0; ol * pl];
        for r in 0..x.rows() {
            self.im2col(x.row(r), &mut cols);
            let out = y.row_mut(r);
            for o in 0..self.out_channels {
                let w = &self.weight[o * pl..(o + 1) * pl];
                for p in 0..ol {
                    out[o * ol + p] = self.bias[o] + dot(w, &cols[p * pl..(p + 1) * pl]);
                }
            }
        }
        y
    }

    fn backward(&self, x: &Tensor2D, g: &Tensor2D, need_dx: bool) -> (Vec<f64>, Vec<f64>, Option<Tensor2D>) {
        let (ol, pl) = (self.out_len(), self.patch_len());
        let mut dw = vec![0.0; self.weight.len()];
        let mut db = vec![0.0; self.out_channels];
        let mut dx = need_dx.then(|| Tensor2D::zeros(x.rows(), self.in_channels * self.in_len));
        let mut cols = vec![0.0; ol * pl];
        let mut dcols = vec![0.0; ol * pl];
        for r in 0..x.rows() {
            self.im2col(x.row(r), &mut cols);
            dcols.iter_mut().for_each(|v| *v = 0.0);
            let gr = g.row(r);
            for o in 0..self.out_channels {
                let w = &self.weight[o * pl..(o + 1) * pl];
                let dwo = &mut dw[o * pl..(o + 1) * pl];
                for p in 0..ol {
                    let go = gr[o * ol + p];
                    if go == 0.0 {
                        continue;
                    }
                    db[o] += go;
                    axpy(go, &cols[p * pl..(p + 1) * pl], dwo);
                    if need_dx {
                        axpy(go, w, &mut dcols[p * pl..(p + 1) * pl]);
                    }
                }
            }
            let Some(dx) = dx.as_mut() else { continue };
            let dxr = dx.row_mut(r);
            for p in 0..ol {
                for c in 0..self.in_channels {
                    let dst = c * self.in_len + p * self.stride;
                    let src = &dcols[p * pl + c * self.kernel..p * pl + (c + 1) * self.kernel];
                    axpy(1.0, src, &mut dxr[dst..dst + self.kernel]);
                }
            }
        }
        (dw, db, dx)
    }
}

type WeightBiasGrads = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Relu { width: usize },
    /// Mean over time of a channel-major row.
    GlobalAvgPool { channels: usize, len: usize },
}

impl Layer {
    pub fn input_width(&self) -> usize {
        match self {
            Layer::Dense(d) => d.inputs,
            Layer::Conv1d(c) => c.in_channels * c.in_len,
            Layer::Relu { width } => *width,
            Layer::GlobalAvgPool { channels, len } => channels * len,
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Layer::Dense(d) => d.outputs,
            Layer::Conv1d(c) => c.out_channels * c.out_len(),
            Layer::Relu { width } => *width,
            Layer::GlobalAvgPool { channels, .. } => *channels,
        }
    }

    fn forward(&self, x: &Tensor2D) -> Tensor2D {
        match self {
            Layer::Dense(d) => d.forward(x),
            Layer::Conv1d(c) => c.forward(x),
            Layer::Relu { .. } => {
                let mut y = x.clone();
                y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                y
            }
            Layer::GlobalAvgPool { channels, len } => {
                let mut y = Tensor2D::zeros(x.rows(), *channels);
                for r in 0..x.rows() {
                    let xr = x.row(r);
                    for (c, out) in y.row_mut(r).iter_mut().enumerate() {
                        *out = xr[c * len..(c + 1) * len].iter().sum::<f64>() / *len as f64;
                    }
                }
                y
            }
        }
    }

    /// Returns parameter gradients (weight, bias) when the layer has them, and
    /// the input gradient when `need_dx` is set.
    fn backward(&self, x: &Tensor2D, g: &Tensor2D, need_dx: bool) -> (Option<WeightBiasGrads>, Option<Tensor2D>) {
        match self {
            Layer::Dense(d) => {
                let (dw, db, dx) = d.backward(x, g, need_dx);
                (Some((dw, db)), dx)
            }
            Layer::Conv1d(c) => {
                let (dw, db, dx) = c.backward(x, g, need_dx);
                (Some((dw, db)), dx)
            }
            _ if !need_dx => (None, None),
            Layer::Relu { .. } => {
                let mut dx = g.clone();
                // Sub-gradient at 0 is 0.
                for (d, &xi) in dx.data_mut().iter_mut().zip(x.data()) {
                    if xi <= 0.0 {
                        *d = 0.0;
                    }
                }
                (None, Some(dx))
            }
            Layer::GlobalAvgPool { channels, len } => {
                let mut dx = Tensor2D::zeros(x.rows(), channels * len);
                let inv = 1.0 / *len as f64;
                for r in 0..x.rows() {
                    let gr = g.row(r).to_vec();
                    let dxr = dx.row_mut(r);
                    for (c, gc) in gr.iter().enumerate() {
                        dxr[c * len..(c + 1) * len].iter_mut().for_each(|v| *v = gc * inv);
                    }
                }
                (None, Some(dx))
            }
        }
    }

    fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Dense(d) => Some((&d.weight, &d.bias)),
            Layer::Conv1d(c) => Some((&c.weight, &c.bias)),
            _ => None,
        }
    }

    fn params_mut(&mut self) -> Option<(&mut [f64], &mut [f64])> {
        match self {
            Layer::Dense(d) => Some((&mut d.weight, &mut d.bias)),
            Layer::Conv1d(c) => Some((&mut c.weight, &mut c.bias)),
            _ => None,
        }
    }
}

/// Inputs recorded by a forward pass, one per layer.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    inputs: Vec<Tensor2D>,
}

impl Tape {
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequential {
    pub layers: Vec<Layer>,
}

impl Sequential {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_width() != pair[1].input_width() {
                return Err(Error::ShapeMismatch {
                    expected: pair[0].output_width(),
                    actual: pair[1].input_width(),
                });
            }
        }
        Ok(Sequential { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width()
    }

    fn check_input(&self, x: &Tensor2D) -> Result<()> {
        if x.cols() != self.input_width() {
            return Err(Error::ShapeMismatch { expected: self.input_width(), actual: x.cols() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<Tensor2D> {
        self.check_input(x)?;
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
        }
        Ok(h)
    }

    pub fn forward_tape(&self, x: &Tensor2D) -> Result<(Tensor2D, Tape)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let next = layer.forward(&h);
            inputs.push(h);
            h = next;
        }
        Ok((h, Tape { inputs }))
    }

    /// Parameter gradients in [`Sequential::param_tensors`] order, and the input gradient.
    pub fn backward(&self, tape: &Tape, upstream: &Tensor2D) -> Result<(Vec<Vec<f64>>, Tensor2D)> {
        let (grads, dx) = self.backward_impl(tape, upstream, true)?;
        Ok((grads, dx.expect("input gradient was requested")))
    }

    /// Parameter gradients only; skips the input gradient of the first layer.
    pub fn param_grads(&self, tape: &Tape, upstream: &Tensor2D) -> Result<Vec<Vec<f64>>> {
        Ok(self.backward_impl(tape, upstream, false)?.0)
    }

    fn backward_impl(&self, tape: &Tape, upstream: &Tensor2D, input_grad: bool) -> Result<(Vec<Vec<f64>>, Option<Tensor2D>)> {
        if tape.inputs.len() != self.layers.len() {
            return Err(Error::NoForwardPass);
        }
        let rows = tape.inputs[0].rows();
        if upstream.rows() != rows || upstream.cols() != self.output_width() {
            return Err(Error::ShapeMismatch {
                expected: self.output_width(),
                actual: upstream.cols(),
            });
        }
        let mut grads_rev = Vec::new();
        let mut g = Some(upstream.clone());
        for (i, (layer, x)) in self.layers.iter().zip(&tape.inputs).enumerate().rev() {
            let upstream = g.take().expect("every layer above the first yields an input gradient");
            let (pg, dx) = layer.backward(x, &upstream, i > 0 || input_grad);
            if let Some((dw, db)) = pg {
                grads_rev.push(db);
                grads_rev.push(dw);
            }
            g = dx;
        }
        grads_rev.reverse();
        Ok((grads_rev, g))
    }

    pub fn param_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some((w, b)) = layer.params() {
                out.push((format!("layer{i}.weight"), w));
                out.push((format!("layer{i}.bias"), b));
            }
        }
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Some((w, b)) = layer.params_mut() {
                out.push(w);
                out.push(b);
            }
        }
        out
    }
}
