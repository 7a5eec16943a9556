//! Pairwise similarity and the NT-Xent contrastive loss.
//!
//! A batch holds `2N` embeddings where rows `2t` and `2t + 1` are the two views
//! of source segment `t`. For every ordered positive pair `(i, j)`:
//!
//! ```text
//! l(i, j) = -log( exp(sim(z_i, z_j) / τ) / Σ_{k ≠ i} exp(sim(z_i, z_k) / τ) )
//! ```
//!
//! and the batch loss is the mean of `l` over all `2N` ordered pairs.

use serde::{Deserialize, Serialize};

use crate::augment::{make_view_pair, AugmentSpec};
use crate::error::{Error, Result};
use crate::nn::tensor::dot;
use crate::nn::{EncoderParams, Tensor2D};
use crate::rng;

/// Norm at or below which a vector counts as zero: its cosine similarity to
/// anything is 0 and it receives no gradient.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    #[default]
    Cosine,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContrastiveConfig {
    pub tau: f64,
    pub similarity: Similarity,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig { tau: 0.05, similarity: Similarity::Cosine }
    }
}

pub fn similarity(u: &[f64], v: &[f64], mode: Similarity) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch { expected: u.len(), actual: v.len() });
    }
    let d = dot(u, v);
    match mode {
        Similarity::Dot => Ok(d),
        Similarity::Cosine => {
            let (nu, nv) = (dot(u, u).sqrt(), dot(v, v).sqrt());
            if nu <= MIN_NORM || nv <= MIN_NORM {
                return Ok(0.0);
            }
            Ok(d / (nu * nv))
        }
    }
}

/// Index of the positive partner of row `a`.
#[inline]
pub fn partner(a: usize) -> usize {
    a ^ 1
}

/// NT-Xent loss of a `[2N × d]` batch and its gradient with respect to the embeddings.
pub fn nt_xent_loss(embeddings: &Tensor2D, cfg: &ContrastiveConfig) -> Result<(f64, Tensor2D)> {
    let (n2, d) = embeddings.shape();
    if n2 == 0 {
        return Err(Error::EmptyBatch);
    }
    if n2 % 2 != 0 {
        return Err(Error::invalid(format!("contrastive batch needs an even row count, got {n2}")));
    }
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::invalid(format!("temperature must be positive, got {}", cfg.tau)));
    }
    if !embeddings.is_finite() {
        return Err(Error::invalid("embeddings contain non-finite values"));
    }

    // Rows actually compared, and their original norms in cosine mode.
    // A zero row stays zero; its norm is marked 0 so it gets no gradient.
    let mut u = embeddings.clone();
    let mut norms = vec![1.0; n2];
    if cfg.similarity == Similarity::Cosine {
        for a in 0..n2 {
            let row = u.row_mut(a);
            let n = dot(row, row).sqrt();
            if n <= MIN_NORM {
                row.iter_mut().for_each(|v| *v = 0.0);
                norms[a] = 0.0;
            } else {
                row.iter_mut().for_each(|v| *v /= n);
                norms[a] = n;
            }
        }
    }

    let inv_tau = 1.0 / cfg.tau;
    let mut s = vec![0.0; n2 * n2];
    for a in 0..n2 {
        for b in a..n2 {
            let v = dot(u.row(a), u.row(b)) * inv_tau;
            s[a * n2 + b] = v;
            s[b * n2 + a] = v;
        }
    }

    // g[a][b] = dL/ds_ab, counting only the appearance of s_ab inside l_a.
    let scale = 1.0 / n2 as f64;
    let mut g = vec![0.0; n2 * n2];
    let mut total = 0.0;
    for a in 0..n2 {
        let row = &s[a * n2..(a + 1) * n2];
        let m = row.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, &v)| (v - m).exp()).sum();
        let lse = m + sum.ln();
        let p = partner(a);
        total += lse - row[p];
        for k in (0..n2).filter(|&k| k != a) {
            let prob = (row[k] - lse).exp();
            g[a * n2 + k] = (prob - if k == p { 1.0 } else { 0.0 }) * scale;
        }
    }
    let loss = total * scale;

    let mut grad = Tensor2D::zeros(n2, d);
    for a in 0..n2 {
        let ga = grad.row_mut(a);
        for b in (0..n2).filter(|&b| b != a) {
            let coeff = (g[a * n2 + b] + g[b * n2 + a]) * inv_tau;
            if coeff != 0.0 {
                for (x, y) in ga.iter_mut().zip(u.row(b)) {
                    *x += coeff * y;
                }
            }
        }
    }
    if cfg.similarity == Similarity::Cosine {
        for a in 0..n2 {
            let ua = u.row(a).to_vec();
            let ga = grad.row_mut(a);
            if norms[a] == 0.0 {
                ga.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let radial = dot(ga, &ua);
            for (x, y) in ga.iter_mut().zip(&ua) {
                *x = (*x - radial * y) / norms[a];
            }
        }
    }
    Ok((loss, grad))
}

/// Stack the two views of every segment: rows `2t` and `2t + 1` come from `segments[t]`,
/// augmented with an RNG seeded by `view_seeds[t]`.
pub fn view_batch(segments: &[&[f64]], view_seeds: &[u64], spec: &AugmentSpec) -> Result<Tensor2D> {
    if segments.len() != view_seeds.len() {
        return Err(Error::ShapeMismatch { expected: segments.len(), actual: view_seeds.len() });
    }
    let mut rows = Vec::with_capacity(2 * segments.len());
    for (x, &seed) in segments.iter().zip(view_seeds) {
        let (a, b) = make_view_pair(x, spec, &mut rng::from_seed(seed))?;
        rows.push(a);
        rows.push(b);
    }
    Tensor2D::from_rows(&rows)
}

/// Contrastive loss of one batch and its gradient with respect to the encoder parameters.
pub fn contrastive_batch_grad(
    segments: &[&[f64]],
    view_seeds: &[u64],
    spec: &AugmentSpec,
    cfg: &ContrastiveConfig,
    encoder: &EncoderParams,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if segments.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let views = view_batch(segments, view_seeds, spec)?;
    let (z, tape) = encoder.encode_tape(&views)?;
    let (loss, dz) = nt_xent_loss(&z, cfg)?;
    Ok((loss, encoder.backward(&tape, &dz)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: &[&[f64]]) -> Tensor2D {
        Tensor2D::from_rows(rows).unwrap()
    }

    #[test]
    fn similarity_examples() {
        for mode in [Similarity::Cosine, Similarity::Dot] {
            assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0], mode).unwrap(), 0.0);
        }
        assert!((similarity(&[1.0, 2.0], &[2.0, 4.0], Similarity::Cosine).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(similarity(&[1.0, 2.0], &[3.0, 4.0], Similarity::Dot).unwrap(), 11.0);
        assert_eq!(similarity(&[0.0, 0.0], &[1.0, 0.0], Similarity::Cosine).unwrap(), 0.0);
    }

    #[test]
    fn single_pair_loss_is_exactly_zero() {
        let cfg = ContrastiveConfig::default();
        let (loss, grad) = nt_xent_loss(&batch(&[&[0.3, -1.0], &[2.0, 0.5]]), &cfg).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_pair_hand_values() {
        let b = batch(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let cfg = ContrastiveConfig { tau: 1.0, similarity: Similarity::Cosine };
        let (loss, _) = nt_xent_loss(&b, &cfg).unwrap();
        let e = std::f64::consts::E;
        let expected = ((e + 2.0) / e).ln();
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 0.551445).abs() < 1e-6);

        let (cold, _) = nt_xent_loss(&b, &ContrastiveConfig { tau: 0.05, ..cfg }).unwrap();
        assert!(cold < 1e-8 && cold >= 0.0, "{cold}");
    }

    #[test]
    fn invalid_batches() {
        let cfg = ContrastiveConfig::default();
        assert!(matches!(nt_xent_loss(&Tensor2D::zeros(0, 3), &cfg), Err(Error::EmptyBatch)));
        assert!(nt_xent_loss(&Tensor2D::zeros(3, 2), &cfg).is_err());
        let b = batch(&[&[1.0], &[2.0]]);
        assert!(nt_xent_loss(&b, &ContrastiveConfig { tau: 0.0, ..cfg }).is_err());
        assert!(nt_xent_loss(&batch(&[&[f64::NAN], &[1.0]]), &cfg).is_err());
    }

    #[test]
    fn zero_embeddings_are_safe() {
        let b = batch(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let (loss, grad) = nt_xent_loss(&b, &ContrastiveConfig::default()).unwrap();
        assert!(loss.is_finite() && grad.is_finite());
        assert!(grad.row(0).iter().all(|&v| v == 0.0));
        let (loss, grad) = nt_xent_loss(&Tensor2D::zeros(2, 2), &ContrastiveConfig::default()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cold_temperature_stays_finite() {
        let b = batch(&[&[1.0, 0.0], &[-1.0, 0.0], &[1.0, 1e-3], &[0.0, 1.0]]);
        let (loss, grad) = nt_xent_loss(&b, &ContrastiveConfig { tau: 1e-4, similarity: Similarity::Dot }).unwrap();
        assert!(loss.is_finite() && grad.is_finite());
    }
}
