//! View transforms for contrastive pretraining.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    Flip,
    Blockout,
    CropResize,
    GaussianNoise,
}

impl AugmentKind {
    pub const ALL: [AugmentKind; 4] =
        [AugmentKind::Flip, AugmentKind::Blockout, AugmentKind::CropResize, AugmentKind::GaussianNoise];

    pub fn name(self) -> &'static str {
        match self {
            AugmentKind::Flip => "flip",
            AugmentKind::Blockout => "blockout",
            AugmentKind::CropResize => "crop_resize",
            AugmentKind::GaussianNoise => "gaussian_noise",
        }
    }
}

impl std::str::FromStr for AugmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugmentKind::ALL
            .into_iter()
            .find(|k| k.name() == s || (s == "noise" && *k == AugmentKind::GaussianNoise))
            .ok_or_else(|| Error::invalid(format!("unknown augmentation {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockoutMode {
    /// One contiguous run of zeros.
    #[default]
    Contiguous,
    /// Zeroed entries chosen independently without replacement.
    Scattered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSpec {
    pub kind: AugmentKind,
    /// Blockout fraction.
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub blockout_mode: BlockoutMode,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            kind: AugmentKind::CropResize,
            lambda: 0.1,
            mu: 0.0,
            sigma: 0.1,
            blockout_mode: BlockoutMode::Contiguous,
        }
    }
}

impl AugmentSpec {
    pub fn new(kind: AugmentKind) -> Self {
        AugmentSpec { kind, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || !self.mu.is_finite() {
            return Err(Error::invalid("gaussian noise needs finite mu and sigma ≥ 0"));
        }
        Ok(())
    }

    /// Apply the transform once.
    pub fn apply(&self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        match self.kind {
            AugmentKind::Flip => Ok(flip(x)),
            AugmentKind::Blockout => Ok(blockout_with(x, self.lambda, self.blockout_mode, rng)),
            AugmentKind::CropResize => crop_resize(x, rng),
            AugmentKind::GaussianNoise => gaussian_noise(x, self.mu, self.sigma, rng),
        }
    }
}

/// Reverse the time axis.
pub fn flip(x: &[f64]) -> Vec<f64> {
    x.iter().rev().copied().collect()
}

/// Number of entries blockout zeroes for length `t`.
pub fn blockout_len(t: usize, lambda: f64) -> usize {
    ((lambda * t as f64).round() as usize).min(t)
}

/// Zero one contiguous run of `round(lambda * T)` entries at a uniform offset.
pub fn blockout(x: &[f64], lambda: f64, rng: &mut Rng) -> Vec<f64> {
    blockout_with(x, lambda, BlockoutMode::Contiguous, rng)
}

pub fn blockout_with(x: &[f64], lambda: f64, mode: BlockoutMode, rng: &mut Rng) -> Vec<f64> {
    let len = blockout_len(x.len(), lambda);
    let mut out = x.to_vec();
    if len == 0 {
        return out;
    }
    match mode {
        BlockoutMode::Contiguous => {
            let start = rng.random_range(0..=x.len() - len);
            out[start..start + len].iter_mut().for_each(|v| *v = 0.0);
        }
        BlockoutMode::Scattered => {
            for k in rand::seq::index::sample(rng, x.len(), len) {
                out[k] = 0.0;
            }
        }
    }
    out
}

/// Crop half of the segment starting at `start` and stretch it back to full length.
///
/// Even outputs copy the crop; odd outputs average two successive crop values.
/// The final odd output has no successor inside the crop and repeats the last value.
pub fn crop_resize_at(x: &[f64], start: usize) -> Result<Vec<f64>> {
    let t = x.len();
    if t < 4 || t % 2 != 0 {
        return Err(Error::invalid(format!("crop_resize needs an even length ≥ 4, got {t}")));
    }
    let half = t / 2;
    if start >= half {
        return Err(Error::invalid(format!("crop start {start} must be < {half}")));
    }
    let crop = &x[start..start + half];
    Ok((0..t)
        .map(|k| {
            let j = k / 2;
            if k % 2 == 0 {
                crop[j]
            } else {
                let next = crop[(j + 1).min(half - 1)];
                crop[j] + (next - crop[j]) / 2.0
            }
        })
        .collect())
}

pub fn crop_resize(x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    if x.len() < 4 || x.len() % 2 != 0 {
        return crop_resize_at(x, 0);
    }
    let start = rng.random_range(0..x.len() / 2);
    crop_resize_at(x, start)
}

/// Add iid `Normal(mu, sigma)` noise.
pub fn gaussian_noise(x: &[f64], mu: f64, sigma: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let dist = Normal::new(mu, sigma).map_err(|e| Error::invalid(format!("gaussian noise: {e}")))?;
    if sigma == 0.0 {
        return Ok(x.iter().map(|v| v + mu).collect());
    }
    Ok(x.iter().map(|v| v + dist.sample(rng)).collect())
}

/// Two views of one segment. Stochastic kinds are applied twice independently;
/// flip is deterministic, so its pair is (original, flipped).
pub fn make_view_pair(x: &[f64], spec: &AugmentSpec, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    match spec.kind {
        AugmentKind::Flip => Ok((x.to_vec(), flip(x))),
        _ => {
            let a = spec.apply(x, rng)?;
            let b = spec.apply(x, rng)?;
            Ok((a, b))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn flip_examples() {
        assert_eq!(flip(&[1.0, 2.0, 3.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(flip(&[1.0, 2.0, 1.0]), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn blockout_examples() {
        let mut rng = from_seed(1);
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(blockout(&x, 0.0, &mut rng), x);
        let one = blockout(&x, 0.1, &mut rng);
        assert_eq!(one.iter().filter(|&&v| v == 0.0).count(), 1);
        assert_eq!(blockout(&x, 1.0, &mut rng), vec![0.0; 10]);

        let ones = vec![1.0; 10];
        let out = blockout(&ones, 0.3, &mut rng);
        let zeros: Vec<usize> = (0..10).filter(|&k| out[k] == 0.0).collect();
        assert_eq!(zeros.len(), 3);
        assert_eq!(zeros[2] - zeros[0], 2);
        assert_eq!(out.iter().filter(|&&v| v == 1.0).count(), 7);
    }

    #[test]
    fn scattered_blockout_counts() {
        let mut rng = from_seed(2);
        let ones = vec![1.0; 50];
        let out = blockout_with(&ones, 0.2, BlockoutMode::Scattered, &mut rng);
        assert_eq!(out.iter().filter(|&&v| v == 0.0).count(), 10);
    }

    #[test]
    fn crop_resize_trace_with_clamp() {
        assert_eq!(crop_resize_at(&[0.0, 1.0, 2.0, 3.0], 0).unwrap(), vec![0.0, 0.5, 1.0, 1.0]);
        assert_eq!(crop_resize_at(&[0.0, 1.0, 2.0, 3.0], 1).unwrap(), vec![1.0, 1.5, 2.0, 2.0]);
        assert!(crop_resize_at(&[0.0; 5], 0).is_err());
        assert!(crop_resize_at(&[0.0; 2], 0).is_err());
        assert!(crop_resize_at(&[0.0; 8], 4).is_err());
        let mut rng = from_seed(3);
        assert_eq!(crop_resize(&[2.5; 12], &mut rng).unwrap(), vec![2.5; 12]);
    }

    #[test]
    fn gaussian_noise_examples() {
        let mut rng = from_seed(4);
        let x = [1.0, -2.0, 3.0];
        assert_eq!(gaussian_noise(&x, 0.0, 0.0, &mut rng).unwrap(), x.to_vec());
        assert_eq!(gaussian_noise(&x, 5.0, 0.0, &mut rng).unwrap(), vec![6.0, 3.0, 8.0]);
        let zeros = vec![0.0; 10_000];
        let out = gaussian_noise(&zeros, 0.0, 0.1, &mut rng).unwrap();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!(mean.abs() < 3.0 * 0.1 / 100.0, "{mean}");
    }

    #[test]
    fn view_pairs() {
        let x = [1.0, 2.0, 3.0];
        let mut rng = from_seed(5);
        let (a, b) = make_view_pair(&x, &AugmentSpec::new(AugmentKind::Flip), &mut rng).unwrap();
        assert_eq!((a, b), (vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]));

        let spec = AugmentSpec { sigma: 0.0, ..AugmentSpec::new(AugmentKind::GaussianNoise) };
        let (a, b) = make_view_pair(&x, &spec, &mut rng).unwrap();
        assert_eq!((a.as_slice(), b.as_slice()), (&x[..], &x[..]));

        let y: Vec<f64> = (0..16).map(|k| (k as f64).sin()).collect();
        let spec = AugmentSpec::default();
        let p1 = make_view_pair(&y, &spec, &mut from_seed(9)).unwrap();
        let p2 = make_view_pair(&y, &spec, &mut from_seed(9)).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn invalid_specs_rejected() {
        let x = [0.0; 4];
        let mut rng = from_seed(6);
        let bad = AugmentSpec { lambda: 1.5, ..AugmentSpec::new(AugmentKind::Blockout) };
        assert!(make_view_pair(&x, &bad, &mut rng).is_err());
        let bad = AugmentSpec { sigma: -0.1, ..AugmentSpec::new(AugmentKind::GaussianNoise) };
        assert!(make_view_pair(&x, &bad, &mut rng).is_err());
        assert_eq!("noise".parse::<AugmentKind>().unwrap(), AugmentKind::GaussianNoise);
        assert!("warp".parse::<AugmentKind>().is_err());
    }
}
