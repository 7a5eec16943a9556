//! Browser bindings: synthetic recording preview, augmentation preview and an
//! NT-Xent explorer. Each operation has a plain Rust form (tested natively) and a
//! `wasm_bindgen` wrapper that exchanges JSON strings.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use ssltsc::augment::{make_view_pair, AugmentKind, AugmentSpec};
use ssltsc::contrastive::{nt_xent_loss, similarity, ContrastiveConfig, Similarity};
use ssltsc::data::{segment_recording, standardize_per_subject, Dataset};
use ssltsc::nn::Tensor2D;
use ssltsc::rng;
use ssltsc::synth::{generate_recording, SynthConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct RecordingRequest {
    pub seed: u64,
    pub subject: usize,
    pub effect_rate_multiplier: f64,
    pub effect_amplitude_multiplier: f64,
    pub scr_rate_per_hour: f64,
    pub window_minutes: usize,
    pub stride_minutes: usize,
}

impl Default for RecordingRequest {
    fn default() -> Self {
        let s = SynthConfig::default();
        RecordingRequest {
            seed: 0,
            subject: 0,
            effect_rate_multiplier: s.effect_rate_multiplier,
            effect_amplitude_multiplier: s.effect_amplitude_multiplier,
            scr_rate_per_hour: s.scr_rate_per_hour,
            window_minutes: 60,
            stride_minutes: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowInfo {
    pub start_minute: f64,
    pub label: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordingPreview {
    pub subject_id: String,
    pub sample_rate: usize,
    pub samples: Vec<f64>,
    pub event_times: Vec<f64>,
    pub windows: Vec<WindowInfo>,
    /// First positive window (or the first window), standardized with its subject.
    pub example_segment: Vec<f64>,
}

pub fn recording_preview(req: &RecordingRequest) -> Result<RecordingPreview, String> {
    let cfg = SynthConfig {
        seed: req.seed,
        n_subjects: req.subject + 1,
        effect_rate_multiplier: req.effect_rate_multiplier,
        effect_amplitude_multiplier: req.effect_amplitude_multiplier,
        scr_rate_per_hour: req.scr_rate_per_hour,
        ..SynthConfig::default()
    };
    let rec = generate_recording(&cfg, req.subject).map_err(|e| e.to_string())?;
    let segs = segment_recording(&rec, req.window_minutes, req.stride_minutes).map_err(|e| e.to_string())?;
    let windows = segs.iter().map(|s| WindowInfo { start_minute: s.window_start as f64, label: s.label }).collect();
    let ds = Dataset::from_segments(segs).map_err(|e| e.to_string())?;
    let (std_ds, _) = standardize_per_subject(&ds);
    let pick = std_ds.segments().iter().find(|s| s.label).or_else(|| std_ds.segments().first());
    Ok(RecordingPreview {
        subject_id: rec.subject_id.clone(),
        sample_rate: rec.sample_rate,
        example_segment: pick.map(|s| s.values.clone()).unwrap_or_default(),
        samples: rec.samples,
        event_times: rec.event_times,
        windows,
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct AugmentRequest {
    pub values: Vec<f64>,
    pub kind: AugmentKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda() -> f64 {
    0.1
}

fn default_sigma() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentPreview {
    pub original: Vec<f64>,
    pub view_a: Vec<f64>,
    pub view_b: Vec<f64>,
}

pub fn augment_preview(req: &AugmentRequest) -> Result<AugmentPreview, String> {
    let spec = AugmentSpec { lambda: req.lambda, sigma: req.sigma, ..AugmentSpec::new(req.kind) };
    let (a, b) = make_view_pair(&req.values, &spec, &mut rng::from_seed(req.seed)).map_err(|e| e.to_string())?;
    Ok(AugmentPreview { original: req.values.clone(), view_a: a, view_b: b })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ContrastiveRequest {
    pub pairs: usize,
    pub dim: usize,
    pub tau: f64,
    /// Spread of each positive around its anchor.
    pub view_noise: f64,
    pub similarity: Similarity,
    pub seed: u64,
}

impl Default for ContrastiveRequest {
    fn default() -> Self {
        ContrastiveRequest { pairs: 4, dim: 8, tau: 0.05, view_noise: 0.3, similarity: Similarity::Cosine, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrastivePreview {
    pub loss: f64,
    /// `2N × 2N` similarity matrix, row-major; rows `2t`, `2t+1` are a positive pair.
    pub similarity: Vec<Vec<f64>>,
    /// Loss over a range of temperatures for the same batch.
    pub tau_curve: Vec<(f64, f64)>,
}

const MAX_PAIRS: usize = 32;

pub fn contrastive_preview(req: &ContrastiveRequest) -> Result<ContrastivePreview, String> {
    if req.pairs == 0 || req.pairs > MAX_PAIRS || req.dim == 0 {
        return Err(format!("pairs must be in 1..={MAX_PAIRS} and dim ≥ 1"));
    }
    let mut r = rng::from_seed(req.seed);
    let mut rows = Vec::with_capacity(2 * req.pairs);
    for _ in 0..req.pairs {
        let anchor: Vec<f64> = (0..req.dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let positive: Vec<f64> = anchor.iter().map(|v| v + req.view_noise * r.random_range(-1.0..1.0)).collect();
        rows.push(anchor);
        rows.push(positive);
    }
    let batch = Tensor2D::from_rows(&rows).map_err(|e| e.to_string())?;
    let cfg = ContrastiveConfig { tau: req.tau, similarity: req.similarity };
    let (loss, _) = nt_xent_loss(&batch, &cfg).map_err(|e| e.to_string())?;
    let sim = rows
        .iter()
        .map(|u| rows.iter().map(|v| similarity(u, v, req.similarity)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let tau_curve = (0..=40)
        .map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 40.0))
        .map(|tau| nt_xent_loss(&batch, &ContrastiveConfig { tau, ..cfg }).map(|(l, _)| (tau, l)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(ContrastivePreview { loss, similarity: sim, tau_curve })
}

fn json_call<Q, R>(request: &str, f: impl Fn(&Q) -> Result<R, String>) -> Result<String, JsValue>
where
    Q: for<'de> Deserialize<'de>,
    R: Serialize,
{
    let req: Q = serde_json::from_str(request).map_err(|e| JsValue::from_str(&format!("bad request: {e}")))?;
    let out = f(&req).map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&out).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn preview_recording(request: &str) -> Result<String, JsValue> {
    json_call(request, recording_preview)
}

#[wasm_bindgen]
pub fn preview_augmentation(request: &str) -> Result<String, JsValue> {
    json_call(request, augment_preview)
}

#[wasm_bindgen]
pub fn explore_contrastive(request: &str) -> Result<String, JsValue> {
    json_call(request, contrastive_preview)
}
