//! Seeded synthetic EDA cohort.
//!
//! Each subject's signal is a slowly drifting tonic level plus phasic skin
//! conductance responses (difference-of-exponentials bumps) plus white noise.
//! Around every planted use event the SCR rate and amplitude are scaled up,
//! which is the learnable class signal.

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::RawRecording;
use crate::error::{Error, Result};
use crate::rng::{self, Rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    /// Recording length per subject, minutes.
    pub wear_minutes: usize,
    /// Samples per minute.
    pub sample_rate: usize,
    pub n_events_per_subject: usize,
    /// Mean tonic level, µS.
    pub tonic_level: f64,
    /// Half-width of the uniform per-subject offset of the tonic level, µS.
    pub tonic_level_spread: f64,
    /// Slow tonic drift, µS. Kept small so drift does not swamp the phasic signal.
    pub tonic_drift_amplitude: f64,
    pub tonic_drift_period_minutes: f64,
    pub scr_rate_per_hour: f64,
    /// Per-subject multiplicative jitter of the SCR rate, uniform in `1 ± jitter`.
    pub subject_rate_jitter: f64,
    pub scr_amplitude_min: f64,
    pub scr_amplitude_max: f64,
    pub scr_rise_seconds: f64,
    pub scr_decay_seconds: f64,
    /// Half-width of the altered-arousal interval around each event, minutes.
    pub effect_window_minutes: f64,
    pub effect_rate_multiplier: f64,
    pub effect_amplitude_multiplier: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 20,
            wear_minutes: 490,
            sample_rate: 4,
            n_events_per_subject: 4,
            tonic_level: 2.0,
            tonic_level_spread: 1.0,
            tonic_drift_amplitude: 0.1,
            tonic_drift_period_minutes: 240.0,
            scr_rate_per_hour: 6.0,
            subject_rate_jitter: 0.3,
            scr_amplitude_min: 0.05,
            scr_amplitude_max: 0.4,
            scr_rise_seconds: 2.0,
            scr_decay_seconds: 40.0,
            effect_window_minutes: 20.0,
            effect_rate_multiplier: 3.0,
            effect_amplitude_multiplier: 1.5,
            noise_std: 0.01,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("tonic_level_spread", self.tonic_level_spread),
            ("tonic_drift_amplitude", self.tonic_drift_amplitude),
            ("scr_rate_per_hour", self.scr_rate_per_hour),
            ("subject_rate_jitter", self.subject_rate_jitter),
            ("scr_amplitude_min", self.scr_amplitude_min),
            ("scr_amplitude_max", self.scr_amplitude_max),
            ("effect_window_minutes", self.effect_window_minutes),
            ("noise_std", self.noise_std),
        ];
        if let Some((name, v)) = non_negative.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("{name} must be a finite value ≥ 0, got {v}")));
        }
        if self.sample_rate == 0 || self.wear_minutes == 0 {
            return Err(Error::invalid("sample_rate and wear_minutes must be positive"));
        }
        if self.scr_amplitude_min > self.scr_amplitude_max {
            return Err(Error::invalid("scr_amplitude_min exceeds scr_amplitude_max"));
        }
        if self.subject_rate_jitter > 1.0 {
            return Err(Error::invalid("subject_rate_jitter must not exceed 1"));
        }
        if !(self.effect_rate_multiplier >= 1.0 && self.effect_amplitude_multiplier >= 1.0) {
            return Err(Error::invalid("effect multipliers must be ≥ 1"));
        }
        if !(self.scr_rise_seconds > 0.0
            && self.scr_decay_seconds > self.scr_rise_seconds
            && self.tonic_drift_period_minutes > 0.0)
        {
            return Err(Error::invalid(
                "need 0 < scr_rise_seconds < scr_decay_seconds and a positive drift period",
            ));
        }
        Ok(())
    }

    /// Minimum spacing between planted events, minutes.
    pub fn event_separation(&self) -> f64 {
        2.0 * self.effect_window_minutes
    }
}

/// Deterministic per-subject tonic parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TonicProfile {
    pub level: f64,
    pub amplitude: f64,
    pub period: f64,
    pub phases: [f64; 2],
}

impl TonicProfile {
    fn draw(cfg: &SynthConfig, rng: &mut Rng) -> Self {
        let spread = cfg.tonic_level_spread;
        let level = cfg.tonic_level + if spread > 0.0 { rng.random_range(-spread..=spread) } else { 0.0 };
        let tau = std::f64::consts::TAU;
        TonicProfile {
            level,
            amplitude: cfg.tonic_drift_amplitude,
            period: cfg.tonic_drift_period_minutes,
            phases: [rng.random_range(0.0..tau), rng.random_range(0.0..tau)],
        }
    }

    /// Tonic level at `minute`.
    pub fn at(&self, minute: f64) -> f64 {
        let w = std::f64::consts::TAU * minute / self.period;
        self.level + self.amplitude * (0.6 * (w + self.phases[0]).sin() + 0.4 * (2.7 * w + self.phases[1]).sin())
    }
}

/// Peak-normalised difference-of-exponentials SCR kernel with time constants in minutes.
#[derive(Debug, Clone, Copy)]
pub struct ScrKernel {
    rise: f64,
    decay: f64,
    norm: f64,
}

impl ScrKernel {
    pub fn new(rise_minutes: f64, decay_minutes: f64) -> Self {
        let t_peak = (decay_minutes.ln() - rise_minutes.ln()) * rise_minutes * decay_minutes
            / (decay_minutes - rise_minutes);
        let peak = (-t_peak / decay_minutes).exp() - (-t_peak / rise_minutes).exp();
        ScrKernel { rise: rise_minutes, decay: decay_minutes, norm: 1.0 / peak }
    }

    pub fn eval(&self, dt: f64) -> f64 {
        if dt < 0.0 {
            0.0
        } else {
            self.norm * ((-dt / self.decay).exp() - (-dt / self.rise).exp())
        }
    }

    /// Support beyond which the kernel is below ~5e-5 of its peak.
    pub fn support(&self) -> f64 {
        10.0 * self.decay
    }
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

/// Draw event times uniformly among configurations with the required spacing.
fn place_events(cfg: &SynthConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    let n = cfg.n_events_per_subject;
    if n == 0 {
        return Ok(Vec::new());
    }
    let sep = cfg.event_separation();
    let wear = cfg.wear_minutes as f64;
    let free = wear - (n - 1) as f64 * sep;
    if free <= 0.0 {
        return Err(Error::EventPlacement { events: n, separation: sep.ceil() as usize, wear: cfg.wear_minutes });
    }
    let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..free)).collect();
    u.sort_by(f64::total_cmp);
    Ok(u.into_iter().enumerate().map(|(k, x)| x + k as f64 * sep).collect())
}

fn in_effect(minute: f64, events: &[f64], half_width: f64) -> bool {
    events.iter().any(|&e| (minute - e).abs() <= half_width)
}

/// Generate one subject's recording.
pub fn generate_recording(cfg: &SynthConfig, subject_index: usize) -> Result<RawRecording> {
    cfg.validate()?;
    if subject_index >= cfg.n_subjects {
        return Err(Error::invalid(format!(
            "subject_index {subject_index} out of range for {} subjects",
            cfg.n_subjects
        )));
    }
    let sub_seed = rng::derive_seed(cfg.seed, Stream::Subject, &[subject_index as u64]);
    // Independent component streams: disabling one never shifts another.
    let mut tonic_rng = rng::from_seed(rng::mix64(sub_seed ^ 1));
    let mut event_rng = rng::from_seed(rng::mix64(sub_seed ^ 2));
    let mut scr_rng = rng::from_seed(rng::mix64(sub_seed ^ 3));
    let mut noise_rng = rng::from_seed(rng::mix64(sub_seed ^ 4));

    let tonic = TonicProfile::draw(cfg, &mut tonic_rng);
    let events = place_events(cfg, &mut event_rng)?;

    let rate = cfg.sample_rate as f64;
    let n = cfg.wear_minutes * cfg.sample_rate;
    let mut samples: Vec<f64> = (0..n).map(|k| tonic.at(k as f64 / rate)).collect();

    let jitter = cfg.subject_rate_jitter;
    let rate_scale = if jitter > 0.0 { scr_rng.random_range(1.0 - jitter..=1.0 + jitter) } else { 1.0 };
    let base_rate = cfg.scr_rate_per_hour / 60.0 * rate_scale;
    let peak_rate = base_rate * cfg.effect_rate_multiplier;
    let wear = cfg.wear_minutes as f64;
    let kernel = ScrKernel::new(cfg.scr_rise_seconds / 60.0, cfg.scr_decay_seconds / 60.0);
    if peak_rate > 0.0 {
        // Thinning of a homogeneous Poisson process at the peak rate.
        let count = Poisson::new(peak_rate * wear).expect("positive mean").sample(&mut scr_rng) as usize;
        let mut onsets: Vec<(f64, f64, f64)> = (0..count)
            .map(|_| {
                let t = scr_rng.random_range(0.0..wear);
                let accept = scr_rng.random::<f64>();
                let amp = scr_rng.random_range(cfg.scr_amplitude_min..=cfg.scr_amplitude_max);
                (t, accept, amp)
            })
            .collect();
        onsets.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, accept, amp) in onsets {
            let active = in_effect(t, &events, cfg.effect_window_minutes);
            let keep_prob = if active { 1.0 } else { 1.0 / cfg.effect_rate_multiplier };
            if accept >= keep_prob {
                continue;
            }
            let amp = if active { amp * cfg.effect_amplitude_multiplier } else { amp };
            let first = (t * rate).ceil() as usize;
            let last = (((t + kernel.support()) * rate).floor() as usize).min(n.saturating_sub(1));
            for (k, s) in samples.iter_mut().enumerate().take(last + 1).skip(first) {
                *s += amp * kernel.eval(k as f64 / rate - t);
            }
        }
    }

    if cfg.noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_std).expect("finite std");
        for s in &mut samples {
            *s += noise.sample(&mut noise_rng);
        }
    }

    RawRecording::new(subject_id(subject_index), cfg.sample_rate, samples, events)
}

/// Tonic component of a subject as generated by [`generate_recording`].
pub fn tonic_profile(cfg: &SynthConfig, subject_index: usize) -> TonicProfile {
    let sub_seed = rng::derive_seed(cfg.seed, Stream::Subject, &[subject_index as u64]);
    TonicProfile::draw(cfg, &mut rng::from_seed(rng::mix64(sub_seed ^ 1)))
}

pub fn generate_cohort(cfg: &SynthConfig) -> Result<Vec<RawRecording>> {
    cfg.validate()?;
    (0..cfg.n_subjects).map(|i| generate_recording(cfg, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_peaks_at_one() {
        let k = ScrKernel::new(2.0 / 60.0, 40.0 / 60.0);
        let peak = (0..10_000).map(|i| k.eval(i as f64 * 1e-4)).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-6, "{peak}");
        assert_eq!(k.eval(-1.0), 0.0);
    }

    #[test]
    fn deterministic_and_independent_subjects() {
        let cfg = SynthConfig { n_subjects: 3, seed: 11, ..Default::default() };
        let a = generate_cohort(&cfg).unwrap();
        let b = generate_cohort(&cfg).unwrap();
        assert_eq!(a, b);
        let fewer = generate_cohort(&SynthConfig { n_subjects: 2, ..cfg.clone() }).unwrap();
        assert_eq!(a[..2], fewer[..]);
        assert_ne!(a[0].samples, a[1].samples);
        assert_eq!(a[2].subject_id, "S03");
    }

    #[test]
    fn no_noise_no_scr_is_the_tonic_baseline() {
        let cfg = SynthConfig { scr_rate_per_hour: 0.0, noise_std: 0.0, seed: 3, ..Default::default() };
        let rec = generate_recording(&cfg, 5).unwrap();
        let tonic = tonic_profile(&cfg, 5);
        for (k, &v) in rec.samples.iter().enumerate() {
            assert_eq!(v, tonic.at(k as f64 / cfg.sample_rate as f64));
        }
    }

    #[test]
    fn unit_multipliers_make_signal_independent_of_events() {
        let base = SynthConfig {
            effect_rate_multiplier: 1.0,
            effect_amplitude_multiplier: 1.0,
            seed: 5,
            ..Default::default()
        };
        let with_events = generate_recording(&base, 0).unwrap();
        let without = generate_recording(&SynthConfig { n_events_per_subject: 0, ..base }, 0).unwrap();
        assert!(!with_events.event_times.is_empty());
        assert_eq!(with_events.samples, without.samples);
    }

    #[test]
    fn events_respect_separation_and_bounds() {
        let cfg = SynthConfig { n_events_per_subject: 6, seed: 9, ..Default::default() };
        for i in 0..cfg.n_subjects {
            let rec = generate_recording(&cfg, i).unwrap();
            assert_eq!(rec.event_times.len(), 6);
            assert!(rec.event_times.windows(2).all(|w| w[1] - w[0] >= cfg.event_separation() - 1e-9));
            assert!(rec.event_times.iter().all(|&t| (0.0..cfg.wear_minutes as f64).contains(&t)));
        }
    }

    #[test]
    fn impossible_event_placement_errors() {
        let cfg = SynthConfig { wear_minutes: 100, n_events_per_subject: 5, ..Default::default() };
        assert!(matches!(generate_recording(&cfg, 0), Err(Error::EventPlacement { .. })));
    }

    #[test]
    fn empty_cohort_and_bad_configs() {
        assert!(generate_cohort(&SynthConfig { n_subjects: 0, ..Default::default() }).unwrap().is_empty());
        assert!(SynthConfig { effect_rate_multiplier: 0.5, ..Default::default() }.validate().is_err());
        assert!(SynthConfig { noise_std: -1.0, ..Default::default() }.validate().is_err());
        assert!(generate_recording(&SynthConfig::default(), 20).is_err());
    }
}
