//! Synthetic PPG corpus generator.
//!
//! Clean signal: a phase accumulator driven by a slowly drifting heart rate;
//! each beat is the sum of a systolic and a dicrotic Gaussian bump over the
//! beat phase, plus light sensor noise. Corruption: each 30 s window is
//! independently corrupted with the configured probability by one of four
//! artifact kinds over a span long enough (>= 35% of the window) that the
//! 80% labeling rule always marks the window Bad. The quality mask is false
//! exactly over corrupted spans.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::manifest::{DatasetManifest, ManifestEntry, SplitTag};
use crate::dataio::record::{save_mask, save_samples};
use crate::dsp::SignalRecord;
use crate::error::{Result, SqaError};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub n_subjects: usize,
    /// How many of the subjects are tagged as the held-out test split.
    pub test_subjects: usize,
    pub minutes_per_subject: f64,
    pub heart_rate_range: (f64, f64),
    /// Per-30s-window probability of injecting an artifact.
    pub corruption_prob: f64,
    pub fs: f64,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            n_subjects: 15,
            test_subjects: 3,
            minutes_per_subject: 30.0,
            heart_rate_range: (50.0, 110.0),
            corruption_prob: 0.4,
            fs: 32.0,
            seed: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.corruption_prob) {
            return Err(SqaError::InvalidP(self.corruption_prob));
        }
        let (lo, hi) = self.heart_rate_range;
        if !(30.0 < lo && lo < hi && hi < 220.0) {
            return Err(SqaError::RangeError(format!(
                "heart rate range ({lo}, {hi}) must sit inside (30, 220) bpm"
            )));
        }
        if self.n_subjects == 0
            || self.test_subjects >= self.n_subjects
            || !(self.minutes_per_subject > 0.0)
            || !(self.fs > 0.0)
        {
            return Err(SqaError::RangeError("degenerate synthesis config".into()));
        }
        Ok(())
    }
}

fn gaussian_bump(phase: f64, center: f64, width: f64) -> f64 {
    let d = phase - center;
    (-d * d / (2.0 * width * width)).exp()
}

/// One beat's waveform as a function of beat phase in [0, 1).
fn beat_waveform(phase: f64) -> f64 {
    gaussian_bump(phase, 0.22, 0.08) + 0.35 * gaussian_bump(phase, 0.55, 0.12)
}

fn clean_signal(cfg: &SynthesisConfig, n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let (lo, hi) = cfg.heart_rate_range;
    let mut hr = rng.uniform_in(lo, hi);
    let mut phase = rng.uniform();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(beat_waveform(phase) + 0.02 * rng.normal());
        phase += hr / 60.0 / cfg.fs;
        if phase >= 1.0 {
            phase -= 1.0;
        }
        hr = (hr + 0.05 * rng.normal()).clamp(lo, hi);
    }
    out
}

fn corrupt_span(kind: usize, samples: &mut [f64], fs: f64, rng: &mut SplitMix64) {
    match kind {
        // dense wideband noise burst
        0 => {
            let sigma = rng.uniform_in(1.5, 3.0);
            for v in samples.iter_mut() {
                *v += sigma * rng.normal();
            }
        }
        // large slow baseline oscillation; kept above the filter's deep
        // stopband so a visible residual survives preprocessing
        1 => {
            let f = rng.uniform_in(0.25, 0.45);
            let amp = rng.uniform_in(5.0, 15.0);
            let phi = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
            for (i, v) in samples.iter_mut().enumerate() {
                *v += amp * (2.0 * std::f64::consts::PI * f * i as f64 / fs + phi).sin();
            }
        }
        // sensor dropout: the signal freezes at its last value
        2 => {
            let held = samples[0];
            for v in samples.iter_mut() {
                *v = held;
            }
        }
        // sparse high-amplitude motion spikes
        _ => {
            let spikes = (samples.len() / 16).max(4);
            for _ in 0..spikes {
                let at = rng.index(samples.len());
                let amp = rng.uniform_in(3.0, 8.0) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                let width = 1 + rng.index(3);
                for j in at..(at + width).min(samples.len()) {
                    samples[j] += amp;
                }
            }
        }
    }
}

/// Generate one subject's record from its own random stream.
pub fn synthesize_record(
    cfg: &SynthesisConfig,
    subject_id: &str,
    subject_seed: u64,
) -> Result<SignalRecord> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(subject_seed);
    let n = (cfg.minutes_per_subject * 60.0 * cfg.fs).round() as usize;
    let window = (30.0 * cfg.fs).round() as usize;
    let mut samples = clean_signal(cfg, n, &mut rng);
    let mut mask = vec![true; n];
    for w in 0..n / window {
        if rng.uniform() >= cfg.corruption_prob {
            continue;
        }
        let w0 = w * window;
        let span = ((rng.uniform_in(0.35, 1.0) * window as f64) as usize).clamp(1, window);
        let start = w0 + rng.index(window - span + 1);
        corrupt_span(rng.index(4), &mut samples[start..start + span], cfg.fs, &mut rng);
        mask[start..start + span].iter_mut().for_each(|m| *m = false);
    }
    SignalRecord::new(subject_id, samples, cfg.fs, mask)
}

/// Generate the whole corpus under `out_dir` (`records/`, `labels/`,
/// `manifest.json`) and return the saved manifest. The last
/// `test_subjects` subjects carry the test split tag. Deterministic in the
/// seed: identical configs give byte-identical files.
pub fn synthesize_corpus(cfg: &SynthesisConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let records_dir = out_dir.join("records");
    let labels_dir = out_dir.join("labels");
    std::fs::create_dir_all(&records_dir)?;
    std::fs::create_dir_all(&labels_dir)?;
    let mut seed_rng = SplitMix64::new(cfg.seed);
    let mut entries = Vec::with_capacity(cfg.n_subjects);
    for i in 0..cfg.n_subjects {
        let subject_id = format!("synth{i:03}");
        let rec = synthesize_record(cfg, &subject_id, seed_rng.next_u64())?;
        let record_path = records_dir.join(format!("{subject_id}.txt"));
        let label_path = labels_dir.join(format!("{subject_id}.txt"));
        save_samples(&rec.samples, &record_path)?;
        save_mask(&rec.quality_mask, &label_path)?;
        entries.push(ManifestEntry {
            subject_id,
            record_path,
            label_path,
            fs: cfg.fs,
            split: if i >= cfg.n_subjects - cfg.test_subjects {
                SplitTag::Test
            } else {
                SplitTag::Train
            },
        });
    }
    let manifest = DatasetManifest { entries };
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}
