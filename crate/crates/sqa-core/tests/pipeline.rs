//! Whole-pipeline check through the public API only: a raw record goes in,
//! and every channel row of every segment is re-derived here by hand (own
//! z-score, own difference stencils, own direct-sum autocorrelation) and
//! compared against what the pipeline produced.

use sqa_core::dsp::{defaults, design_bandpass, filter_signal, ChannelKind, QualityLabel, SignalRecord};
use sqa_core::pipeline::{prepare_record, PipelineConfig};
use sqa_core::SplitMix64;

fn manual_zscore(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    x.iter().map(|v| (v - mean) / std).collect()
}

fn manual_derivative(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    y[0] = (x[1] - x[0]) * fs;
    for i in 1..n - 1 {
        y[i] = (x[i + 1] - x[i - 1]) * fs / 2.0;
    }
    y[n - 1] = (x[n - 1] - x[n - 2]) * fs;
    y
}

fn manual_autocorrelation(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    (0..n)
        .map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / energy)
        .collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn prepared_stacks_match_a_hand_rebuilt_pipeline() {
    let fs = defaults::FS_HZ;
    let n = (fs * 90.0) as usize;
    let mut rng = SplitMix64::new(17);
    // Pulse-train-like test signal with mild noise.
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * std::f64::consts::PI * 1.3 * t).sin().powi(3) + 0.02 * rng.normal() + 5.0
        })
        .collect();
    // Middle window gets a bad stretch large enough to flip its label.
    let mut mask = vec![true; n];
    mask[1200..1500].iter_mut().for_each(|m| *m = false);
    let rec = SignalRecord::new("itest", samples.clone(), fs, mask).unwrap();

    let cfg = PipelineConfig {
        channels: vec![ChannelKind::Clean, ChannelKind::Fdp, ChannelKind::Sdp, ChannelKind::Atc],
        ..PipelineConfig::default()
    };
    let prepared = prepare_record(&rec, &cfg).unwrap();
    assert_eq!(prepared.segments.len(), 3);
    assert_eq!(prepared.skipped_degenerate, 0);

    let coeffs = design_bandpass(fs, cfg.band_low_hz, cfg.band_high_hz, cfg.filter_order).unwrap();
    let filtered = filter_signal(&coeffs, &samples).unwrap();
    let window = (cfg.segment_seconds * fs) as usize;

    for (i, seg) in prepared.segments.iter().enumerate() {
        assert_eq!(seg.subject_id, "itest");
        assert_eq!(seg.start, i * window);
        // 300 of 960 samples bad in window 1: 660/960 good, below the 80% bar.
        let expected_label = if i == 1 { QualityLabel::Bad } else { QualityLabel::Good };
        assert_eq!(seg.stack.label, expected_label);
        assert_eq!(
            seg.stack.channels,
            vec![ChannelKind::Clean, ChannelKind::Fdp, ChannelKind::Sdp, ChannelKind::Atc]
        );

        let clean = manual_zscore(&filtered[i * window..(i + 1) * window]);
        let fdp = manual_zscore(&manual_derivative(&clean, fs));
        let sdp = manual_zscore(&manual_derivative(&manual_derivative(&clean, fs), fs));
        let atc = manual_autocorrelation(&clean);
        assert!(close(&seg.stack.data[0], &clean, 1e-12));
        assert!(close(&seg.stack.data[1], &fdp, 1e-12));
        assert!(close(&seg.stack.data[2], &sdp, 1e-12));
        // FFT route vs direct-sum route.
        assert!(close(&seg.stack.data[3], &atc, 1e-9));
        assert!((seg.stack.data[3][0] - 1.0).abs() == 0.0);
    }
}
