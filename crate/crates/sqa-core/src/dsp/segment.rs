//! Record segmentation, quality labeling and per-segment normalization.

use crate::error::{Result, SqaError};

/// Population standard deviations below this reject a segment as degenerate.
pub const DEGENERATE_STD: f64 = 1e-8;

/// One subject's raw PPG stream with a per-sample expert quality mask.
#[derive(Debug, Clone)]
pub struct SignalRecord {
    pub subject_id: String,
    pub samples: Vec<f64>,
    pub fs: f64,
    /// `true` = expert-labeled good quality, same length as `samples`.
    pub quality_mask: Vec<bool>,
}

impl SignalRecord {
    pub fn new(
        subject_id: impl Into<String>,
        samples: Vec<f64>,
        fs: f64,
        quality_mask: Vec<bool>,
    ) -> Result<Self> {
        if quality_mask.len() != samples.len() {
            return Err(SqaError::ShapeMismatch(format!(
                "quality mask length {} != sample length {}",
                quality_mask.len(),
                samples.len()
            )));
        }
        if !(fs > 0.0) {
            return Err(SqaError::RangeError(format!("fs must be positive, got {fs}")));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            samples,
            fs,
            quality_mask,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QualityLabel {
    Good,
    Bad,
}

/// A fixed-length window cut from a filtered record.
#[derive(Debug, Clone)]
pub struct Segment {
    pub values: Vec<f64>,
    pub label: QualityLabel,
    pub subject_id: String,
    pub start: usize,
}

/// Zero-mean, unit population-standard-deviation normalization.
pub fn zscore(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(SqaError::EmptyInput);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < DEGENERATE_STD {
        return Err(SqaError::DegenerateSignal);
    }
    Ok(x.iter().map(|v| (v - mean) / std).collect())
}

/// Cut a record into non-overlapping, left-aligned windows of
/// `round(seconds * fs)` samples. The trailing partial window is dropped.
/// A window is labeled Good iff strictly more than `good_threshold` of its
/// mask samples are true.
pub fn segment_record(
    rec: &SignalRecord,
    seconds: f64,
    good_threshold: f64,
) -> Result<Vec<Segment>> {
    let window = (seconds * rec.fs).round() as usize;
    if window == 0 {
        return Err(SqaError::RangeError(format!(
            "window of {seconds} s at {} Hz is empty",
            rec.fs
        )));
    }
    if rec.samples.len() < window {
        return Err(SqaError::RecordTooShort {
            got: rec.samples.len(),
            need: window,
        });
    }
    let mut segments = Vec::with_capacity(rec.samples.len() / window);
    for start in (0..=rec.samples.len() - window).step_by(window) {
        let values = rec.samples[start..start + window].to_vec();
        let good = rec.quality_mask[start..start + window]
            .iter()
            .filter(|&&g| g)
            .count();
        let label = if (good as f64) > good_threshold * window as f64 {
            QualityLabel::Good
        } else {
            QualityLabel::Bad
        };
        segments.push(Segment {
            values,
            label,
            subject_id: rec.subject_id.clone(),
            start,
        });
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, mask: Vec<bool>) -> SignalRecord {
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        SignalRecord::new("s0", samples, 32.0, mask).unwrap()
    }

    #[test]
    fn zscore_forced_values() {
        let y = zscore(&[1.0, 2.0, 3.0]).unwrap();
        let r = (1.5f64).sqrt(); // sqrt(2/3) scaled: population std of [1,2,3] is sqrt(2/3)
        assert!((y[0] + r).abs() < 1e-9, "{y:?}");
        assert!(y[1].abs() < 1e-9);
        assert!((y[2] - r).abs() < 1e-9);
        assert!((y[0] + 1.224744871391589).abs() < 1e-9);
    }

    #[test]
    fn zscore_rejects_constant() {
        assert!(matches!(
            zscore(&[5.0, 5.0, 5.0]),
            Err(SqaError::DegenerateSignal)
        ));
    }

    #[test]
    fn zscore_is_idempotent() {
        let mut rng = crate::rng::SplitMix64::new(11);
        let x: Vec<f64> = (0..960).map(|_| rng.normal() * 3.0 + 1.0).collect();
        let once = zscore(&x).unwrap();
        let twice = zscore(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zscore_output_statistics() {
        let mut rng = crate::rng::SplitMix64::new(17);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..960).map(|_| rng.normal() * 5.0 - 2.0).collect();
            let y = zscore(&x).unwrap();
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_full_window_all_good() {
        let rec = record(960, vec![true; 960]);
        let segs = segment_record(&rec, 30.0, 0.8).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].label, QualityLabel::Good);
        assert_eq!(segs[0].start, 0);
    }

    #[test]
    fn trailing_partial_window_dropped() {
        let rec = record(1000, vec![true; 1000]);
        let segs = segment_record(&rec, 30.0, 0.8).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].values.len(), 960);
    }

    #[test]
    fn eighty_percent_boundary_is_strict() {
        // Exactly 80% good -> Bad; one more good sample -> Good.
        for (good, expected) in [(768usize, QualityLabel::Bad), (769, QualityLabel::Good)] {
            let mut mask = vec![false; 960];
            mask.iter_mut().take(good).for_each(|m| *m = true);
            let rec = record(960, mask);
            let segs = segment_record(&rec, 30.0, 0.8).unwrap();
            assert_eq!(segs[0].label, expected, "good = {good}");
        }
    }

    #[test]
    fn too_short_record_errors() {
        let rec = record(100, vec![true; 100]);
        assert!(matches!(
            segment_record(&rec, 30.0, 0.8),
            Err(SqaError::RecordTooShort { .. })
        ));
    }

    #[test]
    fn segmentation_tiles_without_gaps() {
        let rec = record(960 * 4 + 123, vec![true; 960 * 4 + 123]);
        let segs = segment_record(&rec, 30.0, 0.8).unwrap();
        assert_eq!(segs.len(), 4);
        for (i, s) in segs.iter().enumerate() {
            assert_eq!(s.start, i * 960);
            assert_eq!(s.values.len(), 960);
        }
    }

    #[test]
    fn flipping_mask_to_good_never_demotes() {
        let mut rng = crate::rng::SplitMix64::new(23);
        let mut mask = vec![false; 960];
        for m in mask.iter_mut() {
            *m = rng.uniform() < 0.8;
        }
        let rec = record(960, mask.clone());
        let before = segment_record(&rec, 30.0, 0.8).unwrap()[0].label;
        if let Some(i) = mask.iter().position(|&g| !g) {
            mask[i] = true;
            let rec = record(960, mask);
            let after = segment_record(&rec, 30.0, 0.8).unwrap()[0].label;
            assert!(!(before == QualityLabel::Good && after == QualityLabel::Bad));
        }
    }
}
