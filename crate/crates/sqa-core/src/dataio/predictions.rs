//! Prediction output: one CSV row per segment, ordered and deterministic.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SqaError};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub subject_id: String,
    pub start_sample: usize,
    /// Probability of the Good class, in [0, 1].
    pub score: f64,
    /// Known ground truth, if the record had labels.
    pub true_good: Option<bool>,
}

pub const PREDICTION_THRESHOLD: f64 = 0.5;

fn label(good: bool) -> &'static str {
    if good {
        "good"
    } else {
        "bad"
    }
}

/// Write predictions as CSV with a header row, sorted by
/// (subject_id, start_sample). Scores outside [0, 1] are refused.
pub fn write_predictions(predictions: &[Prediction], path: &Path) -> Result<()> {
    let mut rows: Vec<&Prediction> = predictions.iter().collect();
    for p in &rows {
        if !(0.0..=1.0).contains(&p.score) {
            return Err(SqaError::RangeError(format!(
                "score {} for {} at {} outside [0, 1]",
                p.score, p.subject_id, p.start_sample
            )));
        }
    }
    rows.sort_by(|a, b| {
        (&a.subject_id, a.start_sample).cmp(&(&b.subject_id, b.start_sample))
    });
    let mut out = String::from("subject_id,start_sample,score,predicted_label,true_label\n");
    for p in rows {
        let truth = p.true_good.map(label).unwrap_or("");
        writeln!(
            out,
            "{},{},{:.6},{},{truth}",
            p.subject_id,
            p.start_sample,
            p.score,
            label(p.score >= PREDICTION_THRESHOLD)
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}
