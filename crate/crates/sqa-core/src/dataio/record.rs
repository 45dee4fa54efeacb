//! Plain-text record and label files.
//!
//! A record file holds one decimal sample per line. A label file holds
//! run-length quality spans, one `start,end,quality` line each with `end`
//! exclusive and quality `good` or `bad`; the runs must tile `[0, len)`
//! exactly, in order, with no gaps or overlaps.

use std::fmt::Write as _;
use std::path::Path;

use crate::dsp::SignalRecord;
use crate::error::{Result, SqaError};

fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> SqaError {
    SqaError::MalformedFile {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn load_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("not a decimal sample: {line:?}")))?;
        if !v.is_finite() {
            return Err(malformed(path, i + 1, "non-finite sample"));
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(malformed(path, 0, "record holds no samples"));
    }
    Ok(samples)
}

fn load_mask(path: &Path, len: usize) -> Result<Vec<bool>> {
    let text = std::fs::read_to_string(path)?;
    let mut runs: Vec<(usize, usize, bool)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(malformed(path, i + 1, "expected start,end,quality"));
        }
        let start: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| malformed(path, i + 1, "bad start index"))?;
        let end: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| malformed(path, i + 1, "bad end index"))?;
        let good = match parts[2].trim() {
            "good" => true,
            "bad" => false,
            q => return Err(malformed(path, i + 1, format!("unknown quality {q:?}"))),
        };
        if end <= start {
            return Err(malformed(path, i + 1, "empty or inverted run"));
        }
        runs.push((start, end, good));
    }
    runs.sort_by_key(|r| r.0);
    let gap = |msg: String| SqaError::CoverageGap {
        path: path.display().to_string(),
        msg,
    };
    let mut cursor = 0usize;
    let mut mask = vec![false; len];
    for (start, end, good) in runs {
        if start != cursor {
            return Err(gap(format!(
                "runs {} at sample {start}, expected {cursor}",
                if start > cursor { "leave a gap" } else { "overlap" }
            )));
        }
        if end > len {
            return Err(gap(format!("run ends at {end} past record length {len}")));
        }
        mask[start..end].iter_mut().for_each(|m| *m = good);
        cursor = end;
    }
    if cursor != len {
        return Err(gap(format!(
            "runs cover [0, {cursor}) of a {len}-sample record"
        )));
    }
    Ok(mask)
}

pub fn load_record(
    record_path: &Path,
    label_path: &Path,
    fs: f64,
    subject_id: &str,
) -> Result<SignalRecord> {
    let samples = load_samples(record_path)?;
    let mask = load_mask(label_path, samples.len())?;
    SignalRecord::new(subject_id, samples, fs, mask)
}

pub fn save_samples(samples: &[f64], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * 12);
    for v in samples {
        writeln!(out, "{v:.8}").expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Compress a boolean mask into run-length label lines.
pub fn save_mask(mask: &[bool], path: &Path) -> Result<()> {
    if mask.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    let mut out = String::new();
    let mut start = 0usize;
    for i in 1..=mask.len() {
        if i == mask.len() || mask[i] != mask[start] {
            let q = if mask[start] { "good" } else { "bad" };
            writeln!(out, "{start},{i},{q}").expect("string write");
            start = i;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
