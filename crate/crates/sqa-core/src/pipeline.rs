//! End-to-end preprocessing: raw records in, model-ready multi-channel
//! segments out.

use serde::{Deserialize, Serialize};

use crate::dsp::{
    build_channel_stack, defaults, design_bandpass, filter_signal, segment_record, ChannelKind,
    ChannelStack, SignalRecord,
};
use crate::error::{Result, SqaError};

/// Everything the preprocessing stage needs. Channels may be given in any
/// order with duplicates; the stack comes out deduplicated and canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_order: usize,
    pub segment_seconds: f64,
    pub good_threshold: f64,
    #[serde(skip)]
    pub channels: Vec<ChannelKind>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            band_low_hz: defaults::BAND_LOW_HZ,
            band_high_hz: defaults::BAND_HIGH_HZ,
            filter_order: defaults::FILTER_ORDER,
            segment_seconds: defaults::SEGMENT_SECONDS,
            good_threshold: defaults::GOOD_THRESHOLD,
            channels: vec![ChannelKind::Clean],
        }
    }
}

/// One preprocessed window, ready to batch.
#[derive(Debug, Clone)]
pub struct DatasetSegment {
    pub subject_id: String,
    /// Offset of the window into the raw record, in samples.
    pub start: usize,
    pub stack: ChannelStack,
}

/// The preprocessed corpus plus a count of windows dropped as degenerate
/// (zero variance after filtering, e.g. long flatline dropouts).
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub segments: Vec<DatasetSegment>,
    pub skipped_degenerate: usize,
}

/// Bandpass, segment, label and channel-stack a single record. Degenerate
/// windows are dropped and counted rather than failing the record.
pub fn prepare_record(rec: &SignalRecord, cfg: &PipelineConfig) -> Result<PreparedDataset> {
    if cfg.channels.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    let coeffs = design_bandpass(rec.fs, cfg.band_low_hz, cfg.band_high_hz, cfg.filter_order)?;
    let filtered = filter_signal(&coeffs, &rec.samples)?;
    let filtered_rec = SignalRecord {
        samples: filtered,
        ..rec.clone()
    };
    let mut segments = Vec::new();
    let mut skipped = 0usize;
    for seg in segment_record(&filtered_rec, cfg.segment_seconds, cfg.good_threshold)? {
        match build_channel_stack(&seg, &cfg.channels, rec.fs) {
            Ok(stack) => segments.push(DatasetSegment {
                subject_id: seg.subject_id,
                start: seg.start,
                stack,
            }),
            Err(SqaError::DegenerateSignal) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(PreparedDataset {
        segments,
        skipped_degenerate: skipped,
    })
}

/// [`prepare_record`] over a whole corpus; segments stay in record order.
pub fn prepare_dataset(records: &[SignalRecord], cfg: &PipelineConfig) -> Result<PreparedDataset> {
    if records.is_empty() {
        return Err(SqaError::EmptyDataset);
    }
    let mut segments = Vec::new();
    let mut skipped = 0usize;
    for rec in records {
        let mut part = prepare_record(rec, cfg)?;
        segments.append(&mut part.segments);
        skipped += part.skipped_degenerate;
    }
    Ok(PreparedDataset {
        segments,
        skipped_degenerate: skipped,
    })
}

/// Sorted unique subject ids present in a segment list.
pub fn subject_ids(segments: &[DatasetSegment]) -> Vec<String> {
    let mut ids: Vec<String> = segments.iter().map(|s| s.subject_id.clone()).collect();
    ids.sort();
    ids.dedup();
    ids
}
