//! Deterministic signal preprocessing: bandpass filtering, normalization,
//! segmentation with quality labeling, and derived input channels.

pub mod channels;
pub mod filter;
pub mod segment;

pub use channels::{
    autocorrelation, build_channel_stack, first_derivative, second_derivative, ChannelKind,
    ChannelStack,
};
pub use filter::{design_bandpass, filter_signal, FilterCoefficients};
pub use segment::{segment_record, zscore, QualityLabel, Segment, SignalRecord};

/// Default settings for the preprocessing stage.
pub mod defaults {
    pub const FS_HZ: f64 = 32.0;
    pub const BAND_LOW_HZ: f64 = 0.5;
    pub const BAND_HIGH_HZ: f64 = 8.0;
    pub const FILTER_ORDER: usize = 3;
    pub const SEGMENT_SECONDS: f64 = 30.0;
    pub const GOOD_THRESHOLD: f64 = 0.8;
}
