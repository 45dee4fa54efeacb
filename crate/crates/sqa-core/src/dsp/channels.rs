//! Derived input channels: derivatives, autocorrelation, and stacking.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::segment::{zscore, QualityLabel, Segment};
use crate::error::{Result, SqaError};

/// Input channel kinds in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelKind {
    /// Filtered, normalized PPG.
    Clean,
    /// First derivative of the clean signal.
    Fdp,
    /// Second derivative of the clean signal.
    Sdp,
    /// Normalized autocorrelation of the clean signal.
    Atc,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 4] = [
        ChannelKind::Clean,
        ChannelKind::Fdp,
        ChannelKind::Sdp,
        ChannelKind::Atc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Clean => "ppg",
            ChannelKind::Fdp => "fdp",
            ChannelKind::Sdp => "sdp",
            ChannelKind::Atc => "atc",
        }
    }

    pub fn parse(s: &str) -> Option<ChannelKind> {
        match s.to_ascii_lowercase().as_str() {
            "ppg" | "clean" => Some(ChannelKind::Clean),
            "fdp" => Some(ChannelKind::Fdp),
            "sdp" => Some(ChannelKind::Sdp),
            "atc" => Some(ChannelKind::Atc),
            _ => None,
        }
    }
}

/// A segment's multi-channel input, rows in canonical channel order.
#[derive(Debug, Clone)]
pub struct ChannelStack {
    pub channels: Vec<ChannelKind>,
    /// `channels.len()` rows of equal length.
    pub data: Vec<Vec<f64>>,
    pub label: QualityLabel,
}

/// Central differences scaled by the sampling rate, one-sided at the ends.
/// Output length equals input length.
pub fn first_derivative(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3, "need at least 3 samples");
    let mut y = Vec::with_capacity(n);
    y.push((x[1] - x[0]) * fs);
    for i in 1..n - 1 {
        y.push((x[i + 1] - x[i - 1]) * fs / 2.0);
    }
    y.push((x[n - 1] - x[n - 2]) * fs);
    y
}

pub fn second_derivative(x: &[f64], fs: f64) -> Vec<f64> {
    first_derivative(&first_derivative(x, fs), fs)
}

/// Biased normalized autocorrelation,
/// `r[k] = sum_n x[n] x[n+k] / sum_n x[n]^2`, computed via FFT.
/// `r[0]` is exactly 1.
pub fn autocorrelation(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(SqaError::EmptyInput);
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy < 1e-12 {
        return Err(SqaError::DegenerateSignal);
    }
    let m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    fft.process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    ifft.process(&mut buf);
    let r0 = buf[0].re;
    let mut r: Vec<f64> = buf[..n].iter().map(|v| v.re / r0).collect();
    r[0] = 1.0;
    Ok(r)
}

/// Build a segment's input stack. Clean is the z-scored segment; FDP and SDP
/// are z-scored derivatives of Clean; ATC keeps its natural [-1, 1] scale.
/// Duplicate kinds collapse and rows come out in canonical order.
pub fn build_channel_stack(
    segment: &Segment,
    kinds: &[ChannelKind],
    fs: f64,
) -> Result<ChannelStack> {
    if kinds.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    let ordered: BTreeSet<ChannelKind> = kinds.iter().copied().collect();
    let clean = zscore(&segment.values)?;
    let mut data = Vec::with_capacity(ordered.len());
    let mut channels = Vec::with_capacity(ordered.len());
    for kind in ordered {
        let row = match kind {
            ChannelKind::Clean => clean.clone(),
            ChannelKind::Fdp => zscore(&first_derivative(&clean, fs))?,
            ChannelKind::Sdp => zscore(&second_derivative(&clean, fs))?,
            ChannelKind::Atc => autocorrelation(&clean)?,
        };
        channels.push(kind);
        data.push(row);
    }
    Ok(ChannelStack {
        channels,
        data,
        label: segment.label,
    })
}
