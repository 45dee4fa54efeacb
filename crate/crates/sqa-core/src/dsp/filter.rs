//! Butterworth bandpass design and causal IIR filtering.
//!
//! Design path: analog Butterworth lowpass prototype -> lowpass-to-bandpass
//! transform -> bilinear transform with frequency prewarping, so the digital
//! response is exactly -3 dB at both band edges.

use num_complex::Complex64;

use crate::error::{Result, SqaError};

/// Digital IIR transfer function in `b`/`a` polynomial form, `a[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl FilterCoefficients {
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// Complex frequency response at normalized angular frequency `w`
    /// (radians per sample).
    pub fn response_at(&self, w: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -w);
        let eval = |c: &[f64]| {
            // Horner in z^-1.
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z_inv + ck)
        };
        eval(&self.b) / eval(&self.a)
    }
}

/// Expand a monic polynomial from its roots.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        coeffs.push(Complex64::new(0.0, 0.0));
        for i in (1..coeffs.len()).rev() {
            let prev = coeffs[i - 1];
            coeffs[i] -= r * prev;
        }
    }
    coeffs
}

/// Design a digital Butterworth bandpass filter of the given analog
/// prototype order. The result has `2 * order + 1` coefficients per side.
pub fn design_bandpass(fs: f64, low: f64, high: f64, order: usize) -> Result<FilterCoefficients> {
    if !(fs > 0.0) || !(low > 0.0) || !(high > low) || !(high < fs / 2.0) {
        return Err(SqaError::InvalidBand(format!(
            "need 0 < low < high < fs/2, got low={low}, high={high}, fs={fs}"
        )));
    }
    if order == 0 {
        return Err(SqaError::InvalidBand("order must be >= 1".into()));
    }

    // Prewarped analog band edges (rad/s).
    let fs2 = 2.0 * fs;
    let wl = fs2 * (std::f64::consts::PI * low / fs).tan();
    let wh = fs2 * (std::f64::consts::PI * high / fs).tan();
    let bw = wh - wl;
    let w0_sq = wl * wh;

    // Butterworth lowpass prototype: poles on the unit circle, left half-plane.
    let lp_poles: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta =
                std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (2 * k + 1) as f64
                    / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();

    // Lowpass-to-bandpass: each prototype pole splits into a conjugate pair;
    // `order` zeros appear at s = 0 and the gain scales by bw^order.
    let mut bp_poles = Vec::with_capacity(2 * order);
    for &p in &lp_poles {
        let half = p * (bw / 2.0);
        let disc = (half * half - w0_sq).sqrt();
        bp_poles.push(half + disc);
        bp_poles.push(half - disc);
    }
    let bp_zeros = vec![Complex64::new(0.0, 0.0); order];
    let gain_analog = bw.powi(order as i32);

    // Bilinear transform s -> 2fs (z-1)/(z+1).
    let warp = Complex64::new(fs2, 0.0);
    let map = |s: Complex64| (warp + s) / (warp - s);
    let mut z_digital: Vec<Complex64> = bp_zeros.iter().map(|&z| map(z)).collect();
    let p_digital: Vec<Complex64> = bp_poles.iter().map(|&p| map(p)).collect();
    // Zeros at infinity land at z = -1.
    z_digital.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), order));

    let num: Complex64 = bp_zeros.iter().map(|&z| warp - z).product();
    let den: Complex64 = bp_poles.iter().map(|&p| warp - p).product();
    let gain_digital = gain_analog * (num / den).re;

    if let Some(p) = p_digital.iter().find(|p| p.norm() >= 1.0) {
        return Err(SqaError::InvalidBand(format!(
            "design produced an unstable pole at |z| = {}",
            p.norm()
        )));
    }

    let b: Vec<f64> = poly_from_roots(&z_digital)
        .iter()
        .map(|c| c.re * gain_digital)
        .collect();
    let a: Vec<f64> = poly_from_roots(&p_digital).iter().map(|c| c.re).collect();

    if b.iter().chain(a.iter()).any(|v| !v.is_finite()) {
        return Err(SqaError::InvalidBand(
            "design produced non-finite coefficients".into(),
        ));
    }

    Ok(FilterCoefficients { b, a })
}

/// Causal single-pass IIR filtering, direct form II transposed, zero initial
/// state. Output length equals input length.
pub fn filter_signal(coeffs: &FilterCoefficients, x: &[f64]) -> Result<Vec<f64>> {
    let b = &coeffs.b;
    let a = &coeffs.a;
    let n_state = b.len().max(a.len()) - 1;
    let mut state = vec![0.0f64; n_state];
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = b[0] * xn + state[0];
        for i in 0..n_state {
            let bi = if i + 1 < b.len() { b[i + 1] } else { 0.0 };
            let ai = if i + 1 < a.len() { a[i + 1] } else { 0.0 };
            let next = if i + 1 < n_state { state[i + 1] } else { 0.0 };
            state[i] = bi * xn + next - ai * yn;
        }
        y.push(yn);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SqaError::NonFinite("filter_signal"));
    }
    Ok(y)
}
