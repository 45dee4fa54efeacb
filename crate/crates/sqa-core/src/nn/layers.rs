//! Layer primitives with hand-written forward and reverse-mode passes.
//!
//! Convolutions are bias-free throughout (bias folds into the following
//! batch norm); the only biased layer in the network family is the final
//! fully connected head.

use crate::error::{Result, SqaError};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor3;
use crate::rng::SplitMix64;

/// `L_out = floor((L_in + 2 padding - kernel) / stride) + 1`.
pub fn conv_out_len(l_in: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = l_in + 2 * padding;
    if padded < kernel || stride == 0 {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// Valid output range `[l0, l1)` for kernel tap `kk`, plus the input index
/// aligned with `l0`.
#[inline]
fn tap_range(
    l_in: usize,
    l_out: usize,
    stride: usize,
    padding: usize,
    kk: usize,
) -> (usize, usize, usize) {
    let l0 = if kk >= padding {
        0
    } else {
        (padding - kk).div_ceil(stride)
    };
    // need l*stride + kk - padding <= l_in - 1
    let l1 = if l_in + padding > kk {
        ((l_in - 1 + padding - kk) / stride + 1).min(l_out)
    } else {
        l0
    };
    let x0 = if l1 > l0 { l0 * stride + kk - padding } else { 0 };
    (l0, l1, x0)
}

/// Cross-correlation with zero padding. `weight` is `[c_out, c_in, kernel]`
/// row-major.
pub fn conv1d_forward<F: Scalar>(
    x: &Tensor3<F>,
    weight: &[F],
    c_out: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<Tensor3<F>> {
    let (batch, c_in, l_in) = x.shape();
    if weight.len() != c_out * c_in * kernel {
        return Err(SqaError::ShapeMismatch(format!(
            "conv weight has {} values, expected {c_out}x{c_in}x{kernel}",
            weight.len()
        )));
    }
    let l_out = conv_out_len(l_in, kernel, stride, padding).ok_or_else(|| {
        SqaError::ShapeMismatch(format!(
            "conv1d: input length {l_in} too short for kernel {kernel}"
        ))
    })?;
    let mut y = Tensor3::zeros(batch, c_out, l_out);
    for b in 0..batch {
        for co in 0..c_out {
            let out = y.row_mut(b, co);
            for ci in 0..c_in {
                let xr = x.row(b, ci);
                let w = &weight[(co * c_in + ci) * kernel..(co * c_in + ci) * kernel + kernel];
                for (kk, &wk) in w.iter().enumerate() {
                    let (l0, l1, x0) = tap_range(l_in, l_out, stride, padding, kk);
                    if l1 <= l0 {
                        continue;
                    }
                    if stride == 1 {
                        let xs = &xr[x0..x0 + (l1 - l0)];
                        for (o, &xv) in out[l0..l1].iter_mut().zip(xs) {
                            *o += wk * xv;
                        }
                    } else {
                        let mut xi = x0;
                        for o in out[l0..l1].iter_mut() {
                            *o += wk * xr[xi];
                            xi += stride;
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

/// Gradients of [`conv1d_forward`] with respect to input and weight.
pub fn conv1d_backward<F: Scalar>(
    x: &Tensor3<F>,
    weight: &[F],
    c_out: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    dy: &Tensor3<F>,
) -> Result<(Tensor3<F>, Vec<F>)> {
    let (batch, c_in, l_in) = x.shape();
    let l_out = dy.len;
    if dy.batch != batch || dy.channels != c_out {
        return Err(SqaError::ShapeMismatch("conv1d_backward: dy shape".into()));
    }
    let mut dx = Tensor3::zeros(batch, c_in, l_in);
    let mut dw = vec![F::zero(); weight.len()];
    for b in 0..batch {
        for co in 0..c_out {
            let dyr = dy.row(b, co);
            for ci in 0..c_in {
                let xr = x.row(b, ci);
                let dxr = dx.row_mut(b, ci);
                let base = (co * c_in + ci) * kernel;
                for kk in 0..kernel {
                    let (l0, l1, x0) = tap_range(l_in, l_out, stride, padding, kk);
                    if l1 <= l0 {
                        continue;
                    }
                    let wk = weight[base + kk];
                    let mut acc = F::zero();
                    if stride == 1 {
                        let n = l1 - l0;
                        // separate passes: the axpy vectorizes, and the dot
                        // product runs four independent accumulators
                        for (dxv, &g) in dxr[x0..x0 + n].iter_mut().zip(&dyr[l0..l1]) {
                            *dxv += wk * g;
                        }
                        let xs = &xr[x0..x0 + n];
                        let gs = &dyr[l0..l1];
                        let mut acc4 = [F::zero(); 4];
                        let mut i = 0;
                        while i + 4 <= n {
                            acc4[0] += xs[i] * gs[i];
                            acc4[1] += xs[i + 1] * gs[i + 1];
                            acc4[2] += xs[i + 2] * gs[i + 2];
                            acc4[3] += xs[i + 3] * gs[i + 3];
                            i += 4;
                        }
                        while i < n {
                            acc4[0] += xs[i] * gs[i];
                            i += 1;
                        }
                        acc = acc4[0] + acc4[1] + acc4[2] + acc4[3];
                    } else {
                        let mut xi = x0;
                        for &g in &dyr[l0..l1] {
                            dxr[xi] += wk * g;
                            acc += xr[xi] * g;
                            xi += stride;
                        }
                    }
                    dw[base + kk] += acc;
                }
            }
        }
    }
    Ok((dx, dw))
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel state cached by a training-mode batch-norm forward.
#[derive(Debug, Clone)]
pub struct BnCache<F> {
    pub xhat: Tensor3<F>,
    pub inv_std: Vec<F>,
}

/// Batch normalization over (batch, length) per channel. In training mode
/// batch statistics normalize the activations and running statistics are
/// updated with `momentum` (running var unbiased); in eval mode the running
/// statistics are used and no cache is produced.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm1d_forward<F: Scalar>(
    x: &Tensor3<F>,
    gamma: &[F],
    beta: &[F],
    running_mean: &mut [F],
    running_var: &mut [F],
    training: bool,
) -> Result<(Tensor3<F>, Option<BnCache<F>>)> {
    let (batch, channels, len) = x.shape();
    if gamma.len() != channels || beta.len() != channels || running_mean.len() != channels {
        return Err(SqaError::ShapeMismatch("batchnorm1d: channel counts".into()));
    }
    let eps = F::from_f64(BN_EPS);
    let mut y = Tensor3::zeros(batch, channels, len);
    if training {
        let n = batch * len;
        if n < 2 {
            return Err(SqaError::InvalidMode(
                "training-mode batch norm needs at least 2 samples per channel".into(),
            ));
        }
        let n_f = F::from_f64(n as f64);
        let momentum = F::from_f64(BN_MOMENTUM);
        let one_minus = F::one() - momentum;
        let mut xhat = Tensor3::zeros(batch, channels, len);
        let mut inv_std = vec![F::zero(); channels];
        for c in 0..channels {
            let mut sum = F::zero();
            for b in 0..batch {
                sum += x.row(b, c).iter().copied().sum::<F>();
            }
            let mean = sum / n_f;
            let mut var_sum = F::zero();
            for b in 0..batch {
                for &v in x.row(b, c) {
                    let d = v - mean;
                    var_sum += d * d;
                }
            }
            let var = var_sum / n_f;
            let istd = F::one() / (var + eps).sqrt();
            inv_std[c] = istd;
            let g = gamma[c];
            let bta = beta[c];
            for b in 0..batch {
                let xr = x.row(b, c);
                let xh = xhat.row_mut(b, c);
                for (h, &v) in xh.iter_mut().zip(xr) {
                    *h = (v - mean) * istd;
                }
                let yr = y.row_mut(b, c);
                for (o, &h) in yr.iter_mut().zip(xhat.row(b, c)) {
                    *o = g * h + bta;
                }
            }
            let var_unbiased = var * F::from_f64(n as f64 / (n - 1) as f64);
            running_mean[c] = one_minus * running_mean[c] + momentum * mean;
            running_var[c] = one_minus * running_var[c] + momentum * var_unbiased;
        }
        Ok((y, Some(BnCache { xhat, inv_std })))
    } else {
        for c in 0..channels {
            let istd = F::one() / (running_var[c] + eps).sqrt();
            let mean = running_mean[c];
            let g = gamma[c];
            let bta = beta[c];
            for b in 0..batch {
                let xr = x.row(b, c);
                let yr = y.row_mut(b, c);
                for (o, &v) in yr.iter_mut().zip(xr) {
                    *o = g * (v - mean) * istd + bta;
                }
            }
        }
        Ok((y, None))
    }
}

/// Training-mode batch-norm backward using the cached normalized
/// activations. Returns (dx, dgamma, dbeta).
pub fn batchnorm1d_backward<F: Scalar>(
    dy: &Tensor3<F>,
    cache: &BnCache<F>,
    gamma: &[F],
) -> (Tensor3<F>, Vec<F>, Vec<F>) {
    let (batch, channels, len) = dy.shape();
    let n_f = F::from_f64((batch * len) as f64);
    let mut dx = Tensor3::zeros(batch, channels, len);
    let mut dgamma = vec![F::zero(); channels];
    let mut dbeta = vec![F::zero(); channels];
    for c in 0..channels {
        let mut sum_dy = F::zero();
        let mut sum_dy_xhat = F::zero();
        for b in 0..batch {
            for (&g, &h) in dy.row(b, c).iter().zip(cache.xhat.row(b, c)) {
                sum_dy += g;
                sum_dy_xhat += g * h;
            }
        }
        dgamma[c] = sum_dy_xhat;
        dbeta[c] = sum_dy;
        let scale = gamma[c] * cache.inv_std[c];
        let mean_dy = sum_dy / n_f;
        let mean_dy_xhat = sum_dy_xhat / n_f;
        for b in 0..batch {
            let dyr = dy.row(b, c);
            let xh = cache.xhat.row(b, c);
            let dxr = dx.row_mut(b, c);
            for ((o, &g), &h) in dxr.iter_mut().zip(dyr).zip(xh) {
                *o = scale * (g - mean_dy - h * mean_dy_xhat);
            }
        }
    }
    (dx, dgamma, dbeta)
}

pub fn relu_forward<F: Scalar>(x: &Tensor3<F>) -> Tensor3<F> {
    let mut y = x.clone();
    for v in y.data.iter_mut() {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
    y
}

/// Backward through ReLU using the forward *output* as the mask.
pub fn relu_backward<F: Scalar>(y: &Tensor3<F>, dy: &Tensor3<F>) -> Tensor3<F> {
    let mut dx = dy.clone();
    for (d, &o) in dx.data.iter_mut().zip(&y.data) {
        if o <= F::zero() {
            *d = F::zero();
        }
    }
    dx
}

/// Max pooling with implicit negative-infinity padding. Returns the pooled
/// tensor and the flat input index of each window maximum (first on ties).
pub fn maxpool1d_forward<F: Scalar>(
    x: &Tensor3<F>,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<(Tensor3<F>, Vec<usize>)> {
    let (batch, channels, l_in) = x.shape();
    let l_out = conv_out_len(l_in, kernel, stride, padding).ok_or_else(|| {
        SqaError::ShapeMismatch(format!(
            "maxpool1d: input length {l_in} too short for kernel {kernel}"
        ))
    })?;
    let mut y = Tensor3::zeros(batch, channels, l_out);
    let mut argmax = vec![0usize; batch * channels * l_out];
    for b in 0..batch {
        for c in 0..channels {
            let xr = x.row(b, c);
            let row_base = (b * channels + c) * l_in;
            for l in 0..l_out {
                let w_start = l * stride;
                let lo = w_start.max(padding) - padding;
                let hi = ((w_start + kernel).saturating_sub(padding)).min(l_in);
                if lo >= hi {
                    return Err(SqaError::ShapeMismatch(
                        "maxpool1d: window entirely in padding".into(),
                    ));
                }
                let mut best = lo;
                for i in lo + 1..hi {
                    if xr[i] > xr[best] {
                        best = i;
                    }
                }
                y.row_mut(b, c)[l] = xr[best];
                argmax[(b * channels + c) * l_out + l] = row_base + best;
            }
        }
    }
    Ok((y, argmax))
}

pub fn maxpool1d_backward<F: Scalar>(
    input_shape: (usize, usize, usize),
    argmax: &[usize],
    dy: &Tensor3<F>,
) -> Tensor3<F> {
    let mut dx = Tensor3::zeros(input_shape.0, input_shape.1, input_shape.2);
    for (&idx, &g) in argmax.iter().zip(&dy.data) {
        dx.data[idx] += g;
    }
    dx
}

/// Draw an inverted-dropout keep mask.
pub fn dropout_mask(rng: &mut SplitMix64, len: usize, p: f64) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&p) {
        return Err(SqaError::InvalidP(p));
    }
    Ok((0..len).map(|_| rng.uniform() >= p).collect())
}

/// Apply a keep mask with the 1/(1-p) training-time rescale.
pub fn dropout_apply<F: Scalar>(x: &Tensor3<F>, mask: &[bool], p: f64) -> Tensor3<F> {
    debug_assert_eq!(mask.len(), x.data.len());
    let scale = F::from_f64(1.0 / (1.0 - p));
    let mut y = x.clone();
    for (v, &keep) in y.data.iter_mut().zip(mask) {
        *v = if keep { *v * scale } else { F::zero() };
    }
    y
}

pub fn dropout_backward<F: Scalar>(dy: &Tensor3<F>, mask: &[bool], p: f64) -> Tensor3<F> {
    dropout_apply(dy, mask, p)
}

/// Mode-aware dropout entry point: identity in eval mode, masked and
/// rescaled in training mode. Returns the mask used (empty in eval mode).
pub fn dropout_forward<F: Scalar>(
    x: &Tensor3<F>,
    p: f64,
    rng: &mut SplitMix64,
    training: bool,
) -> Result<(Tensor3<F>, Vec<bool>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(SqaError::InvalidP(p));
    }
    if !training || p == 0.0 {
        return Ok((x.clone(), Vec::new()));
    }
    let mask = dropout_mask(rng, x.data.len(), p)?;
    let y = dropout_apply(x, &mask, p);
    Ok((y, mask))
}

/// Row-major dense layer: `rows` rows of `in_dim` features -> `out_dim`.
pub fn linear_forward<F: Scalar>(
    x: &[F],
    rows: usize,
    in_dim: usize,
    out_dim: usize,
    weight: &[F],
    bias: Option<&[F]>,
) -> Result<Vec<F>> {
    if x.len() != rows * in_dim || weight.len() != out_dim * in_dim {
        return Err(SqaError::ShapeMismatch("linear_forward".into()));
    }
    let mut y = vec![F::zero(); rows * out_dim];
    for r in 0..rows {
        let xr = &x[r * in_dim..(r + 1) * in_dim];
        for o in 0..out_dim {
            let wr = &weight[o * in_dim..(o + 1) * in_dim];
            let mut acc = if let Some(b) = bias { b[o] } else { F::zero() };
            for (&xi, &wi) in xr.iter().zip(wr) {
                acc += xi * wi;
            }
            y[r * out_dim + o] = acc;
        }
    }
    Ok(y)
}

/// Returns (dx, dweight, dbias).
pub fn linear_backward<F: Scalar>(
    x: &[F],
    rows: usize,
    in_dim: usize,
    out_dim: usize,
    weight: &[F],
    dy: &[F],
) -> (Vec<F>, Vec<F>, Vec<F>) {
    let mut dx = vec![F::zero(); rows * in_dim];
    let mut dw = vec![F::zero(); out_dim * in_dim];
    let mut db = vec![F::zero(); out_dim];
    for r in 0..rows {
        let xr = &x[r * in_dim..(r + 1) * in_dim];
        let dxr = &mut dx[r * in_dim..(r + 1) * in_dim];
        for o in 0..out_dim {
            let g = dy[r * out_dim + o];
            db[o] += g;
            let wr = &weight[o * in_dim..(o + 1) * in_dim];
            let dwr = &mut dw[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                dwr[i] += g * xr[i];
                dxr[i] += g * wr[i];
            }
        }
    }
    (dx, dw, db)
}

#[inline]
pub fn sigmoid<F: Scalar>(v: F) -> F {
    F::one() / (F::one() + (-v).exp())
}

/// Global average over the temporal dimension: (B, C, L) -> B*C means.
pub fn adaptive_avg_pool1<F: Scalar>(x: &Tensor3<F>) -> Vec<F> {
    let (batch, channels, len) = x.shape();
    let inv = F::from_f64(1.0 / len as f64);
    let mut pooled = vec![F::zero(); batch * channels];
    for b in 0..batch {
        for c in 0..channels {
            pooled[b * channels + c] = x.row(b, c).iter().copied().sum::<F>() * inv;
        }
    }
    pooled
}

pub fn adaptive_avg_pool1_backward<F: Scalar>(
    shape: (usize, usize, usize),
    dpooled: &[F],
) -> Tensor3<F> {
    let (batch, channels, len) = shape;
    let inv = F::from_f64(1.0 / len as f64);
    let mut dx = Tensor3::zeros(batch, channels, len);
    for b in 0..batch {
        for c in 0..channels {
            let g = dpooled[b * channels + c] * inv;
            dx.row_mut(b, c).iter_mut().for_each(|v| *v = g);
        }
    }
    dx
}

/// Intermediates cached by a squeeze-and-excitation forward pass.
#[derive(Debug, Clone)]
pub struct SeCache<F> {
    pub pooled: Vec<F>,     // B x C channel means
    pub hidden_pre: Vec<F>, // B x C/r, before ReLU
    pub hidden: Vec<F>,     // B x C/r, after ReLU
    pub scale: Vec<F>,      // B x C sigmoid gates
}

/// Squeeze-and-excitation: global average -> fc1 -> ReLU -> fc2 -> sigmoid,
/// then per-channel rescaling of the input. Both fc layers are bias-free.
pub fn se_forward<F: Scalar>(
    x: &Tensor3<F>,
    fc1: &[F], // (C/r) x C
    fc2: &[F], // C x (C/r)
) -> Result<(Tensor3<F>, SeCache<F>)> {
    let (batch, channels, _len) = x.shape();
    if !fc1.len().is_multiple_of(channels) {
        return Err(SqaError::ShapeMismatch("se_forward: fc1".into()));
    }
    let hidden_dim = fc1.len() / channels;
    if hidden_dim == 0 || fc2.len() != channels * hidden_dim {
        return Err(SqaError::ShapeMismatch("se_forward: fc2".into()));
    }
    let pooled = adaptive_avg_pool1(x);
    let hidden_pre = linear_forward(&pooled, batch, channels, hidden_dim, fc1, None)?;
    let hidden: Vec<F> = hidden_pre
        .iter()
        .map(|&v| if v > F::zero() { v } else { F::zero() })
        .collect();
    let gate_pre = linear_forward(&hidden, batch, hidden_dim, channels, fc2, None)?;
    let scale: Vec<F> = gate_pre.iter().map(|&v| sigmoid(v)).collect();
    let mut y = x.clone();
    for b in 0..batch {
        for c in 0..channels {
            let s = scale[b * channels + c];
            y.row_mut(b, c).iter_mut().for_each(|v| *v *= s);
        }
    }
    Ok((y, SeCache {
        pooled,
        hidden_pre,
        hidden,
        scale,
    }))
}

/// Returns (dx, dfc1, dfc2).
pub fn se_backward<F: Scalar>(
    x: &Tensor3<F>,
    dy: &Tensor3<F>,
    fc1: &[F],
    fc2: &[F],
    cache: &SeCache<F>,
) -> (Tensor3<F>, Vec<F>, Vec<F>) {
    let (batch, channels, len) = x.shape();
    let hidden_dim = fc1.len() / channels;
    // Direct path: dy scaled by the gate; gate path: dy dotted with x.
    let mut dx = Tensor3::zeros(batch, channels, len);
    let mut dscale = vec![F::zero(); batch * channels];
    for b in 0..batch {
        for c in 0..channels {
            let s = cache.scale[b * channels + c];
            let xr = x.row(b, c);
            let dyr = dy.row(b, c);
            let dxr = dx.row_mut(b, c);
            let mut acc = F::zero();
            for ((o, &g), &xv) in dxr.iter_mut().zip(dyr).zip(xr) {
                *o = g * s;
                acc += g * xv;
            }
            dscale[b * channels + c] = acc;
        }
    }
    // Through the sigmoid.
    let dgate: Vec<F> = dscale
        .iter()
        .zip(&cache.scale)
        .map(|(&d, &s)| d * s * (F::one() - s))
        .collect();
    let (dhidden, dfc2, _) =
        linear_backward(&cache.hidden, batch, hidden_dim, channels, fc2, &dgate);
    let dhidden_pre: Vec<F> = dhidden
        .iter()
        .zip(&cache.hidden_pre)
        .map(|(&d, &h)| if h > F::zero() { d } else { F::zero() })
        .collect();
    let (dpooled, dfc1, _) =
        linear_backward(&cache.pooled, batch, channels, hidden_dim, fc1, &dhidden_pre);
    // Back through the channel means.
    let inv = F::from_f64(1.0 / len as f64);
    for b in 0..batch {
        for c in 0..channels {
            let g = dpooled[b * channels + c] * inv;
            dx.row_mut(b, c).iter_mut().for_each(|v| *v += g);
        }
    }
    (dx, dfc1, dfc2)
}
