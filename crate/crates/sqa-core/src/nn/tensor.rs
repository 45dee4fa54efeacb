//! Row-major rank-3 tensor (batch, channels, length).

use crate::error::{Result, SqaError};
use crate::nn::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<F> {
    pub batch: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor3<F> {
    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        Self {
            batch,
            channels,
            len,
            data: vec![F::zero(); batch * channels * len],
        }
    }

    pub fn from_vec(batch: usize, channels: usize, len: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != batch * channels * len {
            return Err(SqaError::ShapeMismatch(format!(
                "data length {} != {batch}x{channels}x{len}",
                data.len()
            )));
        }
        Ok(Self {
            batch,
            channels,
            len,
            data,
        })
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.len)
    }

    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[F] {
        let start = (b * self.channels + c) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [F] {
        let start = (b * self.channels + c) * self.len;
        &mut self.data[start..start + self.len]
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(SqaError::NonFinite(context));
        }
        Ok(())
    }
}
