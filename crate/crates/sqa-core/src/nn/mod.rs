//! From-scratch 1D neural-network engine: tensors, layers, the residual
//! SE model family, forward inference and reverse-mode gradients.

pub mod layers;
pub mod model;
pub mod params;
pub mod scalar;
pub mod tensor;

pub use model::{block_descs, stage_lengths, BlockDesc, ForwardTrace, Mode, Model, ModelConfig};
pub use params::{BnStats, Param, ParameterStore};
pub use scalar::Scalar;
pub use tensor::Tensor3;
