//! Minimal dense-network stack with explicit reverse-mode gradients.
//!
//! Networks are generic over the scalar type: training runs in `f32`,
//! gradient checks and oracles in `f64`. No graph, no tape; every module
//! returns a cache from `forward` and consumes it in `backward`.

pub mod adam;
pub mod checkpoint;
pub mod dense;
pub mod encoders;
pub mod gradcheck;
pub mod heads;

use ndarray::{LinalgScalar, NdFloat};
use num_traits::{FromPrimitive, ToPrimitive};
use thiserror::Error;

pub use adam::Adam;
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointBlock};
pub use dense::{DenseCache, DenseStack, StackGrads};
pub use encoders::{max_pool_rows, max_unpool_rows, Ggn, GgnCache, GgnConfig, PnFlat};
pub use gradcheck::{GradCheck, GradCheckReport};
pub use heads::{normalize_pose_rows, Heads, HeadsConfig};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scalar types the networks run on.
pub trait Scalar:
    NdFloat + LinalgScalar + FromPrimitive + ToPrimitive + std::iter::Sum + 'static
{
    const DTYPE_TAG: u8;
}

impl Scalar for f32 {
    const DTYPE_TAG: u8 = 0;
}
impl Scalar for f64 {
    const DTYPE_TAG: u8 = 1;
}

/// Shorthand for lossy literal conversion into the active scalar type.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("finite literal")
}
