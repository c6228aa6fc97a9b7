//! Gap reconstruction for 3-way spatiotemporal raster tensors.
//!
//! The crate factorizes partially observed day × latitude × longitude tensors
//! with a masked CP decomposition fitted by alternating least squares and
//! fills missing entries from the fitted model. Around that core it carries
//! the full experimental machinery: point-data tensorization, synthetic gap
//! injection (uniform random and cloud-pattern transfer), per-day ordinary
//! kriging and IDW baselines, stationarity diagnostics (ADF, Ljung-Box,
//! semivariograms), and r / IOA / MAE evaluation reports.
//!
//! Numeric routines are generic over the scalar type through [`Real`]; the
//! aliases below pin the f64 instantiation used by the CLI and the on-disk
//! formats.

pub mod baselines;
pub mod completion;
pub mod error;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod masking;
pub mod metrics;
pub mod real;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use real::Real;

/// 64-bit masked tensor, the instantiation stored by every file format.
pub type MaskedTensor64 = tensor::MaskedTensor<f64>;
/// 32-bit masked tensor for memory-constrained experimentation.
pub type MaskedTensor32 = tensor::MaskedTensor<f32>;
/// 64-bit Kruskal-format CP model.
pub type KruskalModel64 = tensor::KruskalModel<f64>;
pub type KruskalModel32 = tensor::KruskalModel<f32>;
/// 64-bit mask delta as persisted in delta CSVs.
pub type MaskDelta64 = masking::MaskDelta<f64>;
