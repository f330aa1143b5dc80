//! Binned photon-number distributions of noisy boson samplers.
//!
//! The probability of seeing `k_z` photons in each bin `z` of output modes is
//! computed from the characteristic function of the bin counts, which is a
//! single `n x n` permanent per grid point. The crate also provides the
//! analytic special cases, an independent Fock-space oracle and tools for
//! validating experimental samples.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod noise;
pub mod oracle;
pub mod partitions;
pub mod permanent;
pub mod seed;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, UnitaryMatrix, C64};
pub use noise::GramMatrix;
pub use partitions::{BinnedDistribution, InputSpec, Method, Partition, PhaseVector};
