//! Duty-cycle mixed two-photon polarization states.
//!
//! Builds the states a pump/signal variable-retarder SPDC source produces,
//! simulates 36-outcome polarization tomography on them, reconstructs the
//! density matrix by maximum likelihood and reports purity, tangle,
//! visibility and fidelity with bootstrap error bars.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod fixtures;
pub mod measurement;
pub mod metrics;
pub mod optics;
pub mod states;
pub mod sweep;
pub mod tomography;

pub use algebra::{ComplexMatrix, DensityMatrix, PureState};
pub use error::{Error, Result};
