//! Certified L2 robustness radii for randomized-smoothing classifiers.
//!
//! Two certification routes are provided over isotropic (standard or
//! generalized Gaussian) smoothing noise:
//!
//! * [`np`]: the classical Neyman-Pearson certificate, which only uses a lower
//!   confidence bound on the top-class probability under the smoothing
//!   distribution `P`;
//! * [`dsrs`]: double-sampling certification, which additionally constrains
//!   the worst case with the top-class probability under a second,
//!   concentric distribution `Q`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel batch certification live in the `dsrs` companion crate.

#![no_std]

extern crate alloc;

pub mod confidence;
pub mod dsrs;
pub mod error;
pub mod noise;
pub mod np;
pub mod pipeline;
pub mod quadrature;
pub mod special;
pub mod synthetic;

pub use error::{Error, Result};
pub use noise::{NoiseKind, NoiseSpec};
