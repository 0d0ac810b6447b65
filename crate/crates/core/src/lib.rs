//! Spectral laws, spike maps and eigenvalue shrinkage for spiked random-matrix models.
//!
//! The crate is `no_std` and only needs `alloc`. Dense linear algebra goes through
//! `nalgebra`, built without its `std` feature.
//!
//! Coordinates follow three conventions:
//! * raw: eigenvalues of a sample covariance with unit noise,
//! * hat: `(x - 1 - gamma) / sqrt(gamma)`, for `gamma -> 0`,
//! * bar: `(x - 1) / gamma`, for `gamma -> infinity`.
//!
//! ```
//! use spikeshrink_core::spike_maps::{eigmap, Framework, SpikeValue};
//!
//! let lam = eigmap(SpikeValue::hat(2.0), Framework::DisproZero).unwrap();
//! assert!((lam - 2.5).abs() < 1e-15);
//! ```
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod estimators;
pub mod numeric;
pub mod pivots;
pub mod shrinkage;
pub mod spectral_laws;
pub mod spike_maps;

pub use error::{Error, Result};
pub use num_complex::Complex64;
