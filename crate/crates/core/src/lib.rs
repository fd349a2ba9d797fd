//! Vessel bifurcation landmark machinery for abdominal CT registration
//! validation.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! parts: physical-space volumes, smoothing and vesselness filters, the
//! sphere-growing bifurcation localizer, synthetic deformation phantoms and
//! landmark-based registration error statistics. File formats, configuration
//! and the command-line front end live in the `vesselmark` crate.
#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod eval;
pub mod filters;
pub mod geometry;
pub mod phantom;
pub mod rng;
pub mod sphere;
pub mod stats;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{PointMm, VolumeGeometry};
pub use volume::{MaskVolume, OrganMaskSet, ScalarVolume, VectorField, Volume};
