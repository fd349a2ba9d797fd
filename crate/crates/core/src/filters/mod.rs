//! Smoothing, gradients, Hessian vesselness and region growing.

mod gaussian;
mod region;
mod vesselness;

pub use gaussian::{gaussian_kernel, gaussian_smooth, gaussian_smooth_axes, smoothed_gradient};
pub use region::{fill_cavities, region_grow_mask, Connectivity, RegionGrowParams, RegionMask};
pub use vesselness::{frangi_vesselness, symmetric_eigenvalues, VesselnessParams};
