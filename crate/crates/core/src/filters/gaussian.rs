use alloc::vec;
use alloc::vec::Vec;

use crate::volume::{ScalarVolume, VectorField, Volume};
use crate::{Error, Result};

/// Normalised Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|x| libm::exp(-((x * x) as f64) / (2.0 * sigma * sigma))).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Convolves along one axis with edge replication.
fn convolve_axis(src: &[f64], dims: [usize; 3], axis: usize, kernel: &[f64]) -> Vec<f64> {
    let n = dims[axis];
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    let mut line = vec![0.0; n];
    let lines = src.len() / n;
    for l in 0..lines {
        // Start index of the l-th line running along `axis`.
        let start = match axis {
            0 => l * n,
            1 => (l / dims[0]) * dims[0] * dims[1] + l % dims[0],
            _ => l,
        };
        for (t, v) in line.iter_mut().enumerate() {
            *v = src[start + t * stride];
        }
        for t in 0..n {
            let mut acc = 0.0;
            for (w, &kw) in kernel.iter().enumerate() {
                let s = (t as isize + w as isize - radius).clamp(0, n as isize - 1) as usize;
                acc += kw * line[s];
            }
            out[start + t * stride] = acc;
        }
    }
    out
}

/// Separable Gaussian with a separate sigma (in voxels) per axis. A sigma of
/// zero leaves that axis untouched.
pub fn gaussian_smooth_axes(vol: &ScalarVolume, sigma_voxels: [f64; 3]) -> Result<ScalarVolume> {
    if sigma_voxels.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidSigma(sigma_voxels[0]));
    }
    let dims = vol.dims();
    let mut data = vol.data().to_vec();
    for (axis, &sigma) in sigma_voxels.iter().enumerate() {
        if sigma > 0.0 && dims[axis] > 1 {
            data = convolve_axis(&data, dims, axis, &gaussian_kernel(sigma));
        }
    }
    Volume::from_vec(*vol.geometry(), data)
}

/// Isotropic separable Gaussian smoothing, truncated at `ceil(3 sigma)`,
/// borders replicated.
pub fn gaussian_smooth(vol: &ScalarVolume, sigma_voxels: f64) -> Result<ScalarVolume> {
    if !(sigma_voxels > 0.0) || !sigma_voxels.is_finite() {
        return Err(Error::InvalidSigma(sigma_voxels));
    }
    gaussian_smooth_axes(vol, [sigma_voxels; 3])
}

/// Central-difference gradient in intensity per voxel (one-sided on the
/// border faces), each component then Gaussian smoothed.
pub fn smoothed_gradient(vol: &ScalarVolume, sigma_voxels: f64) -> Result<VectorField> {
    if !(sigma_voxels > 0.0) || !sigma_voxels.is_finite() {
        return Err(Error::InvalidSigma(sigma_voxels));
    }
    let dims = vol.dims();
    if dims.iter().any(|&n| n < 3) {
        return Err(Error::VolumeTooSmall);
    }
    let g = *vol.geometry();
    let mut comps =
        [Vec::with_capacity(g.voxel_count()), Vec::with_capacity(g.voxel_count()), Vec::with_capacity(g.voxel_count())];
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let idx = [i, j, k];
                for (axis, comp) in comps.iter_mut().enumerate() {
                    let mut lo = idx;
                    let mut hi = idx;
                    let n = dims[axis];
                    let x = idx[axis];
                    let (a, b) = if x == 0 {
                        (0, 1)
                    } else if x == n - 1 {
                        (n - 2, n - 1)
                    } else {
                        (x - 1, x + 1)
                    };
                    lo[axis] = a;
                    hi[axis] = b;
                    let d = vol.at(hi[0], hi[1], hi[2]) - vol.at(lo[0], lo[1], lo[2]);
                    comp.push(d / (b - a) as f64);
                }
            }
        }
    }
    let kernel = gaussian_kernel(sigma_voxels);
    let smoothed: Vec<Vec<f64>> = comps
        .into_iter()
        .map(|mut c| {
            for axis in 0..3 {
                c = convolve_axis(&c, dims, axis, &kernel);
            }
            c
        })
        .collect();
    let data = (0..g.voxel_count()).map(|i| [smoothed[0][i], smoothed[1][i], smoothed[2][i]]).collect();
    Volume::from_vec(g, data)
}
