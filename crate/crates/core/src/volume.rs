//! Physical-space voxel volumes and the geometric operations on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{PointMm, VolumeGeometry, BOUNDS_EPS};
use crate::{Error, Result};

/// Voxel values laid out x fastest on a [`VolumeGeometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    geometry: VolumeGeometry,
    data: Vec<T>,
}

/// Intensities (HU before windowing, `[0, 1]` after).
pub type ScalarVolume = Volume<f64>;
/// Per-voxel 3-vectors: millimetre displacements for a DVF, or force vectors.
pub type VectorField = Volume<[f64; 3]>;
pub type MaskVolume = Volume<bool>;

impl<T> Volume<T> {
    pub fn from_vec(geometry: VolumeGeometry, data: Vec<T>) -> Result<Self> {
        if data.len() != geometry.voxel_count() {
            return Err(Error::SizeMismatch { expected: geometry.voxel_count(), got: data.len() });
        }
        Ok(Self { geometry, data })
    }

    pub fn from_fn(geometry: VolumeGeometry, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let [nx, ny, nz] = geometry.dims();
        let mut data = Vec::with_capacity(geometry.voxel_count());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { geometry, data }
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> &T {
        &self.data[self.geometry.linear_index(i, j, k)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut T {
        let idx = self.geometry.linear_index(i, j, k);
        &mut self.data[idx]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Volume<U> {
        Volume { geometry: self.geometry, data: self.data.iter().map(f).collect() }
    }
}

impl<T: Clone> Volume<T> {
    pub fn filled(geometry: VolumeGeometry, value: T) -> Self {
        Self { geometry, data: vec![value; geometry.voxel_count()] }
    }
}

/// Values a volume can trilinearly interpolate.
pub trait Interpolate: Copy {
    fn lerp8(c: [Self; 8], t: [f64; 3]) -> Self;
}

impl Interpolate for f64 {
    #[inline]
    fn lerp8(c: [f64; 8], t: [f64; 3]) -> f64 {
        let x00 = c[0] + (c[1] - c[0]) * t[0];
        let x10 = c[2] + (c[3] - c[2]) * t[0];
        let x01 = c[4] + (c[5] - c[4]) * t[0];
        let x11 = c[6] + (c[7] - c[6]) * t[0];
        let y0 = x00 + (x10 - x00) * t[1];
        let y1 = x01 + (x11 - x01) * t[1];
        y0 + (y1 - y0) * t[2]
    }
}

impl Interpolate for [f64; 3] {
    #[inline]
    fn lerp8(c: [[f64; 3]; 8], t: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate() {
            *o = f64::lerp8(c.map(|v| v[a]), t);
        }
        out
    }
}

/// Lower cell corner and fractional offset along one axis. `v` must already
/// be clamped to `[0, n - 1]`.
#[inline]
fn cell(v: f64, n: usize) -> (usize, usize, f64) {
    if n == 1 {
        return (0, 0, 0.0);
    }
    let i0 = (libm::floor(v) as usize).min(n - 2);
    (i0, i0 + 1, v - i0 as f64)
}

impl<T: Interpolate> Volume<T> {
    /// Trilinear value at a continuous voxel coordinate, clamped to the grid.
    pub fn sample_voxel_clamped(&self, v: [f64; 3]) -> T {
        let dims = self.dims();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let c = v[a].clamp(0.0, (dims[a] - 1) as f64);
            (lo[a], hi[a], t[a]) = cell(c, dims[a]);
        }
        let g = &self.geometry;
        let corners = [
            self.data[g.linear_index(lo[0], lo[1], lo[2])],
            self.data[g.linear_index(hi[0], lo[1], lo[2])],
            self.data[g.linear_index(lo[0], hi[1], lo[2])],
            self.data[g.linear_index(hi[0], hi[1], lo[2])],
            self.data[g.linear_index(lo[0], lo[1], hi[2])],
            self.data[g.linear_index(hi[0], lo[1], hi[2])],
            self.data[g.linear_index(lo[0], hi[1], hi[2])],
            self.data[g.linear_index(hi[0], hi[1], hi[2])],
        ];
        T::lerp8(corners, t)
    }

    /// Trilinear interpolation at a world point inside the sampling domain.
    pub fn sample_trilinear(&self, p: PointMm) -> Result<T> {
        let v = self.geometry.voxel_of(p);
        if !p.is_finite() || !self.geometry.contains_voxel(v) {
            return Err(Error::OutOfBounds { x: p.x, y: p.y, z: p.z });
        }
        Ok(self.sample_voxel_clamped(v))
    }

    /// Trilinear interpolation with out-of-domain points clamped to the
    /// nearest boundary face.
    pub fn sample_clamped(&self, p: PointMm) -> T {
        self.sample_voxel_clamped(self.geometry.voxel_of(p))
    }
}

impl<T: Interpolate> Volume<T> {
    /// Resamples onto an isotropic grid of `target_spacing` mm covering the
    /// same physical box (the last sample may stop short of the far face by
    /// less than one output voxel).
    pub fn resample_isotropic(&self, target_spacing: f64) -> Result<Self> {
        if !(target_spacing > 0.0) || !target_spacing.is_finite() {
            return Err(Error::InvalidParams("target spacing must be positive"));
        }
        let src = self.geometry;
        let extent = src.extent();
        let dims = extent.map(|e| libm::floor(e / target_spacing + 1e-9) as usize + 1);
        let geometry = VolumeGeometry::new(dims, [target_spacing; 3], src.origin())?;
        Ok(Volume::from_fn(geometry, |i, j, k| self.sample_clamped(geometry.world_of_index(i, j, k))))
    }
}

impl<T: Clone> Volume<T> {
    /// Cube of side `side_mm` centred on `center`, clipped at the borders.
    /// World coordinates of the retained voxels are unchanged.
    pub fn extract_subvolume(&self, center: PointMm, side_mm: f64) -> Result<Self> {
        if !(side_mm > 0.0) {
            return Err(Error::InvalidParams("side length must be positive"));
        }
        let g = self.geometry;
        if !center.is_finite() || !g.contains(center) {
            return Err(Error::OutOfBounds { x: center.x, y: center.y, z: center.z });
        }
        let c = g.voxel_of(center);
        let dims = g.dims();
        let sp = g.spacing();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let half = 0.5 * side_mm / sp[a];
            let l = libm::ceil(c[a] - half - BOUNDS_EPS).max(0.0) as usize;
            let h = (libm::floor(c[a] + half + BOUNDS_EPS).max(0.0) as usize).min(dims[a] - 1);
            lo[a] = l.min(h);
            hi[a] = h;
        }
        let out_dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
        let origin = g.world_of_index(lo[0], lo[1], lo[2]).to_array();
        let geometry = VolumeGeometry::new(out_dims, sp, origin)?;
        Ok(Volume::from_fn(geometry, |i, j, k| self.at(lo[0] + i, lo[1] + j, lo[2] + k).clone()))
    }
}

impl ScalarVolume {
    /// Clamps to `[lo, hi]` and maps linearly onto `[0, 1]`.
    pub fn threshold_normalize(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidWindow { lo, hi });
        }
        let width = hi - lo;
        Ok(self.map(|&v| (v.clamp(lo, hi) - lo) / width))
    }

    /// Replaces voxels under each mask by that mask's fill value. Later masks
    /// win where masks overlap.
    pub fn overwrite_organ_intensities(&self, masks: &OrganMaskSet) -> Result<Self> {
        let mut out = self.clone();
        for (mask, fill) in masks.iter() {
            if !mask.geometry().approx_eq(self.geometry()) {
                return Err(Error::GeometryMismatch);
            }
            for (v, &inside) in out.data.iter_mut().zip(mask.data()) {
                if inside {
                    *v = fill;
                }
            }
        }
        Ok(out)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl MaskVolume {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// 0/1 intensity image of the mask.
    pub fn to_scalar(&self) -> ScalarVolume {
        self.map(|&b| if b { 1.0 } else { 0.0 })
    }
}

/// Organ masks paired with the constant intensity written into each.
#[derive(Debug, Clone, Default)]
pub struct OrganMaskSet {
    entries: Vec<(MaskVolume, f64)>,
}

impl OrganMaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a mask. All masks must share one geometry and fills must be
    /// finite.
    pub fn push(&mut self, mask: MaskVolume, fill_value: f64) -> Result<()> {
        if !fill_value.is_finite() {
            return Err(Error::InvalidParams("organ fill value must be finite"));
        }
        if let Some((first, _)) = self.entries.first() {
            if !first.geometry().approx_eq(mask.geometry()) {
                return Err(Error::GeometryMismatch);
            }
        }
        self.entries.push((mask, fill_value));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MaskVolume, f64)> {
        self.entries.iter().map(|(m, f)| (m, *f))
    }
}
