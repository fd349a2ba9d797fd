use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::{Error, Result};

/// A point (or displacement) in world millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointMm {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PointMm {
    pub const ORIGIN: PointMm = PointMm { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for PointMm {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for PointMm {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for PointMm {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for PointMm {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for PointMm {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned voxel grid placed in world space.
///
/// Voxel `(i, j, k)` sits at `origin + (i, j, k) * spacing`. Memory order is
/// x fastest, z slowest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeGeometry {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl VolumeGeometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGeometry("every dimension must be at least 1"));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidGeometry("spacing must be positive and finite"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGeometry("origin must be finite"));
        }
        Ok(Self { dims, spacing, origin })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn index_triple(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    /// World position of a (possibly fractional) voxel coordinate.
    pub fn world_of(&self, v: [f64; 3]) -> PointMm {
        PointMm::new(
            self.origin[0] + v[0] * self.spacing[0],
            self.origin[1] + v[1] * self.spacing[1],
            self.origin[2] + v[2] * self.spacing[2],
        )
    }

    pub fn world_of_index(&self, i: usize, j: usize, k: usize) -> PointMm {
        self.world_of([i as f64, j as f64, k as f64])
    }

    /// Continuous voxel coordinate of a world point.
    pub fn voxel_of(&self, p: PointMm) -> [f64; 3] {
        [
            (p.x - self.origin[0]) / self.spacing[0],
            (p.y - self.origin[1]) / self.spacing[1],
            (p.z - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Physical length covered by voxel centres along each axis.
    pub fn extent(&self) -> [f64; 3] {
        [
            (self.dims[0] - 1) as f64 * self.spacing[0],
            (self.dims[1] - 1) as f64 * self.spacing[1],
            (self.dims[2] - 1) as f64 * self.spacing[2],
        ]
    }

    /// Centre of the grid in world mm.
    pub fn center(&self) -> PointMm {
        let e = self.extent();
        PointMm::new(self.origin[0] + 0.5 * e[0], self.origin[1] + 0.5 * e[1], self.origin[2] + 0.5 * e[2])
    }

    /// True when `p` lies inside the box spanned by the voxel centres.
    pub fn contains(&self, p: PointMm) -> bool {
        self.contains_voxel(self.voxel_of(p))
    }

    pub fn contains_voxel(&self, v: [f64; 3]) -> bool {
        (0..3).all(|a| v[a] >= -BOUNDS_EPS && v[a] <= (self.dims[a] - 1) as f64 + BOUNDS_EPS)
    }

    /// Same grid within a relative tolerance on spacing and origin.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && (0..3).all(|a| {
                let ds = (self.spacing[a] - other.spacing[a]).abs();
                let d_o = (self.origin[a] - other.origin[a]).abs();
                ds <= 1e-6 * self.spacing[a] && d_o <= 1e-6 * self.spacing[a].max(1.0)
            })
    }
}

/// Slack (in voxels) for points that sit on the domain boundary up to
/// floating-point rounding.
pub(crate) const BOUNDS_EPS: f64 = 1e-9;
