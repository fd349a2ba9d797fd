//! Synthetic transforms with exactly known point correspondence, and the
//! phantom and observer patch pairs built from them.

use core::f64::consts::PI;

use crate::eval::LandmarkPair;
use crate::geometry::PointMm;
use crate::rng::Rng64;
use crate::volume::ScalarVolume;
use crate::{Error, Result};

/// Side of the phantom patch cube in mm.
pub const PHANTOM_PATCH_MM: f64 = 200.0;
/// Isotropic spacing of phantom patches in mm.
pub const PHANTOM_SPACING_MM: f64 = 0.7;
/// Side of observer patches in mm.
pub const OBSERVER_PATCH_MM: f64 = 100.0;
/// Largest per-axis observer shift in voxels.
pub const OBSERVER_MAX_SHIFT: i64 = 3;

pub const MAX_ANGLE_DEG: f64 = 50.0;
pub const SCALE_RANGE: (f64, f64) = (0.9, 1.1);
pub const AMPLITUDE_RANGE_MM: (f64, f64) = (2.0, 5.0);
pub const WAVELENGTH_RANGE_MM: (f64, f64) = (40.0, 80.0);

const INVERT_MAX_ITERATIONS: usize = 100;
const INVERT_TOLERANCE_MM: f64 = 1e-9;

/// One axis of the sinusoidal displacement. Axis `a` is displaced by
/// `amplitude * sin(2 pi q[(a + 1) % 3] / wavelength + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub wavelength: f64,
    pub phase: f64,
}

impl Sinusoid {
    pub const ZERO: Sinusoid = Sinusoid { amplitude: 0.0, wavelength: 1.0, phase: 0.0 };

    /// Largest slope of the displacement.
    pub fn max_slope(&self) -> f64 {
        2.0 * PI * self.amplitude.abs() / self.wavelength
    }
}

/// Scale, then rotate, about `pivot`, then add a sinusoidal displacement
/// evaluated in the pivot-centred frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTransform {
    pub axis: [f64; 3],
    pub angle_deg: f64,
    pub scale: f64,
    pub sinusoid: [Sinusoid; 3],
    pub pivot: PointMm,
    pub seed: u64,
}

impl SyntheticTransform {
    pub fn identity(pivot: PointMm) -> Self {
        Self { axis: [0.0, 0.0, 1.0], angle_deg: 0.0, scale: 1.0, sinusoid: [Sinusoid::ZERO; 3], pivot, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let n = libm::sqrt(self.axis.iter().map(|a| a * a).sum::<f64>());
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams("rotation axis must be a unit vector"));
        }
        if !(0.0..=MAX_ANGLE_DEG).contains(&self.angle_deg) {
            return Err(Error::InvalidParams("angle must lie in [0, 50] degrees"));
        }
        if !(SCALE_RANGE.0..=SCALE_RANGE.1).contains(&self.scale) {
            return Err(Error::InvalidParams("scale must lie in [0.9, 1.1]"));
        }
        if self.sinusoid.iter().any(|s| !(s.wavelength > 0.0) || !s.amplitude.is_finite() || !s.phase.is_finite()) {
            return Err(Error::InvalidParams("sinusoid parameters must be finite with positive wavelength"));
        }
        if !self.pivot.is_finite() {
            return Err(Error::InvalidParams("pivot must be finite"));
        }
        Ok(())
    }

    /// Lipschitz bound of the displacement term. Below 1 the forward map is
    /// injective and [`invert_point`] is a contraction.
    pub fn displacement_lipschitz(&self) -> f64 {
        self.sinusoid.iter().map(Sinusoid::max_slope).fold(0.0, f64::max)
    }

    /// Rotation matrix (row major) by Rodrigues' formula.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let [x, y, z] = self.axis;
        let t = self.angle_deg.to_radians();
        let (s, c) = (libm::sin(t), libm::cos(t));
        let v = 1.0 - c;
        [
            [c + x * x * v, x * y * v - z * s, x * z * v + y * s],
            [y * x * v + z * s, c + y * y * v, y * z * v - x * s],
            [z * x * v - y * s, z * y * v + x * s, c + z * z * v],
        ]
    }

    fn displacement(&self, q: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| {
            let s = &self.sinusoid[a];
            s.amplitude * libm::sin(2.0 * PI * q[(a + 1) % 3] / s.wavelength + s.phase)
        })
    }
}

/// Draws a transform pivoted at `pivot`. The same seed always gives the same
/// transform.
pub fn random_transform(seed: u64, pivot: PointMm) -> SyntheticTransform {
    let mut rng = Rng64::new(seed);
    let axis = rng.unit_vector();
    let angle_deg = rng.uniform(0.0, MAX_ANGLE_DEG);
    let scale = rng.uniform(SCALE_RANGE.0, SCALE_RANGE.1);
    let sinusoid = [(); 3].map(|_| Sinusoid {
        amplitude: rng.uniform(AMPLITUDE_RANGE_MM.0, AMPLITUDE_RANGE_MM.1),
        wavelength: rng.uniform(WAVELENGTH_RANGE_MM.0, WAVELENGTH_RANGE_MM.1),
        phase: rng.uniform(0.0, 2.0 * PI),
    });
    SyntheticTransform { axis, angle_deg, scale, sinusoid, pivot, seed }
}

pub fn map_point_forward(t: &SyntheticTransform, p: PointMm) -> PointMm {
    let r = t.rotation();
    let v = ((p - t.pivot) * t.scale).to_array();
    let q = [0, 1, 2].map(|a| r[a][0] * v[0] + r[a][1] * v[1] + r[a][2] * v[2]);
    let d = t.displacement(q);
    t.pivot + PointMm::new(q[0] + d[0], q[1] + d[1], q[2] + d[2])
}

/// Inverse of [`map_point_forward`]. The displacement is removed by
/// fixed-point iteration, then rotation and scale are undone exactly.
///
/// Transforms whose displacement is not a contraction may fold, so they fail
/// with `NoConvergence { iterations: 0 }` before iterating.
pub fn invert_point(t: &SyntheticTransform, q: PointMm) -> Result<PointMm> {
    if t.displacement_lipschitz() >= 1.0 {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    let z = (q - t.pivot).to_array();
    let mut w = z;
    let mut converged = false;
    for _ in 0..INVERT_MAX_ITERATIONS {
        let d = t.displacement(w);
        let next = [z[0] - d[0], z[1] - d[1], z[2] - d[2]];
        let delta = (0..3).map(|a| (next[a] - w[a]).abs()).fold(0.0, f64::max);
        w = next;
        if delta < INVERT_TOLERANCE_MM {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: INVERT_MAX_ITERATIONS });
    }
    let r = t.rotation();
    // R is orthonormal, so its transpose undoes it.
    let v = [0, 1, 2].map(|a| r[0][a] * w[0] + r[1][a] * w[1] + r[2][a] * w[2]);
    Ok(t.pivot + PointMm::from_array(v) * (1.0 / t.scale))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomPair {
    pub patch1: ScalarVolume,
    /// `patch1` warped by `transform`, on the same grid.
    pub patch2: ScalarVolume,
    pub transform: SyntheticTransform,
    pub gt_landmark1: PointMm,
    pub gt_landmark2: PointMm,
}

/// 200 mm phantom pair at 0.7 mm around `landmark` with a transform drawn
/// from `seed`.
pub fn make_phantom_pair(image: &ScalarVolume, landmark: PointMm, seed: u64) -> Result<PhantomPair> {
    make_phantom_pair_with(image, landmark, random_transform(seed, landmark), PHANTOM_PATCH_MM, PHANTOM_SPACING_MM)
}

/// [`make_phantom_pair`] with an explicit transform and patch size.
pub fn make_phantom_pair_with(
    image: &ScalarVolume,
    landmark: PointMm,
    transform: SyntheticTransform,
    side_mm: f64,
    spacing_mm: f64,
) -> Result<PhantomPair> {
    transform.validate()?;
    if !image.geometry().contains(landmark) {
        return Err(Error::OutOfBounds { x: landmark.x, y: landmark.y, z: landmark.z });
    }
    let patch1 = image.extract_subvolume(landmark, side_mm)?.resample_isotropic(spacing_mm)?;
    let g = *patch1.geometry();
    let mut data = alloc::vec::Vec::with_capacity(g.voxel_count());
    for k in 0..g.dims()[2] {
        for j in 0..g.dims()[1] {
            for i in 0..g.dims()[0] {
                let src = invert_point(&transform, g.world_of_index(i, j, k))?;
                data.push(patch1.sample_clamped(src));
            }
        }
    }
    let patch2 = ScalarVolume::from_vec(g, data)?;
    Ok(PhantomPair {
        patch1,
        patch2,
        gt_landmark2: map_point_forward(&transform, landmark),
        transform,
        gt_landmark1: landmark,
    })
}

/// Blinded observer patches: 100 mm around `p1` in `img1`, and 100 mm around
/// `p2` in `img2` displaced by a random whole-voxel shift of at most three
/// voxels per axis. The shift is returned for unblinding.
pub fn make_observer_patch_pair(
    img1: &ScalarVolume,
    img2: &ScalarVolume,
    pair: &LandmarkPair,
    seed: u64,
) -> Result<(ScalarVolume, ScalarVolume, [i64; 3])> {
    let mut rng = Rng64::new(seed);
    let shift = [(); 3].map(|_| rng.range_i64(-OBSERVER_MAX_SHIFT, OBSERVER_MAX_SHIFT));
    let (a, b) = observer_patches_with_shift(img1, img2, pair, shift)?;
    Ok((a, b, shift))
}

/// Observer patches for a given shift.
pub fn observer_patches_with_shift(
    img1: &ScalarVolume,
    img2: &ScalarVolume,
    pair: &LandmarkPair,
    shift: [i64; 3],
) -> Result<(ScalarVolume, ScalarVolume)> {
    for p in [(img1, pair.p1), (img2, pair.p2)] {
        if !p.0.geometry().contains(p.1) {
            return Err(Error::OutOfBounds { x: p.1.x, y: p.1.y, z: p.1.z });
        }
    }
    let patch1 = img1.extract_subvolume(pair.p1, OBSERVER_PATCH_MM)?;
    let patch2 = img2.extract_subvolume(shifted_center(img2, pair.p2, shift), OBSERVER_PATCH_MM)?;
    Ok((patch1, patch2))
}

/// World position of `p` moved by `shift` voxels of `img`'s grid.
pub fn shifted_center(img: &ScalarVolume, p: PointMm, shift: [i64; 3]) -> PointMm {
    let sp = img.geometry().spacing();
    p + PointMm::new(shift[0] as f64 * sp[0], shift[1] as f64 * sp[1], shift[2] as f64 * sp[2])
}
