//! Iterative sphere-growing localisation of vessel bifurcation centres.
//!
//! A sphere is seeded at a rough bifurcation position with a sub-voxel
//! radius. Each iteration it grows by a constant internal force, while a
//! gradient-derived opposing force pushes back wherever the sphere reaches
//! past the bright vessel lumen into darker tissue. The imbalance of that
//! opposing force also shifts the centre away from the walls it presses
//! against, so the sphere settles in the widest part of the vessel, which at
//! a bifurcation is the branching point.
//!
//! Coordinates inside the grower are continuous voxel indices of the
//! isotropic working patch; results are converted back to world mm.

use alloc::vec::Vec;

use crate::filters::{
    fill_cavities, frangi_vesselness, region_grow_mask, smoothed_gradient, RegionGrowParams, VesselnessParams,
};
use crate::geometry::{PointMm, VolumeGeometry};
use crate::volume::{MaskVolume, ScalarVolume, VectorField, Volume};
use crate::{Error, Result};

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Gradient magnitudes below this (normalised intensity per voxel) carry no
/// direction and produce zero force.
pub const GRADIENT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowConfig {
    /// Centre step scale.
    pub lambda1: f64,
    /// Radius step scale.
    pub lambda2: f64,
    /// Constant outward growth per iteration, in voxels.
    pub f_int: f64,
    pub iterations: usize,
    /// Initial radius in voxels.
    pub init_radius: f64,
    /// Isotropic working resolution in mm.
    pub target_spacing: f64,
    /// Intensity window (HU) mapped onto `[0, 1]`.
    pub window: (f64, f64),
    /// Gradient smoothing in voxels.
    pub sigma: f64,
    /// Side of the cubic working patch in mm.
    pub patch_side_mm: f64,
    /// Divergence bound on the radius, in voxels.
    pub max_radius: f64,
    /// Divergence bound on centre travel from the seed, in mm.
    pub max_center_drift: f64,
    /// Number of trailing iterations inspected for settling.
    pub settle_window: usize,
    /// Maximum centre travel and radius change (voxels) over the trailing
    /// window for a run to count as converged.
    pub settle_tolerance: f64,
}

impl Default for GrowConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.2,
            lambda2: 0.3,
            f_int: 0.25,
            iterations: 30,
            init_radius: 0.5,
            target_spacing: 0.7,
            window: (-160.0, 240.0),
            sigma: 1.0,
            patch_side_mm: 100.0,
            max_radius: 7.0,
            max_center_drift: 15.0,
            settle_window: 5,
            settle_tolerance: 0.5,
        }
    }
}

impl GrowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.lambda1, "lambda1 must be positive"),
            (self.lambda2, "lambda2 must be positive"),
            (self.f_int, "f_int must be positive"),
            (self.init_radius, "init_radius must be positive"),
            (self.target_spacing, "target_spacing must be positive"),
            (self.sigma, "sigma must be positive"),
            (self.patch_side_mm, "patch side must be positive"),
            (self.max_radius, "max_radius must be positive"),
            (self.max_center_drift, "max_center_drift must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(msg));
            }
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParams("iterations must be at least 1"));
        }
        if !(self.window.0 < self.window.1) {
            return Err(Error::InvalidWindow { lo: self.window.0, hi: self.window.1 });
        }
        if !(self.settle_tolerance >= 0.0) {
            return Err(Error::InvalidParams("settle_tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Sphere centre (continuous voxel coordinates), radius (voxels) and the
/// iteration that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereState {
    pub center: [f64; 3],
    pub radius: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceImage {
    Original,
    VesselnessMask,
    ManualMask,
}

impl SourceImage {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::VesselnessMask => "vesselness_mask",
            Self::ManualMask => "manual_mask",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowOutcome {
    /// Ran every iteration and both centre and radius settled.
    Converged,
    /// Radius or centre travel exceeded its bound.
    Diverged,
    /// Ran every iteration but the sphere was still moving or growing.
    Capped,
}

impl GrowOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Diverged => "diverged",
            Self::Capped => "capped",
        }
    }
}

/// Every sphere state of one run plus the grid those voxel coordinates refer
/// to.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowTrace {
    pub states: Vec<SphereState>,
    pub source: SourceImage,
    pub outcome: GrowOutcome,
    pub geometry: VolumeGeometry,
}

impl GrowTrace {
    pub fn last(&self) -> &SphereState {
        self.states.last().expect("trace always holds the initial state")
    }

    pub fn center_mm(&self, state: &SphereState) -> PointMm {
        self.geometry.world_of(state.center)
    }

    /// Radius in mm (the working grid is isotropic).
    pub fn radius_mm(&self, state: &SphereState) -> f64 {
        state.radius * self.geometry.spacing()[0]
    }

    pub fn final_center_mm(&self) -> PointMm {
        self.center_mm(self.last())
    }
}

/// `u = -(1 - I) * g / |g|` per voxel, zero where `|g|` is below
/// [`GRADIENT_EPS`]. `vol` is the `[0, 1]` image `I`, `grad` its gradient.
pub fn opposing_force_field(vol: &ScalarVolume, grad: &VectorField) -> Result<VectorField> {
    if vol.geometry() != grad.geometry() {
        return Err(Error::GeometryMismatch);
    }
    let data = vol
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&i, g)| {
            let n = libm::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
            if n < GRADIENT_EPS {
                [0.0; 3]
            } else {
                let s = -(1.0 - i) / n;
                [s * g[0], s * g[1], s * g[2]]
            }
        })
        .collect();
    Volume::from_vec(*vol.geometry(), data)
}

/// One sphere update.
///
/// The support set is every voxel within `radius` of the centre, plus the
/// voxel nearest the centre so a sub-voxel sphere is never empty; voxels
/// outside the grid are skipped. Both updates average the force weighted by
/// its magnitude: sums are divided by `max(sum |u|, 1)`. The radial term
/// projects each force on the unit offset from the centre.
pub fn step(state: &SphereState, u: &VectorField, cfg: &GrowConfig) -> Result<SphereState> {
    let dims = u.dims();
    let c = state.center;
    let r = state.radius;
    let nearest = [0, 1, 2].map(|a| libm::round(c[a]));
    let nearest_inside = (0..3).all(|a| nearest[a] >= 0.0 && nearest[a] <= (dims[a] - 1) as f64);

    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let l = libm::ceil(c[a] - r).max(0.0);
        let h = libm::floor(c[a] + r).min((dims[a] - 1) as f64);
        if h < l {
            lo[a] = 1;
            hi[a] = 0;
        } else {
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
    }

    let mut count = 0usize;
    let mut force = [0.0f64; 3];
    let mut radial = 0.0f64;
    let mut mass = 0.0f64;
    let mut visit = |x: [usize; 3]| {
        let f = *u.at(x[0], x[1], x[2]);
        let d = [x[0] as f64 - c[0], x[1] as f64 - c[1], x[2] as f64 - c[2]];
        let dist = libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        count += 1;
        mass += libm::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
        for a in 0..3 {
            force[a] += f[a];
        }
        if dist > 0.0 {
            radial += (d[0] * f[0] + d[1] * f[1] + d[2] * f[2]) / dist;
        }
    };
    let r2 = r * r;
    let mut nearest_seen = false;
    if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let d2 = sq(i as f64 - c[0]) + sq(j as f64 - c[1]) + sq(k as f64 - c[2]);
                    if d2 <= r2 {
                        if [i as f64, j as f64, k as f64] == nearest {
                            nearest_seen = true;
                        }
                        visit([i, j, k]);
                    }
                }
            }
        }
    }
    if nearest_inside && !nearest_seen {
        visit(nearest.map(|x| x as usize));
    }
    if count == 0 {
        return Err(Error::EmptySupport);
    }

    let norm = mass.max(1.0);
    let center = [
        c[0] + cfg.lambda1 * force[0] / norm,
        c[1] + cfg.lambda1 * force[1] / norm,
        c[2] + cfg.lambda1 * force[2] / norm,
    ];
    let radius = r + cfg.f_int + cfg.lambda2 * radial / norm;
    Ok(SphereState { center, radius, iteration: state.iteration + 1 })
}

/// Restoring force field of a `[0, 1]` image whose vessels are bright.
///
/// The gradient is taken of the inverted image `1 - I`, so the force points
/// from dark surroundings back up the intensity slope into the lumen; the
/// `(1 - I)` weight still comes from `I`.
pub fn restoring_force(normalized: &ScalarVolume, sigma: f64) -> Result<VectorField> {
    let inverted = normalized.map(|&v| 1.0 - v);
    let grad = smoothed_gradient(&inverted, sigma)?;
    opposing_force_field(normalized, &grad)
}

/// Runs the grower on an already normalised isotropic patch.
pub fn grow_on_patch(patch: &ScalarVolume, seed: PointMm, cfg: &GrowConfig, source: SourceImage) -> Result<GrowTrace> {
    cfg.validate()?;
    let g = *patch.geometry();
    if !g.contains(seed) {
        return Err(Error::OutOfBounds { x: seed.x, y: seed.y, z: seed.z });
    }
    let u = restoring_force(patch, cfg.sigma)?;
    grow_with_force(&u, seed, cfg, source)
}

/// Iterates [`step`] on a precomputed force field.
pub fn grow_with_force(u: &VectorField, seed: PointMm, cfg: &GrowConfig, source: SourceImage) -> Result<GrowTrace> {
    let g = *u.geometry();
    let start = g.voxel_of(seed);
    let sp = g.spacing();
    let mut state = SphereState { center: start, radius: cfg.init_radius, iteration: 0 };
    let mut states = Vec::with_capacity(cfg.iterations + 1);
    states.push(state);
    let mut outcome = None;
    for _ in 0..cfg.iterations {
        state = step(&state, u, cfg)?;
        states.push(state);
        let drift = libm::sqrt((0..3).map(|a| sq((state.center[a] - start[a]) * sp[a])).sum::<f64>());
        if !(state.radius <= cfg.max_radius) || !(drift <= cfg.max_center_drift) || !g.contains_voxel(state.center) {
            outcome = Some(GrowOutcome::Diverged);
            break;
        }
    }
    let outcome = outcome.unwrap_or_else(|| {
        let n = states.len() - 1;
        let back = &states[n.saturating_sub(cfg.settle_window)];
        let last = &states[n];
        let travel = libm::sqrt((0..3).map(|a| sq(last.center[a] - back.center[a])).sum::<f64>());
        let growth = (last.radius - back.radius).abs();
        if travel <= cfg.settle_tolerance && growth <= cfg.settle_tolerance {
            GrowOutcome::Converged
        } else {
            GrowOutcome::Capped
        }
    });
    Ok(GrowTrace { states, source, outcome, geometry: g })
}

/// Cuts the working cube around `seed`, resamples it to the isotropic
/// working resolution and windows it onto `[0, 1]`.
pub fn prepare_patch(image: &ScalarVolume, seed: PointMm, cfg: &GrowConfig) -> Result<ScalarVolume> {
    cfg.validate()?;
    let sub = image.extract_subvolume(seed, cfg.patch_side_mm)?;
    let iso = sub.resample_isotropic(cfg.target_spacing)?;
    iso.threshold_normalize(cfg.window.0, cfg.window.1)
}

/// Refines one bifurcation seed on the intensity image. Returns the final
/// centre in world mm and the full trace.
pub fn refine_bifurcation(image: &ScalarVolume, seed: PointMm, cfg: &GrowConfig) -> Result<(PointMm, GrowTrace)> {
    if !image.geometry().contains(seed) {
        return Err(Error::OutOfBounds { x: seed.x, y: seed.y, z: seed.z });
    }
    let patch = prepare_patch(image, seed, cfg)?;
    let trace = grow_on_patch(&patch, seed, cfg, SourceImage::Original)?;
    Ok((trace.final_center_mm(), trace))
}

/// Grows on a binary vessel mask given on the image grid (for example a
/// manual segmentation).
pub fn refine_on_mask(mask: &MaskVolume, seed: PointMm, cfg: &GrowConfig) -> Result<(PointMm, GrowTrace)> {
    if !mask.geometry().contains(seed) {
        return Err(Error::OutOfBounds { x: seed.x, y: seed.y, z: seed.z });
    }
    cfg.validate()?;
    let patch = mask.to_scalar().extract_subvolume(seed, cfg.patch_side_mm)?.resample_isotropic(cfg.target_spacing)?;
    let trace = grow_on_patch(&patch, seed, cfg, SourceImage::ManualMask)?;
    Ok((trace.final_center_mm(), trace))
}

/// [`refine_bifurcation`], falling back to a vesselness-derived vessel mask
/// when the run on the image does not converge.
///
/// The fallback computes vesselness on the windowed working patch and flood
/// fills it from the seed. A seed that is not on a vessel is moved to the
/// strongest vesselness voxel within `max_radius` of it, the region a sphere
/// run is allowed to explore. Enclosed cavities are closed (blob-like
/// junction centres score low on a tubularity filter) and the grower reruns
/// on the 0/1 mask from the flood seed. If that run fails too the result is
/// reported as diverged on the vesselness mask.
pub fn refine_with_fallback(
    image: &ScalarVolume,
    seed: PointMm,
    cfg: &GrowConfig,
    vesselness: &VesselnessParams,
    region: &RegionGrowParams,
) -> Result<(PointMm, GrowTrace)> {
    let (point, first) = refine_bifurcation(image, seed, cfg)?;
    if first.outcome == GrowOutcome::Converged {
        return Ok((point, first));
    }
    let patch = prepare_patch(image, seed, cfg)?;
    let vessel = frangi_vesselness(&patch, vesselness)?;
    let reach = cfg.max_center_drift / patch.geometry().spacing()[0];
    let Some(mask_seed) = vessel_seed(&vessel, seed, region.threshold, reach) else {
        return Ok(failed(point, first));
    };
    let grown = region_grow_mask(&vessel, mask_seed, region)?;
    let mask = fill_cavities(&grown.mask);
    let trace = grow_on_patch(&mask.to_scalar(), mask_seed, cfg, SourceImage::VesselnessMask)?;
    let center = trace.final_center_mm();
    if trace.outcome == GrowOutcome::Converged {
        Ok((center, trace))
    } else {
        Ok(failed(center, trace))
    }
}

fn failed(point: PointMm, mut trace: GrowTrace) -> (PointMm, GrowTrace) {
    trace.source = SourceImage::VesselnessMask;
    trace.outcome = GrowOutcome::Diverged;
    (point, trace)
}

/// The seed itself if its vesselness passes `threshold`, otherwise the
/// strongest passing voxel within `radius` voxels.
fn vessel_seed(vessel: &ScalarVolume, seed: PointMm, threshold: f64, radius: f64) -> Option<PointMm> {
    let g = vessel.geometry();
    let dims = g.dims();
    let v = g.voxel_of(seed);
    if vessel.sample_voxel_clamped([0, 1, 2].map(|a| libm::round(v[a]))) >= threshold {
        return Some(seed);
    }
    let lo = [0, 1, 2].map(|a| libm::ceil(v[a] - radius).max(0.0) as usize);
    let hi = [0, 1, 2].map(|a| (libm::floor(v[a] + radius).max(0.0) as usize).min(dims[a] - 1));
    let mut best: Option<([usize; 3], f64)> = None;
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                if sq(i as f64 - v[0]) + sq(j as f64 - v[1]) + sq(k as f64 - v[2]) > radius * radius {
                    continue;
                }
                let val = *vessel.at(i, j, k);
                if val >= threshold && best.is_none_or(|(_, b)| val > b) {
                    best = Some(([i, j, k], val));
                }
            }
        }
    }
    best.map(|(q, _)| g.world_of_index(q[0], q[1], q[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairType {
    /// Vessels of similar diameter.
    Type1,
    /// The larger vessel is at least 2.5 times the diameter of the smaller.
    Type2,
}

impl PairType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Type1 => "type1",
            Self::Type2 => "type2",
        }
    }
}

/// Diameter ratio at or above which a bifurcation is type 2.
pub const TYPE2_DIAMETER_RATIO: f64 = 2.5;

pub fn classify_pair_type(d_large: f64, d_small: f64) -> Result<PairType> {
    if !(d_large > 0.0) || !(d_small > 0.0) {
        return Err(Error::InvalidDiameter);
    }
    let (big, small) = if d_large >= d_small { (d_large, d_small) } else { (d_small, d_large) };
    Ok(if big / small >= TYPE2_DIAMETER_RATIO { PairType::Type2 } else { PairType::Type1 })
}
