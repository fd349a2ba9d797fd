use alloc::collections::VecDeque;

use crate::geometry::PointMm;
use crate::volume::{MaskVolume, ScalarVolume};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Faces6,
    Full26,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Self::Faces6),
            26 => Some(Self::Full26),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Self::Faces6 => 6,
            Self::Full26 => 26,
        }
    }

    pub(crate) fn offsets(self) -> impl Iterator<Item = [isize; 3]> {
        let full = self == Self::Full26;
        (-1..=1isize).flat_map(move |dz| {
            (-1..=1isize).flat_map(move |dy| {
                (-1..=1isize).filter_map(move |dx| {
                    let nonzero = (dx != 0) as u8 + (dy != 0) as u8 + (dz != 0) as u8;
                    (nonzero == 1 || (full && nonzero > 1)).then_some([dx, dy, dz])
                })
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionGrowParams {
    /// Minimum accepted voxel value.
    pub threshold: f64,
    pub connectivity: Connectivity,
    pub max_voxels: usize,
}

impl Default for RegionGrowParams {
    fn default() -> Self {
        Self { threshold: 0.05, connectivity: Connectivity::Full26, max_voxels: 500_000 }
    }
}

/// Result of a flood fill. `capped` is set when growth stopped at
/// `max_voxels`; the mask then holds the first `max_voxels` voxels reached.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub mask: MaskVolume,
    pub capped: bool,
}

/// Breadth-first flood fill from the voxel nearest `seed` over voxels whose
/// value is at least `params.threshold`.
pub fn region_grow_mask(vol: &ScalarVolume, seed: PointMm, params: &RegionGrowParams) -> Result<RegionMask> {
    let g = *vol.geometry();
    if !g.contains(seed) {
        return Err(Error::OutOfBounds { x: seed.x, y: seed.y, z: seed.z });
    }
    if params.max_voxels == 0 {
        return Err(Error::InvalidParams("max_voxels must be positive"));
    }
    let dims = g.dims();
    let v = g.voxel_of(seed);
    let s = [0, 1, 2].map(|a| (libm::round(v[a]).max(0.0) as usize).min(dims[a] - 1));
    let seed_value = *vol.at(s[0], s[1], s[2]);
    if !(seed_value >= params.threshold) {
        return Err(Error::SeedBelowThreshold { value: seed_value, threshold: params.threshold });
    }

    let mut mask = MaskVolume::filled(g, false);
    let mut queue = VecDeque::new();
    *mask.at_mut(s[0], s[1], s[2]) = true;
    queue.push_back(s);
    let mut count = 1usize;
    let mut capped = false;
    'fill: while let Some(p) = queue.pop_front() {
        for d in params.connectivity.offsets() {
            let mut q = [0usize; 3];
            let mut inside = true;
            for a in 0..3 {
                let x = p[a] as isize + d[a];
                if x < 0 || x >= dims[a] as isize {
                    inside = false;
                    break;
                }
                q[a] = x as usize;
            }
            if !inside || *mask.at(q[0], q[1], q[2]) || !(*vol.at(q[0], q[1], q[2]) >= params.threshold) {
                continue;
            }
            if count == params.max_voxels {
                capped = true;
                break 'fill;
            }
            *mask.at_mut(q[0], q[1], q[2]) = true;
            count += 1;
            queue.push_back(q);
        }
    }
    Ok(RegionMask { mask, capped })
}

/// Sets every background voxel that cannot reach the grid border through
/// face-connected background to foreground.
pub fn fill_cavities(mask: &MaskVolume) -> MaskVolume {
    let dims = mask.dims();
    let mut outside = MaskVolume::filled(*mask.geometry(), false);
    let mut queue = VecDeque::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let border = i == 0 || j == 0 || k == 0 || i + 1 == dims[0] || j + 1 == dims[1] || k + 1 == dims[2];
                if border && !*mask.at(i, j, k) {
                    *outside.at_mut(i, j, k) = true;
                    queue.push_back([i, j, k]);
                }
            }
        }
    }
    while let Some(p) = queue.pop_front() {
        for d in Connectivity::Faces6.offsets() {
            let q = [0, 1, 2].map(|a| p[a] as isize + d[a]);
            if (0..3).any(|a| q[a] < 0 || q[a] >= dims[a] as isize) {
                continue;
            }
            let q = q.map(|x| x as usize);
            if *mask.at(q[0], q[1], q[2]) || *outside.at(q[0], q[1], q[2]) {
                continue;
            }
            *outside.at_mut(q[0], q[1], q[2]) = true;
            queue.push_back(q);
        }
    }
    outside.map(|&o| !o)
}
