//! Test oracles shared by the integration suites.
#![allow(dead_code)]

use vesselmark_core::geometry::PointMm;
use vesselmark_core::rng::Rng64;
use vesselmark_core::synth::{rasterize, rasterize_mask, Shape, YJunction, BACKGROUND_HU, VESSEL_HU};
use vesselmark_core::{MaskVolume, ScalarVolume, VolumeGeometry};

/// Distance from a continuous voxel coordinate to the nearest exterior voxel
/// centre, by expanding-window search. Everything outside the grid counts as
/// exterior.
pub fn interior_distance(mask: &MaskVolume, p: [f64; 3]) -> f64 {
    let dims = mask.dims();
    let base = p.map(|x| x.round() as i64);
    let exterior = |q: [i64; 3]| {
        (0..3).any(|a| q[a] < 0 || q[a] >= dims[a] as i64) || !*mask.at(q[0] as usize, q[1] as usize, q[2] as usize)
    };
    let mut h = 1i64;
    loop {
        let mut best = f64::INFINITY;
        for dz in -h..=h {
            for dy in -h..=h {
                for dx in -h..=h {
                    let q = [base[0] + dx, base[1] + dy, base[2] + dz];
                    if exterior(q) {
                        let d = ((q[0] as f64 - p[0]).powi(2)
                            + (q[1] as f64 - p[1]).powi(2)
                            + (q[2] as f64 - p[2]).powi(2))
                        .sqrt();
                        best = best.min(d);
                    }
                }
            }
        }
        // Anything outside the window is at least h - 0.5 away from p.
        if best <= h as f64 - 0.5 {
            return best;
        }
        h += 1;
    }
}

/// Largest interior distance over interior voxel centres, and where.
pub fn interior_distance_max(mask: &MaskVolume) -> (f64, [usize; 3]) {
    let dims = mask.dims();
    let mut best = (0.0, [0; 3]);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                if *mask.at(i, j, k) {
                    let d = interior_distance(mask, [i as f64, j as f64, k as f64]);
                    if d > best.0 {
                        best = (d, [i, j, k]);
                    }
                }
            }
        }
    }
    best
}

pub struct JunctionCase {
    pub image: ScalarVolume,
    pub mask: MaskVolume,
    pub junction: YJunction,
    pub seed: PointMm,
}

/// A random Y-junction on an `n`-cube at `spacing` mm, tube radius
/// `radius_vox` voxels, seeded `offset_vox` voxels from the junction centre
/// in a random direction.
pub fn junction_case(rng: &mut Rng64, n: usize, spacing: f64, radius_vox: f64, offset_vox: f64) -> JunctionCase {
    let g = VolumeGeometry::new([n; 3], [spacing; 3], [0.0; 3]).unwrap();
    let jitter = [(); 3].map(|_| rng.uniform(-1.0, 1.0) * spacing);
    let center = g.center() + PointMm::from_array(jitter);
    let junction = YJunction::random(rng, center, radius_vox * spacing, 1.25, n as f64 * spacing);
    let shapes = junction.shapes();
    let image = rasterize(g, &shapes, VESSEL_HU, BACKGROUND_HU);
    let mask = image.map(|&v| v > 0.0);
    let dir = rng.unit_vector();
    let seed = center + PointMm::from_array(dir) * (offset_vox * spacing);
    JunctionCase { image, mask, junction, seed }
}

/// A junction with a thick bright slab (an enhancing organ) one voxel from
/// the junction bulb, and a mislabelled seed 8 voxels inside the slab.
pub struct OverlapFixture {
    pub image: ScalarVolume,
    /// The junction alone.
    pub junction_mask: MaskVolume,
    pub seed: PointMm,
}

pub fn overlap_fixture() -> OverlapFixture {
    let sp = 0.7;
    let g = VolumeGeometry::new([96; 3], [sp; 3], [0.0; 3]).unwrap();
    let center = g.center() + PointMm::new(0.0, -14.0 * sp, 0.0);
    let radius = 3.0;
    let theta = 35f64.to_radians();
    let junction = YJunction {
        center,
        trunk: [0.0, 0.0, -1.0],
        branches: [[theta.sin(), 0.0, theta.cos()], [-theta.sin(), 0.0, theta.cos()]],
        radius: radius * sp,
        bulb_radius: 1.25 * radius * sp,
        length: 100.0,
    };
    let surface = 1.25 * radius + 1.0;
    let slab = Shape::Slab {
        lo: PointMm::new(-100.0, center.y + surface * sp, -100.0),
        hi: PointMm::new(200.0, center.y + (surface + 24.0) * sp, 200.0),
    };
    let mut shapes = junction.shapes();
    shapes.push(slab);
    OverlapFixture {
        image: rasterize(g, &shapes, VESSEL_HU, BACKGROUND_HU),
        junction_mask: rasterize_mask(g, &junction.shapes()),
        seed: center + PointMm::new(0.0, (surface + 8.0) * sp, 0.0),
    }
}
