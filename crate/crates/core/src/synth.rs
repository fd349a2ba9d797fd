//! Binary tube phantoms for exercising the grower: straight cylinders and
//! Y-shaped junctions.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::{PointMm, VolumeGeometry};
use crate::rng::Rng64;
use crate::volume::{MaskVolume, ScalarVolume};

/// Contrast-filled lumen, above the default window.
pub const VESSEL_HU: f64 = 300.0;
/// Surrounding fat, below the default window.
pub const BACKGROUND_HU: f64 = -200.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Capsule around the segment `a`-`b`.
    Tube {
        a: PointMm,
        b: PointMm,
        radius: f64,
    },
    Ball {
        center: PointMm,
        radius: f64,
    },
    /// Axis-aligned box between two corners.
    Slab {
        lo: PointMm,
        hi: PointMm,
    },
}

impl Shape {
    pub fn contains(&self, p: PointMm) -> bool {
        match *self {
            Shape::Tube { a, b, radius } => segment_distance(p, a, b) <= radius,
            Shape::Ball { center, radius } => p.distance(center) <= radius,
            Shape::Slab { lo, hi } => {
                (lo.x..=hi.x).contains(&p.x) && (lo.y..=hi.y).contains(&p.y) && (lo.z..=hi.z).contains(&p.z)
            }
        }
    }
}

pub fn segment_distance(p: PointMm, a: PointMm, b: PointMm) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * t)
}

/// Voxels whose centre lies in any shape.
pub fn rasterize_mask(geometry: VolumeGeometry, shapes: &[Shape]) -> MaskVolume {
    MaskVolume::from_fn(geometry, |i, j, k| {
        let p = geometry.world_of_index(i, j, k);
        shapes.iter().any(|s| s.contains(p))
    })
}

/// `inside` inside any shape, `outside` elsewhere.
pub fn rasterize(geometry: VolumeGeometry, shapes: &[Shape], inside: f64, outside: f64) -> ScalarVolume {
    rasterize_mask(geometry, shapes).map(|&b| if b { inside } else { outside })
}

/// Straight tube through `point` along `dir`, long enough to cross any grid
/// of `length` mm.
pub fn cylinder(point: PointMm, dir: [f64; 3], radius: f64, length: f64) -> Shape {
    let d = PointMm::from_array(dir) * (1.0 / PointMm::from_array(dir).norm());
    Shape::Tube { a: point - d * length, b: point + d * length, radius }
}

/// A trunk splitting into two branches at `center`, with a ball at the
/// junction so the widest inscribed sphere is unique.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YJunction {
    pub center: PointMm,
    pub trunk: [f64; 3],
    pub branches: [[f64; 3]; 2],
    pub radius: f64,
    pub bulb_radius: f64,
    pub length: f64,
}

impl YJunction {
    /// Random orientation; branches open 25 to 45 degrees off the trunk
    /// axis. Radii and length in mm.
    pub fn random(rng: &mut Rng64, center: PointMm, radius: f64, bulb_factor: f64, length: f64) -> Self {
        let e2 = rng.unit_vector();
        let mut e0 = rng.unit_vector();
        let along = e0[0] * e2[0] + e0[1] * e2[1] + e0[2] * e2[2];
        for a in 0..3 {
            e0[a] -= along * e2[a];
        }
        let n = libm::sqrt(e0.iter().map(|v| v * v).sum::<f64>());
        let e0 = if n > 1e-6 { e0.map(|v| v / n) } else { orthogonal(e2) };
        let theta = rng.uniform(25.0, 45.0) * PI / 180.0;
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        let branch = |sign: f64| [0, 1, 2].map(|a| c * e2[a] + sign * s * e0[a]);
        Self {
            center,
            trunk: e2.map(|v| -v),
            branches: [branch(1.0), branch(-1.0)],
            radius,
            bulb_radius: radius * bulb_factor,
            length,
        }
    }

    pub fn shapes(&self) -> Vec<Shape> {
        let mut out: Vec<Shape> = [self.trunk, self.branches[0], self.branches[1]]
            .iter()
            .map(|d| Shape::Tube {
                a: self.center,
                b: self.center + PointMm::from_array(*d) * self.length,
                radius: self.radius,
            })
            .collect();
        out.push(Shape::Ball { center: self.center, radius: self.bulb_radius });
        out
    }
}

fn orthogonal(v: [f64; 3]) -> [f64; 3] {
    let w = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
    let o = [w[0] - d * v[0], w[1] - d * v[1], w[2] - d * v[2]];
    let n = libm::sqrt(o.iter().map(|x| x * x).sum::<f64>());
    o.map(|x| x / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_junction_directions() {
        let mut rng = Rng64::new(4);
        for _ in 0..50 {
            let y = YJunction::random(&mut rng, PointMm::ORIGIN, 2.0, 1.25, 30.0);
            let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            for b in y.branches {
                assert!((dot(b, b) - 1.0).abs() < 1e-12);
                let angle = libm::acos(-dot(b, y.trunk)) * 180.0 / PI;
                assert!((25.0..=45.0).contains(&angle));
            }
            assert!(y.shapes().iter().all(|s| s.contains(y.center)));
        }
    }

    #[test]
    fn cylinder_raster_cross_section() {
        let g = VolumeGeometry::new([21, 21, 5], [1.0; 3], [-10.0, -10.0, -2.0]).unwrap();
        let m = rasterize_mask(g, &[cylinder(PointMm::ORIGIN, [0.0, 0.0, 1.0], 3.0, 50.0)]);
        // Lattice points with x^2 + y^2 <= 9: 29 per slice.
        assert_eq!(m.count(), 29 * 5);
    }
}
