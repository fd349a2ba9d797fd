//! Synthetic case directories for the command-line tests.
#![allow(dead_code)]

use std::path::Path;

use vesselmark::{case, volume_io};
use vesselmark_core::eval::{CaseRecord, LandmarkPair, PairStatus, Provenance};
use vesselmark_core::rng::Rng64;
use vesselmark_core::sphere::PairType;
use vesselmark_core::synth::{rasterize, rasterize_mask, Shape, YJunction, BACKGROUND_HU, VESSEL_HU};
use vesselmark_core::{MaskVolume, PointMm, ScalarVolume, VolumeGeometry};

pub const SPACING: f64 = 0.7;
/// Voxels between neighbouring junction centres along x.
pub const PITCH: usize = 40;

pub fn run(args: &[&str]) -> i32 {
    vesselmark::cli::run(std::iter::once("vesselmark").chain(args.iter().copied()))
}

pub fn run_paths(args: &[&dyn AsRef<std::ffi::OsStr>]) -> i32 {
    let mut v: Vec<std::ffi::OsString> = vec!["vesselmark".into()];
    v.extend(args.iter().map(|a| a.as_ref().to_os_string()));
    vesselmark::cli::run(v)
}

/// `count` random Y-junctions in a row along x, each in its own 40-voxel
/// cell, with every shape moved by `shift` mm.
pub struct Row {
    pub image: ScalarVolume,
    pub junctions: Vec<YJunction>,
    /// One mask per junction, for the interior-distance oracle.
    pub masks: Vec<MaskVolume>,
}

pub fn junction_row(seed: u64, count: usize, shift: PointMm) -> Row {
    let g = VolumeGeometry::new([PITCH * count, PITCH, PITCH], [SPACING; 3], [0.0; 3]).unwrap();
    let mut rng = Rng64::new(seed);
    let mut junctions = Vec::new();
    for m in 0..count {
        let jitter = PointMm::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)) * SPACING;
        let c = PointMm::new((PITCH as f64 / 2.0 + (PITCH * m) as f64) * SPACING, 20.0 * SPACING, 20.0 * SPACING);
        let mut j = YJunction::random(&mut rng, c + jitter, 3.0 * SPACING, 1.25, 10.0);
        j.center += shift;
        junctions.push(j);
    }
    let shapes: Vec<Shape> = junctions.iter().flat_map(|j| j.shapes()).collect();
    let masks = junctions.iter().map(|j| rasterize_mask(g, &j.shapes())).collect();
    Row { image: rasterize(g, &shapes, VESSEL_HU, BACKGROUND_HU), junctions, masks }
}

pub fn pair(id: u32, p1: PointMm, p2: PointMm, status: PairStatus) -> LandmarkPair {
    LandmarkPair { id, p1, p2, pair_type: PairType::Type1, status, provenance: Provenance::SphereGrownOriginal }
}

/// Writes both images and the landmark table as a case directory.
pub fn write_case(dir: &Path, index: u32, img1: &ScalarVolume, img2: &ScalarVolume, pairs: Vec<LandmarkPair>) {
    std::fs::create_dir_all(dir).unwrap();
    volume_io::write_scalar(&dir.join("image1.nii.gz"), img1).unwrap();
    volume_io::write_scalar(&dir.join("image2.nii.gz"), img2).unwrap();
    let record = CaseRecord {
        case_index: index,
        image1: "image1.nii.gz".into(),
        image2: "image2.nii.gz".into(),
        landmarks: pairs,
        scan_interval_days: 30,
    };
    case::save_case(dir, &record).unwrap();
}

/// Writes a manifest and landmark table only, with no images.
pub fn write_landmark_case(dir: &Path, index: u32, pairs: Vec<LandmarkPair>) {
    let record = CaseRecord {
        case_index: index,
        image1: "image1.nii.gz".into(),
        image2: "image2.nii.gz".into(),
        landmarks: pairs,
        scan_interval_days: 0,
    };
    case::save_case(dir, &record).unwrap();
}
