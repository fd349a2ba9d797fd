use proptest::prelude::*;
use vesselmark::{case, nifti, Error};
use vesselmark_core::eval::{CaseRecord, LandmarkPair, PairStatus, Provenance};
use vesselmark_core::sphere::PairType;
use vesselmark_core::{PointMm, Volume, VolumeGeometry};

fn point() -> impl Strategy<Value = PointMm> {
    prop::array::uniform3(-500.0f64..500.0).prop_map(PointMm::from_array)
}

fn landmark() -> impl Strategy<Value = LandmarkPair> {
    (point(), point(), any::<bool>(), any::<bool>(), 0usize..4).prop_map(|(p1, p2, t2, flagged, prov)| LandmarkPair {
        id: 0,
        p1,
        p2,
        pair_type: if t2 { PairType::Type2 } else { PairType::Type1 },
        status: if flagged { PairStatus::Flagged } else { PairStatus::Normal },
        provenance: [
            Provenance::SphereGrownOriginal,
            Provenance::SphereGrownAutoMask,
            Provenance::SphereGrownManualMask,
            Provenance::Manual,
        ][prov],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn save_then_load_is_lossless(mut pairs in prop::collection::vec(landmark(), 0..20), index in 1u32..31, days in 0u32..400) {
        for (i, p) in pairs.iter_mut().enumerate() {
            p.id = i as u32 * 3 + 1;
        }
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.nii", "b.nii"] {
            std::fs::write(dir.path().join(name), b"").unwrap();
        }
        let record = CaseRecord { case_index: index, image1: "a.nii".into(), image2: "b.nii".into(), landmarks: pairs, scan_interval_days: days };
        case::save_case(dir.path(), &record).unwrap();
        let back = case::load_case(dir.path()).unwrap();
        prop_assert_eq!(back.case_index, index);
        prop_assert_eq!(back.scan_interval_days, days);
        prop_assert_eq!(back.landmarks.len(), record.landmarks.len());
        for (a, b) in back.landmarks.iter().zip(&record.landmarks) {
            prop_assert!(a.p1.distance(b.p1) < 1e-6 && a.p2.distance(b.p2) < 1e-6);
            prop_assert_eq!((a.id, a.pair_type, a.status, a.provenance), (b.id, b.pair_type, b.status, b.provenance));
        }
    }

    #[test]
    fn nifti_round_trip_keeps_geometry(dims in prop::array::uniform3(1usize..6), sp in prop::array::uniform3(0.25f64..4.0), org in prop::array::uniform3(-200.0f64..200.0)) {
        // Header fields are float32, so compare against the rounded values.
        let sp = sp.map(|v| v as f32 as f64);
        let org = org.map(|v| v as f32 as f64);
        let g = VolumeGeometry::new(dims, sp, org).unwrap();
        let v = Volume::from_fn(g, |i, j, k| (i * 7 + j * 3 + k) as f64 - 4.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.nii.gz");
        nifti::write_scalar(&path, &v).unwrap();
        prop_assert_eq!(nifti::read_scalar(&path).unwrap(), v);
    }
}

#[test]
fn missing_image_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let record = CaseRecord {
        case_index: 1,
        image1: "a.nii".into(),
        image2: "b.nii".into(),
        landmarks: vec![],
        scan_interval_days: 0,
    };
    case::save_case(dir.path(), &record).unwrap();
    assert!(matches!(case::load_case(dir.path()), Err(Error::MissingFile(p)) if p.ends_with("a.nii")));
    assert!(matches!(case::load_case(&dir.path().join("none")), Err(Error::MissingFile(_))));
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = LandmarkPair {
        id: 4,
        p1: PointMm::ORIGIN,
        p2: PointMm::ORIGIN,
        pair_type: PairType::Type1,
        status: PairStatus::Normal,
        provenance: Provenance::Manual,
    };
    for name in ["a.nii", "b.nii"] {
        std::fs::write(dir.path().join(name), b"").unwrap();
    }
    let record = CaseRecord {
        case_index: 1,
        image1: "a.nii".into(),
        image2: "b.nii".into(),
        landmarks: vec![p.clone(), p],
        scan_interval_days: 0,
    };
    case::save_case(dir.path(), &record).unwrap();
    assert!(matches!(case::load_case(dir.path()), Err(Error::Core(_))));
}
