//! Case directories.
//!
//! A case is a directory holding a `case.toml` manifest, the two images it
//! names and a landmark table:
//!
//! ```toml
//! case_index = 1
//! image1 = "image1.nii.gz"
//! image2 = "image2.nii.gz"
//! landmarks = "landmarks.csv"
//! scan_interval_days = 42
//! ```
//!
//! File names are relative to the directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vesselmark_core::eval::CaseRecord;
use vesselmark_core::ScalarVolume;

use crate::error::{Error, Result};
use crate::{fsutil, landmarks, volume_io};

pub const MANIFEST: &str = "case.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseManifest {
    pub case_index: u32,
    pub image1: String,
    pub image2: String,
    #[serde(default = "default_landmarks")]
    pub landmarks: String,
    #[serde(default)]
    pub scan_interval_days: u32,
}

fn default_landmarks() -> String {
    "landmarks.csv".into()
}

pub fn read_manifest(dir: &Path) -> Result<CaseManifest> {
    let path = dir.join(MANIFEST);
    let text = String::from_utf8(fsutil::read_bytes(&path)?).map_err(|_| Error::format(&path, "not UTF-8"))?;
    toml::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
}

/// Loads the manifest and landmark table. Images are only checked for
/// existence; use [`load_images`] to read them.
pub fn load_case(dir: &Path) -> Result<CaseRecord> {
    let m = read_manifest(dir)?;
    for name in [&m.image1, &m.image2] {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }
    let pairs = landmarks::read_landmarks(&dir.join(&m.landmarks))?;
    let record = CaseRecord {
        case_index: m.case_index,
        image1: m.image1,
        image2: m.image2,
        landmarks: pairs,
        scan_interval_days: m.scan_interval_days,
    };
    record.validate()?;
    Ok(record)
}

/// Manifest and landmarks only, for counting without touching images.
pub fn load_landmarks_only(dir: &Path) -> Result<CaseRecord> {
    let m = read_manifest(dir)?;
    let pairs = landmarks::read_landmarks(&dir.join(&m.landmarks))?;
    Ok(CaseRecord {
        case_index: m.case_index,
        image1: m.image1,
        image2: m.image2,
        landmarks: pairs,
        scan_interval_days: m.scan_interval_days,
    })
}

pub fn image_path(dir: &Path, record: &CaseRecord, image: u8) -> PathBuf {
    dir.join(if image == 1 { &record.image1 } else { &record.image2 })
}

pub fn load_images(dir: &Path, record: &CaseRecord) -> Result<(ScalarVolume, ScalarVolume)> {
    Ok((volume_io::read_scalar(&image_path(dir, record, 1))?, volume_io::read_scalar(&image_path(dir, record, 2))?))
}

/// Writes the manifest and landmark table of `record` into `dir`. Images are
/// not written; the names in the record must already exist there or be
/// written separately.
pub fn save_case(dir: &Path, record: &CaseRecord) -> Result<()> {
    let m = CaseManifest {
        case_index: record.case_index,
        image1: record.image1.clone(),
        image2: record.image2.clone(),
        landmarks: default_landmarks(),
        scan_interval_days: record.scan_interval_days,
    };
    let text = toml::to_string(&m).map_err(|e| Error::format(&dir.join(MANIFEST), e.to_string()))?;
    landmarks::write_landmarks(&dir.join(&m.landmarks), &record.landmarks)?;
    fsutil::write_atomic(&dir.join(MANIFEST), text.as_bytes())
}

/// Case directories directly under `root` (those holding a manifest), sorted
/// by name.
pub fn list_cases(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(root, e))?.path();
        if p.join(MANIFEST).is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}
