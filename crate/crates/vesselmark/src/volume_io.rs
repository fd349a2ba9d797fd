//! Format dispatch on file extension: `.nii` / `.nii.gz` or `.mhd`.

use std::path::Path;

use vesselmark_core::{MaskVolume, ScalarVolume, VectorField};

use crate::error::{Error, Result};
use crate::{metaimage, nifti};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Nifti,
    Meta,
}

pub fn format_of(path: &Path) -> Result<Format> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_ascii_lowercase();
    if name.ends_with(".nii") || name.ends_with(".nii.gz") {
        Ok(Format::Nifti)
    } else if name.ends_with(".mhd") {
        Ok(Format::Meta)
    } else {
        Err(Error::format(path, "unknown volume format (expected .nii, .nii.gz or .mhd)"))
    }
}

pub fn read_scalar(path: &Path) -> Result<ScalarVolume> {
    match format_of(path)? {
        Format::Nifti => nifti::read_scalar(path),
        Format::Meta => metaimage::read_scalar(path),
    }
}

/// A displacement field in millimetres.
pub fn read_vector(path: &Path) -> Result<VectorField> {
    match format_of(path)? {
        Format::Nifti => nifti::read_vector(path),
        Format::Meta => metaimage::read_vector(path),
    }
}

/// Any non-zero voxel is inside the mask.
pub fn read_mask(path: &Path) -> Result<MaskVolume> {
    Ok(read_scalar(path)?.map(|&v| v != 0.0))
}

pub fn write_scalar(path: &Path, vol: &ScalarVolume) -> Result<()> {
    match format_of(path)? {
        Format::Nifti => nifti::write_scalar(path, vol),
        Format::Meta => metaimage::write_scalar(path, vol),
    }
}

pub fn write_vector(path: &Path, field: &VectorField) -> Result<()> {
    match format_of(path)? {
        Format::Nifti => nifti::write_vector(path, field),
        Format::Meta => metaimage::write_vector(path, field),
    }
}
