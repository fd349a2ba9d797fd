//! Raw fallback format: a MetaImage-style `.mhd` text header next to a
//! little-endian float32 payload.
//!
//! ```text
//! ObjectType = Image
//! NDims = 3
//! DimSize = 64 64 40
//! ElementSpacing = 0.7 0.7 2.5
//! Offset = -120 -80 30
//! AxisOrder = XYZ
//! ElementNumberOfChannels = 1
//! ElementType = MET_FLOAT
//! BinaryDataByteOrderMSB = False
//! ElementDataFile = image.raw
//! ```
//!
//! `AxisOrder` names the payload axes from fastest to slowest varying and
//! defaults to `XYZ`. Vector fields use three interleaved channels.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};
use vesselmark_core::{ScalarVolume, VectorField, Volume, VolumeGeometry};

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq)]
pub struct MetaHeader {
    pub geometry: VolumeGeometry,
    pub channels: usize,
    /// Payload axes, fastest first, as indices into x/y/z.
    pub axis_order: [usize; 3],
    pub data_file: PathBuf,
}

pub fn parse_header(text: &str, path: &Path) -> Result<MetaHeader> {
    let mut dims = None;
    let mut spacing = None;
    let mut origin = [0.0; 3];
    let mut channels = 1;
    let mut axis_order = [0, 1, 2];
    let mut data_file = None;
    let mut element_type = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::format(path, format!("line {}: expected `key = value`", n + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| Error::format(path, format!("line {}: bad {what} `{value}`", n + 1));
        match key {
            "NDims" if value != "3" => return Err(Error::format(path, "only NDims = 3 is supported")),
            "DimSize" => dims = Some(triple::<usize>(value).ok_or_else(|| bad("DimSize"))?),
            "ElementSpacing" | "ElementSize" => spacing = Some(triple::<f64>(value).ok_or_else(|| bad("spacing"))?),
            "Offset" | "Origin" | "Position" => origin = triple::<f64>(value).ok_or_else(|| bad("offset"))?,
            "ElementNumberOfChannels" => channels = value.parse().map_err(|_| bad("channel count"))?,
            "ElementType" => element_type = Some(value.to_string()),
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" if value.eq_ignore_ascii_case("true") => {
                return Err(Error::format(path, "big-endian payloads are not supported"));
            }
            "AxisOrder" => axis_order = parse_axis_order(value).ok_or_else(|| bad("AxisOrder"))?,
            "TransformMatrix" | "Orientation" | "Rotation" => {
                let m: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(key))?;
                let identity = m.len() == 9
                    && m.iter().enumerate().all(|(i, &v)| (v - if i % 4 == 0 { 1.0 } else { 0.0 }).abs() < 1e-6);
                if !identity {
                    return Err(Error::format(path, "only identity orientation is supported"));
                }
            }
            "ElementDataFile" => {
                if value.eq_ignore_ascii_case("LOCAL") || value.eq_ignore_ascii_case("LIST") {
                    return Err(Error::format(path, "the payload must live in a separate file"));
                }
                data_file = Some(value.to_string());
            }
            _ => {}
        }
    }
    match element_type.as_deref() {
        Some("MET_FLOAT") => {}
        Some(other) => {
            return Err(Error::format(path, format!("ElementType {other} is not supported (MET_FLOAT only)")))
        }
        None => return Err(Error::format(path, "missing ElementType")),
    }
    if channels != 1 && channels != 3 {
        return Err(Error::format(path, format!("{channels} channels; expected 1 or 3")));
    }
    let dims = dims.ok_or_else(|| Error::format(path, "missing DimSize"))?;
    let spacing = spacing.ok_or_else(|| Error::format(path, "missing ElementSpacing"))?;
    let data_file = data_file.ok_or_else(|| Error::format(path, "missing ElementDataFile"))?;
    let geometry = VolumeGeometry::new(dims, spacing, origin).map_err(|e| Error::format(path, e.to_string()))?;
    let data_file = path.parent().unwrap_or(Path::new("")).join(data_file);
    Ok(MetaHeader { geometry, channels, axis_order, data_file })
}

fn triple<T: std::str::FromStr>(s: &str) -> Option<[T; 3]> {
    let mut it = s.split_whitespace().map(|t| t.parse::<T>().ok());
    let out = [it.next()??, it.next()??, it.next()??];
    it.next().is_none().then_some(out)
}

fn parse_axis_order(s: &str) -> Option<[usize; 3]> {
    let chars: Vec<char> = s.trim().chars().collect();
    if chars.len() != 3 {
        return None;
    }
    let mut out = [0; 3];
    for (slot, c) in out.iter_mut().zip(chars) {
        *slot = match c.to_ascii_uppercase() {
            'X' => 0,
            'Y' => 1,
            'Z' => 2,
            _ => return None,
        };
    }
    let mut seen = out;
    seen.sort_unstable();
    (seen == [0, 1, 2]).then_some(out)
}

/// Reads the header and payload, returning per-voxel channel values in
/// x-fastest order.
fn read_channels(path: &Path) -> Result<(MetaHeader, Vec<f32>)> {
    let text = String::from_utf8(fsutil::read_bytes(path)?).map_err(|_| Error::format(path, "header is not UTF-8"))?;
    let h = parse_header(&text, path)?;
    let payload = fsutil::read_maybe_gz(&h.data_file)?;
    let n = h.geometry.voxel_count();
    let want = 4 * n * h.channels;
    if payload.len() != want {
        return Err(Error::format(&h.data_file, format!("payload has {} bytes, header implies {want}", payload.len())));
    }
    let mut raw = vec![0f32; n * h.channels];
    LittleEndian::read_f32_into(&payload, &mut raw);
    if h.axis_order == [0, 1, 2] {
        return Ok((h, raw));
    }
    let dims = h.geometry.dims();
    let stored = h.axis_order.map(|a| dims[a]);
    let mut out = vec![0f32; raw.len()];
    for (s, chunk) in raw.chunks_exact(h.channels).enumerate() {
        let q = [s % stored[0], (s / stored[0]) % stored[1], s / (stored[0] * stored[1])];
        let mut ijk = [0; 3];
        for (pos, &axis) in h.axis_order.iter().enumerate() {
            ijk[axis] = q[pos];
        }
        let dst = h.geometry.linear_index(ijk[0], ijk[1], ijk[2]) * h.channels;
        out[dst..dst + h.channels].copy_from_slice(chunk);
    }
    Ok((h, out))
}

pub fn read_scalar(path: &Path) -> Result<ScalarVolume> {
    let (h, raw) = read_channels(path)?;
    if h.channels != 1 {
        return Err(Error::format(path, "expected a scalar volume, found a vector field"));
    }
    Ok(Volume::from_vec(h.geometry, raw.into_iter().map(f64::from).collect())?)
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    let (h, raw) = read_channels(path)?;
    if h.channels != 3 {
        return Err(Error::format(path, "expected a 3-component vector field, found a scalar volume"));
    }
    let data = raw.chunks_exact(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]).collect();
    Ok(Volume::from_vec(h.geometry, data)?)
}

fn header_text(g: &VolumeGeometry, channels: usize, data_file: &str) -> String {
    let d = g.dims();
    let s = g.spacing();
    let o = g.origin();
    let mut t = String::new();
    let _ = writeln!(t, "ObjectType = Image");
    let _ = writeln!(t, "NDims = 3");
    let _ = writeln!(t, "DimSize = {} {} {}", d[0], d[1], d[2]);
    let _ = writeln!(t, "ElementSpacing = {} {} {}", s[0], s[1], s[2]);
    let _ = writeln!(t, "Offset = {} {} {}", o[0], o[1], o[2]);
    let _ = writeln!(t, "AxisOrder = XYZ");
    let _ = writeln!(t, "ElementNumberOfChannels = {channels}");
    let _ = writeln!(t, "ElementType = MET_FLOAT");
    let _ = writeln!(t, "BinaryDataByteOrderMSB = False");
    let _ = writeln!(t, "ElementDataFile = {data_file}");
    t
}

fn write(path: &Path, g: &VolumeGeometry, channels: usize, values: Vec<f32>) -> Result<()> {
    let raw_path = path.with_extension("raw");
    let name =
        raw_path.file_name().and_then(|n| n.to_str()).ok_or_else(|| Error::format(path, "unusable file name"))?;
    let mut bytes = vec![0u8; 4 * values.len()];
    LittleEndian::write_f32_into(&values, &mut bytes);
    fsutil::write_atomic(&raw_path, &bytes)?;
    fsutil::write_atomic(path, header_text(g, channels, name).as_bytes())
}

/// Writes `path` (the `.mhd`) and its payload next to it with a `.raw`
/// extension.
pub fn write_scalar(path: &Path, vol: &ScalarVolume) -> Result<()> {
    write(path, vol.geometry(), 1, vol.data().iter().map(|&v| v as f32).collect())
}

pub fn write_vector(path: &Path, field: &VectorField) -> Result<()> {
    write(path, field.geometry(), 3, field.data().iter().flat_map(|v| v.map(|c| c as f32)).collect())
}
