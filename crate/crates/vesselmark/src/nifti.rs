//! Single-file NIfTI-1 (`.nii`, `.nii.gz`) reading and writing.
//!
//! Only axis-aligned grids are supported. Axes stored with a negative step
//! are flipped on load so the in-memory geometry always has positive
//! spacing; oblique or axis-permuting orientations are rejected. Writing
//! always produces little-endian float32 with identical qform and sform.

use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use vesselmark_core::{ScalarVolume, VectorField, Volume, VolumeGeometry};

use crate::error::{Error, Result};
use crate::fsutil;

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;
const INTENT_VECTOR: i16 = 1007;
const DT_FLOAT32: i16 = 16;
const UNITS_MM: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum NiftiData {
    Scalar(ScalarVolume),
    Vector(VectorField),
}

struct Header<'a> {
    b: &'a [u8],
    big: bool,
}

impl Header<'_> {
    fn i16(&self, off: usize) -> i16 {
        if self.big {
            BigEndian::read_i16(&self.b[off..])
        } else {
            LittleEndian::read_i16(&self.b[off..])
        }
    }

    fn f32(&self, off: usize) -> f64 {
        let v = if self.big { BigEndian::read_f32(&self.b[off..]) } else { LittleEndian::read_f32(&self.b[off..]) };
        v as f64
    }
}

#[derive(Clone, Copy)]
enum Dtype {
    U8,
    I8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Dtype {
    fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => Dtype::U8,
            4 => Dtype::I16,
            8 => Dtype::I32,
            16 => Dtype::F32,
            64 => Dtype::F64,
            256 => Dtype::I8,
            512 => Dtype::U16,
            768 => Dtype::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Dtype::U8 | Dtype::I8 => 1,
            Dtype::I16 | Dtype::U16 => 2,
            Dtype::I32 | Dtype::U32 | Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn read(self, b: &[u8], big: bool) -> f64 {
        macro_rules! rd {
            ($f:ident) => {
                if big {
                    BigEndian::$f(b) as f64
                } else {
                    LittleEndian::$f(b) as f64
                }
            };
        }
        match self {
            Dtype::U8 => b[0] as f64,
            Dtype::I8 => b[0] as i8 as f64,
            Dtype::I16 => rd!(read_i16),
            Dtype::U16 => rd!(read_u16),
            Dtype::I32 => rd!(read_i32),
            Dtype::U32 => rd!(read_u32),
            Dtype::F32 => rd!(read_f32),
            Dtype::F64 => rd!(read_f64),
        }
    }
}

pub fn read(path: &Path) -> Result<NiftiData> {
    let bytes = fsutil::read_maybe_gz(path)?;
    decode(&bytes, path)
}

pub fn read_scalar(path: &Path) -> Result<ScalarVolume> {
    match read(path)? {
        NiftiData::Scalar(v) => Ok(v),
        NiftiData::Vector(_) => Err(Error::format(path, "expected a scalar volume, found a vector field")),
    }
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    match read(path)? {
        NiftiData::Vector(v) => Ok(v),
        NiftiData::Scalar(_) => Err(Error::format(path, "expected a 3-component vector field, found a scalar volume")),
    }
}

/// Decodes an uncompressed single-file NIfTI-1 image. `path` is only used in
/// error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<NiftiData> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::format(path, "file is shorter than a NIfTI-1 header"));
    }
    let big = match (LittleEndian::read_i32(bytes), BigEndian::read_i32(bytes)) {
        (348, _) => false,
        (_, 348) => true,
        _ => return Err(Error::format(path, "not a NIfTI-1 file (sizeof_hdr is not 348)")),
    };
    let h = Header { b: bytes, big };
    match &bytes[344..348] {
        b"n+1\0" => {}
        b"ni1\0" => return Err(Error::format(path, "separate .hdr/.img pairs are not supported")),
        _ => return Err(Error::format(path, "bad NIfTI-1 magic")),
    }

    let dim: Vec<i64> = (0..8).map(|i| h.i16(40 + 2 * i) as i64).collect();
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(Error::format(path, format!("dim[0] = {ndim} is out of range")));
    }
    let extent = |i: usize| if (i as i64) <= ndim { dim[i].max(1) as usize } else { 1 };
    let dims = [extent(1), extent(2), extent(3)];
    let components = extent(5);
    let extra = extent(4) * extent(6) * extent(7);
    let vector = components == 3 && extra == 1;
    if extra != 1 || !(components == 1 || vector) {
        return Err(Error::format(path, "only 3D scalar volumes and 3-component vector fields are supported"));
    }
    if components == 3 && h.i16(68) != INTENT_VECTOR && h.i16(68) != 0 {
        return Err(Error::format(path, format!("unexpected intent code {} for a vector field", h.i16(68))));
    }

    let dtype = Dtype::from_code(h.i16(70))
        .ok_or_else(|| Error::format(path, format!("unsupported datatype code {}", h.i16(70))))?;
    let offset = h.f32(108);
    if offset.is_nan() || offset < DATA_OFFSET as f64 {
        return Err(Error::format(path, format!("vox_offset {offset} is before the end of the header")));
    }
    let offset = offset as usize;
    let n = dims[0] * dims[1] * dims[2];
    let need = offset + n * components * dtype.size();
    if bytes.len() < need {
        return Err(Error::format(path, format!("payload truncated: need {need} bytes, have {}", bytes.len())));
    }
    let (slope, inter) = match (h.f32(112), h.f32(116)) {
        (s, i) if s != 0.0 && s.is_finite() => (s, if i.is_finite() { i } else { 0.0 }),
        _ => (1.0, 0.0),
    };

    let unit = match h.b[123] & 0x07 {
        0 | UNITS_MM => 1.0,
        1 => 1000.0,
        3 => 1e-3,
        u => return Err(Error::format(path, format!("unknown spatial unit code {u}"))),
    };
    let (matrix, translation) = affine(&h);
    let mut spacing = [0.0; 3];
    let mut origin = [0.0; 3];
    let mut flip = [false; 3];
    for a in 0..3 {
        let diag = matrix[a][a];
        let off = (0..3).filter(|&b| b != a).map(|b| matrix[a][b].abs().max(matrix[b][a].abs())).fold(0.0, f64::max);
        if diag == 0.0 || diag.is_nan() || off > 1e-6 * diag.abs() {
            return Err(Error::format(path, "oblique or axis-permuted orientation is not supported"));
        }
        spacing[a] = diag.abs() * unit;
        flip[a] = diag < 0.0;
        origin[a] = (translation[a] + if flip[a] { (dims[a] - 1) as f64 * diag } else { 0.0 }) * unit;
    }
    let geometry = VolumeGeometry::new(dims, spacing, origin).map_err(|e| Error::format(path, e.to_string()))?;

    let payload = &bytes[offset..];
    let size = dtype.size();
    let value = |c: usize, i: usize, j: usize, k: usize| {
        let src = [i, j, k];
        let s = [0, 1, 2].map(|a| if flip[a] { dims[a] - 1 - src[a] } else { src[a] });
        let idx = c * n + s[0] + dims[0] * (s[1] + dims[1] * s[2]);
        dtype.read(&payload[idx * size..(idx + 1) * size], big) * slope + inter
    };
    Ok(if vector {
        NiftiData::Vector(Volume::from_fn(geometry, |i, j, k| [0, 1, 2].map(|c| value(c, i, j, k))))
    } else {
        NiftiData::Scalar(Volume::from_fn(geometry, |i, j, k| value(0, i, j, k)))
    })
}

/// Voxel-to-world matrix and translation from the sform, else the qform,
/// else the bare voxel sizes.
fn affine(h: &Header) -> ([[f64; 3]; 3], [f64; 3]) {
    let pixdim = [h.f32(80), h.f32(84), h.f32(88)];
    if h.i16(254) > 0 {
        let row = |off: usize| [h.f32(off), h.f32(off + 4), h.f32(off + 8), h.f32(off + 12)];
        let r = [row(280), row(296), row(312)];
        return ([0, 1, 2].map(|a| [r[a][0], r[a][1], r[a][2]]), [r[0][3], r[1][3], r[2][3]]);
    }
    if h.i16(252) > 0 {
        let (b, c, d) = (h.f32(256), h.f32(260), h.f32(264));
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let qfac = if h.f32(76) < 0.0 { -1.0 } else { 1.0 };
        let r = [
            [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
            [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
            [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
        ];
        let scale = [pixdim[0], pixdim[1], pixdim[2] * qfac];
        let m = [0, 1, 2].map(|i| [0, 1, 2].map(|j| r[i][j] * scale[j]));
        return (m, [h.f32(268), h.f32(272), h.f32(276)]);
    }
    let m = [0, 1, 2].map(|i| [0, 1, 2].map(|j| if i == j { pixdim[i] } else { 0.0 }));
    (m, [0.0; 3])
}

fn header(geometry: &VolumeGeometry, components: usize) -> Vec<u8> {
    let mut b = vec![0u8; DATA_OFFSET];
    let dims = geometry.dims();
    let sp = geometry.spacing();
    let org = geometry.origin();
    LittleEndian::write_i32(&mut b[0..], HEADER_SIZE as i32);
    b[38] = b'r';
    let dim: [i16; 8] = if components == 1 {
        [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1]
    } else {
        [5, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, components as i16, 1, 1]
    };
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut b[40 + 2 * i..], *d);
    }
    if components == 3 {
        LittleEndian::write_i16(&mut b[68..], INTENT_VECTOR);
    }
    LittleEndian::write_i16(&mut b[70..], DT_FLOAT32);
    LittleEndian::write_i16(&mut b[72..], 32);
    let pixdim = [1.0, sp[0], sp[1], sp[2], 1.0, 1.0, 1.0, 1.0];
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut b[76 + 4 * i..], *p as f32);
    }
    LittleEndian::write_f32(&mut b[108..], DATA_OFFSET as f32);
    LittleEndian::write_f32(&mut b[112..], 1.0);
    b[123] = UNITS_MM;
    b[148..158].copy_from_slice(b"vesselmark");
    LittleEndian::write_i16(&mut b[252..], 1);
    LittleEndian::write_i16(&mut b[254..], 1);
    for a in 0..3 {
        LittleEndian::write_f32(&mut b[268 + 4 * a..], org[a] as f32);
        LittleEndian::write_f32(&mut b[280 + 16 * a + 4 * a..], sp[a] as f32);
        LittleEndian::write_f32(&mut b[280 + 16 * a + 12..], org[a] as f32);
    }
    b[344..348].copy_from_slice(b"n+1\0");
    b
}

fn check_dims(geometry: &VolumeGeometry) -> Result<()> {
    if geometry.dims().iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::Core(vesselmark_core::Error::InvalidGeometry("NIfTI-1 dimensions are limited to 32767")));
    }
    Ok(())
}

pub fn encode_scalar(vol: &ScalarVolume) -> Result<Vec<u8>> {
    check_dims(vol.geometry())?;
    let mut out = header(vol.geometry(), 1);
    let start = out.len();
    out.resize(start + 4 * vol.data().len(), 0);
    let values: Vec<f32> = vol.data().iter().map(|&v| v as f32).collect();
    LittleEndian::write_f32_into(&values, &mut out[start..]);
    Ok(out)
}

pub fn encode_vector(field: &VectorField) -> Result<Vec<u8>> {
    check_dims(field.geometry())?;
    let mut out = header(field.geometry(), 3);
    let start = out.len();
    let n = field.data().len();
    out.resize(start + 12 * n, 0);
    for c in 0..3 {
        let values: Vec<f32> = field.data().iter().map(|v| v[c] as f32).collect();
        LittleEndian::write_f32_into(&values, &mut out[start + 4 * c * n..start + 4 * (c + 1) * n]);
    }
    Ok(out)
}

fn write_bytes(path: &Path, bytes: Vec<u8>) -> Result<()> {
    if fsutil::is_gz(path) {
        fsutil::write_atomic(path, &fsutil::gzip(&bytes))
    } else {
        fsutil::write_atomic(path, &bytes)
    }
}

pub fn write_scalar(path: &Path, vol: &ScalarVolume) -> Result<()> {
    write_bytes(path, encode_scalar(vol)?)
}

pub fn write_vector(path: &Path, field: &VectorField) -> Result<()> {
    write_bytes(path, encode_vector(field)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry() -> VolumeGeometry {
        VolumeGeometry::new([4, 3, 2], [0.5, 0.75, 2.5], [-10.0, 3.0, 7.5]).unwrap()
    }

    #[test]
    fn scalar_round_trip() {
        let v = Volume::from_fn(geometry(), |i, j, k| (i + 10 * j + 100 * k) as f64 - 50.0);
        let bytes = encode_scalar(&v).unwrap();
        assert_eq!(bytes.len(), DATA_OFFSET + 4 * 24);
        assert_eq!(decode(&bytes, Path::new("t")).unwrap(), NiftiData::Scalar(v));
    }

    #[test]
    fn vector_layout_is_component_slowest() {
        let f = Volume::from_fn(geometry(), |i, j, k| [i as f64, j as f64 + 0.5, -(k as f64)]);
        let bytes = encode_vector(&f).unwrap();
        assert_eq!(LittleEndian::read_i16(&bytes[40..]), 5);
        assert_eq!(LittleEndian::read_i16(&bytes[50..]), 3);
        assert_eq!(LittleEndian::read_i16(&bytes[68..]), INTENT_VECTOR);
        // First y component is voxel 0's y, stored after all 24 x components.
        assert_eq!(LittleEndian::read_f32(&bytes[DATA_OFFSET + 4 * 24..]), 0.5);
        assert_eq!(decode(&bytes, Path::new("t")).unwrap(), NiftiData::Vector(f));
    }

    #[test]
    fn negative_step_is_flipped() {
        let v = Volume::from_fn(geometry(), |i, _, _| i as f64);
        let mut bytes = encode_scalar(&v).unwrap();
        // Make x run backwards from 5 mm in 0.5 mm steps.
        LittleEndian::write_f32(&mut bytes[280..], -0.5);
        LittleEndian::write_f32(&mut bytes[292..], 5.0);
        let NiftiData::Scalar(r) = decode(&bytes, Path::new("t")).unwrap() else { panic!() };
        assert_eq!(r.geometry().origin()[0], 3.5);
        assert_eq!(r.geometry().spacing()[0], 0.5);
        // Stored voxel 3 sits at 3.5 mm and is now first.
        assert_eq!(*r.at(0, 0, 0), 3.0);
        assert_eq!(*r.at(3, 0, 0), 0.0);
    }

    #[test]
    fn int16_with_scaling_big_endian() {
        let mut b = vec![0u8; DATA_OFFSET + 2 * 2];
        BigEndian::write_i32(&mut b[0..], 348);
        for (i, d) in [3i16, 2, 1, 1].iter().enumerate() {
            BigEndian::write_i16(&mut b[40 + 2 * i..], *d);
        }
        BigEndian::write_i16(&mut b[70..], 4);
        for i in 0..4 {
            BigEndian::write_f32(&mut b[76 + 4 * i..], 1.0);
        }
        BigEndian::write_f32(&mut b[108..], DATA_OFFSET as f32);
        BigEndian::write_f32(&mut b[112..], 2.0);
        BigEndian::write_f32(&mut b[116..], -1024.0);
        b[344..348].copy_from_slice(b"n+1\0");
        BigEndian::write_i16(&mut b[DATA_OFFSET..], 10);
        BigEndian::write_i16(&mut b[DATA_OFFSET + 2..], -3);
        let NiftiData::Scalar(r) = decode(&b, Path::new("t")).unwrap() else { panic!() };
        assert_eq!(r.data(), &[-1004.0, -1030.0]);
    }

    #[test]
    fn rejects_oblique_and_truncated() {
        let v = Volume::filled(geometry(), 1.0);
        let mut bytes = encode_scalar(&v).unwrap();
        LittleEndian::write_f32(&mut bytes[284..], 0.3);
        assert!(matches!(decode(&bytes, Path::new("t")), Err(Error::Format { .. })));
        let bytes = encode_scalar(&v).unwrap();
        assert!(matches!(decode(&bytes[..bytes.len() - 1], Path::new("t")), Err(Error::Format { .. })));
    }
}
