//! Landmark and seed tables (CSV, world millimetres).

use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use vesselmark_core::eval::LandmarkPair;
use vesselmark_core::PointMm;

use crate::error::{Error, Result};
use crate::fsutil;

pub const LANDMARK_COLUMNS: [&str; 10] =
    ["id", "x1_mm", "y1_mm", "z1_mm", "x2_mm", "y2_mm", "z2_mm", "type", "status", "provenance"];

pub const SEED_COLUMNS: [&str; 5] = ["id", "image", "x_mm", "y_mm", "z_mm"];

/// A point to refine in image 1 or image 2 of a case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub id: u32,
    pub image: u8,
    pub point: PointMm,
}

/// Checks the header against `expected`. A coordinate column carrying some
/// other unit suffix (`x1_cm`) is a unit mismatch rather than a format error.
fn check_header(header: &StringRecord, expected: &[&str], path: &Path) -> Result<()> {
    for (got, want) in header.iter().zip(expected) {
        if got == *want {
            continue;
        }
        if let (Some((gs, _)), Some((ws, "mm"))) = (got.rsplit_once('_'), want.rsplit_once('_')) {
            if gs == ws {
                return Err(Error::UnitMismatch { path: path.to_path_buf(), column: got.to_string() });
            }
        }
        return Err(Error::format(path, format!("header column `{got}` where `{want}` was expected")));
    }
    if header.len() != expected.len() {
        return Err(Error::format(path, format!("header has {} columns, expected {}", header.len(), expected.len())));
    }
    Ok(())
}

/// Parses a table, handing each row and its file line number to `row`.
fn parse_table<T>(
    bytes: &[u8],
    path: &Path,
    columns: &[&str],
    mut row: impl FnMut(&StringRecord, u64) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let mut rdr = ReaderBuilder::new().flexible(true).trim(Trim::All).comment(Some(b'#')).from_reader(bytes);
    let header = rdr.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    check_header(&header, columns, path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != columns.len() {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row: line,
                msg: format!("{} fields, expected {}", rec.len(), columns.len()),
            });
        }
        out.push(row(&rec, line).map_err(|msg| Error::MalformedRow { path: path.to_path_buf(), row: line, msg })?);
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(rec: &StringRecord, i: usize, name: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    rec[i].parse().map_err(|e| format!("{name} `{}`: {e}", &rec[i]))
}

fn coord(rec: &StringRecord, i: usize, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = field(rec, i, name)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} is not finite"))
    }
}

pub fn parse_landmarks(bytes: &[u8], path: &Path) -> Result<Vec<LandmarkPair>> {
    parse_table(bytes, path, &LANDMARK_COLUMNS, |r, _| {
        let c = |i: usize| coord(r, i, LANDMARK_COLUMNS[i]);
        Ok(LandmarkPair {
            id: field(r, 0, "id")?,
            p1: PointMm::new(c(1)?, c(2)?, c(3)?),
            p2: PointMm::new(c(4)?, c(5)?, c(6)?),
            pair_type: field(r, 7, "type")?,
            status: field(r, 8, "status")?,
            provenance: field(r, 9, "provenance")?,
        })
    })
}

pub fn read_landmarks(path: &Path) -> Result<Vec<LandmarkPair>> {
    parse_landmarks(&fsutil::read_bytes(path)?, path)
}

pub fn landmarks_csv(pairs: &[LandmarkPair]) -> Vec<u8> {
    let mut w = WriterBuilder::new().from_writer(Vec::new());
    w.write_record(LANDMARK_COLUMNS).expect("in-memory write");
    for l in pairs {
        let mut rec = vec![l.id.to_string()];
        rec.extend(l.p1.to_array().iter().chain(&l.p2.to_array()).map(|v| v.to_string()));
        rec.extend([l.pair_type.to_string(), l.status.to_string(), l.provenance.to_string()]);
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn write_landmarks(path: &Path, pairs: &[LandmarkPair]) -> Result<()> {
    fsutil::write_atomic(path, &landmarks_csv(pairs))
}

pub fn parse_seeds(bytes: &[u8], path: &Path) -> Result<Vec<Seed>> {
    parse_table(bytes, path, &SEED_COLUMNS, |r, _| {
        let image: u8 = field(r, 1, "image")?;
        if image != 1 && image != 2 {
            return Err(format!("image must be 1 or 2, got {image}"));
        }
        let c = |i: usize| coord(r, i, SEED_COLUMNS[i]);
        Ok(Seed { id: field(r, 0, "id")?, image, point: PointMm::new(c(2)?, c(3)?, c(4)?) })
    })
}

pub fn read_seeds(path: &Path) -> Result<Vec<Seed>> {
    parse_seeds(&fsutil::read_bytes(path)?, path)
}

pub fn seeds_csv(seeds: &[Seed]) -> Vec<u8> {
    let mut w = WriterBuilder::new().from_writer(Vec::new());
    w.write_record(SEED_COLUMNS).expect("in-memory write");
    for s in seeds {
        let p = s.point;
        w.write_record([s.id.to_string(), s.image.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

#[cfg(test)]
mod tests {
    use super::*;
    use vesselmark_core::eval::{PairStatus, Provenance};
    use vesselmark_core::sphere::PairType;

    const GOOD: &str = "id,x1_mm,y1_mm,z1_mm,x2_mm,y2_mm,z2_mm,type,status,provenance\n\
                        1,1.5,-2,3,4,5,6,type2,flagged,sphere_grown_auto_mask\n\
                        2, 0, 0, 0, 0, 0, 0, 1, normal, manual\n";

    #[test]
    fn parses_and_round_trips() {
        let p = parse_landmarks(GOOD.as_bytes(), Path::new("l.csv")).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].p1, PointMm::new(1.5, -2.0, 3.0));
        assert_eq!(p[0].pair_type, PairType::Type2);
        assert_eq!(p[0].status, PairStatus::Flagged);
        assert_eq!(p[0].provenance, Provenance::SphereGrownAutoMask);
        assert_eq!(p[1].pair_type, PairType::Type1);
        let again = parse_landmarks(&landmarks_csv(&p), Path::new("l.csv")).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn short_row_names_its_line() {
        let text = "id,x1_mm,y1_mm,z1_mm,x2_mm,y2_mm,z2_mm,type,status,provenance\n\
                    1,0,0,0,0,0,0,type1,normal,manual\n\
                    2,0,0,0,0,0,type1,normal,manual\n";
        match parse_landmarks(text.as_bytes(), Path::new("l.csv")) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_token_and_units() {
        let text = GOOD.replace("type2", "type3");
        assert!(matches!(parse_landmarks(text.as_bytes(), Path::new("l")), Err(Error::MalformedRow { row: 2, .. })));
        let text = GOOD.replace("y2_mm", "y2_cm");
        match parse_landmarks(text.as_bytes(), Path::new("l")) {
            Err(Error::UnitMismatch { column, .. }) => assert_eq!(column, "y2_cm"),
            other => panic!("{other:?}"),
        }
        let text = GOOD.replace("status", "state");
        assert!(matches!(parse_landmarks(text.as_bytes(), Path::new("l")), Err(Error::Format { .. })));
    }

    #[test]
    fn seeds() {
        let s = parse_seeds(b"id,image,x_mm,y_mm,z_mm\n7,2,1,2,3\n", Path::new("s")).unwrap();
        assert_eq!(s, vec![Seed { id: 7, image: 2, point: PointMm::new(1.0, 2.0, 3.0) }]);
        assert_eq!(parse_seeds(&seeds_csv(&s), Path::new("s")).unwrap(), s);
        assert!(parse_seeds(b"id,image,x_mm,y_mm,z_mm\n7,3,1,2,3\n", Path::new("s")).is_err());
    }
}
