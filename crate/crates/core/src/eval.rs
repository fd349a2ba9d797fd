//! Landmark-pair data model, DVF point warping, TRE and dataset census.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geometry::PointMm;
use crate::sphere::PairType;
use crate::stats::{summarize, Summary};
use crate::volume::VectorField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairStatus {
    Normal,
    /// Manually adjusted after refinement; excluded from headline numbers by
    /// default.
    Flagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    SphereGrownOriginal,
    SphereGrownAutoMask,
    SphereGrownManualMask,
    Manual,
}

/// Error for an unrecognised enum token in a landmark table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownToken(pub String);

impl fmt::Display for UnknownToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown token `{}`", self.0)
    }
}

macro_rules! token_enum {
    ($ty:ty { $($variant:path => $s:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($variant => $s),+ }
            }
        }

        impl FromStr for $ty {
            type Err = UnknownToken;

            fn from_str(s: &str) -> core::result::Result<Self, UnknownToken> {
                match s.trim() {
                    $($s => Ok($variant),)+
                    other => Err(UnknownToken(other.into())),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

token_enum!(PairStatus { PairStatus::Normal => "normal", PairStatus::Flagged => "flagged" });
token_enum!(Provenance {
    Provenance::SphereGrownOriginal => "sphere_grown_original",
    Provenance::SphereGrownAutoMask => "sphere_grown_auto_mask",
    Provenance::SphereGrownManualMask => "sphere_grown_manual_mask",
    Provenance::Manual => "manual",
});

impl FromStr for PairType {
    type Err = UnknownToken;

    fn from_str(s: &str) -> core::result::Result<Self, UnknownToken> {
        match s.trim() {
            "type1" | "1" => Ok(PairType::Type1),
            "type2" | "2" => Ok(PairType::Type2),
            other => Err(UnknownToken(other.into())),
        }
    }
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkPair {
    pub id: u32,
    /// Position in image 1, world mm.
    pub p1: PointMm,
    /// Matching position in image 2, world mm.
    pub p2: PointMm,
    pub pair_type: PairType,
    pub status: PairStatus,
    pub provenance: Provenance,
}

/// One image pair with its landmarks. Images are referenced by file name;
/// loading them is left to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case_index: u32,
    pub image1: String,
    pub image2: String,
    pub landmarks: Vec<LandmarkPair>,
    pub scan_interval_days: u32,
}

impl CaseRecord {
    /// Checks that every point is finite and ids are unique.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for (i, l) in self.landmarks.iter().enumerate() {
            if !l.p1.is_finite() || !l.p2.is_finite() {
                return Err(Error::PointOutOfBounds { index: i });
            }
            if !ids.insert(l.id) {
                return Err(Error::Other(alloc::format!("duplicate landmark id {}", l.id)));
            }
        }
        Ok(())
    }
}

/// `p + dvf(p)` for each point, with trilinear sampling of the field.
pub fn warp_points_with_dvf(points: &[PointMm], dvf: &VectorField) -> Result<Vec<PointMm>> {
    points
        .iter()
        .enumerate()
        .map(|(index, &p)| {
            let d = dvf.sample_trilinear(p).map_err(|_| Error::PointOutOfBounds { index })?;
            Ok(p + PointMm::from_array(d))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreReport {
    /// `(landmark id, error mm)` for every included pair, in input order.
    pub errors: Vec<(u32, f64)>,
    pub summary: Summary,
    pub include_flagged: bool,
}

impl TreReport {
    pub fn n(&self) -> usize {
        self.errors.len()
    }

    pub fn filter_description(&self) -> &'static str {
        if self.include_flagged {
            "normal and flagged pairs"
        } else {
            "normal pairs only"
        }
    }
}

/// Distance between `p1` warped through `dvf` and `p2`, for every pair kept by
/// the status filter.
///
/// Out-of-domain points fail with `PointOutOfBounds` carrying the index into
/// `pairs`.
pub fn compute_tre(pairs: &[LandmarkPair], dvf: &VectorField, include_flagged: bool) -> Result<TreReport> {
    let mut errors = Vec::new();
    for (index, pair) in pairs.iter().enumerate() {
        if pair.status == PairStatus::Flagged && !include_flagged {
            continue;
        }
        let warped = warp_points_with_dvf(&[pair.p1], dvf).map_err(|_| Error::PointOutOfBounds { index })?;
        errors.push((pair.id, warped[0].distance(pair.p2)));
    }
    if errors.is_empty() {
        return Err(Error::EmptySelection);
    }
    let values: Vec<f64> = errors.iter().map(|e| e.1).collect();
    let summary = summarize(&values)?;
    Ok(TreReport { errors, summary, include_flagged })
}

/// Published per-case counts: `(case, total, normal, flagged)`.
pub const TABLE1_COUNTS: [(u32, u32, u32, u32); 30] = [
    (1, 57, 52, 5),
    (2, 60, 58, 2),
    (3, 57, 52, 5),
    (4, 57, 51, 6),
    (5, 79, 73, 6),
    (6, 54, 47, 7),
    (7, 60, 56, 4),
    (8, 69, 64, 5),
    (9, 122, 114, 8),
    (10, 43, 42, 1),
    (11, 64, 60, 4),
    (12, 85, 82, 3),
    (13, 56, 50, 6),
    (14, 56, 53, 3),
    (15, 117, 114, 3),
    (16, 47, 44, 3),
    (17, 78, 72, 6),
    (18, 90, 86, 4),
    (19, 79, 77, 2),
    (20, 64, 62, 2),
    (21, 65, 65, 0),
    (22, 93, 90, 3),
    (23, 60, 58, 2),
    (24, 30, 30, 0),
    (25, 45, 43, 2),
    (26, 59, 56, 3),
    (27, 62, 60, 2),
    (28, 78, 74, 4),
    (29, 72, 71, 1),
    (30, 44, 39, 5),
];

/// Published count of normal (final) pairs across the dataset.
pub const PUBLISHED_NORMAL_TOTAL: u32 = 1895;

/// The two type-2 counts that appear in the dataset description.
pub const PUBLISHED_TYPE2_COUNTS: [u32; 2] = [507, 510];

pub fn table1_expectation(case_index: u32) -> Option<(u32, u32, u32)> {
    TABLE1_COUNTS.iter().find(|r| r.0 == case_index).map(|r| (r.1, r.2, r.3))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub total: u32,
    pub normal: u32,
    pub flagged: u32,
    pub type1: u32,
    pub type2: u32,
    /// Indexed like [`Provenance`] declaration order.
    pub provenance: [u32; 4],
    /// Type-2 pairs among normal pairs.
    pub type2_normal: u32,
}

impl Counts {
    fn add_pair(&mut self, l: &LandmarkPair) {
        self.total += 1;
        match l.status {
            PairStatus::Normal => self.normal += 1,
            PairStatus::Flagged => self.flagged += 1,
        }
        match l.pair_type {
            PairType::Type1 => self.type1 += 1,
            PairType::Type2 => {
                self.type2 += 1;
                if l.status == PairStatus::Normal {
                    self.type2_normal += 1;
                }
            }
        }
        self.provenance[l.provenance as usize] += 1;
    }

    fn add(&mut self, o: &Counts) {
        self.total += o.total;
        self.normal += o.normal;
        self.flagged += o.flagged;
        self.type1 += o.type1;
        self.type2 += o.type2;
        self.type2_normal += o.type2_normal;
        for (a, b) in self.provenance.iter_mut().zip(o.provenance) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseCensus {
    pub case_index: u32,
    pub counts: Counts,
    /// `(total, normal, flagged)` from the published table, if the case
    /// index is known.
    pub expected: Option<(u32, u32, u32)>,
}

impl CaseCensus {
    pub fn matches_expected(&self) -> bool {
        self.expected.is_none_or(|e| e == (self.counts.total, self.counts.normal, self.counts.flagged))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub cases: Vec<CaseCensus>,
    pub totals: Counts,
    /// Human-readable differences from the published numbers. Never fatal.
    pub discrepancies: Vec<String>,
}

/// Counts pairs by case, type, status and provenance and compares them with
/// the published per-case table.
pub fn dataset_census(cases: &[CaseRecord]) -> Census {
    let mut out = Vec::with_capacity(cases.len());
    let mut totals = Counts::default();
    let mut discrepancies = Vec::new();
    for case in cases {
        let mut counts = Counts::default();
        for l in &case.landmarks {
            counts.add_pair(l);
        }
        totals.add(&counts);
        let entry = CaseCensus { case_index: case.case_index, counts, expected: table1_expectation(case.case_index) };
        match entry.expected {
            None => discrepancies.push(alloc::format!("case {} is not in the published table", case.case_index)),
            Some((t, n, f)) if !entry.matches_expected() => discrepancies.push(alloc::format!(
                "case {}: found {} ({},{}), published {} ({},{})",
                case.case_index,
                counts.total,
                counts.normal,
                counts.flagged,
                t,
                n,
                f
            )),
            _ => {}
        }
        out.push(entry);
    }
    if !cases.is_empty() {
        if totals.normal != PUBLISHED_NORMAL_TOTAL {
            discrepancies.push(alloc::format!(
                "normal pairs total {}, published {}",
                totals.normal,
                PUBLISHED_NORMAL_TOTAL
            ));
        }
        let [a, b] = PUBLISHED_TYPE2_COUNTS;
        discrepancies.push(alloc::format!(
            "type-2 pairs: {} normal, {} overall; the published description gives both {} and {}",
            totals.type2_normal,
            totals.type2,
            a,
            b
        ));
    }
    Census { cases: out, totals, discrepancies }
}
