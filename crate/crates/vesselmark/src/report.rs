//! Report and manifest formatting. Everything here is a pure function of its
//! inputs so reruns produce byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;
use vesselmark_core::eval::{Census, Provenance, TreReport};
use vesselmark_core::phantom::SyntheticTransform;
use vesselmark_core::sphere::{GrowConfig, GrowOutcome, GrowTrace, SourceImage};
use vesselmark_core::stats::Summary;
use vesselmark_core::PointMm;

use crate::landmarks::Seed;

#[derive(Debug, Serialize)]
struct SummaryJson {
    n: usize,
    mean_mm: f64,
    sd_mm: f64,
    median_mm: f64,
    p95_mm: f64,
    min_mm: f64,
    max_mm: f64,
}

impl From<&Summary> for SummaryJson {
    fn from(s: &Summary) -> Self {
        Self { n: s.n, mean_mm: s.mean, sd_mm: s.sd, median_mm: s.median, p95_mm: s.p95, min_mm: s.min, max_mm: s.max }
    }
}

#[derive(Debug, Serialize)]
struct LandmarkErrorJson {
    id: u32,
    error_mm: f64,
}

#[derive(Debug, Serialize)]
struct TreJson<'a> {
    case_index: u32,
    dvf: &'a str,
    filter: &'a str,
    summary: SummaryJson,
    errors: Vec<LandmarkErrorJson>,
}

pub fn tre_json(report: &TreReport, case_index: u32, dvf: &str) -> String {
    let doc = TreJson {
        case_index,
        dvf,
        filter: report.filter_description(),
        summary: (&report.summary).into(),
        errors: report.errors.iter().map(|&(id, e)| LandmarkErrorJson { id, error_mm: e }).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn tre_text(report: &TreReport, case_index: u32, dvf: &str) -> String {
    let s = &report.summary;
    let mut t = String::new();
    let _ = writeln!(t, "case {case_index}, DVF {dvf}");
    let _ = writeln!(t, "pairs: {} ({})", report.n(), report.filter_description());
    let _ = writeln!(
        t,
        "TRE mean {:.3} mm, sd {:.3}, median {:.3}, p95 {:.3}, min {:.3}, max {:.3}",
        s.mean, s.sd, s.median, s.p95, s.min, s.max
    );
    let _ = writeln!(t);
    let _ = writeln!(t, "id\terror_mm");
    for (id, e) in &report.errors {
        let _ = writeln!(t, "{id}\t{e:.4}");
    }
    t
}

/// Per-iteration sphere trace with the run parameters in the header.
pub fn trace_tsv(trace: &GrowTrace, cfg: &GrowConfig) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "# lambda1={} lambda2={} iterations={} f_int={} init_radius_vox={} target_spacing_mm={}",
        cfg.lambda1, cfg.lambda2, cfg.iterations, cfg.f_int, cfg.init_radius, cfg.target_spacing
    );
    let _ = writeln!(t, "# source_image={} outcome={}", trace.source.as_str(), trace.outcome.as_str());
    let _ = writeln!(t, "iteration\tx_mm\ty_mm\tz_mm\tradius_mm");
    for s in &trace.states {
        let c = trace.center_mm(s);
        let _ = writeln!(t, "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}", s.iteration, c.x, c.y, c.z, trace.radius_mm(s));
    }
    t
}

pub fn provenance_of(source: SourceImage) -> Provenance {
    match source {
        SourceImage::Original => Provenance::SphereGrownOriginal,
        SourceImage::VesselnessMask => Provenance::SphereGrownAutoMask,
        SourceImage::ManualMask => Provenance::SphereGrownManualMask,
    }
}

/// Result of refining one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    /// Final position. For a diverged run this is the seed itself, left for
    /// manual placement.
    pub point: PointMm,
    pub radius_mm: f64,
    pub iterations: usize,
    pub outcome: GrowOutcome,
    pub source: SourceImage,
}

impl Refined {
    pub fn provenance(&self) -> Provenance {
        if self.outcome == GrowOutcome::Converged {
            provenance_of(self.source)
        } else {
            Provenance::Manual
        }
    }
}

pub const REFINED_COLUMNS: [&str; 14] = [
    "id",
    "image",
    "seed_x_mm",
    "seed_y_mm",
    "seed_z_mm",
    "x_mm",
    "y_mm",
    "z_mm",
    "radius_mm",
    "iterations",
    "outcome",
    "source_image",
    "provenance",
    "message",
];

pub fn refined_csv(rows: &[(Seed, Result<Refined, String>)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REFINED_COLUMNS).expect("in-memory write");
    for (seed, result) in rows {
        let mut rec = vec![seed.id.to_string(), seed.image.to_string()];
        rec.extend(seed.point.to_array().map(|v| v.to_string()));
        match result {
            Ok(r) => {
                rec.extend(r.point.to_array().map(|v| v.to_string()));
                rec.extend([
                    format!("{:.6}", r.radius_mm),
                    r.iterations.to_string(),
                    r.outcome.as_str().to_string(),
                    r.source.as_str().to_string(),
                    r.provenance().as_str().to_string(),
                    String::new(),
                ]);
            }
            Err(msg) => {
                rec.extend(["", "", "", "", "", "error", "", ""].map(String::from));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

#[derive(Debug, Clone, Serialize)]
pub struct SinusoidJson {
    pub amplitude_mm: f64,
    pub wavelength_mm: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformJson {
    pub seed: u64,
    pub axis: [f64; 3],
    pub angle_deg: f64,
    pub scale: f64,
    pub pivot_mm: [f64; 3],
    /// Displacement along x, y and z.
    pub sinusoids: Vec<SinusoidJson>,
}

impl From<&SyntheticTransform> for TransformJson {
    fn from(t: &SyntheticTransform) -> Self {
        Self {
            seed: t.seed,
            axis: t.axis,
            angle_deg: t.angle_deg,
            scale: t.scale,
            pivot_mm: t.pivot.to_array(),
            sinusoids: t
                .sinusoid
                .iter()
                .map(|s| SinusoidJson { amplitude_mm: s.amplitude, wavelength_mm: s.wavelength, phase_rad: s.phase })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhantomEntry {
    pub index: usize,
    pub landmark_id: u32,
    pub directory: String,
    pub transform: TransformJson,
    pub gt_landmark1_mm: Option<[f64; 3]>,
    pub gt_landmark2_mm: Option<[f64; 3]>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhantomSuite {
    pub master_seed: u64,
    pub count: usize,
    pub patch_mm: f64,
    pub spacing_mm: f64,
    pub source_image: String,
    pub pairs: Vec<PhantomEntry>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn census_text(census: &Census) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "case\ttotal\tnormal\tflagged\ttype1\ttype2\tpublished\tmatch");
    for c in &census.cases {
        let k = &c.counts;
        let published = c.expected.map_or("-".to_string(), |(a, b, d)| format!("{a} ({b},{d})"));
        let ok = if c.expected.is_none() {
            "?"
        } else if c.matches_expected() {
            "yes"
        } else {
            "NO"
        };
        let _ = writeln!(
            t,
            "{}\t{}\t{}\t{}\t{}\t{}\t{published}\t{ok}",
            c.case_index, k.total, k.normal, k.flagged, k.type1, k.type2
        );
    }
    let k = &census.totals;
    let _ = writeln!(t, "all\t{}\t{}\t{}\t{}\t{}", k.total, k.normal, k.flagged, k.type1, k.type2);
    let names = ["sphere_grown_original", "sphere_grown_auto_mask", "sphere_grown_manual_mask", "manual"];
    let prov: Vec<String> = names.iter().zip(k.provenance).map(|(n, c)| format!("{n}={c}")).collect();
    let _ = writeln!(t, "provenance: {}", prov.join(" "));
    for d in &census.discrepancies {
        let _ = writeln!(t, "note: {d}");
    }
    t
}
