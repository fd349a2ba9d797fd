//! Subcommand implementations. Each returns the process exit code; failures
//! of single items (a seed, a phantom) are recorded in the outputs and do
//! not change it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use vesselmark_core::eval::{compute_tre, dataset_census, LandmarkPair, PairStatus};
use vesselmark_core::phantom::{make_phantom_pair_with, random_transform};
use vesselmark_core::rng::Rng64;
use vesselmark_core::sphere::{refine_on_mask, refine_with_fallback, GrowOutcome, PairType};
use vesselmark_core::{MaskVolume, OrganMaskSet, ScalarVolume};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::landmarks::{self, Seed};
use crate::report::{self, PhantomEntry, PhantomSuite, Refined, TransformJson};
use crate::{case, fsutil, volume_io};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISSING: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_GEOMETRY: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::MissingFile(_) => EXIT_MISSING,
        Error::Core(vesselmark_core::Error::PointOutOfBounds { .. }) => EXIT_DOMAIN,
        Error::Core(vesselmark_core::Error::GeometryMismatch) => EXIT_GEOMETRY,
        _ => EXIT_FAILURE,
    }
}

/// Settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub include_flagged: bool,
    pub threads: Option<usize>,
}

impl Context {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
    }

    fn out_dir(&self, out: Option<&Path>) -> PathBuf {
        out.map_or_else(|| self.config.output_dir.clone(), Path::to_path_buf)
    }
}

pub struct RefineArgs<'a> {
    pub case_dir: &'a Path,
    pub seeds: &'a Path,
    pub out: Option<&'a Path>,
    /// Hand-drawn vessel masks used when both automatic routes fail.
    pub manual_masks: [Option<&'a Path>; 2],
}

fn refine_seed(
    ctx: &Context,
    image: &ScalarVolume,
    manual: Option<&MaskVolume>,
    seed: &Seed,
) -> std::result::Result<(Refined, vesselmark_core::sphere::GrowTrace), String> {
    let cfg = &ctx.config;
    let grow = cfg.grow();
    let (mut point, mut trace) = refine_with_fallback(image, seed.point, &grow, &cfg.vesselness(), &cfg.region_grow())
        .map_err(|e| e.to_string())?;
    if trace.outcome != GrowOutcome::Converged {
        if let Some(mask) = manual {
            if let Ok((p, t)) = refine_on_mask(mask, seed.point, &grow) {
                if t.outcome == GrowOutcome::Converged {
                    (point, trace) = (p, t);
                }
            }
        }
    }
    if trace.outcome != GrowOutcome::Converged {
        point = seed.point;
    }
    let last = trace.last();
    let refined = Refined {
        point,
        radius_mm: trace.radius_mm(last),
        iterations: last.iteration,
        outcome: trace.outcome,
        source: trace.source,
    };
    Ok((refined, trace))
}

/// Refines every seed with the sphere grower and its fallbacks.
///
/// Writes `refined_seeds.csv` (one row per seed, in input order), a trace
/// per seed under `traces/`, and `refined_landmarks.csv` with the pairs whose
/// two seeds both converged.
pub fn refine(ctx: &Context, args: &RefineArgs) -> Result<i32> {
    let record = case::load_case(args.case_dir)?;
    let seeds = landmarks::read_seeds(args.seeds)?;
    let need = |k: u8| seeds.iter().any(|s| s.image == k);
    let load = |k: u8| -> Result<Option<ScalarVolume>> {
        need(k).then(|| volume_io::read_scalar(&case::image_path(args.case_dir, &record, k))).transpose()
    };
    let images = [load(1)?, load(2)?];
    let masks = [0, 1].map(|k| args.manual_masks[k].map(volume_io::read_mask).transpose());
    let [m1, m2] = masks;
    let masks = [m1?, m2?];

    let rows: Vec<_> = ctx.pool()?.install(|| {
        seeds
            .par_iter()
            .map(|s| {
                let k = s.image as usize - 1;
                let image = images[k].as_ref().expect("loaded for every referenced image");
                (*s, refine_seed(ctx, image, masks[k].as_ref(), s))
            })
            .collect()
    });

    let out = ctx.out_dir(args.out);
    let grow = ctx.config.grow();
    for (s, r) in &rows {
        if let Ok((_, trace)) = r {
            let path = out.join("traces").join(format!("seed_{}_image{}.tsv", s.id, s.image));
            fsutil::write_atomic(&path, report::trace_tsv(trace, &grow).as_bytes())?;
        }
    }
    let table: Vec<(Seed, std::result::Result<Refined, String>)> =
        rows.iter().map(|(s, r)| (*s, r.as_ref().map(|(x, _)| x.clone()).map_err(Clone::clone))).collect();
    fsutil::write_atomic(&out.join("refined_seeds.csv"), &report::refined_csv(&table))?;

    let known: BTreeMap<u32, &LandmarkPair> = record.landmarks.iter().map(|l| (l.id, l)).collect();
    let mut by_id: BTreeMap<u32, [Option<&Refined>; 2]> = BTreeMap::new();
    for (s, r) in &table {
        if let Ok(r) = r {
            if r.outcome == GrowOutcome::Converged {
                by_id.entry(s.id).or_default()[s.image as usize - 1] = Some(r);
            }
        }
    }
    let pairs: Vec<LandmarkPair> = by_id
        .into_iter()
        .filter_map(|(id, [a, b])| {
            let (a, b) = (a?, b?);
            let prior = known.get(&id);
            Some(LandmarkPair {
                id,
                p1: a.point,
                p2: b.point,
                pair_type: prior.map_or(PairType::Type1, |l| l.pair_type),
                status: prior.map_or(PairStatus::Normal, |l| l.status),
                provenance: a.provenance().max(b.provenance()),
            })
        })
        .collect();
    landmarks::write_landmarks(&out.join("refined_landmarks.csv"), &pairs)?;

    let count = |o: GrowOutcome| table.iter().filter(|(_, r)| r.as_ref().is_ok_and(|r| r.outcome == o)).count();
    let errors = table.iter().filter(|(_, r)| r.is_err()).count();
    println!(
        "refined {} seeds: {} converged, {} diverged, {} errors; {} pairs written to {}",
        table.len(),
        count(GrowOutcome::Converged),
        count(GrowOutcome::Diverged) + count(GrowOutcome::Capped),
        errors,
        pairs.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

pub struct PhantomArgs<'a> {
    pub image: &'a Path,
    pub landmarks: &'a Path,
    pub count: Option<usize>,
    pub master_seed: Option<u64>,
    pub out: Option<&'a Path>,
}

/// Picks `n` landmark indices: without replacement while there are enough,
/// otherwise with replacement.
fn choose(rng: &mut Rng64, available: usize, n: usize) -> Vec<usize> {
    if n <= available {
        let mut idx: Vec<usize> = (0..available).collect();
        for i in 0..n {
            let j = i + rng.below((available - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(n);
        idx
    } else {
        (0..n).map(|_| rng.below(available as u64) as usize).collect()
    }
}

/// Builds `n` phantom pairs around randomly chosen image-1 landmarks.
///
/// Each pair gets `pair_NNN/patch1.nii.gz`, `patch2.nii.gz` and a
/// `manifest.json`; the suite manifest lists them all.
pub fn phantom(ctx: &Context, args: &PhantomArgs) -> Result<i32> {
    let cfg = &ctx.config;
    let n = args.count.unwrap_or(cfg.phantom_count);
    if n == 0 {
        return Err(Error::Config("phantom count must be at least 1".into()));
    }
    let master = args.master_seed.unwrap_or(cfg.phantom_seed);
    let image = volume_io::read_scalar(args.image)?;
    let pairs = landmarks::read_landmarks(args.landmarks)?;
    if pairs.is_empty() {
        return Err(Error::format(args.landmarks, "no landmarks to build phantoms from"));
    }
    let mut rng = Rng64::new(master);
    let picks = choose(&mut rng, pairs.len(), n);
    let jobs: Vec<(usize, &LandmarkPair, u64)> =
        picks.iter().enumerate().map(|(i, &p)| (i, &pairs[p], rng.next_u64())).collect();
    let out = ctx.out_dir(args.out);

    let entries: Vec<Result<PhantomEntry>> = ctx.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(i, l, seed)| {
                let t = random_transform(seed, l.p1);
                let dir_name = format!("pair_{i:03}");
                let mut entry = PhantomEntry {
                    index: i,
                    landmark_id: l.id,
                    directory: dir_name.clone(),
                    transform: TransformJson::from(&t),
                    gt_landmark1_mm: None,
                    gt_landmark2_mm: None,
                    error: None,
                };
                match make_phantom_pair_with(&image, l.p1, t, cfg.phantom_patch_mm, cfg.phantom_spacing_mm) {
                    Ok(pp) => {
                        let dir = out.join(&dir_name);
                        volume_io::write_scalar(&dir.join("patch1.nii.gz"), &pp.patch1)?;
                        volume_io::write_scalar(&dir.join("patch2.nii.gz"), &pp.patch2)?;
                        entry.gt_landmark1_mm = Some(pp.gt_landmark1.to_array());
                        entry.gt_landmark2_mm = Some(pp.gt_landmark2.to_array());
                        fsutil::write_atomic(&dir.join("manifest.json"), report::to_json(&entry).as_bytes())?;
                    }
                    Err(e) => entry.error = Some(e.to_string()),
                }
                Ok(entry)
            })
            .collect()
    });
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    let suite = PhantomSuite {
        master_seed: master,
        count: n,
        patch_mm: cfg.phantom_patch_mm,
        spacing_mm: cfg.phantom_spacing_mm,
        source_image: args.image.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        pairs: entries,
    };
    fsutil::write_atomic(&out.join("manifest.json"), report::to_json(&suite).as_bytes())?;
    println!("wrote {} phantom pairs ({} failed) to {}", n - failed, failed, out.display());
    Ok(EXIT_OK)
}

/// TRE of a case's landmarks under a DVF. Exits with 4, naming the
/// landmarks, if any selected image-1 point is outside the field.
pub fn evaluate(ctx: &Context, case_dir: &Path, dvf_path: &Path, out: Option<&Path>) -> Result<i32> {
    let record = case::load_landmarks_only(case_dir)?;
    record.validate()?;
    let dvf = volume_io::read_vector(dvf_path)?;
    let outside: Vec<u32> = record
        .landmarks
        .iter()
        .filter(|l| ctx.include_flagged || l.status == PairStatus::Normal)
        .filter(|l| !dvf.geometry().contains(l.p1))
        .map(|l| l.id)
        .collect();
    if !outside.is_empty() {
        let ids: Vec<String> = outside.iter().map(u32::to_string).collect();
        eprintln!("landmarks outside the DVF domain: {}", ids.join(", "));
        return Ok(EXIT_DOMAIN);
    }
    let report = compute_tre(&record.landmarks, &dvf, ctx.include_flagged)?;
    let name = dvf_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let out = ctx.out_dir(out);
    let text = report::tre_text(&report, record.case_index, &name);
    fsutil::write_atomic(&out.join("tre_report.txt"), text.as_bytes())?;
    fsutil::write_atomic(&out.join("tre_report.json"), report::tre_json(&report, record.case_index, &name).as_bytes())?;
    print!("{text}");
    Ok(EXIT_OK)
}

/// Organ masks by name, each optional.
#[derive(Debug, Default, Clone)]
pub struct OrganMasks<'a> {
    pub stomach: Option<&'a Path>,
    pub small_intestine: Option<&'a Path>,
    pub duodenum: Option<&'a Path>,
    pub colon: Option<&'a Path>,
}

/// Writes `image` with each given organ mask filled with its configured
/// value, in stomach, small intestine, duodenum, colon order.
pub fn overwrite(ctx: &Context, image: &Path, masks: &OrganMasks, out: &Path) -> Result<i32> {
    let vol = volume_io::read_scalar(image)?;
    let paths = [masks.stomach, masks.small_intestine, masks.duodenum, masks.colon];
    let mut set = OrganMaskSet::new();
    for ((name, fill), path) in ctx.config.organ_fills().into_iter().zip(paths) {
        if let Some(p) = path {
            let mask = volume_io::read_mask(p)?;
            if !mask.geometry().approx_eq(vol.geometry()) {
                eprintln!("{name} mask {} does not match the image geometry", p.display());
                return Ok(EXIT_GEOMETRY);
            }
            set.push(mask, fill)?;
        }
    }
    let result = vol.overwrite_organ_intensities(&set)?;
    volume_io::write_scalar(out, &result)?;
    let changed = vol.data().iter().zip(result.data()).filter(|(a, b)| a != b).count();
    println!("{} masks applied, {changed} voxels changed, written to {}", set.len(), out.display());
    Ok(EXIT_OK)
}

/// Counts landmark pairs of every case under `dataset_dir` and compares them
/// with the published table. Differences are reported, never fatal.
pub fn census(dataset_dir: &Path, out: Option<&Path>) -> Result<i32> {
    if !dataset_dir.is_dir() {
        return Err(Error::MissingFile(dataset_dir.to_path_buf()));
    }
    let mut records = Vec::new();
    for dir in case::list_cases(dataset_dir)? {
        match case::load_landmarks_only(&dir) {
            Ok(r) => records.push(r),
            Err(e) => eprintln!("warning: skipping {}: {e}", dir.display()),
        }
    }
    if records.is_empty() {
        eprintln!("warning: no case directories found under {}", dataset_dir.display());
    }
    records.sort_by_key(|r| r.case_index);
    let text = report::census_text(&dataset_census(&records));
    if let Some(out) = out {
        fsutil::write_atomic(&out.join("census.txt"), text.as_bytes())?;
    }
    print!("{text}");
    Ok(EXIT_OK)
}
