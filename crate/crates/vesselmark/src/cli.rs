//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Context, OrganMasks, PhantomArgs, RefineArgs, EXIT_CONFIG};
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "vesselmark", version, about = "Vessel bifurcation landmarks for registration validation")]
pub struct Cli {
    /// Run configuration (flat TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master random seed, overriding `phantom_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Include flagged pairs in TRE statistics.
    #[arg(long, global = true)]
    pub include_flagged: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refine seed points to vessel bifurcation centres.
    Refine {
        case_dir: PathBuf,
        /// CSV with columns id,image,x_mm,y_mm,z_mm.
        seeds: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Vessel mask for image 1, used when both automatic routes fail.
        #[arg(long)]
        manual_mask1: Option<PathBuf>,
        #[arg(long)]
        manual_mask2: Option<PathBuf>,
    },
    /// Build synthetic phantom pairs with known transforms.
    Phantom {
        image: PathBuf,
        landmarks: PathBuf,
        /// Number of pairs (default: `phantom_count`).
        #[arg(short = 'n', long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Target registration error of a case under a displacement field.
    Evaluate {
        case_dir: PathBuf,
        dvf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overwrite organ intensities with constant values.
    Overwrite {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stomach: Option<PathBuf>,
        #[arg(long)]
        small_intestine: Option<PathBuf>,
        #[arg(long)]
        duodenum: Option<PathBuf>,
        #[arg(long)]
        colon: Option<PathBuf>,
    },
    /// Count landmark pairs per case and compare with the published table.
    Census {
        dataset_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let config = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let ctx = Context { config, include_flagged: cli.include_flagged, threads: cli.threads };
    let result = match &cli.command {
        Command::Refine { case_dir, seeds, out, manual_mask1, manual_mask2 } => commands::refine(
            &ctx,
            &RefineArgs {
                case_dir,
                seeds,
                out: out.as_deref(),
                manual_masks: [manual_mask1.as_deref(), manual_mask2.as_deref()],
            },
        ),
        Command::Phantom { image, landmarks, count, out } => commands::phantom(
            &ctx,
            &PhantomArgs { image, landmarks, count: *count, master_seed: cli.seed, out: out.as_deref() },
        ),
        Command::Evaluate { case_dir, dvf, out } => commands::evaluate(&ctx, case_dir, dvf, out.as_deref()),
        Command::Overwrite { image, out, stomach, small_intestine, duodenum, colon } => {
            let masks = OrganMasks {
                stomach: stomach.as_deref(),
                small_intestine: small_intestine.as_deref(),
                duodenum: duodenum.as_deref(),
                colon: colon.as_deref(),
            };
            commands::overwrite(&ctx, image, &masks, out)
        }
        Command::Census { dataset_dir, out } => commands::census(dataset_dir, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            commands::exit_code(&e)
        }
    }
}
