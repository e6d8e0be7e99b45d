//! Argument parsing and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ghostimg_core::ordering::tier_len;

use crate::commands::{execute, replay, Outcome};
use crate::config::{Overrides, RunConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use crate::error::Result;
use crate::manifest::{Invocation, Manifest};

#[derive(Debug, Parser)]
#[command(name = "ghostimg", version, about = "Progressive Hadamard ghost-imaging simulator")]
pub struct Cli {
    /// Output directory [default: config `[output] dir`, then $GHOSTIMG_OUT_DIR, then ./ghostimg-out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the first COUNT sequence patterns as PGM files plus an index.
    GenPatterns {
        #[arg(long)]
        top_tier: u32,
        /// Defaults to the full basis.
        #[arg(long)]
        count: Option<u64>,
    },
    /// Simulate bucket measurements of a scene.
    Acquire(RunArgs),
    /// Rebuild images from a measurement CSV.
    Reconstruct(ReconstructCli),
    /// Lock onto a target at a coarse tier and refine inside it.
    RoiRun(RunArgs),
    /// Tabulate the Gram-matrix FWHM per tier.
    Diagnose {
        #[arg(long)]
        top_tier: u32,
        /// Comma-separated tiers; defaults to 1..=top-tier.
        #[arg(long, value_delimiter = ',')]
        tiers: Vec<u32>,
    },
    /// PSNR per tier over DSNR targets and seeds.
    Sweep(SweepCli),
    /// Re-run a manifest and verify every output byte for byte.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scene file (PGM P2/P5 or square grid CSV).
    #[arg(long, conflicts_with = "synthetic")]
    pub scene: Option<PathBuf>,
    /// Synthetic scene: bright-square, bars, aircraft, random.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long)]
    pub top_tier: Option<u32>,
    #[arg(long, conflicts_with = "tier")]
    pub measurements: Option<usize>,
    /// Measure the complete prefix of this tier.
    #[arg(long)]
    pub tier: Option<u32>,
    /// signed, differential or binary_offset.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, conflicts_with = "sigma")]
    pub dsnr: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Noise seed; required for noisy runs.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lock_tier: Option<u32>,
    #[arg(long)]
    pub target_tier: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ReconstructCli {
    pub record: PathBuf,
    #[arg(long)]
    pub top_tier: u32,
    #[arg(long, default_value = "differential")]
    pub mode: String,
    /// One image per completed tier instead of only the finest.
    #[arg(long)]
    pub progressive: bool,
    /// Transform-based reconstruction (default).
    #[arg(long, conflicts_with = "naive")]
    pub fast: bool,
    /// Correlation estimator over explicit patterns.
    #[arg(long)]
    pub naive: bool,
    /// Image directory inside the output directory.
    #[arg(long, default_value = "snapshots")]
    pub snapshot_dir: PathBuf,
    /// Scene to score against (PGM or grid CSV); enables report.csv.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCli {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated DSNR targets in dB.
    #[arg(long, value_delimiter = ',')]
    pub dsnr_list: Vec<f64>,
    /// Use seeds 0..N.
    #[arg(long)]
    pub seeds: Option<u64>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            scene: self.scene.clone(),
            synthetic: self.synthetic.clone(),
            top_tier: self.top_tier,
            measurements: self.measurements,
            tier: self.tier,
            mode: self.mode.clone(),
            dsnr_db: self.dsnr,
            sigma: self.sigma,
            seed: self.seed,
            lock_tier: self.lock_tier,
            target_tier: self.target_tier,
        });
        Ok(cfg)
    }
}

/// Runs one parsed command; returns the summary line(s) for stdout.
pub fn run(cli: Cli) -> Result<String> {
    let flag = cli.out_dir.as_deref();
    let (invocation, out_dir) = match cli.command {
        Command::GenPatterns { top_tier, count } => (
            Invocation::GenPatterns {
                top_tier,
                count: count.unwrap_or_else(|| tier_len(top_tier)),
            },
            default_out_dir(flag),
        ),
        Command::Acquire(args) => {
            let config = args.config()?;
            let dir = config.out_dir(flag);
            (Invocation::Acquire { config }, dir)
        }
        Command::RoiRun(args) => {
            let config = args.config()?;
            let dir = config.out_dir(flag);
            (Invocation::RoiRun { config }, dir)
        }
        Command::Sweep(args) => {
            let mut config = args.run.config()?;
            if !args.dsnr_list.is_empty() {
                config.sweep.dsnr_db = Some(args.dsnr_list);
            }
            if let Some(n) = args.seeds {
                config.sweep.seeds = Some((0..n).collect());
            }
            let dir = config.out_dir(flag);
            (Invocation::Sweep { config }, dir)
        }
        Command::Reconstruct(args) => (
            Invocation::Reconstruct {
                record: args.record,
                top_tier: args.top_tier,
                mode: args.mode,
                progressive: args.progressive,
                naive: args.naive,
                snapshot_dir: args.snapshot_dir,
                reference: args.reference,
            },
            default_out_dir(flag),
        ),
        Command::Diagnose { top_tier, tiers } => (Invocation::Diagnose { top_tier, tiers }, default_out_dir(flag)),
        Command::Replay { manifest } => {
            let m = Manifest::load(&manifest)?;
            let outcome = replay(&m)?;
            if let Some(dir) = flag {
                outcome.commit(dir)?;
            }
            return Ok(format!("replay ok: {} outputs identical", m.outputs.len()));
        }
    };
    let outcome = execute(&invocation)?;
    finish(&outcome, &out_dir)
}

fn finish(outcome: &Outcome, out_dir: &Path) -> Result<String> {
    let manifest = outcome.commit(out_dir)?;
    Ok(format!(
        "{}\nwrote {} file(s) and {} to {}",
        outcome.summary,
        manifest.outputs.len(),
        crate::manifest::MANIFEST_FILE,
        out_dir.display()
    ))
}

fn default_out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
