//! Command execution. A command first computes every output in memory and
//! only then writes, so a failing command leaves nothing behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ghostimg_core::metrics::{noise_sweep, EvalRow};
use ghostimg_core::ordering::{completed_tiers, tier_len, AcquisitionPlan};
use ghostimg_core::recon::MAX_GRAM_TIER;
use ghostimg_core::simulate::acquire_noiseless;
use ghostimg_core::{
    block_average, budget_report, composite, fast_reconstruct, fit_and_score, gi_correlate, gram_fwhm, lock_target,
    progressive_snapshots, roi_acquire, seq_to_pattern, BucketRecord, Error as CoreError, NoiseModel, ReconImage,
    Scene, SequenceIndex,
};

use crate::config::{load_scene, parse_mode, NoiseSpec, NoiseTarget, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, FileDigest, Invocation, Manifest, RoiEcho, MANIFEST_FILE, TOOL};
use crate::{pgm, tables};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bytes of one output file, rendered on demand so large pattern sets are
/// never held in memory at once.
#[derive(Debug, Clone)]
pub enum Content {
    Bytes(Vec<u8>),
    /// Sequence pattern `m` of a `2^top_tier` frame as a 0/255 PGM.
    Pattern { m: u64, top_tier: u32 },
}

impl Content {
    pub fn render(&self) -> Result<Vec<u8>> {
        match self {
            Content::Bytes(b) => Ok(b.clone()),
            Content::Pattern { m, top_tier } => {
                let p = seq_to_pattern(SequenceIndex(*m), *top_tier)?;
                let values: Vec<f64> = p.as_slice().iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
                pgm::encode(p.side(), &values)
            }
        }
    }
}

/// Everything a command produced, not yet on disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub invocation: Invocation,
    pub inputs: Vec<FileDigest>,
    pub files: Vec<(PathBuf, Content)>,
    pub roi: Option<RoiEcho>,
    pub derived: BTreeMap<String, String>,
    pub timings: BTreeMap<String, f64>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

impl Outcome {
    fn new(invocation: Invocation) -> Self {
        Self {
            invocation,
            inputs: Vec::new(),
            files: Vec::new(),
            roi: None,
            derived: BTreeMap::new(),
            timings: BTreeMap::new(),
            summary: String::new(),
        }
    }

    fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), Content::Bytes(bytes)));
    }

    fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), t.elapsed().as_secs_f64());
        out
    }

    /// Writes every file and the manifest under `out_dir`.
    pub fn commit(&self, out_dir: &Path) -> Result<Manifest> {
        let mut outputs = Vec::with_capacity(self.files.len());
        for (rel, content) in &self.files {
            let path = out_dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            let bytes = content.render()?;
            fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
            outputs.push(FileDigest {
                path: rel.clone(),
                sha256: sha256_hex(&bytes),
            });
        }
        let manifest = Manifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            invocation: self.invocation.clone(),
            inputs: self.inputs.clone(),
            outputs,
            roi: self.roi,
            derived: self.derived.clone(),
            timings: self.timings.clone(),
        };
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, manifest.to_toml()).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }

    /// Digests of every output without writing anything.
    pub fn digests(&self) -> Result<Vec<FileDigest>> {
        self.files
            .iter()
            .map(|(rel, c)| {
                Ok(FileDigest {
                    path: rel.clone(),
                    sha256: sha256_hex(&c.render()?),
                })
            })
            .collect()
    }
}

pub fn execute(invocation: &Invocation) -> Result<Outcome> {
    match invocation {
        Invocation::GenPatterns { top_tier, count } => gen_patterns(*top_tier, *count),
        Invocation::Acquire { config } => acquire(config),
        Invocation::Reconstruct {
            record,
            top_tier,
            mode,
            progressive,
            naive,
            snapshot_dir,
            reference,
        } => reconstruct(&ReconstructArgs {
            record: record.clone(),
            top_tier: *top_tier,
            mode: mode.clone(),
            progressive: *progressive,
            naive: *naive,
            snapshot_dir: snapshot_dir.clone(),
            reference: reference.clone(),
        }),
        Invocation::RoiRun { config } => roi_run(config),
        Invocation::Diagnose { top_tier, tiers } => diagnose(*top_tier, tiers),
        Invocation::Sweep { config } => sweep(config),
    }
}

/// Re-executes a manifest and checks inputs and outputs byte for byte.
pub fn replay(manifest: &Manifest) -> Result<Outcome> {
    for input in &manifest.inputs {
        let bytes = fs::read(&input.path).map_err(|e| CliError::io(&input.path, e))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Mismatch(format!("input {} changed since the run", input.path.display())));
        }
    }
    let outcome = execute(&manifest.invocation)?;
    let fresh = outcome.digests()?;
    if fresh.len() != manifest.outputs.len() {
        return Err(CliError::Mismatch(format!(
            "{} outputs recorded, {} reproduced",
            manifest.outputs.len(),
            fresh.len()
        )));
    }
    for (want, got) in manifest.outputs.iter().zip(&fresh) {
        if want != got {
            return Err(CliError::Mismatch(format!("{} differs", want.path.display())));
        }
    }
    Ok(outcome)
}

fn gen_patterns(top_tier: u32, count: u64) -> Result<Outcome> {
    if top_tier == 0 || top_tier > ghostimg_core::hadamard::DEFAULT_MAX_ORDER_LOG2 {
        return Err(CliError::Config(format!(
            "top tier must be in 1..={}",
            ghostimg_core::hadamard::DEFAULT_MAX_ORDER_LOG2
        )));
    }
    if count == 0 || count > tier_len(top_tier) {
        return Err(CliError::Config(format!(
            "pattern count must be in 1..={}",
            tier_len(top_tier)
        )));
    }
    let mut out = Outcome::new(Invocation::GenPatterns { top_tier, count });
    let mut index = b"m,tier,u,v\n".to_vec();
    let width = (count - 1).to_string().len();
    for m in 0..count {
        let p = SequenceIndex(m).pattern_index();
        index.extend(format!("{m},{},{},{}\n", p.tier, p.u, p.v).bytes());
        out.files
            .push((PathBuf::from(format!("patterns/pattern_{m:0width$}.pgm")), Content::Pattern { m, top_tier }));
    }
    out.add("patterns/index.csv", index);
    out.summary = format!("{count} patterns of {0}x{0}", 1usize << top_tier);
    Ok(out)
}

/// The noise model of a run; DSNR targets are calibrated on `clean`.
fn noise_model(clean: &BucketRecord, spec: &NoiseSpec, out: &mut Outcome) -> Result<NoiseModel> {
    let model = match spec.target {
        NoiseTarget::None => NoiseModel::none(),
        NoiseTarget::Dsnr(d) => {
            let mean = clean.mean_reading()?;
            out.derived.insert("mean_reading".into(), tables::fmt_f64(mean));
            let mut m = ghostimg_core::calibrate_noise(d, mean).map_err(|e| CliError::Config(e.to_string()))?;
            if !m.is_none() {
                m.mean_offset = spec.mean_offset;
            }
            m
        }
        NoiseTarget::Sigma(s) => NoiseModel::gaussian(s, spec.mean_offset)?,
    };
    if !model.is_none() {
        out.derived.insert("noise_sigma".into(), tables::fmt_f64(model.sigma));
        out.derived.insert("noise_mean_offset".into(), tables::fmt_f64(model.mean_offset));
    }
    Ok(model)
}

fn apply_noise(clean: &BucketRecord, model: NoiseModel, seed: u64) -> BucketRecord {
    if model.is_none() {
        let mut r = clean.clone();
        r.seed = seed;
        r
    } else {
        clean.with_noise(model, seed)
    }
}

/// Canonical config echo: absolute scene path and explicit defaults.
fn resolved(config: &RunConfig, scene: &Scene) -> Result<RunConfig> {
    let mut c = config.clone();
    c.canonicalize_paths()?;
    c.scene.top_tier = Some(scene.top_tier());
    c.acquisition.mode = Some(config.mode()?.name().to_string());
    c.output.dir = None;
    Ok(c)
}

fn scene_input(config: &RunConfig, out: &mut Outcome) -> Result<Scene> {
    if let Some(p) = &config.scene.path {
        out.input(p)?;
    }
    let scene = config.scene()?;
    out.derived.insert("scene".into(), scene.provenance().to_string());
    Ok(scene)
}

fn acquire(config: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new(Invocation::Acquire { config: config.clone() });
    let scene = scene_input(config, &mut out)?;
    let mode = config.mode()?;
    let plan = config.plan(scene.top_tier())?;
    let noise = config.noise()?;
    out.invocation = Invocation::Acquire {
        config: resolved(config, &scene)?,
    };
    let clean = out.time("acquire", || acquire_noiseless(&scene, &plan, mode))?;
    let model = noise_model(&clean, &noise, &mut out)?;
    let record = apply_noise(&clean, model, noise.seed);
    out.add("record.csv", tables::record_csv(&record));
    out.add("scene.csv", tables::grid_csv(scene.reflectance()));
    out.summary = format!(
        "{0} measurements of a {1}x{1} scene ({2})",
        record.len(),
        scene.side(),
        mode.name()
    );
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ReconstructArgs {
    pub record: PathBuf,
    pub top_tier: u32,
    pub mode: String,
    pub progressive: bool,
    pub naive: bool,
    pub snapshot_dir: PathBuf,
    pub reference: Option<PathBuf>,
}

fn reconstruct(args: &ReconstructArgs) -> Result<Outcome> {
    let mode = parse_mode(Some(&args.mode))?;
    if args.top_tier > ghostimg_core::hadamard::DEFAULT_MAX_ORDER_LOG2 {
        return Err(CliError::Config(format!("top tier {} is above the size cap", args.top_tier)));
    }
    let record_path = fs::canonicalize(&args.record).map_err(|e| CliError::io(&args.record, e))?;
    let reference_path = match &args.reference {
        Some(p) => Some(fs::canonicalize(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    let mut out = Outcome::new(Invocation::Reconstruct {
        record: record_path.clone(),
        top_tier: args.top_tier,
        mode: mode.name().to_string(),
        progressive: args.progressive,
        naive: args.naive,
        snapshot_dir: args.snapshot_dir.clone(),
        reference: reference_path.clone(),
    });
    let bytes = out.input(&record_path)?;
    let record = tables::parse_record(&bytes, &record_path, args.top_tier, mode)?;
    if record.is_empty() {
        return Err(CliError::format(&record_path, "record has no measurements"));
    }
    let reference = match &reference_path {
        Some(p) => {
            out.input(p)?;
            let scene = load_scene(p)?;
            if scene.top_tier() != args.top_tier {
                return Err(CliError::Config(format!(
                    "reference is {0}x{0} but the record is for a {1}x{1} frame",
                    scene.side(),
                    1usize << args.top_tier
                )));
            }
            Some(scene)
        }
        None => None,
    };

    let images = out.time("reconstruct", || -> Result<Vec<ReconImage>> {
        Ok(match (args.naive, args.progressive) {
            (false, true) => progressive_snapshots(&record)?,
            (false, false) => vec![fast_reconstruct(&record)?],
            // The correlation estimator is undefined for a single measurement.
            (true, true) => completed_tiers(record.len())
                .into_iter()
                .filter(|&t| t >= 1 && t <= args.top_tier)
                .map(|t| gi_correlate(&record.prefix(tier_len(t) as usize)?))
                .collect::<ghostimg_core::Result<_>>()?,
            (true, false) => vec![gi_correlate(&record)?],
        })
    })?;

    let mut rows = Vec::new();
    for img in &images {
        let m = if args.naive && !args.progressive {
            record.len()
        } else {
            tier_len(img.tier) as usize
        };
        let stem = args.snapshot_dir.join(format!("tier_{}_M{m}", img.tier));
        out.add(stem.with_extension("pgm"), pgm::encode(img.side(), img.affine_unit().pixels.as_slice())?);
        out.add(stem.with_extension("csv"), tables::grid_csv(&img.pixels));
        if let Some(scene) = &reference {
            let score = fit_and_score(img, &block_average(scene, img.tier)?)?;
            rows.push(EvalRow {
                tier: img.tier,
                measurements: m,
                mse: score.mse,
                psnr_db: score.psnr_db,
                pearson_r: score.pearson_r,
                // A bare record carries no noise draws to measure.
                achieved_dsnr_db: f64::NAN,
            });
        }
    }
    if reference.is_some() {
        out.add("report.csv", tables::report_csv(&rows));
    }
    out.summary = format!(
        "{} image(s) from {} measurements ({})",
        images.len(),
        record.len(),
        if args.naive { "correlation" } else { "fast transform" }
    );
    let used = completed_tiers(record.len()).last().map_or(0, |&t| tier_len(t) as usize);
    if !args.naive && used < record.len() {
        out.summary.push_str(&format!(
            "; {} measurement(s) past the last completed tier ignored (--naive uses them)",
            record.len() - used
        ));
    }
    Ok(out)
}

fn roi_run(config: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new(Invocation::RoiRun { config: config.clone() });
    let scene = scene_input(config, &mut out)?;
    let top = scene.top_tier();
    let mode = config.mode()?;
    let noise = config.noise()?;
    let policy = config.threshold()?;
    let lock_tier = config.roi.lock_tier.unwrap_or(2);
    let lock_cap = config.roi.lock_cap.unwrap_or(top);
    if lock_tier > lock_cap || lock_cap > top {
        return Err(CliError::Config(format!(
            "need roi.lock_tier <= roi.lock_cap <= {top}, got {lock_tier} and {lock_cap}"
        )));
    }
    let mut echo = resolved(config, &scene)?;
    echo.roi.lock_tier = Some(lock_tier);
    echo.roi.lock_cap = Some(lock_cap);
    echo.roi.alpha = Some(policy.alpha);

    // Lock: escalate until a tier shows something above threshold.
    let started = Instant::now();
    let mut lock_path = Vec::new();
    let mut locked = None;
    let mut model = None;
    for tier in lock_tier..=lock_cap {
        lock_path.push(tier);
        let clean = acquire_noiseless(&scene, &AcquisitionPlan::complete(top, tier)?, mode)?;
        let m = match model {
            Some(m) => m,
            None => *model.insert(noise_model(&clean, &noise, &mut out)?),
        };
        let record = apply_noise(&clean, m, noise.seed);
        let snapshot = fast_reconstruct(&record)?;
        match lock_target(&snapshot, policy) {
            Ok(roi) => {
                locked = Some((record, snapshot, roi));
                break;
            }
            Err(CoreError::NoTarget) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    out.timings.insert("lock".into(), started.elapsed().as_secs_f64());
    let (Some((lock_record, snapshot, roi)), Some(model)) = (locked, model) else {
        return Err(CliError::NoTarget(format!("nothing above threshold at tiers {lock_tier}..={lock_cap}")));
    };

    let target_tier = config.roi.target_tier.unwrap_or(roi.side_log2());
    if target_tier > roi.side_log2() {
        return Err(CliError::Config(format!(
            "roi.target_tier {target_tier} exceeds the {}-pixel region",
            roi.side
        )));
    }
    echo.roi.target_tier = config.roi.target_tier;
    out.invocation = Invocation::RoiRun { config: echo };

    // Refinement reuses the noise model and stream, so a whole-frame region
    // continues the lock record exactly.
    let roi_record = out.time("roi_acquire", || roi_acquire(&scene, &roi, target_tier, mode, model, noise.seed))?;
    let roi_image = fast_reconstruct(&roi_record)?;
    let comp = composite(&snapshot, &roi_image, &roi)?;
    let budget = budget_report(top, &lock_path, &roi, target_tier, mode)?;

    out.roi = Some(RoiEcho {
        origin: [roi.origin.0, roi.origin.1],
        side: roi.side,
        lock_tier: roi.lock_tier,
        target_tier,
    });
    out.derived.insert("lock_path".into(), format!("{lock_path:?}"));
    out.add("composite.pgm", pgm::encode(comp.image.side(), comp.image.pixels.as_slice())?);
    out.add("composite.csv", tables::grid_csv(&comp.image.pixels));
    out.add("lock_record.csv", tables::record_csv(&lock_record));
    out.add("roi_record.csv", tables::record_csv(&roi_record));
    out.add("budget.csv", tables::budget_csv(&budget));
    out.add(
        "roi.toml",
        format!(
            "origin = [{}, {}]\nside = {}\nlock_tier = {}\ntarget_tier = {}\nseam = \"hard-replace\"\n",
            roi.origin.0, roi.origin.1, roi.side, roi.lock_tier, target_tier
        )
        .into_bytes(),
    );
    out.summary = format!(
        "region {}x{} at ({}, {}) locked at tier {}; {} measurements vs {} full-frame",
        roi.side,
        roi.side,
        roi.origin.0,
        roi.origin.1,
        roi.lock_tier,
        budget.roi_total_measurements,
        budget.full_frame_measurements
    );
    Ok(out)
}

fn diagnose(top_tier: u32, tiers: &[u32]) -> Result<Outcome> {
    if top_tier == 0 || top_tier > MAX_GRAM_TIER {
        return Err(CliError::Config(format!(
            "diagnose builds explicit matrices; top tier must be in 1..={MAX_GRAM_TIER}"
        )));
    }
    let tiers: Vec<u32> = if tiers.is_empty() { (1..=top_tier).collect() } else { tiers.to_vec() };
    if let Some(t) = tiers.iter().find(|&&t| t > top_tier) {
        return Err(CliError::Config(format!("tier {t} is above the top tier {top_tier}")));
    }
    let mut out = Outcome::new(Invocation::Diagnose {
        top_tier,
        tiers: tiers.clone(),
    });
    let rows = out.time("gram", || {
        tiers
            .iter()
            .map(|&t| Ok((t, tier_len(t) as usize, gram_fwhm(top_tier, tier_len(t) as usize)?)))
            .collect::<ghostimg_core::Result<Vec<_>>>()
    })?;
    out.summary = rows
        .iter()
        .map(|(t, m, f)| format!("tier {t}  M {m}  fwhm {f}"))
        .collect::<Vec<_>>()
        .join("\n");
    out.add("fwhm.csv", tables::fwhm_csv(&rows));
    Ok(out)
}

fn sweep(config: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new(Invocation::Sweep { config: config.clone() });
    let scene = scene_input(config, &mut out)?;
    let mode = config.mode()?;
    let (dsnr, seeds) = config.sweep_points()?;
    let mut echo = resolved(config, &scene)?;
    echo.sweep.dsnr_db = Some(dsnr.clone());
    echo.sweep.seeds = Some(seeds.clone());
    out.invocation = Invocation::Sweep { config: echo };
    let report = out.time("sweep", || noise_sweep(&scene, &dsnr, &seeds, mode))?;
    out.derived.insert("mean_reading".into(), tables::fmt_f64(report.mean_signal));
    out.add("sweep.csv", tables::sweep_csv(&report));
    out.add("sweep_summary.csv", tables::sweep_summary_csv(&report));
    out.summary = format!("{} DSNR points x {} seeds, tiers 0..={}", dsnr.len(), seeds.len(), scene.top_tier());
    Ok(out)
}
