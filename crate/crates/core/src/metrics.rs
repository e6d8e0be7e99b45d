//! Quality metrics, DSNR and noise sweeps.
//!
//! Reconstructions are only defined up to an affine map, so every score is
//! taken after the least-squares fit `a·recon + b ≈ reference`. PSNR uses
//! the reference's dynamic range (max − min) as its peak.

use alloc::format;
use alloc::vec::Vec;

use crate::hadamard::upsample_replicate;
use crate::ordering::AcquisitionPlan;
use crate::recon::{pairwise_sum, progressive_snapshots, ReconImage};
use crate::simulate::{acquire_noiseless, calibrate_noise, BucketRecord, IlluminationMode, NoiseModel, Scene};
use crate::{Error, Result, SquareGrid};

/// MSE at or below which a reconstruction counts as exact (PSNR = +∞).
pub const EXACT_MSE: f64 = 1e-18;

/// `10·log10(<B> / std(E))` with the population standard deviation.
/// Zero noise variance gives `+∞` (noiseless).
pub fn dsnr_db(mean_signal: f64, noise_samples: &[f64]) -> Result<f64> {
    if !(mean_signal.is_finite() && mean_signal > 0.0) {
        return Err(Error::InvalidArgument(format!("mean signal must be positive, got {mean_signal}")));
    }
    if noise_samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "DSNR needs at least 2 noise samples, got {}",
            noise_samples.len()
        )));
    }
    let n = noise_samples.len() as f64;
    let mean = pairwise_sum(noise_samples) / n;
    let squares: Vec<f64> = noise_samples.iter().map(|e| (e - mean) * (e - mean)).collect();
    let var = pairwise_sum(&squares) / n;
    if var == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(mean_signal / libm::sqrt(var)))
}

/// Means of the `2^(K − tier)` blocks of a scene; side `2^tier`.
pub fn block_average(scene: &Scene, tier: u32) -> Result<SquareGrid<f64>> {
    block_average_grid(scene.reflectance(), tier)
}

pub fn block_average_grid(grid: &SquareGrid<f64>, tier: u32) -> Result<SquareGrid<f64>> {
    let top = grid
        .side_log2()
        .ok_or(Error::NotPowerOfTwo(grid.side()))?;
    if tier > top {
        return Err(Error::InvalidArgument(format!("tier {tier} exceeds top tier {top}")));
    }
    let shift = top - tier;
    let side = 1usize << tier;
    let mut out = SquareGrid::filled(side, 0.0);
    for x in 0..grid.side() {
        for (y, &v) in grid.row(x).iter().enumerate() {
            out[(x >> shift, y >> shift)] += v;
        }
    }
    let inv = 1.0 / (1u64 << (2 * shift)) as f64;
    out.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
    Ok(out)
}

/// Least-squares `(a, b)` minimizing `Σ (a·x + b − y)²`. A constant `x`
/// gives `a = 0`, `b = mean(y)`.
pub fn affine_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    if sxx == 0.0 {
        return (0.0, my);
    }
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Pearson correlation; `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if x.is_empty() || constant(x) || constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / libm::sqrt(sxx * syy))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub mse: f64,
    /// `+∞` when `mse <= EXACT_MSE`.
    pub psnr_db: f64,
    /// `None` when the reference (or reconstruction) is constant.
    pub pearson_r: Option<f64>,
    /// Peak used for PSNR: reference max − min.
    pub peak: f64,
}

impl Score {
    pub fn is_exact(&self) -> bool {
        self.mse <= EXACT_MSE
    }
}

/// Scores two equally sized value sets after fitting `recon` onto `reference`.
pub fn score_values(recon: &[f64], reference: &[f64]) -> Result<Score> {
    if recon.len() != reference.len() || recon.is_empty() {
        return Err(Error::SizeMismatch {
            expected: reference.len(),
            actual: recon.len(),
        });
    }
    let (a, b) = affine_fit(recon, reference);
    let sq: Vec<f64> = recon
        .iter()
        .zip(reference)
        .map(|(&r, &t)| {
            let e = a * r + b - t;
            e * e
        })
        .collect();
    let mse = pairwise_sum(&sq) / sq.len() as f64;
    let (lo, hi) = reference
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let peak = hi - lo;
    let psnr_db = if mse <= EXACT_MSE {
        f64::INFINITY
    } else {
        10.0 * libm::log10(peak * peak / mse)
    };
    Ok(Score {
        mse,
        psnr_db,
        pearson_r: pearson(recon, reference),
        peak,
    })
}

/// Scores a reconstruction against a reference, which may be given at any
/// power-of-two side up to the frame and is replicated to the frame.
pub fn fit_and_score(recon: &ReconImage, reference: &SquareGrid<f64>) -> Result<Score> {
    let side = recon.side();
    if reference.side() == 0 || side % reference.side() != 0 {
        return Err(Error::SizeMismatch {
            expected: side,
            actual: reference.side(),
        });
    }
    let reference = upsample_replicate(reference, side / reference.side())?;
    score_values(recon.pixels.as_slice(), reference.as_slice())
}

/// One completed tier of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub tier: u32,
    pub measurements: usize,
    pub mse: f64,
    pub psnr_db: f64,
    pub pearson_r: Option<f64>,
    pub achieved_dsnr_db: f64,
}

/// Per-tier quality of one record against its scene.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub seed: u64,
    pub noise: NoiseModel,
    pub mode: IlluminationMode,
}

impl EvalReport {
    pub fn row(&self, tier: u32) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.tier == tier)
    }
}

/// Scores every progressive snapshot of `record` against the block-averaged
/// scene at its tier. `achieved_dsnr_db` is measured on the record's
/// realized noise draws against `mean_signal`.
pub fn evaluate(record: &BucketRecord, scene: &Scene, mean_signal: f64) -> Result<EvalReport> {
    let references = (0..=scene.top_tier())
        .map(|t| block_average(scene, t))
        .collect::<Result<Vec<_>>>()?;
    evaluate_with_references(record, &references, mean_signal)
}

fn evaluate_with_references(record: &BucketRecord, references: &[SquareGrid<f64>], mean_signal: f64) -> Result<EvalReport> {
    let achieved_dsnr_db = if record.noise.is_none() || record.len() < 2 {
        f64::INFINITY
    } else {
        dsnr_db(mean_signal, &record.noise.samples(record.seed, record.len()))?
    };
    let rows = progressive_snapshots(record)?
        .into_iter()
        .map(|snap| {
            let score = fit_and_score(&snap, &references[snap.tier as usize])?;
            Ok(EvalRow {
                tier: snap.tier,
                measurements: 1usize << (2 * snap.tier),
                mse: score.mse,
                psnr_db: score.psnr_db,
                pearson_r: score.pearson_r,
                achieved_dsnr_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        rows,
        seed: record.seed,
        noise: record.noise,
        mode: record.mode,
    })
}

/// Mean and spread of PSNR for one `(DSNR, tier)` cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub dsnr_db: f64,
    pub tier: u32,
    pub mean_psnr_db: f64,
    /// Sample standard deviation; 0 when any run was exact.
    pub std_psnr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub dsnr_db: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub summary: Vec<SweepSummary>,
    pub mean_signal: f64,
}

impl SweepReport {
    pub fn summary_for(&self, dsnr_db: f64, tier: u32) -> Option<&SweepSummary> {
        self.summary.iter().find(|s| s.dsnr_db == dsnr_db && s.tier == tier)
    }

    pub fn cells_for(&self, dsnr_db: f64) -> impl Iterator<Item = &EvalReport> {
        self.cells.iter().filter(move |c| c.dsnr_db == dsnr_db).map(|c| &c.report)
    }
}

/// Full-basis acquisitions of `scene` at each DSNR (`+∞` allowed) and seed.
///
/// The noiseless record is measured once; each cell adds its own noise
/// draw, which is exactly what a fresh noisy acquisition would return.
pub fn noise_sweep(scene: &Scene, dsnr_list: &[f64], seeds: &[u64], mode: IlluminationMode) -> Result<SweepReport> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least 2 seeds per DSNR point, got {}",
            seeds.len()
        )));
    }
    let top = scene.top_tier();
    let plan = AcquisitionPlan::complete(top, top)?;
    let clean = acquire_noiseless(scene, &plan, mode)?;
    let mean_signal = clean.mean_reading()?;
    let references = (0..=top).map(|t| block_average(scene, t)).collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(dsnr_list.len() * seeds.len());
    let mut summary = Vec::new();
    for &dsnr in dsnr_list {
        let noise = calibrate_noise(dsnr, mean_signal)?;
        let start = cells.len();
        for &seed in seeds {
            let record = clean.with_noise(noise, seed);
            cells.push(SweepCell {
                dsnr_db: dsnr,
                report: evaluate_with_references(&record, &references, mean_signal)?,
            });
        }
        for tier in 0..=top {
            let psnr: Vec<f64> = cells[start..]
                .iter()
                .filter_map(|c| c.report.row(tier).map(|r| r.psnr_db))
                .collect();
            summary.push(summarize(dsnr, tier, &psnr));
        }
    }
    Ok(SweepReport {
        cells,
        summary,
        mean_signal,
    })
}

fn summarize(dsnr_db: f64, tier: u32, psnr: &[f64]) -> SweepSummary {
    let n = psnr.len() as f64;
    if psnr.iter().any(|p| p.is_infinite()) {
        let all_exact = psnr.iter().all(|p| p.is_infinite());
        return SweepSummary {
            dsnr_db,
            tier,
            mean_psnr_db: if all_exact { f64::INFINITY } else { psnr.iter().sum::<f64>() / n },
            std_psnr_db: 0.0,
        };
    }
    let mean = psnr.iter().sum::<f64>() / n;
    let var = psnr.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    SweepSummary {
        dsnr_db,
        tier,
        mean_psnr_db: mean,
        std_psnr_db: libm::sqrt(var),
    }
}
