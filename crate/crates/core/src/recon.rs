//! Image reconstruction from bucket records.
//!
//! Two estimators are provided:
//!
//! * [`gi_correlate`] is the fluctuation correlation
//!   `O(x,y) = (1/M) Σ_m (B_m − <B>)(I_m(x,y) − <I(x,y)>)`, evaluated
//!   pattern by pattern. It works for any prefix length.
//! * [`fast_reconstruct`] uses the fact that a prefix of length `4^k` is a
//!   complete Hadamard basis at `2^k` resolution: placing the bucket values
//!   on the `(u, v)` grid and applying one inverse Walsh-Hadamard transform
//!   yields the `2^k`-block means of the scene exactly.
//!
//! Every Sylvester pattern is `+1` on the block containing pixel `(0, 0)`,
//! so that block has zero variance across the sequence and the correlation
//! estimator returns 0 there. Away from it the two estimators agree
//! up to scale on completed prefixes. The transform path has no such blind
//! block because it does not subtract the per-pixel pattern mean.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::hadamard::{fwht_2d_in_place, upsample_replicate};
use crate::ordering::{completed_tiers, highest_completed_tier, seq_to_pattern_into, tier_len, SequenceIndex};
use crate::simulate::{BucketRecord, IlluminationMode};
use crate::{Error, Result, SquareGrid};

/// Largest top tier for which [`PatternMatrix`] may be materialized.
pub const MAX_GRAM_TIER: u32 = 5;

/// How stored pixel values relate to the estimator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    Raw,
    /// `stored = scale · raw + offset`, mapping the raw range onto `[0, 1]`.
    AffineUnit { scale: f64, offset: f64 },
}

/// A reconstruction at native resolution `2^tier`, stored at full frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconImage {
    pub tier: u32,
    pub pixels: SquareGrid<f64>,
    pub normalization: Normalization,
}

impl ReconImage {
    pub fn side(&self) -> usize {
        self.pixels.side()
    }

    pub fn top_tier(&self) -> u32 {
        self.pixels.side().trailing_zeros()
    }

    /// Rescales raw values onto `[0, 1]`. A constant image maps to zeros
    /// with `scale = 0`. Already-normalized images are returned unchanged.
    pub fn affine_unit(&self) -> ReconImage {
        if let Normalization::AffineUnit { .. } = self.normalization {
            return self.clone();
        }
        let (lo, hi) = min_max(self.pixels.as_slice());
        let (scale, offset) = if hi > lo { (1.0 / (hi - lo), -lo / (hi - lo)) } else { (0.0, 0.0) };
        ReconImage {
            tier: self.tier,
            pixels: self.pixels.map(|&v| scale * v + offset),
            normalization: Normalization::AffineUnit { scale, offset },
        }
    }

    /// Raw estimator values, undoing any recorded normalization when possible.
    pub fn raw(&self) -> Option<SquareGrid<f64>> {
        match self.normalization {
            Normalization::Raw => Some(self.pixels.clone()),
            Normalization::AffineUnit { scale, offset } if scale != 0.0 => {
                Some(self.pixels.map(|&v| (v - offset) / scale))
            }
            Normalization::AffineUnit { .. } => None,
        }
    }

    /// One value per `2^(K − tier)` block, side `2^tier`.
    pub fn native(&self) -> SquareGrid<f64> {
        let shift = self.top_tier() - self.tier;
        SquareGrid::from_fn(1 << self.tier, |x, y| self.pixels[(x << shift, y << shift)])
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Pairwise (tree) summation; the grouping depends only on the length.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Per-mode weight of a signed pattern entry as the scene sees it.
#[inline]
fn illumination(mode: IlluminationMode, p: i8) -> f64 {
    match mode {
        IlluminationMode::Signed | IlluminationMode::Differential => f64::from(p),
        IlluminationMode::BinaryOffset => {
            if p > 0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Correlation estimator over every entry of the record.
///
/// Patterns are taken as the scene sees them: `±1` for signed and
/// differential records, `0/1` for binary-offset records. The native tier
/// is the last completed tier of the record. Terms are accumulated in
/// ascending `m` and `<B>` uses pairwise summation, so the result does not
/// depend on how the work is scheduled.
pub fn gi_correlate(record: &BucketRecord) -> Result<ReconImage> {
    let m_count = record.len();
    if m_count < 2 {
        return Err(Error::InvalidRecord(format!(
            "correlation needs at least 2 measurements, got {m_count}"
        )));
    }
    let top = record.top_tier();
    let side = 1usize << top;
    let n = side * side;
    let values = record.values();
    let mean_b = pairwise_sum(values) / m_count as f64;

    let mut pattern = SquareGrid::filled(side, 0i8);
    let mut pattern_sum = vec![0.0f64; n];
    for m in 0..m_count as u64 {
        seq_to_pattern_into(SequenceIndex(m), top, &mut pattern)?;
        for (acc, &p) in pattern_sum.iter_mut().zip(pattern.as_slice()) {
            *acc += illumination(record.mode, p);
        }
    }
    let mean_i: Vec<f64> = pattern_sum.iter().map(|s| s / m_count as f64).collect();

    let mut acc = vec![0.0f64; n];
    for (m, &b) in values.iter().enumerate() {
        seq_to_pattern_into(SequenceIndex(m as u64), top, &mut pattern)?;
        let db = b - mean_b;
        for ((a, &p), &mi) in acc.iter_mut().zip(pattern.as_slice()).zip(&mean_i) {
            *a += db * (illumination(record.mode, p) - mi);
        }
    }
    let inv_m = 1.0 / m_count as f64;
    acc.iter_mut().for_each(|a| *a *= inv_m);

    Ok(ReconImage {
        tier: highest_completed_tier(m_count).unwrap_or(0),
        pixels: SquareGrid::from_vec(side, acc)?,
        normalization: Normalization::Raw,
    })
}

/// Inverse-transform reconstruction from the highest completed tier.
///
/// Bucket values are converted to signed coefficients (binary-offset values
/// `B` become `2B − B_0` for `m > 0`), placed at their `(u, v)` on the
/// `2^k` grid, and transformed once. Dividing by `4^K` makes the raw output
/// equal to the `2^k`-block means of the scene for noiseless records.
/// Entries past the completed tier are ignored.
pub fn fast_reconstruct(record: &BucketRecord) -> Result<ReconImage> {
    let tier = highest_completed_tier(record.len())
        .ok_or_else(|| Error::InvalidRecord("fast reconstruction needs at least 1 measurement".into()))?;
    reconstruct_tier(record, tier)
}

fn reconstruct_tier(record: &BucketRecord, tier: u32) -> Result<ReconImage> {
    let top = record.top_tier();
    let count = tier_len(tier) as usize;
    if tier > top || count > record.len() {
        return Err(Error::IncompleteTier(record.len()));
    }
    let values = &record.values()[..count];
    let b0 = values[0];
    let mut coeffs = SquareGrid::filled(1usize << tier, 0.0f64);
    for (m, &b) in values.iter().enumerate() {
        let c = match record.mode {
            IlluminationMode::Signed | IlluminationMode::Differential => b,
            IlluminationMode::BinaryOffset if m == 0 => b,
            IlluminationMode::BinaryOffset => 2.0 * b - b0,
        };
        let (u, v) = SequenceIndex(m as u64).pattern_index().at_tier(tier);
        coeffs[(u, v)] = c;
    }
    fwht_2d_in_place(&mut coeffs)?;
    let scale = 1.0 / tier_len(top) as f64;
    coeffs.as_mut_slice().iter_mut().for_each(|c| *c *= scale);
    Ok(ReconImage {
        tier,
        pixels: upsample_replicate(&coeffs, 1 << (top - tier))?,
        normalization: Normalization::Raw,
    })
}

/// One fast reconstruction per completed tier, each from exactly the
/// prefix of length `4^k`.
pub fn progressive_snapshots(record: &BucketRecord) -> Result<Vec<ReconImage>> {
    completed_tiers(record.len())
        .into_iter()
        .filter(|&t| t <= record.top_tier())
        .map(|t| reconstruct_tier(record, t))
        .collect()
}

/// The explicit `M x N` pattern matrix of the first `M` sequence positions,
/// rows flattened row-major. Only for small frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl PatternMatrix {
    pub fn build(top_tier: u32, rows: usize) -> Result<Self> {
        if top_tier > MAX_GRAM_TIER {
            return Err(Error::SizeLimit {
                requested: top_tier,
                cap: MAX_GRAM_TIER,
            });
        }
        let side = 1usize << top_tier;
        let cols = side * side;
        let mut entries = Vec::with_capacity(rows * cols);
        let mut pattern = SquareGrid::filled(side, 0i8);
        for m in 0..rows as u64 {
            seq_to_pattern_into(SequenceIndex(m), top_tier, &mut pattern)?;
            entries.extend_from_slice(pattern.as_slice());
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, m: usize, p: usize) -> i8 {
        self.entries[m * self.cols + p]
    }

    /// `M · Ψ = M · Φ − 1 · colsum(Φ)`, exact in integers.
    pub fn scaled_centered(&self) -> Vec<i64> {
        let mut colsum = vec![0i64; self.cols];
        for m in 0..self.rows {
            for (s, &e) in colsum.iter_mut().zip(&self.entries[m * self.cols..(m + 1) * self.cols]) {
                *s += i64::from(e);
            }
        }
        let mm = self.rows as i64;
        let mut out = Vec::with_capacity(self.entries.len());
        for m in 0..self.rows {
            for (p, &e) in self.entries[m * self.cols..(m + 1) * self.cols].iter().enumerate() {
                out.push(mm * i64::from(e) - colsum[p]);
            }
        }
        out
    }
}

/// Resolution-cell area of the first `m` sequence patterns on a
/// `2^top_tier` frame: the number of entries in one row of `ΨᵀΨ` at or
/// above half of that row's maximum.
///
/// The row belongs to the last pixel, which never lies in the
/// always-illuminated origin block whose `Ψ` column is zero. Arithmetic is
/// done on `M²·ΨᵀΨ` in integers. For `m = 1`, `Ψ` vanishes and every entry
/// qualifies, giving the whole frame.
pub fn gram_fwhm(top_tier: u32, m: usize) -> Result<usize> {
    if top_tier > MAX_GRAM_TIER {
        return Err(Error::SizeLimit {
            requested: top_tier,
            cap: MAX_GRAM_TIER,
        });
    }
    match highest_completed_tier(m) {
        Some(t) if tier_len(t) == m as u64 && t <= top_tier => {}
        _ => return Err(Error::IncompleteTier(m)),
    }
    let phi = PatternMatrix::build(top_tier, m)?;
    let psi = phi.scaled_centered();
    let n = phi.cols();
    let r = n - 1;
    let mut row = vec![0i64; n];
    for k in 0..m {
        let line = &psi[k * n..(k + 1) * n];
        let w = line[r];
        if w != 0 {
            for (g, &e) in row.iter_mut().zip(line) {
                *g += w * e;
            }
        }
    }
    let max = row.iter().copied().max().unwrap_or(0);
    Ok(row.iter().filter(|&&g| 2 * g >= max).count())
}
