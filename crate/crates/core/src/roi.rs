//! Target locking on a coarse snapshot and refinement inside the locked
//! region.
//!
//! The region is always a power-of-two square aligned to the coarse grid it
//! was detected on, so its interior carries an exact Hadamard basis of its
//! own. Refinement patterns run the same coarse-to-fine sequence at the
//! region's side and leave everything outside it dark.

use alloc::format;
use alloc::vec::Vec;

use crate::ordering::{conventional_budget, seq_to_pattern_into, tier_len, SequenceIndex};
use crate::recon::ReconImage;
use crate::simulate::{bucket, BucketRecord, IlluminationMode, NoiseModel, Scene};
use crate::{Error, Result, SquareGrid};

/// Square region of the frame: rows `x0..x0+side`, columns `y0..y0+side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionOfInterest {
    pub origin: (usize, usize),
    pub side: usize,
    /// Tier of the snapshot the region was locked on.
    pub lock_tier: u32,
}

impl RegionOfInterest {
    /// The whole `2^top_tier` frame.
    pub fn full_frame(top_tier: u32, lock_tier: u32) -> Self {
        Self {
            origin: (0, 0),
            side: 1 << top_tier,
            lock_tier,
        }
    }

    pub fn side_log2(&self) -> u32 {
        self.side.trailing_zeros()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.origin.0..self.origin.0 + self.side).contains(&x) && (self.origin.1..self.origin.1 + self.side).contains(&y)
    }

    pub fn is_full_frame(&self, frame_side: usize) -> bool {
        self.origin == (0, 0) && self.side == frame_side
    }

    /// Power-of-two side, fully inside a `frame_side` frame, origin on the
    /// lock-tier grid.
    pub fn validate(&self, frame_side: usize) -> Result<()> {
        if self.side == 0 || !self.side.is_power_of_two() {
            return Err(Error::RoiOutOfFrame(format!("side {} is not a power of two", self.side)));
        }
        if self.origin.0 + self.side > frame_side || self.origin.1 + self.side > frame_side {
            return Err(Error::RoiOutOfFrame(format!(
                "{}x{} at {:?} leaves the {frame_side}x{frame_side} frame",
                self.side, self.side, self.origin
            )));
        }
        let top = frame_side.trailing_zeros();
        if self.lock_tier > top {
            return Err(Error::RoiOutOfFrame(format!("lock tier {} above frame tier {top}", self.lock_tier)));
        }
        let cell = 1usize << (top - self.lock_tier);
        if self.origin.0 % cell != 0 || self.origin.1 % cell != 0 || self.side % cell != 0 {
            return Err(Error::RoiOutOfFrame(format!(
                "region {:?}+{} is not aligned to the {cell}-pixel lock grid",
                self.origin, self.side
            )));
        }
        Ok(())
    }
}

/// `mean + alpha · std` over the coarse cells of the normalized snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub alpha: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

/// Cells of the snapshot's native grid strictly above the policy threshold.
pub fn super_threshold_cells(snapshot: &ReconImage, policy: ThresholdPolicy) -> Vec<(usize, usize)> {
    let cells = snapshot.affine_unit().native();
    let n = cells.len() as f64;
    let mean = cells.as_slice().iter().sum::<f64>() / n;
    let var = cells.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let threshold = mean + policy.alpha * libm::sqrt(var);
    let side = cells.side();
    (0..side)
        .flat_map(|x| (0..side).map(move |y| (x, y)))
        .filter(|&(x, y)| cells[(x, y)] > threshold)
        .collect()
}

/// Bounding box of the super-threshold cells, grown to the smallest
/// power-of-two square of cells and shifted back inside the frame if needed.
pub fn lock_target(snapshot: &ReconImage, policy: ThresholdPolicy) -> Result<RegionOfInterest> {
    let hits = super_threshold_cells(snapshot, policy);
    if hits.is_empty() {
        return Err(Error::NoTarget);
    }
    let grid = 1usize << snapshot.tier;
    let cell = 1usize << (snapshot.top_tier() - snapshot.tier);
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for &(x, y) in &hits {
        r0 = r0.min(x);
        r1 = r1.max(x);
        c0 = c0.min(y);
        c1 = c1.max(y);
    }
    let span = (r1 - r0 + 1).max(c1 - c0 + 1).next_power_of_two();
    let start_r = r0.min(grid - span);
    let start_c = c0.min(grid - span);
    Ok(RegionOfInterest {
        origin: (start_r * cell, start_c * cell),
        side: span * cell,
        lock_tier: snapshot.tier,
    })
}

/// Measures the first `4^target_tier` sequence patterns at the region's own
/// side, each embedded in an otherwise dark frame. The returned record's top
/// tier is `log2(roi.side)`; noise is drawn exactly as in
/// [`run_acquisition`](crate::simulate::run_acquisition).
pub fn roi_acquire(
    scene: &Scene,
    roi: &RegionOfInterest,
    target_tier: u32,
    mode: IlluminationMode,
    noise: NoiseModel,
    seed: u64,
) -> Result<BucketRecord> {
    roi.validate(scene.side())?;
    let local_top = roi.side_log2();
    if target_tier > local_top {
        return Err(Error::InvalidPlan(format!(
            "target tier {target_tier} is finer than the {}-pixel region allows",
            roi.side
        )));
    }
    let count = tier_len(target_tier);
    let mut local = SquareGrid::filled(roi.side, 0i8);
    let mut frame = SquareGrid::filled(scene.side(), 0i8);
    let mut values = Vec::with_capacity(count as usize);
    for m in 0..count {
        seq_to_pattern_into(SequenceIndex(m), local_top, &mut local)?;
        for x in 0..roi.side {
            let dst = (roi.origin.0 + x) * scene.side() + roi.origin.1;
            frame.as_mut_slice()[dst..dst + roi.side].copy_from_slice(local.row(x));
        }
        values.push(bucket(&frame, scene, mode)?);
    }
    let clean = BucketRecord::new(values, local_top, mode, seed, NoiseModel::none())?;
    Ok(if noise.is_none() { clean } else { clean.with_noise(noise, seed) })
}

/// How region pixels meet the background.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seam {
    /// Region pixels overwrite the background; no blending.
    HardReplace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    /// Background tier, unit-normalized, with the region pasted in.
    pub image: ReconImage,
    pub roi: RegionOfInterest,
    pub roi_tier: u32,
    pub seam: Seam,
}

/// Pastes the unit-normalized region reconstruction over the
/// unit-normalized background.
pub fn composite(background: &ReconImage, roi_image: &ReconImage, roi: &RegionOfInterest) -> Result<Composite> {
    let frame = background.side();
    roi.validate(frame)?;
    if roi_image.side() != roi.side {
        return Err(Error::SizeMismatch {
            expected: roi.side,
            actual: roi_image.side(),
        });
    }
    let bg = background.affine_unit();
    let fg = roi_image.affine_unit();
    let mut pixels = bg.pixels.clone();
    for x in 0..roi.side {
        for y in 0..roi.side {
            pixels[(roi.origin.0 + x, roi.origin.1 + y)] = fg.pixels[(x, y)];
        }
    }
    Ok(Composite {
        image: ReconImage {
            tier: background.tier,
            pixels,
            normalization: bg.normalization,
        },
        roi: *roi,
        roi_tier: roi_image.tier,
        seam: Seam::HardReplace,
    })
}

/// Measurement and projection counts of a lock-then-refine run compared with
/// full-frame acquisition at the same detail inside the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetReport {
    pub projections_per_measurement: u64,
    /// Prefix measured to lock the target (highest tier on the lock path).
    pub lock_measurements: u64,
    pub roi_measurements: u64,
    /// Lock plus refinement; when the region is the whole frame the
    /// refinement simply continues the lock prefix.
    pub roi_total_measurements: u64,
    /// Full-frame tier with the same pixel size as the refined region.
    pub equivalent_tier: u32,
    /// Progressive full-frame measurements to reach `equivalent_tier`.
    pub full_frame_measurements: u64,
    /// Independent runs for every tier `1..=equivalent_tier`.
    pub conventional_measurements: u64,
}

impl BudgetReport {
    pub fn roi_total_projections(&self) -> u64 {
        self.roi_total_measurements * self.projections_per_measurement
    }

    pub fn full_frame_projections(&self) -> u64 {
        self.full_frame_measurements * self.projections_per_measurement
    }

    pub fn conventional_projections(&self) -> u64 {
        self.conventional_measurements * self.projections_per_measurement
    }
}

pub fn budget_report(
    frame_top_tier: u32,
    lock_path: &[u32],
    roi: &RegionOfInterest,
    target_tier: u32,
    mode: IlluminationMode,
) -> Result<BudgetReport> {
    roi.validate(1 << frame_top_tier)?;
    if target_tier > roi.side_log2() {
        return Err(Error::InvalidPlan(format!(
            "target tier {target_tier} is finer than the {}-pixel region allows",
            roi.side
        )));
    }
    let lock_measurements = lock_path.iter().copied().max().map(tier_len).unwrap_or(0);
    let roi_measurements = tier_len(target_tier);
    let roi_total_measurements = if roi.is_full_frame(1 << frame_top_tier) {
        lock_measurements.max(roi_measurements)
    } else {
        lock_measurements + roi_measurements
    };
    let pixel_log2 = roi.side_log2() - target_tier;
    let equivalent_tier = frame_top_tier - pixel_log2;
    Ok(BudgetReport {
        projections_per_measurement: mode.projections_per_measurement(),
        lock_measurements,
        roi_measurements,
        roi_total_measurements,
        equivalent_tier,
        full_frame_measurements: tier_len(equivalent_tier),
        conventional_measurements: conventional_budget(equivalent_tier),
    })
}
