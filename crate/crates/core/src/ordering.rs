//! The coarse-to-fine measurement sequence.
//!
//! Position 0 is the all-ones pattern. Positions `4^(k-1) .. 4^k` hold the
//! tier-`k` patterns that are not pixel-replicated copies of a tier `k-1`
//! pattern, i.e. the pairs `(u, v)` with `u` or `v` odd, in lexicographic
//! order. Every prefix of length `4^k` is therefore a complete Hadamard basis
//! at `2^k x 2^k` resolution, and later patterns only add detail.
//!
//! Patterns are produced on demand from their index; the sequence is never
//! materialized.

use alloc::vec::Vec;

use crate::hadamard::{sign, DEFAULT_MAX_ORDER_LOG2};
use crate::{Error, Result, SquareGrid};

/// Number of patterns in a complete tier-`tier` basis, `4^tier`.
#[inline]
pub const fn tier_len(tier: u32) -> u64 {
    1u64 << (2 * tier)
}

/// Position in the reordered measurement sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SequenceIndex(pub u64);

impl SequenceIndex {
    /// Smallest `k` with `m < 4^k`.
    pub fn tier(self) -> u32 {
        if self.0 == 0 {
            0
        } else {
            (64 - self.0.leading_zeros()).div_ceil(2)
        }
    }

    /// Which derived pattern this position selects.
    pub fn pattern_index(self) -> PatternIndex {
        let tier = self.tier();
        if tier == 0 {
            return PatternIndex { tier: 0, u: 0, v: 0 };
        }
        let offset = self.0 - tier_len(tier - 1);
        let (u, v) = new_pair_at(tier, offset);
        PatternIndex { tier, u, v }
    }
}

/// `(tier, u, v)` identity of a derived pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternIndex {
    pub tier: u32,
    pub u: usize,
    pub v: usize,
}

impl PatternIndex {
    /// The same pattern expressed at a finer tier, where replication maps
    /// `(u, v)` to `(u · 2^d, v · 2^d)`.
    pub fn at_tier(self, tier: u32) -> (usize, usize) {
        debug_assert!(tier >= self.tier);
        let d = tier - self.tier;
        (self.u << d, self.v << d)
    }

    /// Value at full-resolution pixel `(x, y)` of a `2^top_tier` frame.
    #[inline]
    pub fn value_at(self, top_tier: u32, x: usize, y: usize) -> i8 {
        let (u, v) = self.at_tier(top_tier);
        sign(u, x) * sign(v, y)
    }
}

/// Pairs introduced at `tier`: `[(0, 0)]` at tier 0, otherwise every pair in
/// `[0, 2^tier)^2` with `u` or `v` odd, lexicographic.
pub fn new_pairs(tier: u32) -> Vec<(usize, usize)> {
    if tier == 0 {
        return alloc::vec![(0, 0)];
    }
    (0..tier_len(tier) - tier_len(tier - 1)).map(|i| new_pair_at(tier, i)).collect()
}

/// Entry `offset` of [`new_pairs`]`(tier)` for `tier >= 1`, without
/// allocating. Each pair of rows `(2i, 2i + 1)` contributes `2^(tier-1)`
/// odd columns of the even row followed by the full odd row.
fn new_pair_at(tier: u32, offset: u64) -> (usize, usize) {
    let half = 1u64 << (tier - 1);
    let per_row_pair = 3 * half;
    let pair = offset / per_row_pair;
    let r = offset % per_row_pair;
    if r < half {
        ((2 * pair) as usize, (2 * r + 1) as usize)
    } else {
        ((2 * pair + 1) as usize, (r - half) as usize)
    }
}

fn check_index(m: SequenceIndex, top_tier: u32) -> Result<()> {
    if top_tier > DEFAULT_MAX_ORDER_LOG2 {
        return Err(Error::SizeLimit {
            requested: top_tier,
            cap: DEFAULT_MAX_ORDER_LOG2,
        });
    }
    let len = tier_len(top_tier);
    if m.0 >= len {
        return Err(Error::SequenceIndex { m: m.0, len, top_tier });
    }
    Ok(())
}

/// Full-frame (`2^top_tier` side) pattern at sequence position `m`: the
/// tier pattern enlarged by pixel replication.
pub fn seq_to_pattern(m: SequenceIndex, top_tier: u32) -> Result<SquareGrid<i8>> {
    let mut out = SquareGrid::filled(1usize << top_tier.min(DEFAULT_MAX_ORDER_LOG2), 0i8);
    seq_to_pattern_into(m, top_tier, &mut out)?;
    Ok(out)
}

/// As [`seq_to_pattern`], writing into a caller-provided frame.
pub fn seq_to_pattern_into(m: SequenceIndex, top_tier: u32, out: &mut SquareGrid<i8>) -> Result<()> {
    check_index(m, top_tier)?;
    let side = 1usize << top_tier;
    if out.side() != side {
        return Err(Error::SizeMismatch {
            expected: side,
            actual: out.side(),
        });
    }
    let (u, v) = m.pattern_index().at_tier(top_tier);
    // Separable: precompute the column signs once.
    let col: Vec<i8> = (0..side).map(|y| sign(v, y)).collect();
    for (x, row) in out.as_mut_slice().chunks_exact_mut(side).enumerate() {
        let s = sign(u, x);
        for (dst, &c) in row.iter_mut().zip(&col) {
            *dst = s * c;
        }
    }
    Ok(())
}

/// Measurements a non-progressive scheme spends producing every tier
/// `1..=kappa_max` with independent runs: `Σ 4^k`.
pub fn conventional_budget(kappa_max: u32) -> u64 {
    (1..=kappa_max).map(tier_len).sum()
}

/// Measurements the progressive sequence spends to reach `kappa_max`.
pub fn progressive_budget(kappa_max: u32) -> u64 {
    tier_len(kappa_max)
}

/// How many sequence positions to measure and at which resolutions images
/// are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcquisitionPlan {
    top_tier: u32,
    measurements: usize,
}

impl AcquisitionPlan {
    pub fn new(top_tier: u32, measurements: usize) -> Result<Self> {
        if top_tier > DEFAULT_MAX_ORDER_LOG2 {
            return Err(Error::SizeLimit {
                requested: top_tier,
                cap: DEFAULT_MAX_ORDER_LOG2,
            });
        }
        if measurements == 0 {
            return Err(Error::InvalidPlan("at least one measurement is required".into()));
        }
        if measurements as u64 > tier_len(top_tier) {
            return Err(Error::InvalidPlan(alloc::format!(
                "{measurements} measurements exceed the {} patterns of tier {top_tier}",
                tier_len(top_tier)
            )));
        }
        Ok(Self { top_tier, measurements })
    }

    /// Plan covering the complete basis up to `tier`.
    pub fn complete(top_tier: u32, tier: u32) -> Result<Self> {
        if tier > top_tier {
            return Err(Error::InvalidPlan(alloc::format!(
                "tier {tier} exceeds top tier {top_tier}"
            )));
        }
        Self::new(top_tier, tier_len(tier) as usize)
    }

    pub fn top_tier(&self) -> u32 {
        self.top_tier
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    /// Tiers `k` with `4^k <= M`.
    pub fn snapshot_tiers(&self) -> Vec<u32> {
        completed_tiers(self.measurements)
    }
}

/// Tiers whose complete basis fits in the first `measurements` positions.
pub fn completed_tiers(measurements: usize) -> Vec<u32> {
    (0..=DEFAULT_MAX_ORDER_LOG2)
        .take_while(|&t| tier_len(t) <= measurements as u64)
        .collect()
}

/// Highest completed tier for a prefix length, `None` when empty.
pub fn highest_completed_tier(measurements: usize) -> Option<u32> {
    completed_tiers(measurements).last().copied()
}
