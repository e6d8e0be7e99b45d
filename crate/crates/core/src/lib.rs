//! Progressive computational ghost imaging with reordered Hadamard patterns.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pipeline:
//!
//! * [`hadamard`]: Hadamard matrices, separable 2D patterns, and the fast
//!   Walsh-Hadamard transform.
//! * [`ordering`]: the coarse-to-fine measurement sequence, in which every
//!   prefix of length `4^k` is a complete basis at `2^k x 2^k` resolution.
//! * [`simulate`]: scenes, illumination modes, bucket measurements and the
//!   background-noise model.
//! * [`recon`]: the correlation estimator, the transform-based fast path,
//!   progressive snapshots and the Gram-matrix width diagnostic.
//! * [`roi`]: target locking on a coarse snapshot and refinement restricted
//!   to the locked region.
//! * [`metrics`]: DSNR, block-average references, affine-fit scoring and
//!   noise sweeps.
//!
//! File formats and the command-line front end live in the `ghostimg` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod grid;
pub mod hadamard;
pub mod metrics;
pub mod ordering;
pub mod recon;
pub mod rng;
pub mod roi;
pub mod simulate;

pub use error::{Error, Result};
pub use grid::SquareGrid;
pub use hadamard::{fwht_2d, hadamard_matrix, pattern_2d, upsample_replicate, HadamardMatrix, Pattern};
pub use metrics::{block_average, dsnr_db, fit_and_score, EvalReport, EvalRow, Score};
pub use ordering::{conventional_budget, new_pairs, seq_to_pattern, AcquisitionPlan, PatternIndex, SequenceIndex};
pub use recon::{fast_reconstruct, gi_correlate, gram_fwhm, progressive_snapshots, Normalization, ReconImage};
pub use roi::{budget_report, composite, lock_target, roi_acquire, BudgetReport, Composite, RegionOfInterest, Seam, ThresholdPolicy};
pub use simulate::{bucket, calibrate_noise, run_acquisition, BucketRecord, IlluminationMode, NoiseModel, Scene};
