//! Sylvester Hadamard matrices, separable 2D derived patterns and the fast
//! Walsh-Hadamard transform.
//!
//! Matrices are grown as `H(2^k) = H(2^(k-1)) ⊗ H(2)`. With this order the
//! even rows of `H(2^k)` are the rows of `H(2^(k-1))` with every entry
//! duplicated, so a coarse pattern enlarged by pixel replication is exactly
//! a pattern of the finer family:
//!
//! ```text
//! H(2^k)[2u][x] == H(2^(k-1))[u][x / 2]
//! ```
//!
//! For Sylvester matrices the entry also has the closed form
//! `(-1)^popcount(row & col)`, which [`sign`] uses to generate patterns
//! without materializing a matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, SquareGrid};

/// Default cap on `log2` of any matrix order or pattern side.
pub const DEFAULT_MAX_ORDER_LOG2: u32 = 14;

/// Entry `(row, col)` of the Sylvester Hadamard matrix of any order large
/// enough to contain it.
#[inline]
pub fn sign(row: usize, col: usize) -> i8 {
    if (row & col).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// A `2^k x 2^k` matrix of `+1/-1` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order_log2: u32,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    pub fn order_log2(&self) -> u32 {
        self.order_log2
    }

    /// Number of rows (and columns).
    pub fn order(&self) -> usize {
        1 << self.order_log2
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.order() + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        let n = self.order();
        &self.entries[row * n..(row + 1) * n]
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    /// `H · Hᵀ` in exact integer arithmetic.
    pub fn gram(&self) -> Vec<i64> {
        let n = self.order();
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..n {
                let rj = self.row(j);
                out[i * n + j] = ri.iter().zip(rj).map(|(&a, &b)| i64::from(a) * i64::from(b)).sum();
            }
        }
        out
    }
}

/// Builds `H(2^k)` by repeated Kronecker products with `H(2)`, capped at
/// [`DEFAULT_MAX_ORDER_LOG2`].
pub fn hadamard_matrix(k: u32) -> Result<HadamardMatrix> {
    hadamard_matrix_with_cap(k, DEFAULT_MAX_ORDER_LOG2)
}

pub fn hadamard_matrix_with_cap(k: u32, cap: u32) -> Result<HadamardMatrix> {
    if k == 0 || k > cap {
        return Err(Error::SizeLimit { requested: k, cap });
    }
    const H2: [[i8; 2]; 2] = [[1, 1], [1, -1]];

    let mut entries = vec![1i8];
    let mut n = 1usize;
    for _ in 0..k {
        let m = 2 * n;
        let mut next = vec![0i8; m * m];
        for i in 0..n {
            for j in 0..n {
                let h = entries[i * n + j];
                for (a, h2_row) in H2.iter().enumerate() {
                    for (b, &h2) in h2_row.iter().enumerate() {
                        next[(2 * i + a) * m + 2 * j + b] = h * h2;
                    }
                }
            }
        }
        entries = next;
        n = m;
    }
    Ok(HadamardMatrix { order_log2: k, entries })
}

/// A 2D derived pattern: the outer product of rows `u` and `v` of `H(2^tier)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub tier: u32,
    pub u: usize,
    pub v: usize,
    pub values: SquareGrid<i8>,
}

impl Pattern {
    pub fn side(&self) -> usize {
        1 << self.tier
    }
}

/// `values(x, y) = H(u, x) · H(v, y)` on a `2^tier` square.
pub fn pattern_2d(tier: u32, u: usize, v: usize) -> Result<Pattern> {
    if tier > DEFAULT_MAX_ORDER_LOG2 {
        return Err(Error::SizeLimit {
            requested: tier,
            cap: DEFAULT_MAX_ORDER_LOG2,
        });
    }
    let side = 1usize << tier;
    if u >= side || v >= side {
        return Err(Error::PatternIndex { tier, u, v });
    }
    let values = SquareGrid::from_fn(side, |x, y| sign(u, x) * sign(v, y));
    Ok(Pattern { tier, u, v, values })
}

/// Duplicates every cell into a `factor x factor` block.
pub fn upsample_replicate<T: Copy>(grid: &SquareGrid<T>, factor: usize) -> Result<SquareGrid<T>> {
    if !factor.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(factor));
    }
    if factor == 1 {
        return Ok(grid.clone());
    }
    let shift = factor.trailing_zeros();
    Ok(SquareGrid::from_fn(grid.side() * factor, |x, y| {
        grid[(x >> shift, y >> shift)]
    }))
}

/// In-place natural-order Walsh-Hadamard transform of a power-of-two slice.
///
/// `out[k] = Σ_n (-1)^popcount(k & n) · in[n]`; applying it twice scales by
/// `len`.
pub fn fwht_in_place(data: &mut [f64]) -> Result<()> {
    let n = data.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        half <<= 1;
    }
    Ok(())
}

/// Separable 2D Walsh-Hadamard transform, in place.
///
/// Rows are transformed first; the column pass runs the same butterflies
/// across whole rows so it stays contiguous in memory.
pub fn fwht_2d_in_place(img: &mut SquareGrid<f64>) -> Result<()> {
    let side = img.side();
    if !side.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(side));
    }
    let data = img.as_mut_slice();
    for row in data.chunks_exact_mut(side) {
        fwht_in_place(row)?;
    }
    let mut half = 1;
    while half < side {
        for block in data.chunks_exact_mut(2 * half * side) {
            let (lo, hi) = block.split_at_mut(half * side);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        half <<= 1;
    }
    Ok(())
}

/// Coefficient `(u, v)` of the result is `Σ_{x,y} H(u,x) H(v,y) img(x,y)`.
pub fn fwht_2d(img: &SquareGrid<f64>) -> Result<SquareGrid<f64>> {
    let mut out = img.clone();
    fwht_2d_in_place(&mut out)?;
    Ok(out)
}
