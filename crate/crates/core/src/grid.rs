//! Square, row-major 2D storage shared by patterns, scenes and images.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

/// A `side x side` array stored row-major. Index `(x, y)` is row `x`, column `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareGrid<T> {
    side: usize,
    data: Vec<T>,
}

impl<T: Clone> SquareGrid<T> {
    pub fn filled(side: usize, value: T) -> Self {
        Self {
            side,
            data: vec![value; side * side],
        }
    }
}

impl<T> SquareGrid<T> {
    /// Wraps row-major data, which must hold `side * side` values.
    pub fn from_vec(side: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::SizeMismatch {
                expected: side * side,
                actual: data.len(),
            });
        }
        Ok(Self { side, data })
    }

    /// Wraps row-major data of any square length.
    pub fn from_square_vec(data: Vec<T>) -> Result<Self> {
        let side = isqrt(data.len());
        if side * side != data.len() {
            return Err(Error::NotSquare { len: data.len() });
        }
        Ok(Self { side, data })
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(side * side);
        for x in 0..side {
            for y in 0..side {
                data.push(f(x, y));
            }
        }
        Self { side, data }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.data[x * self.side..(x + 1) * self.side]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> SquareGrid<U> {
        SquareGrid {
            side: self.side,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// log2 of the side, if the side is a power of two.
    pub fn side_log2(&self) -> Option<u32> {
        if self.side.is_power_of_two() {
            Some(self.side.trailing_zeros())
        } else {
            None
        }
    }
}

impl<T: Copy> SquareGrid<T> {
    /// Copies the `side x side` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, side: usize) -> Result<SquareGrid<T>> {
        if x0 + side > self.side || y0 + side > self.side {
            return Err(Error::SizeMismatch {
                expected: self.side,
                actual: x0.max(y0) + side,
            });
        }
        Ok(SquareGrid::from_fn(side, |x, y| self[(x0 + x, y0 + y)]))
    }
}

impl<T> Index<(usize, usize)> for SquareGrid<T> {
    type Output = T;

    #[inline]
    fn index(&self, (x, y): (usize, usize)) -> &T {
        debug_assert!(x < self.side && y < self.side);
        &self.data[x * self.side + y]
    }
}

impl<T> IndexMut<(usize, usize)> for SquareGrid<T> {
    #[inline]
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut T {
        debug_assert!(x < self.side && y < self.side);
        &mut self.data[x * self.side + y]
    }
}

fn isqrt(n: usize) -> usize {
    if n < 2 {
        return n;
    }
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}
