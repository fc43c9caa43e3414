//! Masked pixel grids.
//!
//! Every per-pixel quantity in the crate lives on a [`PixelGrid`]: a row-major
//! `rows x cols` array plus a boolean mask marking the reconstruction domain.
//! Pixels are enumerated in row-major order over the mask; this order is the
//! column order of every image or surface matrix.

use nalgebra::{Vector2, Vector3, Vector4};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid<T> {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    values: Vec<T>,
}

impl<T> PixelGrid<T> {
    pub fn new(rows: usize, cols: usize, mask: Vec<bool>, values: Vec<T>) -> Result<Self> {
        let n = rows * cols;
        if mask.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mask.len(),
            });
        }
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            mask,
            values,
        })
    }

    /// Full-mask grid whose values come from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self {
            rows,
            cols,
            mask: vec![true; rows * cols],
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && self.mask[self.index(row, col)]
    }

    /// Value at `(row, col)` regardless of the mask.
    pub fn at(&self, row: usize, col: usize) -> &T {
        &self.values[self.index(row, col)]
    }

    /// Value at `(row, col)` if the pixel belongs to the domain.
    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        self.is_masked(row, col).then(|| self.at(row, col))
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let i = self.index(row, col);
        self.values[i] = value;
    }

    /// Flat indices of masked pixels, row-major.
    pub fn masked_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn masked_values(&self) -> impl Iterator<Item = &T> + '_ {
        self.masked_indices().map(move |i| &self.values[i])
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn same_shape<U>(&self, other: &PixelGrid<U>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn same_mask<U>(&self, other: &PixelGrid<U>) -> bool {
        self.same_shape(other) && self.mask == other.mask
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PixelGrid<U> {
        PixelGrid {
            rows: self.rows,
            cols: self.cols,
            mask: self.mask.clone(),
            values: self.values.iter().map(&mut f).collect(),
        }
    }

    /// Replaces the mask, keeping values.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mask.len(),
                found: mask.len(),
            });
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn into_parts(self) -> (usize, usize, Vec<bool>, Vec<T>) {
        (self.rows, self.cols, self.mask, self.values)
    }
}

impl<T: Clone> PixelGrid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            mask: vec![true; rows * cols],
            values: vec![value; rows * cols],
        }
    }

    /// Grid on `mask` whose masked pixels take `masked` in enumeration order; the rest get `fill`.
    pub fn scatter(
        rows: usize,
        cols: usize,
        mask: &[bool],
        masked: impl IntoIterator<Item = T>,
        fill: T,
    ) -> Result<Self> {
        let mut values = vec![fill; rows * cols];
        let mut it = masked.into_iter();
        let mut count = 0;
        for (i, &m) in mask.iter().enumerate() {
            if m {
                values[i] = it.next().ok_or(Error::DimensionMismatch {
                    expected: mask.iter().filter(|&&m| m).count(),
                    found: count,
                })?;
                count += 1;
            }
        }
        if it.next().is_some() {
            return Err(Error::DimensionMismatch {
                expected: count,
                found: count + 1,
            });
        }
        Self::new(rows, cols, mask.to_vec(), values)
    }
}

/// Per-pixel value with a fixed number of real channels, for PSG persistence.
pub trait Channels: Sized + Copy {
    const COUNT: usize;
    fn write_channels(&self, out: &mut Vec<f64>);
    fn read_channels(data: &[f64]) -> Self;
    fn zero() -> Self;
}

impl Channels for f64 {
    const COUNT: usize = 1;
    fn write_channels(&self, out: &mut Vec<f64>) {
        out.push(*self);
    }
    fn read_channels(data: &[f64]) -> Self {
        data[0]
    }
    fn zero() -> Self {
        0.0
    }
}

macro_rules! impl_channels_vector {
    ($ty:ty, $n:expr) => {
        impl Channels for $ty {
            const COUNT: usize = $n;
            fn write_channels(&self, out: &mut Vec<f64>) {
                out.extend(self.iter().copied());
            }
            fn read_channels(data: &[f64]) -> Self {
                <$ty>::from_column_slice(&data[..$n])
            }
            fn zero() -> Self {
                <$ty>::zeros()
            }
        }
    };
}

impl_channels_vector!(Vector2<f64>, 2);
impl_channels_vector!(Vector3<f64>, 3);
impl_channels_vector!(Vector4<f64>, 4);
