//! Stacked per-pixel integrability vectors.
//!
//! Column layouts (minors `A^{i,j}_{k,l}` use rows `i < k`, columns `j < l`):
//!
//! | kind            | column | entry                          | minor                          |
//! |-----------------|--------|--------------------------------|--------------------------------|
//! | Orthographic11  | 0..=4  | `c^{ab}_v`, pairs 12 13 14 23 34 | `A^{2,a}_{4,b}`              |
//! |                 | 5..=9  | `-c^{ab}_u`, pairs 12 13 14 23 24 | `A^{3,a}_{4,b}`             |
//! |                 | 10     | `c^{34}_u`                     | `A^{2,2}_{4,4} - A^{3,3}_{4,4}` |
//! | Perspective18   | 0..=5  | `u c^{ab}_u + v c^{ab}_v`      | `A^{2,a}_{3,b}`                |
//! |                 | 6..=11 | `f c^{ab}_v`                   | `A^{2,a}_{4,b}`                |
//! |                 | 12..=17| `-f c^{ab}_u`                  | `A^{3,a}_{4,b}`                |
//! | Perspective17   |        | Perspective18 without column 3 | columns 10, 17 become `w - A^{2,2}_{3,3}` |
//!
//! Pairs `ab` run over `12 13 14 23 24 34` inside each perspective block.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use super::degeneracy::{detect_pattern, DegeneracyPattern};
use super::{CDerivedFields, PAIRS};
use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::lorentz::{minor2, Minor2Index};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixKind {
    Orthographic11,
    Perspective18,
    Perspective17,
}

impl MatrixKind {
    pub fn columns(self) -> usize {
        match self {
            MatrixKind::Orthographic11 => 11,
            MatrixKind::Perspective18 => 18,
            MatrixKind::Perspective17 => 17,
        }
    }

    /// Singular value used for the rank test (1-based): 17 is the second
    /// smallest of Perspective18, whose exact data has a one-dimensional null space.
    pub fn rank_index(self) -> usize {
        match self {
            MatrixKind::Orthographic11 => 11,
            MatrixKind::Perspective18 | MatrixKind::Perspective17 => 17,
        }
    }
}

const fn m(i: usize, k: usize, j: usize, l: usize) -> Minor2Index {
    Minor2Index::new(i, k, j, l)
}

/// Minors multiplying orthographic columns 0..=9; column 10 pairs with
/// `A^{2,2}_{4,4} - A^{3,3}_{4,4}`.
pub const ORTHO_MINORS: [Minor2Index; 10] = [
    m(2, 4, 1, 2),
    m(2, 4, 1, 3),
    m(2, 4, 1, 4),
    m(2, 4, 2, 3),
    m(2, 4, 3, 4),
    m(3, 4, 1, 2),
    m(3, 4, 1, 3),
    m(3, 4, 1, 4),
    m(3, 4, 2, 3),
    m(3, 4, 2, 4),
];

const fn persp_minors() -> [Minor2Index; 18] {
    let rows = [(2, 3), (2, 4), (3, 4)];
    let mut out = [m(1, 2, 1, 2); 18];
    let mut b = 0;
    while b < 3 {
        let mut p = 0;
        while p < 6 {
            out[b * 6 + p] = m(rows[b].0, rows[b].1, PAIRS[p].0, PAIRS[p].1);
            p += 1;
        }
        b += 1;
    }
    out
}

pub const PERSP_MINORS: [Minor2Index; 18] = persp_minors();

fn eval(a: &Matrix4<f64>, idx: Minor2Index) -> f64 {
    minor2(a, idx).expect("minor indices lie inside 4x4")
}

/// Minors of `A` in Orthographic11 column order.
pub fn ortho_minor_vector(a: &Matrix4<f64>) -> DVector<f64> {
    let mut w: Vec<f64> = ORTHO_MINORS.iter().map(|&i| eval(a, i)).collect();
    w.push(eval(a, m(2, 4, 2, 4)) - eval(a, m(3, 4, 3, 4)));
    DVector::from_vec(w)
}

/// Minors of `A` in Perspective18 column order.
pub fn persp_minor_vector(a: &Matrix4<f64>) -> DVector<f64> {
    DVector::from_iterator(18, PERSP_MINORS.iter().map(|&i| eval(a, i)))
}

/// Perspective17 unknowns: the 18 minors without column 3, with `A^{2,2}_{3,3}`
/// subtracted from the `A^{2,2}_{4,4}` and `A^{3,3}_{4,4}` entries.
pub fn persp17_minor_vector(a: &Matrix4<f64>) -> DVector<f64> {
    let w = persp_minor_vector(a);
    let mut out: Vec<f64> = (0..18).filter(|&c| c != 3).map(|c| w[c]).collect();
    out[9] -= w[3];
    out[16] -= w[3];
    DVector::from_vec(out)
}

/// One row per pixel of the derivative mask, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityMatrix {
    pub kind: MatrixKind,
    pub rows: DMatrix<f64>,
    /// Row-major grid index of the pixel behind each row.
    pub pixels: Vec<usize>,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Sufficient degeneracy condition met by the underlying field, if any.
    pub pattern: DegeneracyPattern,
}

impl IntegrabilityMatrix {
    fn assemble(
        kind: MatrixKind,
        cf: &CDerivedFields,
        row: impl Fn(usize, &[f64; 6], &[f64; 6]) -> Vec<f64>,
    ) -> Result<Self> {
        let pixels: Vec<usize> = cf.cu.masked_indices().collect();
        if pixels.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let ncols = kind.columns();
        let mut data = Vec::with_capacity(pixels.len() * ncols);
        for &i in &pixels {
            data.extend(row(i, &cf.cu.values()[i], &cf.cv.values()[i]));
        }
        Ok(Self {
            kind,
            rows: DMatrix::from_row_slice(pixels.len(), ncols, &data),
            pixels,
            grid_rows: cf.rows(),
            grid_cols: cf.cols(),
            pattern: detect_pattern(cf),
        })
    }

    /// Per-pixel products `row . w`.
    pub fn apply(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        if w.len() != self.rows.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.ncols(),
                found: w.len(),
            });
        }
        Ok(&self.rows * w)
    }

    pub fn column_labels(&self) -> Vec<String> {
        let label = |i: &Minor2Index| format!("A{}{}_{}{}", i.i, i.j, i.k, i.l);
        match self.kind {
            MatrixKind::Orthographic11 => {
                let mut l: Vec<String> = ORTHO_MINORS.iter().map(label).collect();
                l.push("A22_44-A33_44".into());
                l
            }
            MatrixKind::Perspective18 => PERSP_MINORS.iter().map(label).collect(),
            MatrixKind::Perspective17 => {
                let mut l: Vec<String> = PERSP_MINORS.iter().map(label).collect();
                l.remove(3);
                l[9] = "A22_44-A22_33".into();
                l[16] = "A33_44-A22_33".into();
                l
            }
        }
    }

    /// CSV with the pixel `row,col` followed by the coefficients, headed by the minor labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col");
        for l in self.column_labels() {
            out.push(',');
            out.push_str(&l);
        }
        out.push('\n');
        for (r, &p) in self.pixels.iter().enumerate() {
            write!(out, "{},{}", p / self.grid_cols, p % self.grid_cols).expect("writing to a String");
            for x in self.rows.row(r).iter() {
                write!(out, ",{x:?}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub fn build_ortho_matrix(cf: &CDerivedFields) -> Result<IntegrabilityMatrix> {
    IntegrabilityMatrix::assemble(MatrixKind::Orthographic11, cf, |_, cu, cv| {
        vec![
            cv[0], cv[1], cv[2], cv[3], cv[5], -cu[0], -cu[1], -cu[2], -cu[3], -cu[4], cu[5],
        ]
    })
}

pub fn build_persp_matrix(cf: &CDerivedFields, camera: &CameraModel) -> Result<IntegrabilityMatrix> {
    camera.require_perspective()?;
    let f = camera.focal;
    let cols = cf.cols();
    IntegrabilityMatrix::assemble(MatrixKind::Perspective18, cf, |i, cu, cv| {
        let (u, v) = camera.offset(i / cols, i % cols);
        let mut row = Vec::with_capacity(18);
        row.extend((0..6).map(|p| u * cu[p] + v * cv[p]));
        row.extend((0..6).map(|p| f * cv[p]));
        row.extend((0..6).map(|p| -f * cu[p]));
        row
    })
}

pub fn build_persp17_matrix(cf: &CDerivedFields, camera: &CameraModel) -> Result<IntegrabilityMatrix> {
    let full = build_persp_matrix(cf, camera)?;
    let keep: Vec<usize> = (0..18).filter(|&c| c != 3).collect();
    Ok(IntegrabilityMatrix {
        kind: MatrixKind::Perspective17,
        rows: full.rows.select_columns(&keep),
        ..full
    })
}
