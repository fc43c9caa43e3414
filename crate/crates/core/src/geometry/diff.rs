use std::ops::{Mul, Sub};

use nalgebra::Vector2;

use super::{GradientField, Scheme};
use crate::error::{Error, Result};
use crate::grid::PixelGrid;

/// First partial derivatives of a grid on the eroded mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials<T> {
    pub du: PixelGrid<T>,
    pub dv: PixelGrid<T>,
}

impl<T> Partials<T> {
    pub fn mask(&self) -> &[bool] {
        self.du.mask()
    }
}

fn stencil_mask<T>(g: &PixelGrid<T>, scheme: Scheme) -> Vec<bool> {
    let (rows, cols) = (g.rows(), g.cols());
    let mut out = vec![false; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if !g.is_masked(r, c) {
                continue;
            }
            out[r * cols + c] = match scheme {
                Scheme::Central => {
                    r > 0
                        && c > 0
                        && g.is_masked(r - 1, c)
                        && g.is_masked(r + 1, c)
                        && g.is_masked(r, c - 1)
                        && g.is_masked(r, c + 1)
                }
                Scheme::Forward => g.is_masked(r + 1, c) && g.is_masked(r, c + 1),
            };
        }
    }
    out
}

/// Mask of pixels whose four neighbours are all in `mask` (central stencil radius 1).
pub fn erode(mask: &[bool], rows: usize, cols: usize) -> Vec<bool> {
    let g = PixelGrid::new(rows, cols, mask.to_vec(), vec![(); rows * cols]).expect("mask length matches dimensions");
    stencil_mask(&g, Scheme::Central)
}

/// Finite-difference partials of any per-pixel quantity closed under subtraction and scaling.
///
/// Pixels lacking a full stencil are dropped from the output mask.
pub fn partials<T>(g: &PixelGrid<T>, scheme: Scheme) -> Result<Partials<T>>
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
{
    if g.rows() < 3 || g.cols() < 3 {
        return Err(Error::BadParams(format!(
            "derivatives need at least a 3x3 grid, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let mask = stencil_mask(g, scheme);
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyDomain);
    }
    let cols = g.cols();
    let vals = g.values();
    let mut du = vals.to_vec();
    let mut dv = vals.to_vec();
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        match scheme {
            Scheme::Central => {
                du[i] = (vals[i + 1] - vals[i - 1]) * 0.5;
                dv[i] = (vals[i + cols] - vals[i - cols]) * 0.5;
            }
            Scheme::Forward => {
                du[i] = vals[i + 1] - vals[i];
                dv[i] = vals[i + cols] - vals[i];
            }
        }
    }
    Ok(Partials {
        du: PixelGrid::new(g.rows(), cols, mask.clone(), du)?,
        dv: PixelGrid::new(g.rows(), cols, mask, dv)?,
    })
}

pub fn gradient(g: &PixelGrid<f64>, scheme: Scheme) -> Result<GradientField> {
    let p = partials(g, scheme)?;
    let values =
        p.du.values()
            .iter()
            .zip(p.dv.values())
            .map(|(&a, &b)| Vector2::new(a, b))
            .collect();
    Ok(GradientField {
        grid: PixelGrid::new(g.rows(), g.cols(), p.du.mask().to_vec(), values)?,
        scheme: Some(scheme),
    })
}

/// Discrete curl `d(p)/dv - d(q)/du` of a gradient candidate `(p, q)`.
pub fn curl_residual(gf: &GradientField) -> Result<PixelGrid<f64>> {
    let scheme = gf.scheme.unwrap_or_default();
    let p = partials(&gf.grid.map(|g| g.x), scheme)?;
    let q = partials(&gf.grid.map(|g| g.y), scheme)?;
    let values = p.dv.values().iter().zip(q.du.values()).map(|(a, b)| a - b).collect();
    PixelGrid::new(gf.grid.rows(), gf.grid.cols(), p.mask().to_vec(), values)
}
