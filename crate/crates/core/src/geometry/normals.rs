use nalgebra::{Vector2, Vector3};

use super::{gradient, CameraModel, DepthMap, GradientField, NormalField, Scheme};
use crate::error::{Error, Result};
use crate::grid::PixelGrid;

/// `(z_u, z_v, -1)` normalized, on the central-difference mask.
pub fn normals_orthographic(depth: &DepthMap) -> Result<NormalField> {
    if depth.camera().is_perspective() {
        return Err(Error::WrongProjection {
            expected: "orthographic",
        });
    }
    let g = gradient(depth.grid(), Scheme::Central)?;
    NormalField::new(g.grid.map(|d| Vector3::new(d.x, d.y, -1.0).normalize()))
}

/// Perspective normals `(f z_u, f z_v, -z - u z_u - v z_v)` normalized, facing the camera.
pub fn normals_perspective(depth: &DepthMap) -> Result<NormalField> {
    let cam = depth.camera();
    cam.require_perspective()?;
    let g = gradient(depth.grid(), Scheme::Central)?;
    let f = cam.focal;
    let z = depth.grid().values();
    let mut values = Vec::with_capacity(z.len());
    for (i, d) in g.grid.values().iter().enumerate() {
        let (r, c) = g.grid.coords(i);
        let (u, v) = cam.offset(r, c);
        values.push(perspective_normal(f, u, v, z[i], d.x, d.y));
    }
    NormalField::new(PixelGrid::new(
        g.grid.rows(),
        g.grid.cols(),
        g.grid.mask().to_vec(),
        values,
    )?)
}

pub(crate) fn perspective_normal(f: f64, u: f64, v: f64, z: f64, zu: f64, zv: f64) -> Vector3<f64> {
    let n = Vector3::new(f * zu, f * zv, -z - u * zu - v * zv);
    let norm = n.norm();
    if norm == 0.0 {
        return n;
    }
    if n.z > 0.0 {
        -n / norm
    } else {
        n / norm
    }
}

/// Log-depth gradient recovered from normals, with the pixels whose
/// denominator `f - u p - v q` vanished.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDepthGradient {
    pub field: GradientField,
    /// Row-major indices removed from the mask by the denominator guard.
    pub dropped: Vec<usize>,
}

/// `(p, q) / (f - u p - v q)` with `p = -n1/n3`, `q = -n2/n3`.
pub fn log_depth_gradient(n: &NormalField, camera: &CameraModel) -> Result<LogDepthGradient> {
    camera.require_perspective()?;
    let f = camera.focal;
    let eps = 1e-9 * f;
    let grid = n.grid();
    let mut mask = grid.mask().to_vec();
    let mut values = vec![Vector2::zeros(); mask.len()];
    let mut dropped = Vec::new();
    for i in grid.masked_indices() {
        let m = grid.values()[i];
        let (r, c) = grid.coords(i);
        let (u, v) = camera.offset(r, c);
        let p = -m.x / m.z;
        let q = -m.y / m.z;
        let den = f - u * p - v * q;
        if !(den.abs() >= eps) {
            mask[i] = false;
            dropped.push(i);
            continue;
        }
        values[i] = Vector2::new(p, q) / den;
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::SingularDenominator);
    }
    Ok(LogDepthGradient {
        field: GradientField {
            grid: PixelGrid::new(grid.rows(), grid.cols(), mask, values)?,
            scheme: None,
        },
        dropped,
    })
}
