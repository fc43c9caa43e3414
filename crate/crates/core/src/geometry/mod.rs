//! Cameras, depth maps, normal fields and their finite-difference calculus.
//!
//! Pixel pitch is 1. Image coordinates `(u, v)` are column/row offsets from
//! the principal point and the focal length is expressed in pixels, so a
//! perspective surface point is `z * (u / f, v / f, 1)`.

mod diff;
mod normals;
mod shapes;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PixelGrid;

pub use diff::{curl_residual, erode, gradient, partials, Partials};
pub use normals::{log_depth_gradient, normals_orthographic, normals_perspective, LogDepthGradient};
pub use shapes::{synth_depth, Bump, ShapeKind, ShapeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    Orthographic,
    Perspective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub projection: Projection,
    /// Focal length in pixels; ignored by orthographic cameras.
    pub focal: f64,
    /// Principal point as `[column, row]` pixel coordinates.
    pub principal_point: [f64; 2],
}

impl CameraModel {
    /// Perspective camera with the principal point at the image centre.
    pub fn perspective(focal: f64, rows: usize, cols: usize) -> Result<Self> {
        if !(focal > 0.0) || !focal.is_finite() {
            return Err(Error::BadParams(format!("focal length must be > 0, got {focal}")));
        }
        Ok(Self {
            projection: Projection::Perspective,
            focal,
            principal_point: centre(rows, cols),
        })
    }

    pub fn orthographic(rows: usize, cols: usize) -> Self {
        Self {
            projection: Projection::Orthographic,
            focal: 1.0,
            principal_point: centre(rows, cols),
        }
    }

    pub fn is_perspective(&self) -> bool {
        self.projection == Projection::Perspective
    }

    /// `(u, v)` offsets of a pixel from the principal point.
    pub fn offset(&self, row: usize, col: usize) -> (f64, f64) {
        (
            col as f64 - self.principal_point[0],
            row as f64 - self.principal_point[1],
        )
    }

    pub(crate) fn require_perspective(&self) -> Result<()> {
        if !self.is_perspective() {
            return Err(Error::WrongProjection {
                expected: "perspective",
            });
        }
        if !(self.focal > 0.0) {
            return Err(Error::BadParams(format!(
                "focal length must be > 0, got {}",
                self.focal
            )));
        }
        Ok(())
    }
}

fn centre(rows: usize, cols: usize) -> [f64; 2] {
    [(cols as f64 - 1.0) / 2.0, (rows as f64 - 1.0) / 2.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    grid: PixelGrid<f64>,
    camera: CameraModel,
}

impl DepthMap {
    pub fn new(grid: PixelGrid<f64>, camera: CameraModel) -> Result<Self> {
        let count = grid.masked_values().filter(|z| !(**z > 0.0) || !z.is_finite()).count();
        if count > 0 {
            return Err(Error::NonPositiveDepth { count });
        }
        if camera.is_perspective() {
            camera.require_perspective()?;
        }
        Ok(Self { grid, camera })
    }

    /// Full-mask depth map sampled from `z(u, v)` in principal-point coordinates.
    pub fn from_fn(rows: usize, cols: usize, camera: CameraModel, z: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let grid = PixelGrid::from_fn(rows, cols, |r, c| {
            let (u, v) = camera.offset(r, c);
            z(u, v)
        });
        Self::new(grid, camera)
    }

    pub fn grid(&self) -> &PixelGrid<f64> {
        &self.grid
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }
}

/// Unit normals pointing toward the camera (`n3 < 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField(PixelGrid<Vector3<f64>>);

impl NormalField {
    pub const UNIT_TOL: f64 = 1e-12;

    /// Validates unit norm and `n3 < 0` on every masked pixel.
    pub fn new(grid: PixelGrid<Vector3<f64>>) -> Result<Self> {
        for i in grid.masked_indices() {
            let n = grid.values()[i];
            if (n.norm() - 1.0).abs() > Self::UNIT_TOL {
                return Err(Error::BadParams(format!("normal at pixel {i} has norm {}", n.norm())));
            }
            if !(n.z < 0.0) {
                return Err(Error::BadParams(format!(
                    "normal at pixel {i} does not face the camera (n3 = {})",
                    n.z
                )));
            }
        }
        Ok(Self(grid))
    }

    /// Normalizes an estimated field without requiring every pixel to face the camera.
    pub fn from_estimate(grid: PixelGrid<Vector3<f64>>) -> Self {
        Self(grid.map(|n| {
            let norm = n.norm();
            if norm > 0.0 {
                n / norm
            } else {
                *n
            }
        }))
    }

    pub fn grid(&self) -> &PixelGrid<Vector3<f64>> {
        &self.0
    }

    pub fn into_grid(self) -> PixelGrid<Vector3<f64>> {
        self.0
    }
}

/// Angle between two vectors in degrees; stays accurate near 0 and 180.
pub fn angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    Forward,
    #[default]
    Central,
}

/// Per-pixel `(d/du, d/dv)`; `scheme` is `None` for fields that were not
/// produced by differencing (e.g. log-depth gradients recovered from normals).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub grid: PixelGrid<Vector2<f64>>,
    pub scheme: Option<Scheme>,
}
