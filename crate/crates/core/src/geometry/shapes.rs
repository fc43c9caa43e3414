//! Procedural test surfaces.
//!
//! Shapes are described by a relief `h(x, y)` over normalized image
//! coordinates `x = u / (N/2)`, `y = v / (N/2)` with `N = min(rows, cols)`, so
//! the same spec gives the same surface at every resolution. Heights are
//! relative to the lateral half-width of the visible patch: a relief slope of
//! 1 is a 45 degree surface under either projection.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::normals::perspective_normal;
use super::{CameraModel, DepthMap, NormalField};
use crate::error::{Error, Result};
use crate::grid::PixelGrid;

/// Depth and unit normal at one pixel.
type Sample = (f64, Vector3<f64>);

/// Depth of the principal-point pixel for perspective shapes.
const PERSPECTIVE_BASE: f64 = 1.0;
/// Base depth of orthographic shapes in units of the half-width.
const ORTHO_BASE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub sigma: f64,
    pub height: f64,
}

impl Bump {
    fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let s2 = self.sigma * self.sigma;
        let h = self.height * (-(dx * dx + dy * dy) / (2.0 * s2)).exp();
        (h, -h * dx / s2, -h * dy / s2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ShapeSpec {
    Plane,
    GaussianBump {
        center: [f64; 2],
        sigma: f64,
        height: f64,
    },
    /// Near side of a sphere of radius `radius` half-widths touching the base depth.
    SphereCap {
        radius: f64,
    },
    MultiBump {
        bumps: Vec<Bump>,
    },
    /// Ridge `h(y)`: normals do not vary along `u`.
    CylinderU {
        sigma: f64,
        height: f64,
    },
    /// Ridge `h(x)`: normals do not vary along `v`.
    CylinderV {
        sigma: f64,
        height: f64,
    },
    /// Ridge along a diagonal, `h((x + y)/√2)` or `h((x - y)/√2)` when `anti`.
    RidgeDiag {
        sigma: f64,
        height: f64,
        anti: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeKind {
    Plane,
    GaussianBump,
    SphereCap,
    MultiBump,
    CylinderU,
    CylinderV,
    RidgeDiag,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 7] = [
        ShapeKind::Plane,
        ShapeKind::GaussianBump,
        ShapeKind::SphereCap,
        ShapeKind::MultiBump,
        ShapeKind::CylinderU,
        ShapeKind::CylinderV,
        ShapeKind::RidgeDiag,
    ];

    pub fn default_spec(self) -> ShapeSpec {
        match self {
            ShapeKind::Plane => ShapeSpec::Plane,
            ShapeKind::GaussianBump => ShapeSpec::GaussianBump {
                center: [0.12, -0.08],
                sigma: 0.3,
                height: 0.3,
            },
            ShapeKind::SphereCap => ShapeSpec::SphereCap { radius: 2.0 },
            ShapeKind::MultiBump => ShapeSpec::default_multibump(),
            ShapeKind::CylinderU => ShapeSpec::CylinderU {
                sigma: 0.35,
                height: 0.3,
            },
            ShapeKind::CylinderV => ShapeSpec::CylinderV {
                sigma: 0.35,
                height: 0.3,
            },
            ShapeKind::RidgeDiag => ShapeSpec::RidgeDiag {
                sigma: 0.35,
                height: 0.3,
                anti: false,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Plane => "Plane",
            ShapeKind::GaussianBump => "GaussianBump",
            ShapeKind::SphereCap => "SphereCap",
            ShapeKind::MultiBump => "MultiBump",
            ShapeKind::CylinderU => "CylinderU",
            ShapeKind::CylinderV => "CylinderV",
            ShapeKind::RidgeDiag => "RidgeDiag",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadParams(format!("unknown shape kind {s:?}")))
    }
}

impl ShapeSpec {
    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeSpec::Plane => ShapeKind::Plane,
            ShapeSpec::GaussianBump { .. } => ShapeKind::GaussianBump,
            ShapeSpec::SphereCap { .. } => ShapeKind::SphereCap,
            ShapeSpec::MultiBump { .. } => ShapeKind::MultiBump,
            ShapeSpec::CylinderU { .. } => ShapeKind::CylinderU,
            ShapeSpec::CylinderV { .. } => ShapeKind::CylinderV,
            ShapeSpec::RidgeDiag { .. } => ShapeKind::RidgeDiag,
        }
    }

    fn default_multibump() -> ShapeSpec {
        let b = |cx, cy, sigma, height| Bump {
            center: [cx, cy],
            sigma,
            height,
        };
        ShapeSpec::MultiBump {
            bumps: vec![
                b(-0.35, -0.3, 0.25, 0.3),
                b(0.4, -0.25, 0.2, -0.2),
                b(-0.2, 0.4, 0.28, 0.25),
                b(0.35, 0.35, 0.22, 0.2),
            ],
        }
    }

    /// `count` bumps with seeded random centres, widths and signed heights.
    pub fn random_multibump(count: usize, seed: u64) -> ShapeSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| {
                let sign = if rng.random_bool(0.7) { 1.0 } else { -1.0 };
                Bump {
                    center: [rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)],
                    sigma: rng.random_range(0.18..0.32),
                    height: sign * rng.random_range(0.15..0.3),
                }
            })
            .collect();
        ShapeSpec::MultiBump { bumps }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::BadParams(format!("{}: {what}", self.kind())));
        let ok_sigma = |s: f64| s > 0.0 && s.is_finite();
        match self {
            ShapeSpec::Plane => Ok(()),
            ShapeSpec::SphereCap { radius } => {
                if *radius >= 1.0 && radius.is_finite() {
                    Ok(())
                } else {
                    bad("radius must be at least 1 half-width")
                }
            }
            ShapeSpec::GaussianBump { sigma, height, center } => {
                if !ok_sigma(*sigma) {
                    bad("sigma must be positive")
                } else if !height.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    bad("non-finite parameter")
                } else {
                    Ok(())
                }
            }
            ShapeSpec::MultiBump { bumps } => {
                if bumps.is_empty() {
                    bad("needs at least one bump")
                } else if bumps.iter().any(|b| !ok_sigma(b.sigma) || !b.height.is_finite()) {
                    bad("bump sigma must be positive and heights finite")
                } else {
                    Ok(())
                }
            }
            ShapeSpec::CylinderU { sigma, height }
            | ShapeSpec::CylinderV { sigma, height }
            | ShapeSpec::RidgeDiag { sigma, height, .. } => {
                if ok_sigma(*sigma) && height.is_finite() {
                    Ok(())
                } else {
                    bad("sigma must be positive and height finite")
                }
            }
        }
    }

    /// Relief and its normalized-coordinate gradient; `None` for the sphere.
    fn relief(&self, x: f64, y: f64) -> Option<(f64, f64, f64)> {
        let ridge = |t: f64, sigma: f64, height: f64| {
            let h = height * (-(t * t) / (2.0 * sigma * sigma)).exp();
            (h, -h * t / (sigma * sigma))
        };
        Some(match self {
            ShapeSpec::Plane => (0.0, 0.0, 0.0),
            ShapeSpec::SphereCap { .. } => return None,
            ShapeSpec::GaussianBump { center, sigma, height } => Bump {
                center: *center,
                sigma: *sigma,
                height: *height,
            }
            .eval(x, y),
            ShapeSpec::MultiBump { bumps } => bumps.iter().fold((0.0, 0.0, 0.0), |acc, b| {
                let (h, hx, hy) = b.eval(x, y);
                (acc.0 + h, acc.1 + hx, acc.2 + hy)
            }),
            ShapeSpec::CylinderU { sigma, height } => {
                let (h, dh) = ridge(y, *sigma, *height);
                (h, 0.0, dh)
            }
            ShapeSpec::CylinderV { sigma, height } => {
                let (h, dh) = ridge(x, *sigma, *height);
                (h, dh, 0.0)
            }
            ShapeSpec::RidgeDiag { sigma, height, anti } => {
                let sy = if *anti { -1.0 } else { 1.0 };
                let (h, dh) = ridge((x + sy * y) / 2f64.sqrt(), *sigma, *height);
                (h, dh / 2f64.sqrt(), sy * dh / 2f64.sqrt())
            }
        })
    }

    /// Depth, analytic normal and mask membership at pixel offset `(u, v)`.
    fn sample(&self, u: f64, v: f64, half: f64, camera: &CameraModel) -> Option<(f64, Vector3<f64>)> {
        let (x, y) = (u / half, v / half);
        if camera.is_perspective() {
            let f = camera.focal;
            let w = PERSPECTIVE_BASE * half / f;
            if let ShapeSpec::SphereCap { radius } = self {
                let r = radius * w;
                let d = Vector3::new(u / f, v / f, 1.0);
                let centre = Vector3::new(0.0, 0.0, PERSPECTIVE_BASE + r);
                let a = d.norm_squared();
                let b = d.dot(&centre);
                let disc = b * b - a * (centre.norm_squared() - r * r);
                if disc <= 0.0 {
                    return None;
                }
                let z = (b - disc.sqrt()) / a;
                let n = (z * d - centre) / r;
                return Some((z, n.normalize()));
            }
            let (h, hx, hy) = self.relief(x, y)?;
            let z = PERSPECTIVE_BASE - w * h;
            // d/du = (1/half) d/dx
            let (zu, zv) = (-w * hx / half, -w * hy / half);
            Some((z, perspective_normal(f, u, v, z, zu, zv)))
        } else {
            if let ShapeSpec::SphereCap { radius } = self {
                let r = radius * half;
                let s = r * r - u * u - v * v;
                if s <= 0.0 {
                    return None;
                }
                let z = ORTHO_BASE * half + r - s.sqrt();
                return Some((z, Vector3::new(u, v, -s.sqrt()) / r));
            }
            let (h, hx, hy) = self.relief(x, y)?;
            let z = half * (ORTHO_BASE - h);
            Some((z, Vector3::new(-hx, -hy, -1.0).normalize()))
        }
    }

    fn sample_grid(&self, rows: usize, cols: usize, camera: &CameraModel) -> Result<PixelGrid<Option<Sample>>> {
        self.validate()?;
        if rows < 3 || cols < 3 {
            return Err(Error::BadParams(format!("grid {rows}x{cols} is smaller than 3x3")));
        }
        if camera.is_perspective() {
            camera.require_perspective()?;
        }
        let half = rows.min(cols) as f64 / 2.0;
        Ok(PixelGrid::from_fn(rows, cols, |r, c| {
            let (u, v) = camera.offset(r, c);
            self.sample(u, v, half, camera)
        }))
    }

    /// Closed-form unit normals on the shape's own mask.
    pub fn normals(&self, rows: usize, cols: usize, camera: &CameraModel) -> Result<NormalField> {
        let g = self.sample_grid(rows, cols, camera)?;
        let mask = g.values().iter().map(Option::is_some).collect();
        let values = g
            .values()
            .iter()
            .map(|s| s.map_or(Vector3::new(0.0, 0.0, -1.0), |s| s.1))
            .collect();
        NormalField::new(PixelGrid::new(rows, cols, mask, values)?)
    }
}

/// Samples the depth of `spec` on a `rows x cols` grid seen through `camera`.
pub fn synth_depth(spec: &ShapeSpec, rows: usize, cols: usize, camera: &CameraModel) -> Result<DepthMap> {
    let g = spec.sample_grid(rows, cols, camera)?;
    let mask: Vec<bool> = g.values().iter().map(Option::is_some).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyDomain);
    }
    let values = g.values().iter().map(|s| s.map_or(1.0, |s| s.0)).collect();
    DepthMap::new(PixelGrid::new(rows, cols, mask, values)?, *camera)
}
