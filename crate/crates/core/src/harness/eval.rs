use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{angle_deg, CameraModel, NormalField};
use crate::grid::PixelGrid;
use crate::shading::ImageStack;
use crate::solver::{solve_ups_perspective, Diagnostics};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mae_degrees: f64,
    /// Per-pixel angle in degrees on the shared mask.
    pub error_grid: PixelGrid<f64>,
    pub diagnostics: Option<Diagnostics>,
    /// Wall time of the solve; never written to deterministic reports.
    pub runtime_ms: f64,
}

/// Mean angle between `n_est` and `n_gt` over pixels inside `mask` and both fields' masks.
pub fn mean_angular_error(n_est: &NormalField, n_gt: &NormalField, mask: &[bool]) -> Result<EvalResult> {
    let (a, b) = (n_est.grid(), n_gt.grid());
    if !a.same_shape(b) || mask.len() != a.mask().len() {
        return Err(Error::DimensionMismatch {
            expected: b.rows() * b.cols(),
            found: a.rows() * a.cols(),
        });
    }
    let shared: Vec<bool> = (0..mask.len()).map(|i| mask[i] && a.mask()[i] && b.mask()[i]).collect();
    let values: Vec<f64> = (0..mask.len())
        .map(|i| {
            if shared[i] {
                angle_deg(&a.values()[i], &b.values()[i])
            } else {
                0.0
            }
        })
        .collect();
    let count = shared.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptyDomain);
    }
    let mae_degrees = values
        .iter()
        .zip(&shared)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v)
        .sum::<f64>()
        / count as f64;
    Ok(EvalResult {
        mae_degrees,
        error_grid: PixelGrid::new(a.rows(), a.cols(), shared, values)?,
        diagnostics: None,
        runtime_ms: 0.0,
    })
}

/// Solves `images` and scores the result against `n_gt`.
pub fn solve_and_evaluate(images: &ImageStack, camera: &CameraModel, n_gt: &NormalField) -> Result<EvalResult> {
    let start = Instant::now();
    let report = solve_ups_perspective(images, camera)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut eval = mean_angular_error(&report.normals, n_gt, images.mask())?;
    eval.diagnostics = Some(report.diagnostics);
    eval.runtime_ms = runtime_ms;
    Ok(eval)
}

/// `n` with `n1, n2` negated: the concave/convex twin.
pub fn ortho_twin(n: &NormalField) -> NormalField {
    NormalField::from_estimate(n.grid().map(|v| nalgebra::Vector3::new(-v.x, -v.y, v.z)))
}

/// Whichever of `n_est` and its twin is closer to `n_gt`.
pub fn resolve_ortho_twin(n_est: &NormalField, n_gt: &NormalField) -> NormalField {
    let twin = ortho_twin(n_est);
    let score = |n: &NormalField| mean_angular_error(n, n_gt, n.grid().mask()).map_or(f64::INFINITY, |e| e.mae_degrees);
    if score(&twin) < score(n_est) {
        twin
    } else {
        n_est.clone()
    }
}
