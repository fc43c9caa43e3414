use nalgebra::{Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::DatasetSpec;
use super::report::{fmt_f64, Tabular};
use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::integrability::{
    build_ortho_matrix, c_fields, degeneracy_report, ortho_residual, DEFAULT_DEGENERACY_THRESHOLD,
};
use crate::lorentz::{random_rotation, ScaledLorentz};
use crate::shading::{build_mfield, synth_albedo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// `alpha I`
    Scale,
    /// `alpha diag(1, -1, -1, 1)`
    Twin,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformResidual {
    pub kind: TransformKind,
    pub scale: f64,
    pub speed: f64,
    /// Row-major.
    pub matrix: [f64; 16],
    /// Largest orthographic residual of the transformed field divided by `scale^2`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub rows: Vec<TransformResidual>,
    /// Residual of the genuine field.
    pub floor: f64,
    pub max_ambiguous: f64,
    pub min_generic: f64,
    /// `max_ambiguous < 0.01 min_generic`.
    pub separated: bool,
}

/// Residual ratio required between generic transforms and the concave/convex pair.
pub const SEPARATION: f64 = 0.01;

/// Lowest boost speed of the generic samples.
pub const MIN_GENERIC_SPEED: f64 = 0.2;
pub const MAX_GENERIC_SPEED: f64 = 0.9;

/// Transforms the genuine orthographic field of `spec` by `alpha I`,
/// `alpha diag(1, -1, -1, 1)` and `n_generic` sampled scaled Lorentz
/// matrices, recording the integrability residual of each.
pub fn run_theorem2_experiment(spec: &DatasetSpec, n_generic: usize, seed: u64) -> Result<Theorem2Report> {
    spec.shape.validate()?;
    let camera = CameraModel::orthographic(spec.rows, spec.cols);
    let normals = spec.shape.normals(spec.rows, spec.cols, &camera)?;
    let albedo = synth_albedo(spec.albedo, spec.rows, spec.cols, spec.albedo_seed).restrict(normals.grid().mask())?;
    let m = build_mfield(&albedo, &normals)?;
    let report = degeneracy_report(&build_ortho_matrix(&c_fields(m.grid())?)?, DEFAULT_DEGENERACY_THRESHOLD)?;
    if report.degenerate {
        return Err(Error::DegenerateSurface {
            ratio: report.condition_ratio,
        });
    }
    let floor = ortho_residual(m.grid())?.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_generic + 2);
    let alpha = rng.random_range(0.5..2.0);
    samples.push((TransformKind::Scale, alpha, 0.0, Matrix4::identity() * alpha));
    let alpha = rng.random_range(0.5..2.0);
    samples.push((
        TransformKind::Twin,
        alpha,
        0.0,
        Matrix4::from_diagonal(&[1.0, -1.0, -1.0, 1.0].into()) * alpha,
    ));
    for _ in 0..n_generic {
        let s = rng.random_range(0.5..2.0);
        let dir = Vector3::<f64>::from_fn(|_, _| rng.sample(StandardNormal)).normalize();
        let speed = rng.random_range(MIN_GENERIC_SPEED..MAX_GENERIC_SPEED);
        let o = random_rotation(&mut rng);
        let a = ScaledLorentz::new(s, dir * speed, o, rng.random_bool(0.5), rng.random_bool(0.5))?;
        samples.push((TransformKind::Generic, s, speed, a.realize()));
    }
    let rows = samples
        .into_iter()
        .map(|(kind, scale, speed, a)| {
            let moved = m.grid().map(|c| a * c);
            let residual = ortho_residual(&moved)?.max_abs() / (scale * scale);
            let mut matrix = [0.0; 16];
            matrix.copy_from_slice(a.transpose().as_slice());
            Ok(TransformResidual {
                kind,
                scale,
                speed,
                matrix,
                residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ambiguous = rows
        .iter()
        .filter(|r| r.kind != TransformKind::Generic)
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    let min_generic = rows
        .iter()
        .filter(|r| r.kind == TransformKind::Generic)
        .map(|r| r.residual)
        .fold(f64::INFINITY, f64::min);
    Ok(Theorem2Report {
        separated: max_ambiguous < SEPARATION * min_generic,
        rows,
        floor,
        max_ambiguous,
        min_generic,
    })
}

impl Tabular for Theorem2Report {
    fn csv_header(&self) -> &'static str {
        "kind,scale,speed,residual"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let kind = match r.kind {
                    TransformKind::Scale => "scale",
                    TransformKind::Twin => "twin",
                    TransformKind::Generic => "generic",
                };
                format!("{kind},{},{},{:e}", fmt_f64(r.scale), fmt_f64(r.speed), r.residual)
            })
            .collect()
    }
}
