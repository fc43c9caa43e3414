use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{synthesize, DatasetSpec};
use super::eval::solve_and_evaluate;
use super::report::{fmt_f64, Tabular};
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, NormalField, ShapeKind, ShapeSpec};
use crate::shading::{add_gaussian_noise, AlbedoKind, ImageStack};

/// Median MAE above which a noise level counts as breakdown.
pub const BREAKDOWN_DEG: f64 = 30.0;

pub const THREADS_ENV: &str = "UPS_THREADS";

/// Pool for sweep cells, capped by `UPS_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::BadParams(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::BadParams(e.to_string()))
}

/// Short status tag for a failed solve.
pub fn failure_tag(e: &Error) -> &'static str {
    match e.root() {
        Error::DegenerateSurface { .. } => "degenerate",
        Error::BadSignature { .. } => "signature",
        Error::RankDeficientImages { .. } => "rank",
        _ => "error",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCell {
    pub sigma_pct: f64,
    pub seed: u64,
    /// `None` when the solve failed.
    pub mae_deg: Option<f64>,
    pub status: String,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub sigma_pct: f64,
    /// Median over seeds with failed solves counted as infinite; `None` when that median is infinite.
    pub median_mae_deg: Option<f64>,
    pub failures: usize,
}

impl NoiseLevel {
    pub fn median(&self) -> f64 {
        self.median_mae_deg.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub cells: Vec<NoiseCell>,
    pub levels: Vec<NoiseLevel>,
    pub breakdown_threshold_deg: f64,
    /// First noise level whose median exceeds the threshold.
    pub breakdown_sigma_pct: Option<f64>,
}

impl NoiseSweep {
    /// Whether the medians never decrease along the sweep.
    pub fn is_monotone(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].median() >= w[0].median())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Adds noise at each `(sigma, seed)` to `clean`, solves and scores every cell.
pub fn run_noise_sweep(
    clean: &ImageStack,
    camera: &CameraModel,
    gt: &NormalField,
    sigmas: &[f64],
    seeds: &[u64],
) -> Result<NoiseSweep> {
    if sigmas.is_empty() || seeds.is_empty() {
        return Err(Error::BadParams(
            "noise sweep needs at least one sigma and one seed".into(),
        ));
    }
    let jobs: Vec<(f64, u64)> = sigmas
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&k| (s, k)))
        .collect();
    let cells: Vec<NoiseCell> = thread_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(sigma_pct, seed)| {
                let outcome =
                    add_gaussian_noise(clean, sigma_pct, seed).and_then(|i| solve_and_evaluate(&i, camera, gt));
                match outcome {
                    Ok(e) => NoiseCell {
                        sigma_pct,
                        seed,
                        mae_deg: Some(e.mae_degrees),
                        status: "ok".into(),
                        message: None,
                    },
                    Err(e) => NoiseCell {
                        sigma_pct,
                        seed,
                        mae_deg: None,
                        status: failure_tag(&e).into(),
                        message: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    // bad parameters are a caller error, not a breakdown
    if let Some(msg) = cells
        .iter()
        .filter_map(|c| c.message.as_ref())
        .find(|m| m.starts_with("bad parameters"))
    {
        return Err(Error::BadParams(msg.clone()));
    }
    let levels: Vec<NoiseLevel> = cells
        .chunks(seeds.len())
        .map(|chunk| {
            let mut maes: Vec<f64> = chunk.iter().map(|c| c.mae_deg.unwrap_or(f64::INFINITY)).collect();
            let m = median(&mut maes);
            NoiseLevel {
                sigma_pct: chunk[0].sigma_pct,
                median_mae_deg: m.is_finite().then_some(m),
                failures: chunk.iter().filter(|c| c.mae_deg.is_none()).count(),
            }
        })
        .collect();
    let breakdown_sigma_pct = levels.iter().find(|l| l.median() > BREAKDOWN_DEG).map(|l| l.sigma_pct);
    Ok(NoiseSweep {
        cells,
        levels,
        breakdown_threshold_deg: BREAKDOWN_DEG,
        breakdown_sigma_pct,
    })
}

impl Tabular for NoiseSweep {
    fn csv_header(&self) -> &'static str {
        "sigma_pct,seed,mae_deg,status"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|c| {
                format!(
                    "{},{},{},{}",
                    fmt_f64(c.sigma_pct),
                    c.seed,
                    fmt_opt(c.mae_deg),
                    c.status
                )
            })
            .collect()
    }

    fn gnuplot(&self) -> Option<String> {
        let mut out = String::from("# sigma_pct median_mae_deg failures\n");
        for l in &self.levels {
            out += &format!(
                "{} {} {}\n",
                fmt_f64(l.sigma_pct),
                fmt_opt(l.median_mae_deg),
                l.failures
            );
        }
        Some(out)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "inf".to_string(), fmt_f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub shape: String,
    pub albedo: AlbedoKind,
    pub mae_deg: Option<f64>,
    pub status: String,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSweep {
    pub rows: Vec<TableRow>,
}

/// Shapes of the shape/albedo table: three fixed surfaces and one seeded random one.
pub fn table_shapes(seed: u64) -> Vec<(String, ShapeSpec)> {
    vec![
        ("GaussianBump".into(), ShapeKind::GaussianBump.default_spec()),
        ("SphereCap".into(), ShapeKind::SphereCap.default_spec()),
        ("MultiBump".into(), ShapeKind::MultiBump.default_spec()),
        (format!("RandomBumps{seed}"), ShapeSpec::random_multibump(5, seed)),
    ]
}

/// Solves `base` once per (shape, albedo) pair; noise settings of `base` apply to every cell.
pub fn run_table_sweep(
    base: &DatasetSpec,
    shapes: &[(String, ShapeSpec)],
    albedos: &[AlbedoKind],
) -> Result<TableSweep> {
    let jobs: Vec<(&String, &ShapeSpec, AlbedoKind)> = shapes
        .iter()
        .flat_map(|(name, s)| albedos.iter().map(move |&a| (name, s, a)))
        .collect();
    let rows = thread_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(name, shape, albedo)| {
                let spec = DatasetSpec {
                    shape: shape.clone(),
                    albedo,
                    ..base.clone()
                };
                let outcome = synthesize(&spec).and_then(|s| solve_and_evaluate(&s.images, &s.camera, &s.normals));
                let (mae_deg, status, message) = match outcome {
                    Ok(e) => (Some(e.mae_degrees), "ok".to_string(), None),
                    Err(e) => (None, failure_tag(&e).to_string(), Some(e.to_string())),
                };
                TableRow {
                    shape: name.clone(),
                    albedo,
                    mae_deg,
                    status,
                    message,
                }
            })
            .collect()
    });
    Ok(TableSweep { rows })
}

impl Tabular for TableSweep {
    fn csv_header(&self) -> &'static str {
        "shape,albedo,mae_deg,status"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{},{},{}", r.shape, r.albedo, fmt_opt(r.mae_deg), r.status))
            .collect()
    }
}
