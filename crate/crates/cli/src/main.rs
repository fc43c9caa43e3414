//! `ups`: synthetic datasets, reconstruction and experiments from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ups_core::harness::{
    emit_report, generate_dataset, load_dataset, lorentz_demo, mean_angular_error, run_noise_sweep, run_table_sweep,
    run_theorem2_experiment, solve_and_evaluate, synthesize, table_shapes, DatasetSpec,
};
use ups_core::integrability::{
    build_ortho_matrix, build_persp_matrix, c_fields, degeneracy_report, DEFAULT_DEGENERACY_THRESHOLD,
};
use ups_core::psg::{grid_to_psg, psg_to_grid, PsgData};
use ups_core::shading::build_mfield;
use ups_core::solver::solve_ups_perspective;
use ups_core::{AlbedoKind, AlbedoMap, CameraModel, Error, NormalField, ShapeKind};

#[derive(Parser)]
#[command(
    name = "ups",
    version,
    about = "Uncalibrated perspective photometric stereo under SH1 lighting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset (images, ground truth, manifest).
    Render {
        #[command(flatten)]
        scene: SceneArgs,
        /// Noise in percent of the largest intensity.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct normals and albedo from a dataset's images.
    Solve {
        /// Manifest file or dataset directory.
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean angular error of a normal map (or of a fresh solve) against ground truth.
    Eval {
        #[arg(long)]
        images: PathBuf,
        /// Estimated normals as a 3-channel PSG; solved from the images when absent.
        #[arg(long)]
        normals: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MAE against noise level over several noise seeds.
    SweepNoise {
        /// Clean dataset to use instead of synthesizing one.
        #[arg(long)]
        images: Option<PathBuf>,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0])]
        sigmas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3, 4])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrability residuals of transformed orthographic fields.
    Theorem2 {
        #[command(flatten)]
        scene: SceneArgs,
        /// Number of generic scaled Lorentz samples.
        #[arg(long, default_value_t = 50)]
        generic: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degeneracy report of a shape's genuine field.
    Degeneracy {
        #[command(flatten)]
        scene: SceneArgs,
        /// Use the orthographic system instead of the perspective one.
        #[arg(long)]
        ortho: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample scaled Lorentz matrices and decompose them.
    LorentzDemo {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0.95)]
        max_speed: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MAE for every (shape, albedo) pair.
    SweepTable {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SceneArgs {
    #[arg(long, default_value = "MultiBump")]
    shape: ShapeKind,
    #[arg(long, default_value = "White")]
    albedo: AlbedoKind,
    #[arg(long, default_value_t = 0)]
    albedo_seed: u64,
    /// Image height and width in pixels.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Focal length in pixels.
    #[arg(long, default_value_t = 600.0)]
    focal: f64,
    /// Number of images.
    #[arg(short, long, default_value_t = 21)]
    m: usize,
    /// Lighting seed (sampling seed for the experiments).
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl SceneArgs {
    fn spec(&self) -> DatasetSpec {
        DatasetSpec {
            shape: self.shape.default_spec(),
            albedo: self.albedo,
            albedo_seed: self.albedo_seed,
            m_images: self.m,
            lighting_seed: self.seed,
            rows: self.size,
            cols: self.size,
            focal: self.focal,
            noise_sigma_pct: 0.0,
            noise_seed: 0,
        }
    }
}

fn write_json(value: &serde_json::Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render {
            scene,
            noise,
            noise_seed,
            out,
        } => {
            let spec = DatasetSpec {
                noise_sigma_pct: noise,
                noise_seed,
                ..scene.spec()
            };
            let manifest = generate_dataset(&spec, &out)?;
            println!(
                "wrote {} images to {}{}",
                manifest.files.images.len(),
                out.display(),
                if manifest.degenerate {
                    " (degenerate surface)"
                } else {
                    ""
                }
            );
        }
        Command::Solve { images, out } => {
            let data = load_dataset(&images)?;
            let report = solve_ups_perspective(&data.images, &data.manifest.camera)?;
            std::fs::create_dir_all(&out)?;
            grid_to_psg(report.normals.grid()).write(out.join("normals.psg"))?;
            grid_to_psg(report.albedo.grid()).write(out.join("albedo.psg"))?;
            write_json(
                &serde_json::to_value(&report.diagnostics)?,
                Some(&out.join("diagnostics.json")),
            )?;
            println!("wrote normals, albedo and diagnostics to {}", out.display());
        }
        Command::Eval { images, normals, out } => {
            let data = load_dataset(&images)?;
            let (eval, diagnostics) = match normals {
                Some(path) => {
                    let est = NormalField::from_estimate(psg_to_grid(&PsgData::read(&path)?, data.images.mask())?);
                    (mean_angular_error(&est, &data.normals, data.images.mask())?, None)
                }
                None => {
                    let e = solve_and_evaluate(&data.images, &data.manifest.camera, &data.normals)?;
                    let d = e.diagnostics.clone();
                    (e, d)
                }
            };
            let value = serde_json::json!({
                "mae_deg": eval.mae_degrees,
                "pixels": eval.error_grid.masked_count(),
                "diagnostics": diagnostics,
            });
            write_json(&value, out.as_deref())?;
        }
        Command::SweepNoise {
            images,
            scene,
            sigmas,
            seeds,
            out,
        } => {
            let (clean, camera, gt) = match images {
                Some(path) => {
                    let data = load_dataset(&path)?;
                    if data.manifest.spec.noise_sigma_pct != 0.0 {
                        bail!("noise sweeps need a clean dataset; {} has noise", path.display());
                    }
                    (data.images, data.manifest.camera, data.normals)
                }
                None => {
                    let s = synthesize(&scene.spec())?;
                    (s.clean, s.camera, s.normals)
                }
            };
            let sweep = run_noise_sweep(&clean, &camera, &gt, &sigmas, &seeds)?;
            emit_report(&sweep, &out, "noise_sweep")?;
            for l in &sweep.levels {
                let median = l.median_mae_deg.map_or("breakdown".to_string(), |m| format!("{m:.3}"));
                println!(
                    "sigma {:>6}%  median MAE {median}  failures {}",
                    l.sigma_pct, l.failures
                );
            }
            match sweep.breakdown_sigma_pct {
                Some(s) => println!("breakdown at sigma = {s}%"),
                None => println!("no breakdown"),
            }
        }
        Command::Theorem2 { scene, generic, out } => {
            let report = run_theorem2_experiment(&scene.spec(), generic, scene.seed)?;
            emit_report(&report, &out, "theorem2")?;
            println!(
                "floor {:.3e}  ambiguous {:.3e}  min generic {:.3e}  separated {}",
                report.floor, report.max_ambiguous, report.min_generic, report.separated
            );
        }
        Command::Degeneracy { scene, ortho, out } => {
            let spec = scene.spec();
            let camera = if ortho {
                CameraModel::orthographic(spec.rows, spec.cols)
            } else {
                spec.camera()?
            };
            let normals = spec.shape.normals(spec.rows, spec.cols, &camera)?;
            let white = AlbedoMap::new(normals.grid().map(|_| 1.0))?;
            let cf = c_fields(build_mfield(&white, &normals)?.grid())?;
            let im = if ortho {
                build_ortho_matrix(&cf)?
            } else {
                build_persp_matrix(&cf, &camera)?
            };
            let report = degeneracy_report(&im, DEFAULT_DEGENERACY_THRESHOLD)?;
            write_json(&serde_json::to_value(&report)?, out.as_deref())?;
        }
        Command::LorentzDemo {
            count,
            max_speed,
            seed,
            out,
        } => {
            let demo = lorentz_demo(count, max_speed, seed)?;
            match out {
                Some(dir) => {
                    emit_report(&demo, &dir, "lorentz_demo")?;
                }
                None => write_json(&serde_json::to_value(&demo)?, None)?,
            }
            eprintln!("max round-trip error {:.3e}", demo.max_round_trip_error);
        }
        Command::SweepTable { scene, out } => {
            let shapes = table_shapes(scene.seed);
            let table = run_table_sweep(&scene.spec(), &shapes, &AlbedoKind::ALL)?;
            emit_report(&table, &out, "table")?;
            for r in &table.rows {
                let mae = r.mae_deg.map_or(r.status.clone(), |m| format!("{m:.3}"));
                println!("{:<16} {:<12} {mae}", r.shape, r.albedo.to_string());
            }
        }
    }
    Ok(())
}

/// 2 for a degenerate surface, 3 for a signature failure, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>().map(Error::root) {
        Some(Error::DegenerateSurface { .. }) => 2,
        Some(Error::BadSignature { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
