use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, NormalField, ShapeKind, ShapeSpec};
use crate::grid::PixelGrid;
use crate::integrability::{build_persp_matrix, c_fields, degeneracy_report, DEFAULT_DEGENERACY_THRESHOLD};
use crate::psg::{grid_to_psg, mask_to_psg, psg_to_grid, psg_to_mask, PsgData};
use crate::shading::{
    add_gaussian_noise, build_mfield, read_lighting_csv, render_sh1, sample_sh1_lighting, synth_albedo,
    write_lighting_csv, AlbedoKind, AlbedoMap, ImageStack, LightingMatrix, MField, DEFAULT_AMBIENT_FLOOR,
};

/// Everything needed to synthesize one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub shape: ShapeSpec,
    pub albedo: AlbedoKind,
    pub albedo_seed: u64,
    pub m_images: usize,
    pub lighting_seed: u64,
    pub rows: usize,
    pub cols: usize,
    /// Focal length in pixels.
    pub focal: f64,
    /// Noise level in percent of the largest clean intensity.
    pub noise_sigma_pct: f64,
    pub noise_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            shape: ShapeKind::MultiBump.default_spec(),
            albedo: AlbedoKind::White,
            albedo_seed: 0,
            m_images: 21,
            lighting_seed: 7,
            rows: 128,
            cols: 128,
            focal: 600.0,
            noise_sigma_pct: 0.0,
            noise_seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn camera(&self) -> Result<CameraModel> {
        CameraModel::perspective(self.focal, self.rows, self.cols)
    }
}

/// A synthesized scene held in memory.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: DatasetSpec,
    pub camera: CameraModel,
    pub albedo: AlbedoMap,
    pub normals: NormalField,
    pub mfield: MField,
    pub lighting: LightingMatrix,
    pub clean: ImageStack,
    /// `clean` with the spec's noise added.
    pub images: ImageStack,
}

pub fn synthesize(spec: &DatasetSpec) -> Result<Scene> {
    spec.shape.validate()?;
    let camera = spec.camera()?;
    let normals = spec.shape.normals(spec.rows, spec.cols, &camera)?;
    let albedo = synth_albedo(spec.albedo, spec.rows, spec.cols, spec.albedo_seed).restrict(normals.grid().mask())?;
    let mfield = build_mfield(&albedo, &normals)?;
    let lighting = sample_sh1_lighting(spec.m_images, spec.lighting_seed, DEFAULT_AMBIENT_FLOOR)?;
    let clean = render_sh1(&mfield, &lighting)?;
    let images = add_gaussian_noise(&clean, spec.noise_sigma_pct, spec.noise_seed)?;
    Ok(Scene {
        spec: spec.clone(),
        camera,
        albedo,
        normals,
        mfield,
        lighting,
        clean,
        images,
    })
}

/// Whether the genuine field of `scene` fails the degeneracy test.
pub fn is_degenerate(scene: &Scene) -> Result<bool> {
    let cf = c_fields(scene.mfield.grid())?;
    let im = build_persp_matrix(&cf, &scene.camera)?;
    Ok(degeneracy_report(&im, DEFAULT_DEGENERACY_THRESHOLD)?.degenerate)
}

/// File names inside a dataset directory, relative to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFiles {
    pub images: Vec<String>,
    pub normals: String,
    pub albedo: String,
    pub mask: String,
    pub lighting: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: DatasetSpec,
    pub camera: CameraModel,
    pub degenerate: bool,
    pub files: DatasetFiles,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Synthesizes `spec` and writes it to `out_dir` (created if missing).
pub fn generate_dataset(spec: &DatasetSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let dir = out_dir.as_ref();
    let scene = synthesize(spec)?;
    fs::create_dir_all(dir)?;
    let files = DatasetFiles {
        images: (0..spec.m_images).map(|k| format!("image_{k:03}.psg")).collect(),
        normals: "normals_gt.psg".into(),
        albedo: "albedo_gt.psg".into(),
        mask: "mask.psg".into(),
        lighting: "lighting.csv".into(),
    };
    for (k, name) in files.images.iter().enumerate() {
        grid_to_psg(&scene.images.image(k)).write(dir.join(name))?;
    }
    grid_to_psg(scene.normals.grid()).write(dir.join(&files.normals))?;
    grid_to_psg(scene.albedo.grid()).write(dir.join(&files.albedo))?;
    mask_to_psg(spec.rows, spec.cols, scene.images.mask()).write(dir.join(&files.mask))?;
    write_lighting_csv(&scene.lighting, dir.join(&files.lighting))?;
    let manifest = DatasetManifest {
        spec: spec.clone(),
        camera: scene.camera,
        degenerate: is_degenerate(&scene)?,
        files,
    };
    write_json(&manifest, dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

/// A dataset read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    pub images: ImageStack,
    pub normals: NormalField,
    pub albedo: AlbedoMap,
    pub lighting: LightingMatrix,
}

/// Reads a manifest (a file, or a directory holding `manifest.json`) and
/// every file it names, checking dimensions against the spec.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    };
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(&manifest_path)?)?;
    let (rows, cols) = (manifest.spec.rows, manifest.spec.cols);
    let read = |name: &str, channels: usize| -> Result<PsgData> {
        let psg = PsgData::read(dir.join(name))?;
        if psg.rows != rows || psg.cols != cols || psg.channels != channels {
            return Err(Error::Format(format!(
                "{name}: {}x{}x{} does not match the manifest's {rows}x{cols}x{channels}",
                psg.rows, psg.cols, psg.channels
            )));
        }
        Ok(psg)
    };
    let files = &manifest.files;
    if files.images.len() != manifest.spec.m_images {
        return Err(Error::DimensionMismatch {
            expected: manifest.spec.m_images,
            found: files.images.len(),
        });
    }
    let mask = psg_to_mask(&read(&files.mask, 1)?)?;
    let images = files
        .images
        .iter()
        .map(|name| psg_to_grid::<f64>(&read(name, 1)?, &mask))
        .collect::<Result<Vec<_>>>()?;
    let images = ImageStack::from_images(&images)?;
    let normals = NormalField::new(psg_to_grid(&read(&files.normals, 3)?, &mask)?)?;
    let albedo_grid: PixelGrid<f64> = psg_to_grid(&read(&files.albedo, 1)?, &mask)?;
    let albedo = AlbedoMap::new(albedo_grid)?;
    let lighting = read_lighting_csv(dir.join(&files.lighting))?;
    if lighting.m_images() != manifest.spec.m_images {
        return Err(Error::DimensionMismatch {
            expected: manifest.spec.m_images,
            found: lighting.m_images(),
        });
    }
    Ok(LoadedDataset {
        manifest,
        images,
        normals,
        albedo,
        lighting,
    })
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
