//! Lambertian image formation: directional and first-order spherical-harmonics
//! lighting, the m-field, noise, and the calibrated directional baseline.

mod albedo;
mod lighting;

use nalgebra::{DMatrix, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::NormalField;
use crate::grid::PixelGrid;
use crate::linalg::pseudo_inverse;

pub use albedo::{synth_albedo, AlbedoKind};
pub use lighting::{
    read_lighting_csv, sample_directional_lighting, sample_sh1_lighting, write_lighting_csv, LightingMatrix,
    DEFAULT_AMBIENT_FLOOR,
};

/// Strictly positive albedo on a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct AlbedoMap(PixelGrid<f64>);

impl AlbedoMap {
    pub fn new(grid: PixelGrid<f64>) -> Result<Self> {
        if let Some(i) = grid.masked_indices().find(|&i| !(grid.values()[i] > 0.0)) {
            return Err(Error::BadParams(format!(
                "albedo must be positive, got {} at pixel {i}",
                grid.values()[i]
            )));
        }
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &PixelGrid<f64> {
        &self.0
    }

    pub fn into_grid(self) -> PixelGrid<f64> {
        self.0
    }

    /// Same albedo restricted to `mask`.
    pub fn restrict(&self, mask: &[bool]) -> Result<Self> {
        Ok(Self(self.0.clone().with_mask(mask.to_vec())?))
    }
}

/// Per-pixel `rho * (1, n1, n2, n3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MField(PixelGrid<Vector4<f64>>);

impl MField {
    pub const CONE_TOL: f64 = 1e-10;

    pub fn new(grid: PixelGrid<Vector4<f64>>) -> Result<Self> {
        for i in grid.masked_indices() {
            let c = grid.values()[i];
            let cone = c.x * c.x - (c.y * c.y + c.z * c.z + c.w * c.w);
            if !(c.x > 0.0) || !(c.w < 0.0) || cone.abs() > Self::CONE_TOL * c.x * c.x {
                return Err(Error::BadParams(format!(
                    "pixel {i} is not a valid m-field entry: {c:?}"
                )));
            }
        }
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &PixelGrid<Vector4<f64>> {
        &self.0
    }

    /// `4 x n` matrix of masked columns in enumeration order.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        grid_to_columns(&self.0)
    }

    /// Inverse of [`build_mfield`]: `rho = c1`, `n = (c2, c3, c4) / c1`.
    pub fn extract(&self) -> Result<(AlbedoMap, NormalField)> {
        let rho = AlbedoMap::new(self.0.map(|c| c.x))?;
        let n = NormalField::new(self.0.map(|c| Vector3::new(c.y, c.z, c.w) / c.x))?;
        Ok((rho, n))
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        Self::new(self.0.map(|c| c * alpha))
    }
}

pub(crate) fn grid_to_columns(g: &PixelGrid<Vector4<f64>>) -> DMatrix<f64> {
    let cols: Vec<f64> = g
        .masked_values()
        .flat_map(|c| c.iter().copied().collect::<Vec<_>>())
        .collect();
    DMatrix::from_vec(4, cols.len() / 4, cols)
}

/// `m x n` image matrix whose columns are the masked pixels in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    data: DMatrix<f64>,
}

impl ImageStack {
    pub fn new(rows: usize, cols: usize, mask: Vec<bool>, data: DMatrix<f64>) -> Result<Self> {
        if mask.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: mask.len(),
            });
        }
        let n = mask.iter().filter(|&&m| m).count();
        if data.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: data.ncols(),
            });
        }
        Ok(Self { rows, cols, mask, data })
    }

    /// Stacks single images that share one mask.
    pub fn from_images(images: &[PixelGrid<f64>]) -> Result<Self> {
        let first = images.first().ok_or_else(|| Error::BadParams("no images".into()))?;
        if images.iter().any(|g| !g.same_mask(first)) {
            return Err(Error::MaskMismatch);
        }
        let n = first.masked_count();
        let mut data = DMatrix::zeros(images.len(), n);
        for (k, g) in images.iter().enumerate() {
            for (j, v) in g.masked_values().enumerate() {
                data[(k, j)] = *v;
            }
        }
        Self::new(first.rows(), first.cols(), first.mask().to_vec(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn m_images(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_pixels(&self) -> usize {
        self.data.ncols()
    }

    /// Image `k` as a grid; unmasked pixels are zero.
    pub fn image(&self, k: usize) -> PixelGrid<f64> {
        PixelGrid::scatter(self.rows, self.cols, &self.mask, self.data.row(k).iter().copied(), 0.0)
            .expect("column count matches mask")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: &self.data * alpha,
            ..self.clone()
        }
    }
}

pub fn build_mfield(rho: &AlbedoMap, n: &NormalField) -> Result<MField> {
    if !rho.grid().same_mask(n.grid()) {
        return Err(Error::MaskMismatch);
    }
    let values = rho
        .grid()
        .values()
        .iter()
        .zip(n.grid().values())
        .map(|(&r, n)| Vector4::new(r, r * n.x, r * n.y, r * n.z))
        .collect();
    MField::new(PixelGrid::new(
        rho.grid().rows(),
        rho.grid().cols(),
        rho.grid().mask().to_vec(),
        values,
    )?)
}

/// `I = L M` with no clamping.
pub fn render_sh1(mf: &MField, l: &LightingMatrix) -> Result<ImageStack> {
    if l.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: l.dim(),
        });
    }
    let g = mf.grid();
    ImageStack::new(g.rows(), g.cols(), g.mask().to_vec(), l.matrix() * mf.to_matrix())
}

/// `I^i(x) = rho(x) n(x) . l^i`, negative values kept.
pub fn render_directional(rho: &AlbedoMap, n: &NormalField, l3: &LightingMatrix) -> Result<ImageStack> {
    if l3.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: l3.dim(),
        });
    }
    if !rho.grid().same_mask(n.grid()) {
        return Err(Error::MaskMismatch);
    }
    let b: Vec<f64> = rho
        .grid()
        .masked_values()
        .zip(n.grid().masked_values())
        .flat_map(|(r, n)| [r * n.x, r * n.y, r * n.z])
        .collect();
    let b = DMatrix::from_vec(3, b.len() / 3, b);
    ImageStack::new(
        rho.grid().rows(),
        rho.grid().cols(),
        rho.grid().mask().to_vec(),
        l3.matrix() * b,
    )
}

/// Per-pixel least squares `m = L3^+ i`, `rho = |m|`, `n = m / rho`.
pub fn solve_calibrated_directional(images: &ImageStack, l3: &LightingMatrix) -> Result<(AlbedoMap, NormalField)> {
    if l3.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: l3.dim(),
        });
    }
    if l3.matrix().nrows() != images.m_images() {
        return Err(Error::DimensionMismatch {
            expected: images.m_images(),
            found: l3.matrix().nrows(),
        });
    }
    l3.check_rank()?;
    let pinv = pseudo_inverse(l3.matrix());
    let m = pinv * images.data();
    let mut rho = Vec::with_capacity(m.ncols());
    let mut normals = Vec::with_capacity(m.ncols());
    for (j, col) in m.column_iter().enumerate() {
        let v = Vector3::new(col[0], col[1], col[2]);
        let r = v.norm();
        if !(r > 0.0) {
            return Err(Error::ZeroColumn { index: j });
        }
        rho.push(r);
        normals.push(v / r);
    }
    let (rows, cols, mask) = (images.rows(), images.cols(), images.mask());
    let rho = AlbedoMap::new(PixelGrid::scatter(rows, cols, mask, rho, 1.0)?)?;
    let n = NormalField::from_estimate(PixelGrid::scatter(
        rows,
        cols,
        mask,
        normals,
        Vector3::new(0.0, 0.0, -1.0),
    )?);
    Ok((rho, n))
}

/// Adds `N(0, (sigma_pct/100 * max|I|)^2)` noise from a seeded stream.
pub fn add_gaussian_noise(images: &ImageStack, sigma_pct: f64, seed: u64) -> Result<ImageStack> {
    if !(sigma_pct >= 0.0) || !sigma_pct.is_finite() {
        return Err(Error::BadParams(format!("noise level must be >= 0, got {sigma_pct}")));
    }
    let sigma = sigma_pct / 100.0 * images.data.amax();
    if sigma == 0.0 {
        return Ok(images.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::BadParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = images.clone();
    for x in out.data.iter_mut() {
        *x += normal.sample(&mut rng);
    }
    Ok(out)
}
