use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::singular_values;

pub const DEFAULT_AMBIENT_FLOOR: f64 = 0.35;
const RANK_RATIO: f64 = 1e-6;
const MAX_ATTEMPTS: usize = 100;
/// Half-angle of the cone of light directions around the optical axis.
const CONE_HALF_ANGLE_DEG: f64 = 50.0;

/// One lighting vector per image: 4 SH1 coefficients or a 3D directional light.
#[derive(Debug, Clone, PartialEq)]
pub struct LightingMatrix {
    matrix: DMatrix<f64>,
}

impl LightingMatrix {
    /// Full-rank lighting; rejects matrices whose singular value ratio is at most 1e-6.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let l = Self::raw(matrix)?;
        l.check_rank()?;
        Ok(l)
    }

    /// Any 3- or 4-column matrix, without the rank requirement (single test lights).
    pub fn raw(matrix: DMatrix<f64>) -> Result<Self> {
        if !matches!(matrix.ncols(), 3 | 4) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 || matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadParams("lighting must be a non-empty finite matrix".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// 4 for SH1 lighting, 3 for directional lighting.
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn m_images(&self) -> usize {
        self.matrix.nrows()
    }

    /// `sigma_min / sigma_max`, zero when there are fewer rows than columns.
    pub fn rank_ratio(&self) -> f64 {
        if self.matrix.nrows() < self.matrix.ncols() {
            return 0.0;
        }
        let s = singular_values(&self.matrix);
        s.min() / s.max()
    }

    pub fn check_rank(&self) -> Result<()> {
        let ratio = self.rank_ratio();
        if ratio > RANK_RATIO {
            Ok(())
        } else {
            Err(Error::RankDeficientLighting { ratio })
        }
    }
}

fn cone_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let cos_max = CONE_HALF_ANGLE_DEG.to_radians().cos();
    let cos_t: f64 = rng.random_range(cos_max..=1.0);
    let sin_t = (1.0 - cos_t * cos_t).sqrt();
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    Vector3::new(sin_t * phi.cos(), sin_t * phi.sin(), -cos_t)
}

fn sample_until_full_rank(
    m: usize,
    dim: usize,
    seed: u64,
    mut row: impl FnMut(&mut ChaCha8Rng) -> Vec<f64>,
) -> Result<LightingMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratio = 0.0;
    for _ in 0..MAX_ATTEMPTS {
        let data: Vec<f64> = (0..m).flat_map(|_| row(&mut rng)).collect();
        let l = LightingMatrix::raw(DMatrix::from_row_slice(m, dim, &data))?;
        ratio = l.rank_ratio();
        if ratio > RANK_RATIO {
            return Ok(l);
        }
    }
    Err(Error::RankDeficientLighting { ratio })
}

/// Seeded SH1 lighting `l = (l0, a d)` with `d` in a cone around the viewing
/// direction and `l0 >= ambient_floor * |l|`.
pub fn sample_sh1_lighting(m: usize, seed: u64, ambient_floor: f64) -> Result<LightingMatrix> {
    if m < 4 {
        return Err(Error::BadParams(format!(
            "SH1 lighting needs at least 4 images, got {m}"
        )));
    }
    if !(0.0..1.0).contains(&ambient_floor) {
        return Err(Error::BadParams(format!(
            "ambient floor must lie in [0, 1), got {ambient_floor}"
        )));
    }
    let lift = ambient_floor / (1.0 - ambient_floor * ambient_floor).sqrt();
    sample_until_full_rank(m, 4, seed, |rng| {
        let a: f64 = rng.random_range(0.5..=1.0);
        let d = cone_direction(rng) * a;
        let l0 = lift * a + rng.random_range(0.0..0.3);
        vec![l0, d.x, d.y, d.z]
    })
}

/// Seeded directional lights of intensity in `[0.5, 1]` inside the same cone.
pub fn sample_directional_lighting(m: usize, seed: u64) -> Result<LightingMatrix> {
    if m < 3 {
        return Err(Error::BadParams(format!(
            "directional lighting needs at least 3 images, got {m}"
        )));
    }
    sample_until_full_rank(m, 3, seed, |rng| {
        let a: f64 = rng.random_range(0.5..=1.0);
        let d = cone_direction(rng) * a;
        vec![d.x, d.y, d.z]
    })
}

/// One row per image, comma separated, shortest round-trip float formatting.
pub fn write_lighting_csv(l: &LightingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for row in l.matrix.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", cells.join(",")).expect("writing to a String");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_lighting_csv(path: impl AsRef<Path>) -> Result<LightingMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("lighting line {}: {e}", k + 1)))?;
        rows.push(row);
    }
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Format("lighting rows have different lengths".into()));
    }
    let data: Vec<f64> = rows.concat();
    LightingMatrix::raw(DMatrix::from_row_slice(rows.len(), dim, &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_sh1_lighting_is_full_rank_and_ambient() {
        let l = sample_sh1_lighting(21, 7, DEFAULT_AMBIENT_FLOOR).unwrap();
        assert_eq!((l.m_images(), l.dim()), (21, 4));
        let s = singular_values(l.matrix());
        assert!(s[3] / s[0] > 1e-6);
        for row in l.matrix().row_iter() {
            assert!(row[0] >= DEFAULT_AMBIENT_FLOOR * row.norm() - 1e-15);
        }
        assert_eq!(sample_sh1_lighting(21, 7, DEFAULT_AMBIENT_FLOOR).unwrap(), l);
        assert!(sample_sh1_lighting(4, 1, DEFAULT_AMBIENT_FLOOR).unwrap().rank_ratio() > 1e-6);
    }

    #[test]
    fn too_few_images_is_rejected() {
        assert!(matches!(sample_sh1_lighting(3, 0, 0.35), Err(Error::BadParams(_))));
        assert!(matches!(sample_directional_lighting(2, 0), Err(Error::BadParams(_))));
    }

    #[test]
    fn rank_deficient_lighting_is_rejected() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                1.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        assert!(matches!(
            LightingMatrix::new(m),
            Err(Error::RankDeficientLighting { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lighting.csv");
        let l = sample_sh1_lighting(6, 3, 0.2).unwrap();
        write_lighting_csv(&l, &path).unwrap();
        assert_eq!(read_lighting_csv(&path).unwrap(), l);
    }
}
