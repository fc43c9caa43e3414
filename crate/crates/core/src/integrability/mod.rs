//! The `c^{i,j}_k` fields, integrability residuals, the stacked integrability
//! systems whose null vectors hold the 2x2 minors of the ambiguity, and
//! degeneracy diagnostics.
//!
//! For a 4-component field `c = (c1, c2, c3, c4)` and `k` in `{u, v}`:
//!
//! ```text
//! c^{i,j}_k = c_j d_k(c_i) - c_i d_k(c_j),    1 <= i < j <= 4
//! ```
//!
//! stored in the pair order `(1,2) (1,3) (1,4) (2,3) (2,4) (3,4)`.

mod degeneracy;
mod matrix;

use nalgebra::{Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{partials, CameraModel, Scheme};
use crate::grid::PixelGrid;

pub use degeneracy::{degeneracy_report, DegeneracyPattern, DegeneracyReport, DEFAULT_DEGENERACY_THRESHOLD};
pub use matrix::{
    build_ortho_matrix, build_persp17_matrix, build_persp_matrix, ortho_minor_vector, persp17_minor_vector,
    persp_minor_vector, IntegrabilityMatrix, MatrixKind, ORTHO_MINORS, PERSP_MINORS,
};

/// 1-based index pairs `(i, j)` in storage order.
pub const PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// Storage slot of pair `(i, j)`, `i < j`, both 1-based.
pub const fn pair_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (1, 2) => 0,
        (1, 3) => 1,
        (1, 4) => 2,
        (2, 3) => 3,
        (2, 4) => 4,
        (3, 4) => 5,
        _ => panic!("pair out of range"),
    }
}

/// All twelve `c^{i,j}_u`, `c^{i,j}_v` on the derivative mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CDerivedFields {
    pub cu: PixelGrid<[f64; 6]>,
    pub cv: PixelGrid<[f64; 6]>,
}

impl CDerivedFields {
    pub fn mask(&self) -> &[bool] {
        self.cu.mask()
    }

    pub fn rows(&self) -> usize {
        self.cu.rows()
    }

    pub fn cols(&self) -> usize {
        self.cu.cols()
    }
}

fn pair_products(c: &Vector4<f64>, d: &Vector4<f64>) -> [f64; 6] {
    PAIRS.map(|(i, j)| c[j - 1] * d[i - 1] - c[i - 1] * d[j - 1])
}

/// Central-difference `c^{i,j}_k` of any 4-component field.
pub fn c_fields(m: &PixelGrid<Vector4<f64>>) -> Result<CDerivedFields> {
    c_fields_with(m, Scheme::Central)
}

pub fn c_fields_with(m: &PixelGrid<Vector4<f64>>, scheme: Scheme) -> Result<CDerivedFields> {
    let p = partials(m, scheme)?;
    let c = m.values();
    let cu = p.du.values().iter().zip(c).map(|(d, c)| pair_products(c, d)).collect();
    let cv = p.dv.values().iter().zip(c).map(|(d, c)| pair_products(c, d)).collect();
    let mask = p.mask().to_vec();
    Ok(CDerivedFields {
        cu: PixelGrid::new(m.rows(), m.cols(), mask.clone(), cu)?,
        cv: PixelGrid::new(m.rows(), m.cols(), mask, cv)?,
    })
}

/// Per-pixel residual with the pixels a guard removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub grid: PixelGrid<f64>,
    pub dropped: Vec<usize>,
}

impl Residual {
    pub fn max_abs(&self) -> f64 {
        self.grid.masked_values().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// `(c2_v - c3_u) c4 + c4_u c3 - c4_v c2`, i.e. `c^{2,4}_v - c^{3,4}_u`.
///
/// Pixels with `|c4| <= 1e-12 max|c4|` are dropped and reported.
pub fn ortho_residual(m: &PixelGrid<Vector4<f64>>) -> Result<Residual> {
    let cf = c_fields(m)?;
    let c4max = m.masked_values().fold(0.0f64, |a, c| a.max(c.w.abs()));
    let mut mask = cf.mask().to_vec();
    let mut dropped = Vec::new();
    let mut values = vec![0.0; mask.len()];
    for i in cf.cu.masked_indices() {
        if !(m.values()[i].w.abs() > 1e-12 * c4max) {
            mask[i] = false;
            dropped.push(i);
            continue;
        }
        values[i] = cf.cv.values()[i][4] - cf.cu.values()[i][5];
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::VanishingC4);
    }
    Ok(Residual {
        grid: PixelGrid::new(m.rows(), m.cols(), mask, values)?,
        dropped,
    })
}

/// `u c^{2,3}_u + v c^{2,3}_v + f c^{2,4}_v - f c^{3,4}_u`.
pub fn persp_residual_m4(m: &PixelGrid<Vector4<f64>>, camera: &CameraModel) -> Result<Residual> {
    camera.require_perspective()?;
    let cf = c_fields(m)?;
    let f = camera.focal;
    let values = (0..m.rows() * m.cols())
        .map(|i| {
            let (r, c) = m.coords(i);
            let (u, v) = camera.offset(r, c);
            let (a, b) = (&cf.cu.values()[i], &cf.cv.values()[i]);
            u * a[3] + v * b[3] + f * b[4] - f * a[5]
        })
        .collect();
    Ok(Residual {
        grid: PixelGrid::new(m.rows(), m.cols(), cf.mask().to_vec(), values)?,
        dropped: Vec::new(),
    })
}

/// Three-component form on `m = rho n`:
/// `u(m1 m2_u - m1_u m2) + v(m1 m2_v - m1_v m2) + f(m1 m3_v - m1_v m3) + f(m2_u m3 - m2 m3_u)`.
///
/// Equals the negative of [`persp_residual_m4`] on `(c2, c3, c4) = m`.
pub fn persp_residual_m3(m: &PixelGrid<Vector3<f64>>, camera: &CameraModel) -> Result<Residual> {
    camera.require_perspective()?;
    let p = partials(m, Scheme::Central)?;
    let f = camera.focal;
    let values = (0..m.rows() * m.cols())
        .map(|i| {
            let (r, c) = m.coords(i);
            let (u, v) = camera.offset(r, c);
            let (x, du, dv) = (m.values()[i], p.du.values()[i], p.dv.values()[i]);
            u * (x.x * du.y - du.x * x.y)
                + v * (x.x * dv.y - dv.x * x.y)
                + f * (x.x * dv.z - dv.x * x.z)
                + f * (du.y * x.z - x.y * du.z)
        })
        .collect();
    Ok(Residual {
        grid: PixelGrid::new(m.rows(), m.cols(), p.mask().to_vec(), values)?,
        dropped: Vec::new(),
    })
}

/// Applies a 4x4 matrix to every pixel of a 4-component field.
pub fn transform_field(m: &PixelGrid<Vector4<f64>>, a: &nalgebra::Matrix4<f64>) -> PixelGrid<Vector4<f64>> {
    m.map(|c| a * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NormalField, ShapeKind, ShapeSpec};
    use crate::lorentz::{minor2, Minor2Index, ScaledLorentz};
    use crate::shading::{build_mfield, AlbedoMap};
    use nalgebra::Matrix4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn polynomial_field(rows: usize, cols: usize, seed: u64) -> PixelGrid<Vector4<f64>> {
        // quadratic polynomials: central differences are exact
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<[f64; 6]> = (0..4)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        PixelGrid::from_fn(rows, cols, |r, c| {
            let (u, v) = (c as f64 * 0.1, r as f64 * 0.1);
            Vector4::from_fn(|k, _| {
                let a = coef[k];
                a[0] + a[1] * u + a[2] * v + a[3] * u * u + a[4] * u * v + a[5] * v * v
            })
        })
    }

    fn mfield(spec: &ShapeSpec, size: usize, camera: &CameraModel) -> PixelGrid<Vector4<f64>> {
        let n = spec.normals(size, size, camera).unwrap();
        let rho = AlbedoMap::new(PixelGrid::filled(size, size, 1.0)).unwrap();
        build_mfield(&rho, &n).unwrap().grid().clone()
    }

    #[test]
    fn constant_field_has_zero_c_fields() {
        let g = PixelGrid::filled(5, 5, Vector4::new(1.0, 0.2, -0.3, -0.9));
        let cf = c_fields(&g).unwrap();
        assert!(cf
            .cu
            .masked_values()
            .chain(cf.cv.masked_values())
            .all(|c| c.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn c_fields_match_symbolic_derivatives() {
        let g = polynomial_field(9, 9, 1);
        let cf = c_fields(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coef: Vec<[f64; 6]> = (0..4)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        for i in cf.cu.masked_indices() {
            let (r, c) = g.coords(i);
            let (u, v) = (c as f64 * 0.1, r as f64 * 0.1);
            // d/dcol = 0.1 d/du on the 0.1-spaced polynomial
            let du = Vector4::from_fn(|k, _| 0.1 * (coef[k][1] + 2.0 * coef[k][3] * u + coef[k][4] * v));
            let dv = Vector4::from_fn(|k, _| 0.1 * (coef[k][2] + coef[k][4] * u + 2.0 * coef[k][5] * v));
            let x = g.values()[i];
            for (s, &(p, q)) in PAIRS.iter().enumerate() {
                let (p, q) = (p - 1, q - 1);
                assert!((cf.cu.values()[i][s] - (x[q] * du[p] - x[p] * du[q])).abs() < 1e-13);
                assert!((cf.cv.values()[i][s] - (x[q] * dv[p] - x[p] * dv[q])).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn smooth_rescaling_multiplies_by_its_square() {
        // linear sigma times a linear field is quadratic, so the discrete identity is exact
        let base = PixelGrid::from_fn(7, 8, |r, c| {
            let (u, v) = (c as f64, r as f64);
            Vector4::new(2.0 + 0.1 * u, 0.3 - 0.05 * v, 0.2 * u - 0.1 * v, -1.5 + 0.07 * u)
        });
        let sigma = |r: usize, c: usize| 1.0 + 0.04 * c as f64 + 0.03 * r as f64;
        let scaled = PixelGrid::from_fn(7, 8, |r, c| base.at(r, c) * sigma(r, c));
        let (a, b) = (c_fields(&base).unwrap(), c_fields(&scaled).unwrap());
        for i in a.cu.masked_indices() {
            let (r, c) = base.coords(i);
            let s2 = sigma(r, c).powi(2);
            for k in 0..6 {
                assert!((b.cu.values()[i][k] - s2 * a.cu.values()[i][k]).abs() < 1e-13);
                assert!((b.cv.values()[i][k] - s2 * a.cv.values()[i][k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cross_product_identity() {
        // linear normals-with-albedo field: central differences are exact
        let g = PixelGrid::from_fn(7, 7, |r, c| {
            let m = Vector3::new(0.1 * c as f64 - 0.3, 0.05 * r as f64 + 0.1, -1.0 - 0.02 * c as f64);
            Vector4::new(m.norm(), m.x, m.y, m.z)
        });
        let cf = c_fields(&g).unwrap();
        for i in cf.cu.masked_indices() {
            let m = Vector3::new(g.values()[i].y, g.values()[i].z, g.values()[i].w);
            let mu = Vector3::new(0.1, 0.0, -0.02);
            let mv = Vector3::new(0.0, 0.05, 0.0);
            let cu = cf.cu.values()[i];
            let cv = cf.cv.values()[i];
            let xu = m.cross(&mu);
            let xv = m.cross(&mv);
            assert!((xu - Vector3::new(-cu[5], cu[4], -cu[3])).amax() < 1e-12);
            assert!((xv - Vector3::new(-cv[5], cv[4], -cv[3])).amax() < 1e-12);
        }
    }

    #[test]
    fn c_fields_transform_through_minors() {
        let g = polynomial_field(8, 8, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let base = c_fields(&g).unwrap();
        let moved = c_fields(&transform_field(&g, &a)).unwrap();
        for i in base.cu.masked_indices() {
            for (slot, &(p, q)) in PAIRS.iter().enumerate() {
                let want: f64 = PAIRS
                    .iter()
                    .enumerate()
                    .map(|(s, &(x, y))| minor2(&a, Minor2Index::new(p, q, x, y)).unwrap() * base.cu.values()[i][s])
                    .sum();
                assert!((moved.cu.values()[i][slot] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_forms_agree() {
        let cam = CameraModel::perspective(120.0, 24, 24).unwrap();
        let m = mfield(&ShapeKind::MultiBump.default_spec(), 24, &cam);
        let m4 = persp_residual_m4(&m, &cam).unwrap();
        let m3 = persp_residual_m3(&m.map(|c| Vector3::new(c.y, c.z, c.w)), &cam).unwrap();
        for i in m4.grid.masked_indices() {
            assert!((m4.grid.values()[i] + m3.grid.values()[i]).abs() < 1e-12);
        }
        let ortho = CameraModel::orthographic(24, 24);
        assert!(matches!(
            persp_residual_m4(&m, &ortho),
            Err(Error::WrongProjection { .. })
        ));
    }

    #[test]
    fn flat_normals_have_zero_residual() {
        let cam = CameraModel::perspective(80.0, 6, 6).unwrap();
        let n = NormalField::new(PixelGrid::filled(6, 6, Vector3::new(0.0, 0.0, -1.0))).unwrap();
        let m = n.grid().map(|n| n * 0.7);
        assert!(persp_residual_m3(&m, &cam).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn perspective_residual_ignores_albedo() {
        let spec = ShapeKind::GaussianBump.default_spec();
        let run = |size: usize| {
            let cam = CameraModel::perspective(150.0 * size as f64 / 48.0, size, size).unwrap();
            let n = spec.normals(size, size, &cam).unwrap();
            let white = n.grid().map(|n| *n);
            let k = 48.0 / size as f64;
            let tinted = PixelGrid::from_fn(size, size, |r, c| {
                let (y, x) = (r as f64 * k, c as f64 * k);
                n.grid().at(r, c) * (1.0 + 0.3 * (y * 0.1).sin() * (x * 0.07).cos())
            });
            (
                persp_residual_m3(&white, &cam).unwrap().max_abs(),
                persp_residual_m3(&tinted, &cam).unwrap().max_abs(),
            )
        };
        let (a1, b1) = run(48);
        let (a2, b2) = run(96);
        // both shrink under refinement: the albedo only adds discretization error
        assert!(a2 < a1 / 3.0 && b2 < b1 / 3.0, "{a1} {a2} {b1} {b2}");
    }

    #[test]
    fn ortho_residual_detects_generic_transforms() {
        let cam = CameraModel::orthographic(48, 48);
        let m = mfield(&ShapeKind::MultiBump.default_spec(), 48, &cam);
        let floor = ortho_residual(&m).unwrap().max_abs();
        let twin = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, 1.0)) * 1.7;
        let twin_res = ortho_residual(&transform_field(&m, &twin)).unwrap().max_abs();
        assert!(twin_res < 1.7 * 1.7 * floor * 1.0001 + 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut l = ScaledLorentz::random(&mut rng, 0.3);
        while l.v().norm() < 0.2 {
            l = ScaledLorentz::random(&mut rng, 0.3);
        }
        let a = l.realize();
        let generic = ortho_residual(&transform_field(&m, &a)).unwrap().max_abs();
        assert!(generic > 100.0 * floor * l.s() * l.s(), "{generic} vs {floor}");
    }

    #[test]
    fn grazing_c4_is_dropped() {
        let mut g = PixelGrid::filled(5, 5, Vector4::new(1.0, 0.0, 0.0, -1.0));
        g.set(2, 2, Vector4::new(1.0, 1.0, 0.0, 0.0));
        let r = ortho_residual(&g).unwrap();
        assert_eq!(r.dropped, vec![12]);
        let zero = PixelGrid::filled(5, 5, Vector4::new(1.0, 1.0, 0.0, 0.0));
        assert!(matches!(ortho_residual(&zero), Err(Error::VanishingC4)));
    }
}
