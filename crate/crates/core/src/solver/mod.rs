//! Closed-form uncalibrated solve under SH1 lighting and a calibrated
//! perspective camera: factorize, fix the quadratic constraint, solve the
//! integrability system for minors, rebuild `(v | Q)` and read off the surface.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::geometry::{CameraModel, NormalField};
use crate::grid::PixelGrid;
use crate::integrability::{build_persp_matrix, c_fields, degeneracy_report, DEFAULT_DEGENERACY_THRESHOLD, PAIRS};
use crate::linalg::{canonical_sign_first, canonical_sign_largest, null_vector, svd, symmetric_eigen};
use crate::shading::{AlbedoMap, ImageStack};

/// Below this `sigma_4 / sigma_1` the images do not carry four independent channels.
pub const RANK_TOL: f64 = 1e-10;
/// Relative size under which an eigenvalue of the fitted form counts as zero.
const SIGNATURE_TOL: f64 = 1e-9;
const DELTA_TOL: f64 = 1e-12;
const LS_COND_MAX: f64 = 1e10;
const ZERO_COLUMN_TOL: f64 = 1e-14;

/// Rank-4 factorization `I ~ L1 M1` of an image stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// `m x 4`
    pub l1: DMatrix<f64>,
    /// `4 x n`, columns in mask enumeration order.
    pub m1: DMatrix<f64>,
    /// Largest per-column `|c1^2 - c2^2 - c3^2 - c4^2| / |c|^2`.
    pub sh1_residual: f64,
    /// `sigma_4 / sigma_5` of the image matrix (`f64::MAX` without a fifth value).
    pub rank_gap: f64,
    pub rows: usize,
    pub cols: usize,
    pub mask: Vec<bool>,
}

impl Factorization {
    /// `M1` laid back onto the image grid; unmasked pixels are zero.
    pub fn m1_grid(&self) -> PixelGrid<Vector4<f64>> {
        let cols = self.m1.column_iter().map(|c| Vector4::new(c[0], c[1], c[2], c[3]));
        PixelGrid::scatter(self.rows, self.cols, &self.mask, cols, Vector4::zeros())
            .expect("factorization columns match the mask")
    }
}

fn sh1_residual(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| {
            let n2 = c.norm_squared();
            if n2 == 0.0 {
                0.0
            } else {
                (c[0] * c[0] - c[1] * c[1] - c[2] * c[2] - c[3] * c[3]).abs() / n2
            }
        })
        .fold(0.0, f64::max)
}

pub fn factorize_rank4(images: &ImageStack) -> Result<Factorization> {
    let (m, n) = images.data().shape();
    if m < 4 || n < 4 {
        return Err(Error::BadParams(format!(
            "need at least 4 images and 4 pixels, got {m} x {n}"
        )));
    }
    let svd = svd(images.data());
    let sv = &svd.singular_values;
    let ratio = if sv[0] > 0.0 { sv[3] / sv[0] } else { 0.0 };
    if ratio < RANK_TOL {
        return Err(Error::RankDeficientImages { ratio });
    }
    let rank_gap = match sv.get(4) {
        Some(&s5) if s5 > 0.0 => sv[3] / s5,
        _ => f64::MAX,
    };
    let mut u4 = DMatrix::zeros(m, 4);
    for k in 0..4 {
        let mut u = svd.u.column(k).into_owned();
        canonical_sign_largest(&mut u);
        u4.set_column(k, &u);
    }
    let s: Vec<f64> = sv.iter().take(4).copied().collect();
    let mut l1 = u4.clone();
    for (k, sk) in s.iter().enumerate() {
        l1.column_mut(k).scale_mut(sk.sqrt());
    }
    let mut m1 = u4.transpose() * images.data();
    for (k, sk) in s.iter().enumerate() {
        m1.row_mut(k).scale_mut(1.0 / sk.sqrt());
    }
    Ok(Factorization {
        sh1_residual: sh1_residual(&m1),
        l1,
        m1,
        rank_gap,
        rows: images.rows(),
        cols: images.cols(),
        mask: images.mask().to_vec(),
    })
}

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SYM_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Unit-Frobenius symmetric `S` minimizing `sum_j (m_j^T S m_j)^2`.
fn fit_quadratic_form(m: &DMatrix<f64>) -> Matrix4<f64> {
    let n = m.ncols();
    let mut a = DMatrix::zeros(n.max(10), 10);
    for (j, c) in m.column_iter().enumerate() {
        for d in 0..4 {
            a[(j, d)] = c[d] * c[d];
        }
        for (k, &(p, q)) in SYM_PAIRS.iter().enumerate() {
            a[(j, 4 + k)] = SQRT2 * c[p] * c[q];
        }
    }
    let (x, _) = null_vector(&a);
    let mut s = Matrix4::zeros();
    for d in 0..4 {
        s[(d, d)] = x[d];
    }
    for (k, &(p, q)) in SYM_PAIRS.iter().enumerate() {
        s[(p, q)] = x[4 + k] / SQRT2;
        s[(q, p)] = x[4 + k] / SQRT2;
    }
    s
}

/// Replaces `M1` by `B M1` (and `L1` by `L1 B^{-1}`) so that every column
/// satisfies `c1^2 = c2^2 + c3^2 + c4^2` as closely as the data allows.
pub fn enforce_sh1_constraint(f: &Factorization) -> Result<Factorization> {
    let s = fit_quadratic_form(&f.m1);
    let (vals, vecs) = symmetric_eigen(&DMatrix::from_fn(4, 4, |i, j| s[(i, j)]));
    let scale = vals.amax();
    let neg = vals.iter().filter(|&&e| e < -SIGNATURE_TOL * scale).count();
    let pos = vals.iter().filter(|&&e| e > SIGNATURE_TOL * scale).count();
    let sign = match (neg, pos) {
        (1, 3) => 1.0,
        (3, 1) => -1.0,
        _ => {
            return Err(Error::BadSignature {
                negative: neg,
                positive: pos,
            })
        }
    };
    // the lone eigenvalue of the minority sign goes first
    let order: Vec<usize> = if sign > 0.0 { vec![0, 1, 2, 3] } else { vec![3, 0, 1, 2] };
    let mut b = Matrix4::zeros();
    for (row, &i) in order.iter().enumerate() {
        let mut e = vecs.column(i).into_owned();
        canonical_sign_largest(&mut e);
        let w = vals[i].abs().sqrt();
        for k in 0..4 {
            b[(row, k)] = w * e[k];
        }
    }
    let mut m1 = DMatrix::from_column_slice(4, 4, b.as_slice()) * &f.m1;
    // c1 is an albedo and must come out positive
    if m1.row(0).sum() < 0.0 {
        b.row_mut(0).neg_mut();
        m1.row_mut(0).neg_mut();
    }
    let b_inv = b.try_inverse().ok_or(Error::BadSignature {
        negative: neg,
        positive: pos,
    })?;
    let l1 = &f.l1 * DMatrix::from_column_slice(4, 4, b_inv.as_slice());
    Ok(Factorization {
        sh1_residual: sh1_residual(&m1),
        l1,
        m1,
        ..f.clone()
    })
}

/// Scaled minors `lambda A^{i,j}_{k,l}` in Perspective18 order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorSolution {
    pub w: [f64; 18],
    /// `sigma_17 / sigma_18` of the integrability matrix.
    pub second_sv_ratio: f64,
    /// Degeneracy condition ratio of the row-normalized matrix.
    pub condition_ratio: f64,
    /// Boost (row-major) taking the input field to the frame the system was solved in.
    pub rest_frame: [f64; 16],
}

impl MinorSolution {
    /// Wraps an externally known minor vector, normalized and sign-fixed.
    pub fn from_minors(w: &DVector<f64>) -> Result<Self> {
        if w.len() != 18 {
            return Err(Error::DimensionMismatch {
                expected: 18,
                found: w.len(),
            });
        }
        let norm = w.norm();
        if norm == 0.0 {
            return Err(Error::SingularDelta);
        }
        let mut w = w / norm;
        canonical_sign_first(&mut w, 1e-6);
        let mut out = [0.0; 18];
        out.copy_from_slice(w.as_slice());
        Ok(Self {
            w: out,
            second_sv_ratio: f64::MAX,
            condition_ratio: 1.0,
            rest_frame: IDENTITY16,
        })
    }
}

pub fn solve_minor_system(m1: &PixelGrid<Vector4<f64>>, camera: &CameraModel) -> Result<MinorSolution> {
    solve_minor_system_with(m1, camera, &SolverConfig::default())
}

/// Null vector of the perspective integrability matrix of `m1`.
///
/// The system is solved in the rest frame of the field (mean column boosted
/// onto the time axis) and the minors are mapped back to the input frame.
/// What is left of the Lorentz freedom there is a rotation, which acts
/// orthogonally on the unknowns, so the answer does not depend on the frame
/// `m1` came in.
pub fn solve_minor_system_with(
    m1: &PixelGrid<Vector4<f64>>,
    camera: &CameraModel,
    config: &SolverConfig,
) -> Result<MinorSolution> {
    camera.require_perspective()?;
    let report = degeneracy_report(
        &build_persp_matrix(&c_fields(m1)?, camera)?,
        config.degeneracy_threshold,
    )?;
    if report.degenerate {
        return Err(Error::DegenerateSurface {
            ratio: report.condition_ratio,
        });
    }
    let boost = rest_boost(m1)?;
    let im = build_persp_matrix(&c_fields(&m1.map(|c| boost * c))?, camera)?;
    let (w_rest, sv) = null_vector(&im.rows);
    // lambda A_rest^{b}_{q} composed with the boost: A = A_rest * boost
    let c2 = compound2(&boost);
    let mut w = DVector::zeros(18);
    for blk in 0..3 {
        for q in 0..6 {
            w[blk * 6 + q] = (0..6).map(|p| w_rest[blk * 6 + p] * c2[(p, q)]).sum();
        }
    }
    let mut sol = MinorSolution::from_minors(&w)?;
    sol.second_sv_ratio = if sv[17] > 0.0 { sv[16] / sv[17] } else { f64::MAX };
    sol.condition_ratio = report.condition_ratio;
    sol.rest_frame.copy_from_slice(boost.transpose().as_slice());
    Ok(sol)
}

const IDENTITY16: [f64; 16] = [
    1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
];

/// Pure boost taking the mean column of `field` onto the positive time axis.
pub fn rest_boost(field: &PixelGrid<Vector4<f64>>) -> Result<Matrix4<f64>> {
    let mean = field.masked_values().fold(Vector4::zeros(), |acc, c| acc + c);
    let t = mean.x.abs();
    let x = Vector3::new(mean.y, mean.z, mean.w);
    // a spacelike or lightlike mean has no rest frame
    if !(x.norm() < t) {
        return Err(Error::BadBoost { norm: x.norm() / t });
    }
    let beta = x * mean.x.signum() / t;
    let b2 = beta.norm_squared();
    let g = 1.0 / (1.0 - b2).sqrt();
    let mut l = Matrix4::identity();
    l[(0, 0)] = g;
    for i in 0..3 {
        l[(0, i + 1)] = -g * beta[i];
        l[(i + 1, 0)] = -g * beta[i];
        for k in 0..3 {
            if b2 > 0.0 {
                l[(i + 1, k + 1)] += (g - 1.0) * beta[i] * beta[k] / b2;
            }
        }
    }
    Ok(l)
}

/// 2x2 compound matrix over `PAIRS` (rows and columns).
fn compound2(a: &Matrix4<f64>) -> nalgebra::Matrix6<f64> {
    nalgebra::Matrix6::from_fn(|p, q| {
        let (i, k) = (PAIRS[p].0 - 1, PAIRS[p].1 - 1);
        let (j, l) = (PAIRS[q].0 - 1, PAIRS[q].1 - 1);
        a[(i, j)] * a[(k, l)] - a[(i, l)] * a[(k, j)]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityRecovery {
    /// Inverse of the adjugate block, in the frame the minors were solved in.
    pub delta: Matrix3<f64>,
    /// `Delta / det(Delta)` carried to the input frame, proportional to `Q`.
    pub q_scaled: Matrix3<f64>,
    pub v_hat: Vector3<f64>,
    /// `(v_hat | Q_scaled)`, rows 2..4 of the ambiguity up to one common factor.
    pub vq: Matrix3x4<f64>,
    pub ls_residual: f64,
    pub ls_condition: f64,
}

/// Row pairs of the three minor blocks, 0-based inside `Q`.
const ROW_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Rebuilds `(v | Q)` for the input frame of `sol`. The fit runs in the
/// frame the minors were solved in and is carried back through the boost.
pub fn recover_ambiguity(sol: &MinorSolution) -> Result<AmbiguityRecovery> {
    let frame = Matrix4::from_row_slice(&sol.rest_frame);
    let back = compound2(&frame.try_inverse().ok_or(Error::SingularDelta)?);
    let w: Vec<f64> = (0..18)
        .map(|k| {
            let (blk, q) = (k / 6, k % 6);
            (0..6).map(|p| sol.w[blk * 6 + p] * back[(p, q)]).sum()
        })
        .collect();
    // lambda * adj(Q)
    let adj = Matrix3::new(
        w[17], -w[11], w[5], //
        -w[16], w[10], -w[4], //
        w[15], -w[9], w[3],
    );
    let det_adj = adj.determinant();
    if !(det_adj.abs() > DELTA_TOL * adj.norm().powi(3)) {
        return Err(Error::SingularDelta);
    }
    let delta = adj.try_inverse().ok_or(Error::SingularDelta)?;
    // lambda A^{r,1}_{s,c} = vh_r Delta_{s,c} - vh_s Delta_{r,c}
    let mut s = DMatrix::zeros(9, 3);
    let mut b = DVector::zeros(9);
    for (blk, &(r, q)) in ROW_PAIRS.iter().enumerate() {
        for c in 0..3 {
            let eq = blk * 3 + c;
            s[(eq, r)] = delta[(q, c)];
            s[(eq, q)] = -delta[(r, c)];
            b[eq] = w[blk * 6 + c];
        }
    }
    let svd = svd(&s);
    let ls_condition = svd.condition();
    if !(ls_condition <= LS_COND_MAX) {
        return Err(Error::IllConditionedLS { cond: ls_condition });
    }
    let x = svd.solve(&b, 0.0);
    let ls_residual = (&s * &x - &b).norm();
    let v_hat = Vector3::new(x[0], x[1], x[2]);
    let q_scaled = delta / delta.determinant();
    let mut vq = Matrix3x4::zeros();
    vq.set_column(0, &v_hat);
    vq.fixed_view_mut::<3, 3>(0, 1).copy_from(&q_scaled);
    let vq = vq * frame;
    let v_hat = vq.column(0).into_owned();
    let q_scaled = vq.fixed_view::<3, 3>(0, 1).into_owned();
    Ok(AmbiguityRecovery {
        delta,
        q_scaled,
        v_hat,
        vq,
        ls_residual,
        ls_condition,
    })
}

/// `T = (v | Q) M1`; albedo is `|T_j|` scaled to a maximum of 1 and normals
/// are `T_j / |T_j|` with one global sign so that the mean `n3` is negative.
pub fn extract_surface(m1: &PixelGrid<Vector4<f64>>, vq: &Matrix3x4<f64>) -> Result<(AlbedoMap, NormalField)> {
    let t = m1.map(|c| vq * c);
    let norms = t.map(|x| x.norm());
    let max = norms.masked_values().copied().fold(0.0, f64::max);
    if let Some(i) = norms
        .masked_indices()
        .find(|&i| !(norms.values()[i] > ZERO_COLUMN_TOL * max))
    {
        let index = norms.masked_indices().position(|j| j == i).unwrap_or(i);
        return Err(Error::ZeroColumn { index });
    }
    let mean_n3: f64 = t.masked_indices().map(|i| t.values()[i].z / norms.values()[i]).sum();
    let sign = if mean_n3 > 0.0 { -1.0 } else { 1.0 };
    let normals = NormalField::from_estimate(t.map(|x| x * sign));
    let (rows, cols, mask, values) = norms.into_parts();
    let values = values
        .iter()
        .zip(&mask)
        .map(|(&r, &m)| if m { r / max } else { 1.0 })
        .collect();
    let albedo = AlbedoMap::new(PixelGrid::new(rows, cols, mask, values)?)?;
    Ok((albedo, normals))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub degeneracy_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            degeneracy_threshold: DEFAULT_DEGENERACY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Constraint violation before and after enforcement.
    pub sh1_residual_raw: f64,
    pub sh1_residual: f64,
    pub rank_gap: f64,
    pub second_sv_ratio: f64,
    pub condition_ratio: f64,
    pub ls_residual: f64,
    pub degenerate: bool,
    pub minors: Vec<f64>,
    /// Row-major `(v | Q)`.
    pub vq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    /// Known up to one global factor; normalized to a maximum of 1.
    pub albedo: AlbedoMap,
    pub normals: NormalField,
    pub diagnostics: Diagnostics,
}

pub fn solve_ups_perspective(images: &ImageStack, camera: &CameraModel) -> Result<ReconstructionReport> {
    solve_ups_perspective_with(images, camera, &SolverConfig::default())
}

pub fn solve_ups_perspective_with(
    images: &ImageStack,
    camera: &CameraModel,
    config: &SolverConfig,
) -> Result<ReconstructionReport> {
    camera.require_perspective()?;
    if images.rows() * images.cols() != images.mask().len() {
        return Err(Error::DimensionMismatch {
            expected: images.rows() * images.cols(),
            found: images.mask().len(),
        });
    }
    let raw = factorize_rank4(images).map_err(|e| e.at(Stage::Factorize))?;
    let f = enforce_sh1_constraint(&raw).map_err(|e| e.at(Stage::Constraint))?;
    let m1 = f.m1_grid();
    let sol = solve_minor_system_with(&m1, camera, config).map_err(|e| e.at(Stage::Minors))?;
    let amb = recover_ambiguity(&sol).map_err(|e| e.at(Stage::Ambiguity))?;
    let (albedo, normals) = extract_surface(&m1, &amb.vq).map_err(|e| e.at(Stage::Extract))?;
    Ok(ReconstructionReport {
        albedo,
        normals,
        diagnostics: Diagnostics {
            sh1_residual_raw: raw.sh1_residual,
            sh1_residual: f.sh1_residual,
            rank_gap: f.rank_gap,
            second_sv_ratio: sol.second_sv_ratio,
            condition_ratio: sol.condition_ratio,
            ls_residual: amb.ls_residual,
            degenerate: false,
            minors: sol.w.to_vec(),
            vq: amb.vq.transpose().iter().copied().collect(),
        },
    })
}
