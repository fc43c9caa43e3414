//! Scaled Lorentz transformations, generalized bas-relief matrices and 2x2 minors.
//!
//! With `J = diag(-1, 1, 1, 1)`, a scaled Lorentz matrix satisfies
//! `A^T J A = s^2 J`. Every such matrix is
//!
//! ```text
//! A = s [ e1 g      e1 g v^T O ]
//!       [ e2 g v    e2 C O     ]      C = I + g^2/(1+g) v v^T,  g = 1/sqrt(1 - |v|^2)
//! ```
//!
//! with `e1 = +1` iff orthochronous and `e1 e2 = +1` iff proper.

mod gbr;

use nalgebra::{DMatrix, Dim, Matrix, Matrix3, Matrix4, Quaternion, RawStorage, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{minkowski, symmetric_eigen};

pub use gbr::{is_scaled_gbr, lower_submatrix, make_gbr, GbrParams};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledLorentz {
    s: f64,
    v: Vector3<f64>,
    o: Matrix3<f64>,
    proper: bool,
    orthochronous: bool,
    gamma: f64,
}

fn gamma_of(v: &Vector3<f64>) -> Result<f64> {
    let norm = v.norm();
    if !(norm < 1.0) {
        return Err(Error::BadBoost { norm });
    }
    Ok(1.0 / (1.0 - norm * norm).sqrt())
}

/// `I + g^2/(1+g) v v^T`.
pub fn boost_matrix(v: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let g = gamma_of(v)?;
    Ok(Matrix3::identity() + v * v.transpose() * (g * g / (1.0 + g)))
}

/// Sorted eigenvalues of the spatial boost block; `{1, 1, gamma}` in theory.
pub fn boost_eigencheck(v: &Vector3<f64>) -> Result<[f64; 3]> {
    let c = boost_matrix(v)?;
    let (e, _) = symmetric_eigen(&DMatrix::from_fn(3, 3, |i, j| c[(i, j)]));
    Ok([e[0], e[1], e[2]])
}

impl ScaledLorentz {
    pub fn new(s: f64, v: Vector3<f64>, o: Matrix3<f64>, proper: bool, orthochronous: bool) -> Result<Self> {
        if s == 0.0 || !s.is_finite() {
            return Err(Error::BadParams(format!("scale must be finite and non-zero, got {s}")));
        }
        let gamma = gamma_of(&v)?;
        let orth = (o.transpose() * o - Matrix3::identity()).amax();
        if orth > 1e-10 || (o.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::BadParams("O must be a rotation matrix".into()));
        }
        Ok(Self {
            s,
            v,
            o,
            proper,
            orthochronous,
            gamma,
        })
    }

    /// Seeded sample with `s` in `[0.5, 2]`, `|v| <= max_speed`, uniform rotation and random flags.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_speed: f64) -> Self {
        let s = rng.random_range(0.5..2.0);
        let dir = Vector3::<f64>::from_fn(|_, _| rng.sample(StandardNormal)).normalize();
        let v = dir * rng.random_range(0.0..=max_speed);
        let o = random_rotation(rng);
        Self::new(s, v, o, rng.random_bool(0.5), rng.random_bool(0.5)).expect("sampled parameters are valid")
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn v(&self) -> &Vector3<f64> {
        &self.v
    }

    pub fn o(&self) -> &Matrix3<f64> {
        &self.o
    }

    pub fn proper(&self) -> bool {
        self.proper
    }

    pub fn orthochronous(&self) -> bool {
        self.orthochronous
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(e1, e2)` sign flags of the block formula.
    pub fn epsilons(&self) -> (f64, f64) {
        let e1 = if self.orthochronous { 1.0 } else { -1.0 };
        let e2 = if self.proper { e1 } else { -e1 };
        (e1, e2)
    }

    pub fn realize(&self) -> Matrix4<f64> {
        let (e1, e2) = self.epsilons();
        let g = self.gamma;
        let c = Matrix3::identity() + self.v * self.v.transpose() * (g * g / (1.0 + g));
        let top = self.o.transpose() * self.v * (e1 * g);
        let block = c * self.o * e2;
        let mut a = Matrix4::zeros();
        a[(0, 0)] = e1 * g;
        for i in 0..3 {
            a[(0, i + 1)] = top[i];
            a[(i + 1, 0)] = e2 * g * self.v[i];
            for j in 0..3 {
                a[(i + 1, j + 1)] = block[(i, j)];
            }
        }
        a * self.s
    }
}

/// Uniformly distributed rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = Quaternion::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub is_scaled_lorentz: bool,
    /// Candidate scale `|det A|^(1/4)`.
    pub s: f64,
    pub proper: bool,
    pub orthochronous: bool,
    /// `|A^T J A - s^2 J|_F / s^2`.
    pub residual: f64,
}

pub fn classify(a: &Matrix4<f64>, tol: f64) -> Classification {
    let det = a.determinant();
    let s = det.abs().powf(0.25);
    if !(s > 0.0) || !s.is_finite() {
        return Classification {
            is_scaled_lorentz: false,
            s,
            proper: false,
            orthochronous: false,
            residual: f64::INFINITY,
        };
    }
    let j = minkowski();
    let at = a / s;
    let residual = (at.transpose() * j * at - j).norm();
    Classification {
        is_scaled_lorentz: residual <= tol,
        s,
        proper: det > 0.0,
        orthochronous: at[(0, 0)] > 0.0,
        residual,
    }
}

/// Canonical `(s > 0, v, O, flags)` with `realize(decompose(A)) = A`.
pub fn decompose(a: &Matrix4<f64>, tol: f64) -> Result<ScaledLorentz> {
    let cls = classify(a, tol);
    if !cls.is_scaled_lorentz {
        return Err(Error::NotLorentz { residual: cls.residual });
    }
    let at = a / cls.s;
    let gamma = at[(0, 0)].abs();
    let e1 = if cls.orthochronous { 1.0 } else { -1.0 };
    let e2 = if cls.proper { e1 } else { -e1 };
    let v = Vector3::new(at[(1, 0)], at[(2, 0)], at[(3, 0)]) * (e2 / gamma);
    let norm = v.norm();
    if !(norm < 1.0) {
        return Err(Error::BadBoost { norm });
    }
    let g = gamma_of(&v)?;
    let c_inv = Matrix3::identity() - v * v.transpose() * (g / (1.0 + g));
    let o = c_inv * at.fixed_view::<3, 3>(1, 1) * e2;
    Ok(ScaledLorentz {
        s: cls.s,
        v,
        o,
        proper: cls.proper,
        orthochronous: cls.orthochronous,
        gamma: g,
    })
}

/// 1-based row pair `i < k` and column pair `j < l` of a 2x2 minor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Minor2Index {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    pub l: usize,
}

impl Minor2Index {
    pub const fn new(i: usize, k: usize, j: usize, l: usize) -> Self {
        Self { i, k, j, l }
    }
}

/// `A_ij A_kl - A_kj A_il` with 1-based indices.
pub fn minor2<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(a: &Matrix<f64, R, C, S>, idx: Minor2Index) -> Result<f64> {
    let Minor2Index { i, k, j, l } = idx;
    let (nr, nc) = a.shape();
    if i == 0 || j == 0 || i >= k || j >= l || k > nr || l > nc {
        return Err(Error::IndexOutOfBounds);
    }
    let e = |r: usize, c: usize| a[(r - 1, c - 1)];
    Ok(e(i, j) * e(k, l) - e(k, j) * e(i, l))
}
