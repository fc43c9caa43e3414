//! Dense decompositions backed by faer, with nalgebra types at the boundary
//! and the sign and ordering conventions the pipeline relies on.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector, Matrix4};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD; singular values decrease and `v` holds right singular vectors as columns.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    /// Minimum-norm least-squares solution of `A x = b`, ignoring singular values below `tol * sigma_1`.
    pub fn solve(&self, b: &DVector<f64>, tol: f64) -> DVector<f64> {
        let cut = tol * self.singular_values.get(0).copied().unwrap_or(0.0);
        let mut y = self.u.transpose() * b;
        for (k, s) in self.singular_values.iter().enumerate() {
            y[k] = if *s > cut && *s > 0.0 { y[k] / s } else { 0.0 };
        }
        &self.v * y
    }

    pub fn condition(&self) -> f64 {
        let n = self.singular_values.len();
        let smin = self.singular_values[n - 1];
        if smin > 0.0 {
            self.singular_values[0] / smin
        } else {
            f64::INFINITY
        }
    }
}

pub(crate) fn svd(m: &DMatrix<f64>) -> Svd {
    let svd = to_faer(m).thin_svd().expect("svd converges on finite input");
    let k = m.nrows().min(m.ncols());
    Svd {
        u: from_faer(svd.U()),
        singular_values: DVector::from_fn(k, |i, _| svd.S().column_vector()[i]),
        v: from_faer(svd.V()),
    }
}

/// Singular values in decreasing order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_vec(to_faer(m).singular_values().expect("svd converges on finite input"))
}

/// Right singular vector of the smallest singular value of a tall matrix, plus all singular values.
pub(crate) fn null_vector(m: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    debug_assert!(m.nrows() >= m.ncols());
    let svd = svd(m);
    let k = m.ncols();
    (svd.v.column(k - 1).into_owned(), svd.singular_values)
}

/// `A^+` through the thin SVD.
pub(crate) fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = svd(m);
    let cut = f64::EPSILON * m.nrows().max(m.ncols()) as f64 * svd.singular_values.get(0).copied().unwrap_or(0.0);
    let mut ut = svd.u.transpose();
    for (k, s) in svd.singular_values.iter().enumerate() {
        let inv = if *s > cut { 1.0 / s } else { 0.0 };
        ut.row_mut(k).scale_mut(inv);
    }
    &svd.v * ut
}

/// Eigenvalues in increasing order with matching unit eigenvectors as columns.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let e = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .expect("eigensolver converges on finite input");
    let vals = DVector::from_fn(m.nrows(), |i, _| e.S().column_vector()[i]);
    (vals, from_faer(e.U()))
}

/// Flips `v` so that its largest-magnitude component is positive.
pub(crate) fn canonical_sign_largest(v: &mut DVector<f64>) -> bool {
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v.neg_mut();
        true
    } else {
        false
    }
}

/// Flips `v` so that its first component exceeding `tol` in magnitude is positive.
pub(crate) fn canonical_sign_first(v: &mut DVector<f64>, tol: f64) {
    if let Some(x) = v.iter().find(|x| x.abs() > tol) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

pub(crate) fn minkowski() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, 1.0, 1.0, 1.0))
}
