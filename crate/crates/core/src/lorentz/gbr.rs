use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use super::{minor2, Minor2Index};
use crate::error::{Error, Result};

/// `beta * [[lambda, 0, -mu], [0, lambda, -nu], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbrParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub beta: f64,
}

pub fn make_gbr(p: GbrParams) -> Result<Matrix3<f64>> {
    if p.lambda == 0.0 || p.beta == 0.0 {
        return Err(Error::BadParams("GBR needs lambda != 0 and beta != 0".into()));
    }
    if ![p.lambda, p.mu, p.nu, p.beta].iter().all(|x| x.is_finite()) {
        return Err(Error::BadParams("GBR parameters must be finite".into()));
    }
    Ok(Matrix3::new(p.lambda, 0.0, -p.mu, 0.0, p.lambda, -p.nu, 0.0, 0.0, 1.0) * p.beta)
}

/// Minor characterization of scaled GBR matrices; `tol` is relative to `|B|^2`.
pub fn is_scaled_gbr(b: &Matrix3<f64>, tol: f64) -> bool {
    let scale = b.norm_squared();
    if !(scale > 0.0) || b.determinant().abs() <= tol * scale.powf(1.5) {
        return false;
    }
    let m = |i, k, j, l| minor2(b, Minor2Index::new(i, k, j, l)).expect("indices within 3x3");
    let zeros = [m(2, 3, 1, 2), m(2, 3, 1, 3), m(1, 3, 2, 3), m(1, 3, 1, 2)];
    zeros.iter().all(|z| z.abs() <= tol * scale) && (m(2, 3, 2, 3) - m(1, 3, 1, 3)).abs() <= tol * scale
}

/// Rows and columns 2..4.
pub fn lower_submatrix(a: &Matrix4<f64>) -> Matrix3<f64> {
    a.fixed_view::<3, 3>(1, 1).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{classify, ScaledLorentz, DEFAULT_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(r: &mut ChaCha8Rng) -> GbrParams {
        let sign = |r: &mut ChaCha8Rng| if r.random_bool(0.5) { 1.0 } else { -1.0 };
        GbrParams {
            lambda: sign(r) * r.random_range(0.2..3.0),
            mu: r.random_range(-2.0..2.0),
            nu: r.random_range(-2.0..2.0),
            beta: sign(r) * r.random_range(0.2..3.0),
        }
    }

    #[test]
    fn identity_and_validation() {
        let p = GbrParams {
            lambda: 1.0,
            mu: 0.0,
            nu: 0.0,
            beta: 1.0,
        };
        assert_eq!(make_gbr(p).unwrap(), Matrix3::identity());
        assert!(make_gbr(GbrParams { lambda: 0.0, ..p }).is_err());
        assert!(make_gbr(GbrParams { beta: 0.0, ..p }).is_err());
    }

    #[test]
    fn inverse_has_closed_form() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = GbrParams {
                beta: 1.0,
                ..random_params(&mut r)
            };
            let inv = make_gbr(p).unwrap().try_inverse().unwrap();
            let l = p.lambda;
            let want = Matrix3::new(1.0 / l, 0.0, p.mu / l, 0.0, 1.0 / l, p.nu / l, 0.0, 0.0, 1.0);
            assert!((inv - want).amax() < 1e-12);
            assert!(is_scaled_gbr(&inv, 1e-10));
        }
    }

    #[test]
    fn closure_and_detection() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = make_gbr(random_params(&mut r)).unwrap();
            let b = make_gbr(random_params(&mut r)).unwrap();
            assert!(is_scaled_gbr(&a, 1e-10));
            assert!(is_scaled_gbr(&(a * b), 1e-10));
        }
        let t = 30f64.to_radians();
        let rot = Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0);
        assert!(!is_scaled_gbr(&rot, 1e-10));
        // satisfies every minor equation but is singular
        let singular = Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 1.0);
        assert!(!is_scaled_gbr(&singular, 1e-10));
    }

    #[test]
    fn lower_blocks_of_lorentz_matrices_are_invertible() {
        assert_eq!(lower_submatrix(&Matrix4::identity()), Matrix3::identity());
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = ScaledLorentz::random(&mut r, 0.95).realize();
            assert!(classify(&a, DEFAULT_TOL).is_scaled_lorentz);
            assert!(lower_submatrix(&a).determinant().abs() > 1e-6);
        }
    }
}
