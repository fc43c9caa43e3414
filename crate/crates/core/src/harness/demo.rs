use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{fmt_f64, Tabular};
use crate::error::Result;
use crate::lorentz::{boost_eigencheck, decompose, is_scaled_gbr, lower_submatrix, ScaledLorentz, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzSample {
    pub s: f64,
    pub v: [f64; 3],
    pub gamma: f64,
    pub proper: bool,
    pub orthochronous: bool,
    /// Row-major realized matrix.
    pub matrix: [f64; 16],
    /// Largest entry of `realize(decompose(A)) - A`.
    pub round_trip_error: f64,
    /// Sorted eigenvalues of the symmetric boost block.
    pub boost_eigenvalues: [f64; 3],
    /// Whether the lower 3x3 block is a scaled GBR matrix.
    pub lower_is_gbr: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzDemo {
    pub samples: Vec<LorentzSample>,
    pub max_round_trip_error: f64,
}

/// Samples `count` scaled Lorentz matrices and decomposes each one again.
pub fn lorentz_demo(count: usize, max_speed: f64, seed: u64) -> Result<LorentzDemo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..count)
        .map(|_| {
            let x = ScaledLorentz::random(&mut rng, max_speed);
            let a = x.realize();
            let back = decompose(&a, DEFAULT_TOL)?.realize();
            let mut matrix = [0.0; 16];
            matrix.copy_from_slice(a.transpose().as_slice());
            Ok(LorentzSample {
                s: x.s(),
                v: (*x.v()).into(),
                gamma: x.gamma(),
                proper: x.proper(),
                orthochronous: x.orthochronous(),
                matrix,
                round_trip_error: (back - a).amax(),
                boost_eigenvalues: boost_eigencheck(x.v())?,
                lower_is_gbr: is_scaled_gbr(&lower_submatrix(&a), DEFAULT_TOL),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_round_trip_error = samples.iter().map(|s| s.round_trip_error).fold(0.0, f64::max);
    Ok(LorentzDemo {
        samples,
        max_round_trip_error,
    })
}

impl Tabular for LorentzDemo {
    fn csv_header(&self) -> &'static str {
        "s,v1,v2,v3,gamma,proper,orthochronous,round_trip_error,lower_is_gbr"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.samples
            .iter()
            .map(|x| {
                format!(
                    "{},{},{},{},{},{},{},{:e},{}",
                    fmt_f64(x.s),
                    fmt_f64(x.v[0]),
                    fmt_f64(x.v[1]),
                    fmt_f64(x.v[2]),
                    fmt_f64(x.gamma),
                    x.proper,
                    x.orthochronous,
                    x.round_trip_error,
                    x.lower_is_gbr
                )
            })
            .collect()
    }
}
