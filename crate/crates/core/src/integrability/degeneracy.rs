use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CDerivedFields, IntegrabilityMatrix, MatrixKind};
use crate::error::{Error, Result};
use crate::linalg::singular_values;

pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-8;
/// Relative size below which a block of c-fields counts as vanishing.
const PATTERN_TOL: f64 = 1e-8;

/// Sufficient degeneracy conditions readable from the c-fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DegeneracyPattern {
    Planar,
    NuZero,
    NvZero,
    NuPlusMinusNv,
    Unclassified,
}

impl DegeneracyPattern {
    pub fn tag(self) -> &'static str {
        match self {
            DegeneracyPattern::Planar => "planar",
            DegeneracyPattern::NuZero => "n_u = 0",
            DegeneracyPattern::NvZero => "n_v = 0",
            DegeneracyPattern::NuPlusMinusNv => "n_u = ±n_v",
            DegeneracyPattern::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for DegeneracyPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Uses `rho n x rho n_k = (-c^{34}_k, c^{24}_k, -c^{23}_k)`: the normal
/// derivative along `k` vanishes exactly when those three fields do.
pub(crate) fn detect_pattern(cf: &CDerivedFields) -> DegeneracyPattern {
    let mut scale = 0.0f64;
    let (mut nu, mut nv, mut plus, mut minus) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in cf.cu.masked_indices() {
        let (a, b) = (&cf.cu.values()[i], &cf.cv.values()[i]);
        for s in 3..6 {
            scale = scale.max(a[s].abs()).max(b[s].abs());
            nu = nu.max(a[s].abs());
            nv = nv.max(b[s].abs());
            plus = plus.max((a[s] - b[s]).abs());
            minus = minus.max((a[s] + b[s]).abs());
        }
    }
    let small = |x: f64| x <= PATTERN_TOL * scale;
    if scale == 0.0 || (small(nu) && small(nv)) {
        DegeneracyPattern::Planar
    } else if small(nu) {
        DegeneracyPattern::NuZero
    } else if small(nv) {
        DegeneracyPattern::NvZero
    } else if small(plus) || small(minus) {
        DegeneracyPattern::NuPlusMinusNv
    } else {
        DegeneracyPattern::Unclassified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub kind: MatrixKind,
    /// Singular values of the row-normalized matrix, decreasing.
    pub singular_values: Vec<f64>,
    /// `sigma_k / sigma_1` with `k` from [`MatrixKind::rank_index`].
    pub condition_ratio: f64,
    pub threshold: f64,
    pub degenerate: bool,
    /// Set only for degenerate matrices.
    pub matched_pattern: Option<String>,
}

/// Rank test on the row-normalized integrability matrix.
pub fn degeneracy_report(im: &IntegrabilityMatrix, threshold: f64) -> Result<DegeneracyReport> {
    let (n, k) = im.rows.shape();
    if n < k {
        return Err(Error::TooFewPixels { rows: n, cols: k });
    }
    let mut rows = im.rows.clone();
    for mut r in rows.row_iter_mut() {
        let norm = r.norm();
        if norm > 0.0 {
            r /= norm;
        }
    }
    let sv: Vec<f64> = singular_values(&rows).iter().copied().collect();
    let idx = im.kind.rank_index() - 1;
    let condition_ratio = if sv[0] > 0.0 { sv[idx] / sv[0] } else { 0.0 };
    let degenerate = condition_ratio < threshold;
    Ok(DegeneracyReport {
        kind: im.kind,
        singular_values: sv,
        condition_ratio,
        threshold,
        degenerate,
        matched_pattern: degenerate.then(|| im.pattern.tag().to_string()),
    })
}
