use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AlbedoMap;
use crate::error::{Error, Result};
use crate::grid::PixelGrid;

/// Procedural albedo textures. All are smooth so that albedo derivatives stay bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlbedoKind {
    White,
    Stripes,
    Blobs,
    VoronoiLike,
}

impl AlbedoKind {
    pub const ALL: [AlbedoKind; 4] = [
        AlbedoKind::White,
        AlbedoKind::Stripes,
        AlbedoKind::Blobs,
        AlbedoKind::VoronoiLike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlbedoKind::White => "White",
            AlbedoKind::Stripes => "Stripes",
            AlbedoKind::Blobs => "Blobs",
            AlbedoKind::VoronoiLike => "VoronoiLike",
        }
    }
}

impl fmt::Display for AlbedoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlbedoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlbedoKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadParams(format!("unknown albedo kind {s:?}")))
    }
}

/// Full-mask albedo in `[0.3, 1]` over normalized coordinates `x, y` in about `[-1, 1]`.
pub fn synth_albedo(kind: AlbedoKind, rows: usize, cols: usize, seed: u64) -> AlbedoMap {
    let half = rows.min(cols).max(1) as f64 / 2.0;
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field: Box<dyn Fn(f64, f64) -> f64> = match kind {
        AlbedoKind::White => Box::new(|_, _| 1.0),
        AlbedoKind::Stripes => {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let (ca, sa) = (angle.cos(), angle.sin());
            Box::new(move |x, y| {
                let t = (x * ca + y * sa) * 3.0 * std::f64::consts::PI;
                0.65 + 0.35 * t.sin()
            })
        }
        AlbedoKind::Blobs => {
            let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    (
                        rng.random_range(-0.9..0.9),
                        rng.random_range(-0.9..0.9),
                        rng.random_range(0.12..0.3),
                        rng.random_range(-0.35..0.35),
                    )
                })
                .collect();
            Box::new(move |x, y| {
                let s: f64 = blobs
                    .iter()
                    .map(|&(bx, by, w, a)| a * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * w * w)).exp())
                    .sum();
                (0.65 + s).clamp(0.3, 1.0)
            })
        }
        AlbedoKind::VoronoiLike => {
            // soft nearest-site assignment: a Voronoi pattern with blurred cell borders
            let sites: Vec<(f64, f64, f64)> = (0..12)
                .map(|_| {
                    (
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.3..1.0),
                    )
                })
                .collect();
            let tau = 0.01;
            Box::new(move |x, y| {
                let d2: Vec<f64> = sites
                    .iter()
                    .map(|&(sx, sy, _)| (x - sx).powi(2) + (y - sy).powi(2))
                    .collect();
                let dmin = d2.iter().copied().fold(f64::INFINITY, f64::min);
                let (mut num, mut den) = (0.0, 0.0);
                for (d, &(_, _, a)) in d2.iter().zip(&sites) {
                    let w = (-(d - dmin) / tau).exp();
                    num += w * a;
                    den += w;
                }
                num / den
            })
        }
    };
    let grid = PixelGrid::from_fn(rows, cols, |r, c| field((c as f64 - cc) / half, (r as f64 - cr) / half));
    AlbedoMap::new(grid).expect("procedural albedo is positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_positive_bounded_and_seeded() {
        for kind in AlbedoKind::ALL {
            let a = synth_albedo(kind, 40, 30, 5);
            assert!(a.grid().values().iter().all(|&r| (0.3..=1.0).contains(&r)), "{kind}");
            assert_eq!(synth_albedo(kind, 40, 30, 5), a);
            assert_eq!(kind.name().parse::<AlbedoKind>().unwrap(), kind);
        }
        assert!(synth_albedo(AlbedoKind::White, 3, 3, 0)
            .grid()
            .values()
            .iter()
            .all(|&r| r == 1.0));
    }
}
