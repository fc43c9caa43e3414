//! Fixtures shared by the benchmarks.

use ups_core::harness::{synthesize, Scene};
use ups_core::{DatasetSpec, ShapeKind};

/// Clean default scene at `size` pixels, focal length scaled with the grid.
pub fn scene(size: usize) -> Scene {
    let spec = DatasetSpec {
        shape: ShapeKind::MultiBump.default_spec(),
        rows: size,
        cols: size,
        focal: 600.0 * size as f64 / 128.0,
        ..Default::default()
    };
    synthesize(&spec).expect("default scene synthesizes")
}
