//! Uncalibrated photometric stereo under first-order spherical harmonics
//! lighting with a perspective camera, plus the synthetic data, Lorentz
//! algebra and experiment harness around it.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod integrability;
pub mod lorentz;
pub mod psg;
pub mod shading;
pub mod solver;

mod linalg;

pub use error::{Error, Result, Stage};
pub use geometry::{CameraModel, DepthMap, NormalField, Projection, Scheme, ShapeKind, ShapeSpec};
pub use grid::PixelGrid;
pub use harness::{DatasetManifest, DatasetSpec, EvalResult};
pub use integrability::{DegeneracyReport, IntegrabilityMatrix, MatrixKind};
pub use lorentz::{Minor2Index, ScaledLorentz};
pub use psg::PsgData;
pub use shading::{AlbedoKind, AlbedoMap, ImageStack, LightingMatrix, MField};
pub use solver::{Diagnostics, MinorSolution, ReconstructionReport, SolverConfig};
