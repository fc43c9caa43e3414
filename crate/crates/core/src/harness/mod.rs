//! Datasets, evaluation and the experiment drivers behind the CLI.

mod dataset;
mod demo;
mod eval;
mod report;
mod sweep;
mod theorem2;

pub use dataset::{
    generate_dataset, is_degenerate, load_dataset, synthesize, DatasetFiles, DatasetManifest, DatasetSpec,
    LoadedDataset, Scene, MANIFEST_NAME,
};
pub use demo::{lorentz_demo, LorentzDemo, LorentzSample};
pub use eval::{mean_angular_error, ortho_twin, resolve_ortho_twin, solve_and_evaluate, EvalResult};
pub use report::{emit_report, fmt_f64, ReportFiles, Tabular};
pub use sweep::{
    failure_tag, run_noise_sweep, run_table_sweep, table_shapes, thread_pool, NoiseCell, NoiseLevel, NoiseSweep,
    TableRow, TableSweep, BREAKDOWN_DEG, THREADS_ENV,
};
pub use theorem2::{
    run_theorem2_experiment, Theorem2Report, TransformKind, TransformResidual, MAX_GENERIC_SPEED, MIN_GENERIC_SPEED,
    SEPARATION,
};
