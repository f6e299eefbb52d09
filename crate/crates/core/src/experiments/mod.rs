//! Presets, experiment cells, manifests and the job runner.

mod cells;
mod manifest;
mod presets;
mod runner;
mod studies;

pub use cells::{
    aggregate, aggregate_rows, default_id, run_cell, AggregateRow, CellOptions, CellRow, CellSpec, CurvePoint,
    ReferenceCache, TAIL_WINDOW,
};
pub use manifest::{
    duopoly_matrix, mean_based_convergence_experiment, player_sweep, run_manifest, staggered_entry_experiment, AgentEntry,
    CellTemplate, Composition, ExperimentResult, Manifest, MatrixBlock, SweepBlock, DEFAULT_ROSTER, Q_LEARNING_HORIZON,
};
pub use presets::{compute_references, PresetId, References, DEFAULT_HORIZON, DEFAULT_SEEDS, GRID_POINTS};
pub use runner::{parallel_enabled, run_jobs, run_sequential};
pub use studies::{ConvergenceRow, ConvergenceStudy, StaggeredRow, StaggeredStudy};
