//! Confidence statistics: per-trial means, spread and standard error,
//! per-color and per-model aggregates, deltas, heatmap export and the
//! evaluation report that ties them together.

mod aggregate;
mod heatmap;
mod report;
mod stats;

pub use aggregate::{
    aggregate_by_color, aggregate_by_fusion_category, CellStats, ColorMean, ColorTable, Trial,
    HELD_OUT_COLORS, MUG_COLORS,
};
pub use heatmap::{export_heatmap_data, quintile_tiers, HeatmapExport, HeatmapRow};
pub use report::{
    load_trials, rankings_from_cells, read_trial_manifest, DeltaRow, EvaluationOptions,
    EvaluationReport, TrialManifestRow,
};
pub use stats::{
    delta_report, mean, round_percent, sem, std_dev, trial_mean, Delta, StdConvention, TrialStats,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("trial {0:?} has no detected frames")]
    EmptyTrial(String),
    #[error("cannot average an empty list")]
    Empty,
    #[error("standard error needs n >= 1")]
    ZeroCount,
    #[error("standard deviation must be finite and non-negative, got {0}")]
    InvalidStd(f64),
    #[error("no detected trials to aggregate")]
    EmptyGrid,
    #[error("trial {trial_id:?}: {reason}")]
    InvalidTrial { trial_id: String, reason: String },
    #[error("trial {trial_id:?} references unknown model {model_id:?}")]
    UnknownModel { trial_id: String, model_id: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error(transparent)]
    Registry(#[from] crate::registry::RegistryError),
}
