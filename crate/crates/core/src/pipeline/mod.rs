//! The live loop: lux → category → active model → fuse → detect → filter →
//! actuate → log.
//!
//! [`run_trial`] is strictly single-threaded and byte-reproducible with the
//! mock backend. [`run_trial_threaded`] splits capture, inference and
//! actuation into three threads joined by latest-wins slots.

mod config;
mod events;
mod run;
mod slot;
mod source;

use std::path::PathBuf;

pub use config::{BackendKind, DetectorConfig, PipelineConfig};
pub use events::{RunEvent, TrialLog, DETECTION_LOG_HEADER};
pub use run::{run_trial, run_trial_threaded, ThreadedOptions};
pub use slot::LatestSlot;
pub use source::{FrameSource, LuxStep, ReplaySource, SourceFrame, SyntheticTrial};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("frame {frame_id}: {message}")]
    Source { frame_id: String, message: String },
    #[error(transparent)]
    Registry(#[from] crate::registry::RegistryError),
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Detect(#[from] crate::detection::DetectError),
    #[error(transparent)]
    Turret(#[from] crate::turret::TurretError),
    #[error(transparent)]
    Illumination(#[from] crate::illumination::IlluminationError),
    #[error("cannot write log: {0}")]
    Log(String),
}
