//! Paired RGB/LWIR recordings on disk: ingest, seeded train/val split and
//! batch generation of the eleven fused variants.
//!
//! Recording layout:
//!
//! ```text
//! root/<recording_id>/rgb/<frame>.png
//! root/<recording_id>/lwir/<frame>.png
//! root/<recording_id>/labels/<frame>.txt      "class_id cx cy w h" per line
//! root/<recording_id>/meta.csv                frame,timestamp_ms,lux,color_label
//! ```

mod annotation;
mod fuse;
mod ingest;
mod manifest;
mod split;

use std::path::PathBuf;

pub use crate::detection::Annotation;
pub use annotation::{format_annotations, parse_annotations, read_label_file};
pub use fuse::{batch_fuse, fused_file_stem, ingest_fused, BatchReport, FusedSample};
pub use ingest::{ingest, ingest_pair_dirs, IngestIssue, IngestReport, MetaRow};
pub use manifest::{read_manifest, write_manifest, PairedSample};
pub use split::{split, SplitOptions, Stratify};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}:{line}: malformed annotation: {reason}")]
    MalformedAnnotation {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DatasetError {
        let path = path.into();
        move |source| DatasetError::Io { path, source }
    }
}
