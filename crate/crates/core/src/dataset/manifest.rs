use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_label_file, Annotation, DatasetError};

/// One time-aligned RGB/LWIR frame pair with its labels and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub sample_id: String,
    pub recording_id: String,
    pub frame: String,
    pub rgb_path: PathBuf,
    pub lwir_path: PathBuf,
    pub label_path: Option<PathBuf>,
    pub timestamp_ms: i64,
    pub lux: f64,
    pub color_label: String,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    sample_id: String,
    recording_id: String,
    frame: String,
    rgb_path: String,
    lwir_path: String,
    label_path: String,
    timestamp_ms: i64,
    lux: f64,
    color_label: String,
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn parent_dir(path: &Path) -> &Path {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

fn relative_to(path: &Path, base: &Path) -> String {
    let path = absolute(path);
    path.strip_prefix(base)
        .unwrap_or(&path)
        .to_string_lossy()
        .into_owned()
}

fn resolve(raw: &str, base: &Path) -> PathBuf {
    let p = PathBuf::from(raw);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Writes the manifest CSV. Paths under the manifest's directory are stored
/// relative to it so the tree can be moved as a whole.
pub fn write_manifest(path: &Path, samples: &[PairedSample]) -> Result<(), DatasetError> {
    let parent = parent_dir(path);
    std::fs::create_dir_all(parent).map_err(DatasetError::io(parent))?;
    let base = &absolute(parent);
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for s in samples {
        w.serialize(ManifestRow {
            sample_id: s.sample_id.clone(),
            recording_id: s.recording_id.clone(),
            frame: s.frame.clone(),
            rgb_path: relative_to(&s.rgb_path, base),
            lwir_path: relative_to(&s.lwir_path, base),
            label_path: s
                .label_path
                .as_deref()
                .map(|p| relative_to(p, base))
                .unwrap_or_default(),
            timestamp_ms: s.timestamp_ms,
            lux: s.lux,
            color_label: s.color_label.clone(),
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(DatasetError::io(path))
}

/// Reads a manifest written by [`write_manifest`], loading each label file.
/// Relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PairedSample>, DatasetError> {
    let base = absolute(parent_dir(path));
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in r.deserialize::<ManifestRow>() {
        let row = row.map_err(csv_err)?;
        let label_path = (!row.label_path.is_empty()).then(|| resolve(&row.label_path, &base));
        let annotations = match &label_path {
            Some(p) => read_label_file(p)?,
            None => Vec::new(),
        };
        out.push(PairedSample {
            sample_id: row.sample_id,
            recording_id: row.recording_id,
            frame: row.frame,
            rgb_path: resolve(&row.rgb_path, &base),
            lwir_path: resolve(&row.lwir_path, &base),
            label_path,
            timestamp_ms: row.timestamp_ms,
            lux: row.lux,
            color_label: row.color_label,
            annotations,
        });
    }
    Ok(out)
}
