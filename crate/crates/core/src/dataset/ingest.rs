use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{read_label_file, DatasetError, PairedSample};

/// A file that could not be ingested and why.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestIssue {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub samples: Vec<PairedSample>,
    pub issues: Vec<IngestIssue>,
}

impl IngestReport {
    fn issue(&mut self, path: impl Into<PathBuf>, reason: impl Into<String>) {
        self.issues.push(IngestIssue {
            path: path.into(),
            reason: reason.into(),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetaRow {
    pub frame: String,
    pub timestamp_ms: i64,
    pub lux: f64,
    pub color_label: String,
}

fn png_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>, DatasetError> {
    files_with_ext(dir, "png")
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>, DatasetError> {
    let mut out = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir).map_err(DatasetError::io(dir))? {
        let path = entry.map_err(DatasetError::io(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

fn read_meta(path: &Path) -> Result<BTreeMap<String, MetaRow>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for (i, row) in r.deserialize::<MetaRow>().enumerate() {
        let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
        out.insert(row.frame.clone(), row);
    }
    Ok(out)
}

fn check_png(path: &Path) -> Result<(u32, u32), String> {
    image::image_dimensions(path).map_err(|e| format!("cannot decode image: {e}"))
}

/// Walks every recording under `root`. Unusable frames are reported in
/// [`IngestReport::issues`] and left out of the samples.
pub fn ingest(root: &Path) -> Result<IngestReport, DatasetError> {
    let mut report = IngestReport::default();
    let mut recordings: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(DatasetError::io(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("rgb").is_dir() || p.join("lwir").is_dir())
        .collect();
    recordings.sort();
    for rec in recordings {
        let recording_id = rec
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let meta_path = rec.join("meta.csv");
        let meta = if meta_path.is_file() {
            match read_meta(&meta_path) {
                Ok(m) => m,
                Err(e) => {
                    report.issue(&meta_path, e);
                    continue;
                }
            }
        } else {
            report.issue(&meta_path, "missing meta.csv");
            continue;
        };
        ingest_recording(&rec, &recording_id, Some(&meta), &mut report)?;
    }
    Ok(report)
}

/// Pairs same-stem PNGs from two flat directories. Timestamps and lux are
/// zero and the color label is empty.
pub fn ingest_pair_dirs(
    rgb_dir: &Path,
    lwir_dir: &Path,
    labels_dir: Option<&Path>,
) -> Result<IngestReport, DatasetError> {
    let mut report = IngestReport::default();
    let rgb = png_stems(rgb_dir)?;
    let lwir = png_stems(lwir_dir)?;
    let labels = match labels_dir {
        Some(d) => Some(files_with_ext(d, "txt")?),
        None => None,
    };
    if rgb.is_empty() {
        report.issue(rgb_dir, "no PNG files");
    }
    pair_frames(
        "",
        &rgb,
        &lwir,
        labels.as_ref(),
        None,
        lwir_dir,
        &mut report,
    );
    Ok(report)
}

fn ingest_recording(
    rec: &Path,
    recording_id: &str,
    meta: Option<&BTreeMap<String, MetaRow>>,
    report: &mut IngestReport,
) -> Result<(), DatasetError> {
    let rgb = png_stems(&rec.join("rgb"))?;
    let lwir = png_stems(&rec.join("lwir"))?;
    let labels = files_with_ext(&rec.join("labels"), "txt")?;
    pair_frames(
        recording_id,
        &rgb,
        &lwir,
        Some(&labels),
        meta,
        &rec.join("lwir"),
        report,
    );
    Ok(())
}

fn pair_frames(
    recording_id: &str,
    rgb: &BTreeMap<String, PathBuf>,
    lwir: &BTreeMap<String, PathBuf>,
    labels: Option<&BTreeMap<String, PathBuf>>,
    meta: Option<&BTreeMap<String, MetaRow>>,
    lwir_dir: &Path,
    report: &mut IngestReport,
) {
    let rgb_stems: BTreeSet<&String> = rgb.keys().collect();
    for (stem, path) in lwir {
        if !rgb_stems.contains(stem) {
            report.issue(path, "missing RGB counterpart");
        }
    }
    for (frame, rgb_path) in rgb {
        let Some(lwir_path) = lwir.get(frame) else {
            report.issue(
                lwir_dir.join(format!("{frame}.png")),
                format!("missing LWIR counterpart for {}", rgb_path.display()),
            );
            continue;
        };
        if let Err(e) = check_png(rgb_path) {
            report.issue(rgb_path, e);
            continue;
        }
        if let Err(e) = check_png(lwir_path) {
            report.issue(lwir_path, e);
            continue;
        }
        let (label_path, annotations) = match labels {
            Some(labels) => match labels.get(frame) {
                Some(p) => match read_label_file(p) {
                    Ok(a) => (Some(p.clone()), a),
                    Err(e) => {
                        report.issue(p, e.to_string());
                        continue;
                    }
                },
                None => {
                    report.issue(rgb_path, "missing annotation file");
                    continue;
                }
            },
            None => (None, Vec::new()),
        };
        let (timestamp_ms, lux, color_label) = match meta {
            Some(meta) => match meta.get(frame) {
                Some(m) if m.lux.is_finite() && m.lux >= 0.0 => {
                    (m.timestamp_ms, m.lux, m.color_label.clone())
                }
                Some(m) => {
                    report.issue(rgb_path, format!("invalid lux {}", m.lux));
                    continue;
                }
                None => {
                    report.issue(rgb_path, "no meta.csv row for frame");
                    continue;
                }
            },
            None => (0, 0.0, String::new()),
        };
        let sample_id = if recording_id.is_empty() {
            frame.clone()
        } else {
            format!("{recording_id}_{frame}")
        };
        report.samples.push(PairedSample {
            sample_id,
            recording_id: recording_id.to_string(),
            frame: frame.clone(),
            rgb_path: rgb_path.clone(),
            lwir_path: lwir_path.clone(),
            label_path,
            timestamp_ms,
            lux,
            color_label,
            annotations,
        });
    }
}
