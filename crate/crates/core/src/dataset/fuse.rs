use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{format_annotations, read_label_file, Annotation, DatasetError, PairedSample};
use crate::imaging::{blend, register, Frame, FusionLevel, Homography, Modality};

/// `<sample_id>_f<rgb_percent>`, shared by the image and its label file.
pub fn fused_file_stem(sample_id: &str, level: FusionLevel) -> String {
    format!("{sample_id}_f{}", level.rgb_percent())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedSample {
    pub sample_id: String,
    pub fusion_rgb_percent: u8,
    pub image_path: PathBuf,
    pub label_path: PathBuf,
    #[serde(skip)]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Default)]
pub struct BatchReport {
    pub written: Vec<FusedSample>,
    /// `(sample_id, message)` for every sample that could not be fused.
    pub failures: Vec<(String, String)>,
}

fn fuse_one(
    sample: &PairedSample,
    levels: &[FusionLevel],
    homography: &Homography,
    images_dir: &Path,
    labels_dir: &Path,
) -> Result<Vec<FusedSample>, DatasetError> {
    let rgb = Frame::read_png(&sample.rgb_path, Modality::Rgb, sample.timestamp_ms)?;
    let lwir = Frame::read_png(&sample.lwir_path, Modality::Lwir, sample.timestamp_ms)?;
    let registered = register(&lwir, homography, rgb.width(), rgb.height())?;
    let label_bytes = match &sample.label_path {
        Some(p) => std::fs::read(p).map_err(DatasetError::io(p))?,
        None => format_annotations(&sample.annotations).into_bytes(),
    };
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let stem = fused_file_stem(&sample.sample_id, level);
        let image_path = images_dir.join(format!("{stem}.png"));
        let label_path = labels_dir.join(format!("{stem}.txt"));
        blend(&rgb, &registered, level)?.write_png(&image_path)?;
        std::fs::write(&label_path, &label_bytes).map_err(DatasetError::io(&label_path))?;
        out.push(FusedSample {
            sample_id: sample.sample_id.clone(),
            fusion_rgb_percent: level.rgb_percent(),
            image_path,
            label_path,
            annotations: sample.annotations.clone(),
        });
    }
    Ok(out)
}

/// Registers and blends every sample at every level into
/// `out_dir/images/`, copies labels unchanged into `out_dir/labels/` and
/// writes `out_dir/fused_manifest.csv`. Re-running overwrites with identical
/// bytes. `jobs == 0` uses all cores.
pub fn batch_fuse(
    samples: &[PairedSample],
    levels: &[FusionLevel],
    homography: &Homography,
    out_dir: &Path,
    jobs: usize,
) -> Result<BatchReport, DatasetError> {
    let images_dir = out_dir.join("images");
    let labels_dir = out_dir.join("labels");
    for d in [&images_dir, &labels_dir] {
        std::fs::create_dir_all(d).map_err(DatasetError::io(d))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| {
        samples
            .par_iter()
            .map(|s| fuse_one(s, levels, homography, &images_dir, &labels_dir))
            .collect()
    });
    let mut report = BatchReport::default();
    for (sample, result) in samples.iter().zip(results) {
        match result {
            Ok(mut written) => report.written.append(&mut written),
            Err(e) => {
                log::error!("{}: {e}", sample.sample_id);
                report
                    .failures
                    .push((sample.sample_id.clone(), e.to_string()));
            }
        }
    }
    let manifest = out_dir.join("fused_manifest.csv");
    let csv_err = |source| DatasetError::Csv {
        path: manifest.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&manifest).map_err(csv_err)?;
    for f in &report.written {
        w.serialize(FusedSample {
            image_path: f
                .image_path
                .strip_prefix(out_dir)
                .unwrap_or(&f.image_path)
                .to_path_buf(),
            label_path: f
                .label_path
                .strip_prefix(out_dir)
                .unwrap_or(&f.label_path)
                .to_path_buf(),
            ..f.clone()
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(DatasetError::io(&manifest))?;
    Ok(report)
}

/// Reads back a [`batch_fuse`] output tree, parsing every label file.
pub fn ingest_fused(out_dir: &Path) -> Result<Vec<FusedSample>, DatasetError> {
    let manifest = out_dir.join("fused_manifest.csv");
    let csv_err = |source| DatasetError::Csv {
        path: manifest.clone(),
        source,
    };
    let mut r = csv::Reader::from_path(&manifest).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in r.deserialize::<FusedSample>() {
        let mut f = row.map_err(csv_err)?;
        f.image_path = out_dir.join(&f.image_path);
        f.label_path = out_dir.join(&f.label_path);
        f.annotations = read_label_file(&f.label_path)?;
        out.push(f);
    }
    Ok(out)
}
