//! Synthetic fixture tree: paired recordings, a lux trace, a mock confidence
//! table, a registry, a cohort statistics table and a small set of trial
//! logs ready for evaluation.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{format_annotations, ingest, write_manifest, DatasetError};
use crate::detection::{ConfidenceTable, DetectError, MockDetector, WILDCARD_COLOR};
use crate::evaluation::TrialManifestRow;
use crate::illumination::IlluminationCategory;
use crate::imaging::{generate_synthetic_pair, FusionLevel, Homography, ImagingError, SceneSpec};
use crate::pipeline::{PipelineConfig, PipelineError, SyntheticTrial};
use crate::registry::{standard_model_id, Registry};
use crate::stable_hash::stable_hash;
use crate::turret::{SimulatedActuator, TargetingConfig};

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> FixtureError + '_ {
    move |source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOptions {
    pub frames_per_recording: usize,
    pub width: u32,
    pub height: u32,
    /// LWIR content sits this many pixels right of the RGB content; the
    /// generated config carries the matching homography.
    pub lwir_offset_px: f64,
    pub trials_per_cell: usize,
    pub frames_per_trial: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            frames_per_recording: 30,
            width: 64,
            height: 48,
            lwir_offset_px: 4.0,
            trials_per_cell: 3,
            frames_per_trial: 20,
            noise_sigma: 0.02,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSummary {
    pub dataset_root: PathBuf,
    pub manifest: PathBuf,
    pub lux_trace: PathBuf,
    pub confidence_table: PathBuf,
    pub registry: PathBuf,
    pub cohort_stats: PathBuf,
    pub trial_manifest: PathBuf,
    pub trial_logs: PathBuf,
    pub config: PathBuf,
    pub samples: usize,
    pub trials: usize,
}

/// Mock confidence for a fine-tuned model: each category peaks at its
/// default active level and falls off linearly, with the known dim-light
/// and no-light values pinned.
pub fn fixture_confidence(level: FusionLevel, category: IlluminationCategory) -> f64 {
    let p = f64::from(level.rgb_percent());
    match (category, level.rgb_percent()) {
        (IlluminationCategory::DimLight, 90) => 0.9203,
        (IlluminationCategory::DimLight, 80) => 0.9000,
        (IlluminationCategory::DimLight, 70) => 0.8543,
        (IlluminationCategory::DimLight, _) => 0.84 - 0.001 * (p - 80.0).abs(),
        (IlluminationCategory::NoLight, 40) => 0.7103,
        (IlluminationCategory::NoLight, 50) => 0.7227,
        (IlluminationCategory::NoLight, _) => 0.70 - 0.001 * (p - 40.0).abs(),
        (IlluminationCategory::FullLight, _) => 0.93 - 0.001 * (p - 80.0).abs(),
    }
}

pub fn fixture_table() -> ConfidenceTable {
    let mut t = ConfidenceTable::new();
    for level in FusionLevel::all() {
        for cat in IlluminationCategory::ALL {
            t.insert(level, cat, WILDCARD_COLOR, fixture_confidence(level, cat))
                .expect("fixture confidences lie in [0, 1]");
        }
    }
    t
}

struct Recording {
    id: &'static str,
    color: &'static str,
    lux: &'static [f64],
    start: (f64, f64),
    end: (f64, f64),
}

const RECORDINGS: [Recording; 2] = [
    Recording {
        id: "ramp",
        color: "white",
        lux: &[2000.0, 500.0, 5.0],
        start: (16.0, 20.0),
        end: (44.0, 28.0),
    },
    Recording {
        id: "dim",
        color: "orange",
        lux: &[500.0],
        start: (28.0, 24.0),
        end: (28.0, 24.0),
    },
];

fn write_recording(
    root: &Path,
    rec: &Recording,
    opts: &FixtureOptions,
) -> Result<(), FixtureError> {
    let dir = root.join(rec.id);
    for sub in ["rgb", "lwir", "labels"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(io(&d))?;
    }
    let trial = SyntheticTrial {
        scene: SceneSpec {
            width: opts.width,
            height: opts.height,
            radius: 6.0,
            ..SceneSpec::default()
        },
        frames: opts.frames_per_recording,
        interval_ms: 100,
        start: rec.start,
        end: rec.end,
        lux_schedule: Vec::new(),
        color_label: Some(rec.color.to_string()),
    }
    .with_lux_segments(rec.lux);

    let meta_path = dir.join("meta.csv");
    let mut meta = csv::Writer::from_path(&meta_path).map_err(|source| FixtureError::Csv {
        path: meta_path.clone(),
        source,
    })?;
    meta.write_record(["frame", "timestamp_ms", "lux", "color_label"])
        .map_err(|source| FixtureError::Csv {
            path: meta_path.clone(),
            source,
        })?;
    for i in 0..trial.frames {
        let f = trial.frame(i)?;
        let stem = format!("{i:05}");
        f.rgb
            .write_png(&dir.join("rgb").join(format!("{stem}.png")))?;
        // re-render with the disc displaced to get an LWIR frame that needs registration
        let t = i as f64 / (trial.frames.max(2) - 1) as f64;
        let lwir_scene = SceneSpec {
            center_x: rec.start.0 + (rec.end.0 - rec.start.0) * t + opts.lwir_offset_px,
            center_y: rec.start.1 + (rec.end.1 - rec.start.1) * t,
            timestamp_ms: f.timestamp_ms,
            ..trial.scene.clone()
        };
        let (_, lwir) = generate_synthetic_pair(&lwir_scene)?;
        lwir.write_png(&dir.join("lwir").join(format!("{stem}.png")))?;
        let label = dir.join("labels").join(format!("{stem}.txt"));
        std::fs::write(&label, format_annotations(&f.truth)).map_err(io(&label))?;
        meta.write_record([
            stem.clone(),
            f.timestamp_ms.to_string(),
            f.lux.to_string(),
            rec.color.to_string(),
        ])
        .map_err(|source| FixtureError::Csv {
            path: meta_path.clone(),
            source,
        })?;
    }
    meta.flush().map_err(io(&meta_path))
}

#[derive(Serialize)]
struct CohortRow<'a> {
    category: &'a str,
    model_id: String,
    fusion_rgb_percent: u8,
    baseline: bool,
    mean: f64,
    std: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), FixtureError> {
    let err = |source| FixtureError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(io(path))
}

/// Writes the whole fixture tree under `out`. Deterministic for a given
/// `opts`.
pub fn generate_fixtures(
    out: &Path,
    opts: &FixtureOptions,
) -> Result<FixtureSummary, FixtureError> {
    std::fs::create_dir_all(out).map_err(io(out))?;
    let dataset_root = out.join("dataset");
    for rec in &RECORDINGS {
        write_recording(&dataset_root, rec, opts)?;
    }
    let report = ingest(&dataset_root)?;
    let manifest = dataset_root.join("manifest.csv");
    write_manifest(&manifest, &report.samples)?;

    let lux_trace = out.join("lux_trace.csv");
    std::fs::write(&lux_trace, "timestamp_ms,lux\n0,2000\n1000,500\n2000,5\n")
        .map_err(io(&lux_trace))?;

    let confidence_table = out.join("mock_confidences.csv");
    let table = fixture_table();
    let file = std::fs::File::create(&confidence_table).map_err(io(&confidence_table))?;
    table.write_csv(file)?;

    let registry_path = out.join("registry.json");
    let registry = Registry::standard();
    std::fs::write(&registry_path, registry.to_json()).map_err(io(&registry_path))?;

    let dim = IlluminationCategory::DimLight;
    let cohort_stats = out.join("cohort_stats.csv");
    // per-model sigma is the reported standard error times sqrt(6 trials)
    let root6 = 6f64.sqrt();
    let cohort: Vec<CohortRow> = [
        (90, 0.9203, 0.0200 * root6),
        (80, 0.9000, 0.0333 * root6),
        (70, 0.8543, 0.0491 * root6),
    ]
    .into_iter()
    .map(|(p, mean, std)| CohortRow {
        category: dim.as_str(),
        model_id: standard_model_id(FusionLevel::new(p).expect("valid level"), dim),
        fusion_rgb_percent: p,
        baseline: false,
        mean,
        std,
    })
    .collect();
    write_csv(&cohort_stats, &cohort)?;

    let config = PipelineConfig {
        registry: Some(PathBuf::from("registry.json")),
        homography: Homography::translation(opts.lwir_offset_px, 0.0),
        detector: crate::pipeline::DetectorConfig {
            confidence_table: Some(PathBuf::from("mock_confidences.csv")),
            ..Default::default()
        },
        ..PipelineConfig::default()
    };
    let config_path = out.join("pipeline.toml");
    std::fs::write(&config_path, config.to_toml_string()).map_err(io(&config_path))?;

    let (trial_manifest, trial_logs, trials) = write_trials(out, opts, &registry, &table)?;

    Ok(FixtureSummary {
        dataset_root,
        manifest,
        lux_trace,
        confidence_table,
        registry: registry_path,
        cohort_stats,
        trial_manifest,
        trial_logs,
        config: config_path,
        samples: report.samples.len(),
        trials,
    })
}

/// Dim-light evaluation trials for three fine-tuned levels and one baseline,
/// run through the pipeline with a fixed model and seeded noise.
fn write_trials(
    out: &Path,
    opts: &FixtureOptions,
    registry: &Registry,
    table: &ConfidenceTable,
) -> Result<(PathBuf, PathBuf, usize), FixtureError> {
    let dim = IlluminationCategory::DimLight;
    let logs = out.join("trials").join("logs");
    std::fs::create_dir_all(&logs).map_err(io(&logs))?;
    let mut models: Vec<String> = [70u8, 80, 90]
        .into_iter()
        .map(|p| standard_model_id(FusionLevel::new(p).expect("valid level"), dim))
        .collect();
    models.push("yolo11n-coco".to_string());

    let mut rows = Vec::new();
    for model_id in &models {
        for color in ["white", "teal"] {
            for k in 0..opts.trials_per_cell {
                let trial_id = format!("{model_id}_{color}_{k}");
                let seed = stable_hash(&trial_id, opts.seed);
                let trial = SyntheticTrial {
                    frames: opts.frames_per_trial,
                    color_label: Some(color.to_string()),
                    ..SyntheticTrial::constant(500.0)
                };
                let cfg = PipelineConfig {
                    fixed_model: Some(model_id.clone()),
                    ..PipelineConfig::default()
                };
                let mut backend =
                    MockDetector::new(table.clone(), registry).with_noise(opts.noise_sigma, seed);
                let mut actuator = SimulatedActuator::new(TargetingConfig::default());
                let log = crate::pipeline::run_trial(
                    trial.iter(),
                    &cfg,
                    registry,
                    &mut backend,
                    &mut actuator,
                )?;
                let path = logs.join(format!("{trial_id}.csv"));
                std::fs::write(&path, log.detections_csv()?).map_err(io(&path))?;
                rows.push(TrialManifestRow {
                    trial_id,
                    model_id: model_id.clone(),
                    category: dim,
                    color: color.to_string(),
                    held_out: color == "teal",
                });
            }
        }
    }
    let manifest = out.join("trials").join("manifest.csv");
    write_csv(&manifest, &rows)?;
    Ok((manifest, logs, rows.len()))
}
