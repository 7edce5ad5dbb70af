use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aggregate::{
    aggregate_by_color, aggregate_by_fusion_category, CellStats, ColorTable, Trial, MUG_COLORS,
};
use super::heatmap::{export_heatmap_data, HeatmapExport};
use super::stats::{delta_report, StdConvention};
use super::EvalError;
use crate::detection::read_detection_log;
use crate::illumination::IlluminationCategory;
use crate::registry::{CohortMember, CohortStats, Rankings, Registry};

/// Row of the trial manifest CSV: `trial_id,model_id,category,color,held_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialManifestRow {
    pub trial_id: String,
    pub model_id: String,
    pub category: IlluminationCategory,
    pub color: String,
    pub held_out: bool,
}

pub fn read_trial_manifest<R: Read>(reader: R) -> Result<Vec<TrialManifestRow>, csv::Error> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
        .collect()
}

/// Joins the manifest with per-trial detection logs, read from
/// `<logs_dir>/<trial_id>.csv` or else `<logs_dir>/<trial_id>/detections.csv`.
///
/// Only non-excluded rows scored by the trial's own model count.
pub fn load_trials(
    manifest: &[TrialManifestRow],
    logs_dir: &Path,
    registry: &Registry,
) -> Result<Vec<Trial>, EvalError> {
    manifest
        .iter()
        .map(|row| {
            let record = registry
                .get(&row.model_id)
                .ok_or_else(|| EvalError::UnknownModel {
                    trial_id: row.trial_id.clone(),
                    model_id: row.model_id.clone(),
                })?;
            let mut path = logs_dir.join(format!("{}.csv", row.trial_id));
            if !path.is_file() {
                let nested = logs_dir.join(&row.trial_id).join("detections.csv");
                if nested.is_file() {
                    path = nested;
                }
            }
            let file = File::open(&path).map_err(|source| EvalError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let log = read_detection_log(file).map_err(|source| EvalError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let confidences = log
                .iter()
                .filter(|r| r.model_id == row.model_id)
                .filter_map(|r| r.counted_confidence())
                .collect();
            let trial = Trial {
                trial_id: row.trial_id.clone(),
                model_id: row.model_id.clone(),
                fusion_level: record.fusion_level,
                baseline: record.is_baseline(),
                category: row.category,
                color_label: row.color.clone(),
                held_out: row.held_out,
                confidences,
            };
            trial.validate()?;
            Ok(trial)
        })
        .collect()
}

/// Ranks the fine-tuned cells of every category present.
pub fn rankings_from_cells(cells: &[CellStats]) -> Result<Rankings, EvalError> {
    let mut by_cat: BTreeMap<IlluminationCategory, Vec<CohortMember>> = BTreeMap::new();
    for c in cells.iter().filter(|c| !c.baseline) {
        by_cat
            .entry(c.category)
            .or_default()
            .push(CohortMember::new(
                c.model_id.clone(),
                c.fusion_rgb_percent,
                c.mean,
                c.std,
            ));
    }
    let mut rankings = Rankings::new();
    for (cat, members) in by_cat {
        rankings.insert(cat, &CohortStats::new(members)?);
    }
    Ok(rankings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub category: IlluminationCategory,
    pub model_a: String,
    pub model_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub absolute: f64,
    pub relative_percent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationOptions {
    pub std_convention: StdConvention,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            std_convention: StdConvention::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub options: EvaluationOptions,
    pub trials_total: usize,
    pub trials_detected: usize,
    pub cells: Vec<CellStats>,
    pub rankings: Rankings,
    pub colors: ColorTable,
    pub heatmap: HeatmapExport,
    pub deltas: Vec<DeltaRow>,
}

#[derive(Serialize)]
struct SelectedModel<'a> {
    model_id: &'a str,
    fusion_rgb_percent: u8,
    mean: f64,
    std: f64,
    sem: f64,
    composite: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    trials_total: usize,
    trials_detected: usize,
    std_convention: StdConvention,
    selected: BTreeMap<IlluminationCategory, SelectedModel<'a>>,
    color_means: &'a [super::ColorMean],
    deltas: &'a [DeltaRow],
    warnings: Vec<&'a str>,
}

impl EvaluationReport {
    pub fn build(trials: &[Trial], options: EvaluationOptions) -> Result<Self, EvalError> {
        for t in trials {
            t.validate()?;
        }
        let cells = aggregate_by_fusion_category(trials, options.std_convention)?;
        let rankings = rankings_from_cells(&cells)?;
        let colors = aggregate_by_color(trials, &MUG_COLORS);
        let heatmap = export_heatmap_data(trials);

        let mut deltas = Vec::new();
        for cat in IlluminationCategory::ALL {
            let Some(table) = rankings.table(cat) else {
                continue;
            };
            let top = &table[0];
            let others = table
                .iter()
                .skip(1)
                .take(2)
                .map(|r| (r.model_id.as_str(), r.mean));
            let baselines = cells
                .iter()
                .filter(|c| c.baseline && c.category == cat)
                .map(|c| (c.model_id.as_str(), c.mean));
            for (model_b, mean_b) in others.chain(baselines) {
                let d = delta_report(top.mean, mean_b);
                deltas.push(DeltaRow {
                    category: cat,
                    model_a: top.model_id.clone(),
                    model_b: model_b.to_string(),
                    mean_a: top.mean,
                    mean_b,
                    absolute: d.absolute,
                    relative_percent: d.relative_percent,
                });
            }
        }

        Ok(Self {
            options,
            trials_total: trials.len(),
            trials_detected: trials.iter().filter(|t| t.is_detected()).count(),
            cells,
            rankings,
            colors,
            heatmap,
            deltas,
        })
    }

    pub fn summary_json(&self) -> String {
        let selected = IlluminationCategory::ALL
            .iter()
            .filter_map(|cat| {
                let top = self.rankings.top(*cat)?;
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.category == *cat && c.model_id == top.model_id)?;
                Some((
                    *cat,
                    SelectedModel {
                        model_id: &top.model_id,
                        fusion_rgb_percent: top.fusion_rgb_percent.rgb_percent(),
                        mean: top.mean,
                        std: top.std,
                        sem: cell.sem,
                        composite: top.composite,
                    },
                ))
            })
            .collect();
        let summary = Summary {
            trials_total: self.trials_total,
            trials_detected: self.trials_detected,
            std_convention: self.options.std_convention,
            selected,
            color_means: &self.colors.rows,
            deltas: &self.deltas,
            warnings: self
                .colors
                .warnings
                .iter()
                .chain(&self.heatmap.warnings)
                .map(String::as_str)
                .collect(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }

    /// Writes `fusion_stats.csv`, `rankings.csv`, `heatmap.csv`,
    /// `color_means.csv`, `deltas.csv` and `summary.json` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<(), EvalError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| EvalError::Io { path: p, source }
        };
        std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;

        fn csv_out<T: Serialize>(
            path: &Path,
            rows: impl IntoIterator<Item = T>,
        ) -> Result<(), EvalError> {
            let wrap = |source| EvalError::Csv {
                path: path.display().to_string(),
                source,
            };
            let mut w = csv::Writer::from_path(path).map_err(wrap)?;
            for r in rows {
                w.serialize(r).map_err(wrap)?;
            }
            w.flush().map_err(|e| wrap(e.into()))
        }

        csv_out(&out_dir.join("fusion_stats.csv"), &self.cells)?;
        let rankings_path = out_dir.join("rankings.csv");
        let f = File::create(&rankings_path).map_err(io(&rankings_path))?;
        self.rankings.write_csv(f)?;
        csv_out(&out_dir.join("heatmap.csv"), &self.heatmap.rows)?;
        csv_out(&out_dir.join("color_means.csv"), &self.colors.rows)?;
        csv_out(&out_dir.join("deltas.csv"), &self.deltas)?;
        let summary = out_dir.join("summary.json");
        std::fs::write(&summary, self.summary_json()).map_err(io(&summary))?;
        Ok(())
    }
}
