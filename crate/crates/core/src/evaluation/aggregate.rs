use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{mean, round_percent, sem, std_dev, StdConvention};
use super::EvalError;
use crate::illumination::IlluminationCategory;
use crate::imaging::FusionLevel;

/// Mug colors in the evaluation set.
pub const MUG_COLORS: [&str; 6] = ["white", "black", "orange", "blue", "teal", "yellow"];
/// Colors never seen during training.
pub const HELD_OUT_COLORS: [&str; 2] = ["teal", "yellow"];

/// One evaluation run of a model against one mug color under one lighting
/// condition. `confidences` holds the counted (non-excluded) frames only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: String,
    pub model_id: String,
    pub fusion_level: FusionLevel,
    pub baseline: bool,
    pub category: IlluminationCategory,
    pub color_label: String,
    pub held_out: bool,
    pub confidences: Vec<f64>,
}

impl Trial {
    pub fn validate(&self) -> Result<(), EvalError> {
        let invalid = |reason: String| EvalError::InvalidTrial {
            trial_id: self.trial_id.clone(),
            reason,
        };
        let should_be_held_out =
            HELD_OUT_COLORS.contains(&self.color_label.to_ascii_lowercase().as_str());
        if self.held_out != should_be_held_out {
            return Err(invalid(format!(
                "held_out = {} is inconsistent with color {:?}",
                self.held_out, self.color_label
            )));
        }
        if let Some(c) = self.confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(invalid(format!("confidence {c} is outside [0, 1]")));
        }
        Ok(())
    }

    pub fn is_detected(&self) -> bool {
        !self.confidences.is_empty()
    }

    /// `None` for a trial with no detected frames.
    pub fn mean(&self) -> Option<f64> {
        mean(&self.confidences).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorMean {
    pub color: String,
    pub mean: f64,
    pub mean_percent: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ColorTable {
    pub rows: Vec<ColorMean>,
    pub warnings: Vec<String>,
}

/// Unweighted mean of trial means per color, over every model and condition.
///
/// Rows are sorted by descending mean, then by color label. Colors listed in
/// `expected` that have no detected trial are reported as warnings.
pub fn aggregate_by_color(trials: &[Trial], expected: &[&str]) -> ColorTable {
    let mut by_color: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for t in trials {
        if let Some(m) = t.mean() {
            by_color
                .entry(t.color_label.to_ascii_lowercase())
                .or_default()
                .push(m);
        }
    }
    let mut table = ColorTable::default();
    for color in expected {
        if !by_color.contains_key(&color.to_ascii_lowercase()) {
            let msg = format!("no detected trials for color {color:?}; omitted");
            log::warn!("{msg}");
            table.warnings.push(msg);
        }
    }
    table.rows = by_color
        .into_iter()
        .map(|(color, means)| {
            let m = mean(&means).expect("non-empty");
            ColorMean {
                color,
                mean: m,
                mean_percent: round_percent(m),
                trials: means.len(),
            }
        })
        .collect();
    table.rows.sort_by(|a, b| {
        b.mean
            .partial_cmp(&a.mean)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.color.cmp(&b.color))
    });
    table
}

/// Statistics of one model under one lighting condition, pooled across colors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub category: IlluminationCategory,
    pub model_id: String,
    pub fusion_rgb_percent: FusionLevel,
    pub baseline: bool,
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    /// Detected trials that entered the statistics.
    pub n: usize,
    /// All trials in the cell, detected or not.
    pub trials_total: usize,
}

/// Per `(category, model)` mean of trial means, their spread, and the standard
/// error with `n` = number of detected trials. Cells whose trials all went
/// undetected are left out.
pub fn aggregate_by_fusion_category(
    trials: &[Trial],
    convention: StdConvention,
) -> Result<Vec<CellStats>, EvalError> {
    struct Acc<'a> {
        first: &'a Trial,
        means: Vec<f64>,
        total: usize,
    }
    let mut cells: BTreeMap<(IlluminationCategory, &str), Acc> = BTreeMap::new();
    for t in trials {
        let acc = cells
            .entry((t.category, t.model_id.as_str()))
            .or_insert(Acc {
                first: t,
                means: Vec::new(),
                total: 0,
            });
        acc.total += 1;
        if let Some(m) = t.mean() {
            acc.means.push(m);
        }
    }
    let mut out = Vec::new();
    for ((category, model_id), acc) in cells {
        if acc.means.is_empty() {
            log::warn!("{model_id} under {category}: no detected trials");
            continue;
        }
        let std = std_dev(&acc.means, convention)?;
        out.push(CellStats {
            category,
            model_id: model_id.to_string(),
            fusion_rgb_percent: acc.first.fusion_level,
            baseline: acc.first.baseline,
            mean: mean(&acc.means)?,
            std,
            sem: sem(std, acc.means.len())?,
            n: acc.means.len(),
            trials_total: acc.total,
        });
    }
    if out.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    Ok(out)
}
