use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::mean;
use super::Trial;
use crate::illumination::IlluminationCategory;
use crate::imaging::FusionLevel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub category: IlluminationCategory,
    pub color: String,
    pub fusion_rgb_percent: FusionLevel,
    pub mean: f64,
    /// Tier 1 (lowest) to 5 (highest) within the category panel, written `Q1`..`Q5`.
    pub quintile: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct HeatmapExport {
    pub rows: Vec<HeatmapRow>,
    pub warnings: Vec<String>,
}

/// Tier of each value: `1 + floor(5 * (# values strictly below) / n)`.
/// Equal values share a tier, so a constant panel is all `1`.
pub fn quintile_tiers(values: &[f64]) -> Vec<u8> {
    let n = values.len();
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| *w < v).count();
            1 + (5 * below / n) as u8
        })
        .collect()
}

/// Long-format `(category, color, fusion level, mean)` grid of the fine-tuned
/// models with per-category quintile tiers. Holes in a panel's
/// color x level grid are reported as warnings.
pub fn export_heatmap_data(trials: &[Trial]) -> HeatmapExport {
    let mut cells: BTreeMap<IlluminationCategory, BTreeMap<(String, FusionLevel), Vec<f64>>> =
        BTreeMap::new();
    for t in trials.iter().filter(|t| !t.baseline) {
        if let Some(m) = t.mean() {
            cells
                .entry(t.category)
                .or_default()
                .entry((t.color_label.to_ascii_lowercase(), t.fusion_level))
                .or_default()
                .push(m);
        }
    }
    let mut out = HeatmapExport::default();
    for (category, panel) in cells {
        let colors: BTreeSet<&String> = panel.keys().map(|(c, _)| c).collect();
        let levels: BTreeSet<FusionLevel> = panel.keys().map(|(_, l)| *l).collect();
        for color in &colors {
            for level in &levels {
                if !panel.contains_key(&((*color).clone(), *level)) {
                    let msg = format!(
                        "{category}: no data for color {color:?} at fusion {level}; row omitted"
                    );
                    log::warn!("{msg}");
                    out.warnings.push(msg);
                }
            }
        }
        let means: Vec<f64> = panel
            .values()
            .map(|v| mean(v).expect("non-empty"))
            .collect();
        let tiers = quintile_tiers(&means);
        for (((color, level), _), (m, tier)) in panel.iter().zip(means.iter().zip(tiers)) {
            out.rows.push(HeatmapRow {
                category,
                color: color.clone(),
                fusion_rgb_percent: *level,
                mean: *m,
                quintile: format!("Q{tier}"),
            });
        }
    }
    out
}
