//! Naive reference computations used to check the library's results.

use std::collections::BTreeMap;

use thermofuse::evaluation::Trial;
use thermofuse::illumination::IlluminationCategory;

pub fn naive_mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += *x;
    }
    s / v.len() as f64
}

/// Two-pass population (`ddof = 0`) or sample (`ddof = 1`) deviation.
pub fn naive_std(v: &[f64], ddof: usize) -> f64 {
    if v.len() <= ddof {
        return 0.0;
    }
    let m = naive_mean(v);
    let mut ss = 0.0;
    for x in v {
        ss += (x - m) * (x - m);
    }
    (ss / (v.len() - ddof) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveCell {
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    pub n: usize,
    pub total: usize,
}

/// Per `(category, model)` statistics over detected trial means.
pub fn naive_cells(
    trials: &[Trial],
    ddof: usize,
) -> BTreeMap<(IlluminationCategory, String), NaiveCell> {
    let mut keys: Vec<(IlluminationCategory, String)> = trials
        .iter()
        .map(|t| (t.category, t.model_id.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    let mut out = BTreeMap::new();
    for key in keys {
        let members: Vec<&Trial> = trials
            .iter()
            .filter(|t| t.category == key.0 && t.model_id == key.1)
            .collect();
        let means: Vec<f64> = members
            .iter()
            .filter(|t| !t.confidences.is_empty())
            .map(|t| naive_mean(&t.confidences))
            .collect();
        if means.is_empty() {
            continue;
        }
        let std = naive_std(&means, ddof);
        out.insert(
            key,
            NaiveCell {
                mean: naive_mean(&means),
                std,
                sem: std / (means.len() as f64).sqrt(),
                n: means.len(),
                total: members.len(),
            },
        );
    }
    out
}

pub fn naive_color_means(trials: &[Trial]) -> BTreeMap<String, f64> {
    let mut by: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for t in trials.iter().filter(|t| !t.confidences.is_empty()) {
        by.entry(t.color_label.to_lowercase())
            .or_default()
            .push(naive_mean(&t.confidences));
    }
    by.into_iter().map(|(k, v)| (k, naive_mean(&v))).collect()
}

/// `(model_id, rgb_percent, mean, std)` of one cohort.
pub type NaiveMember = (String, u8, f64, f64);

pub fn naive_composite(cohort: &[NaiveMember], i: usize) -> f64 {
    let (mut mlo, mut mhi, mut slo, mut shi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (_, _, m, s) in cohort {
        mlo = mlo.min(*m);
        mhi = mhi.max(*m);
        slo = slo.min(*s);
        shi = shi.max(*s);
    }
    let norm = |x: f64, lo: f64, hi: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
    norm(cohort[i].2, mlo, mhi) - norm(cohort[i].3, slo, shi)
}

/// Ranking by repeated selection of the best remaining member.
pub fn naive_ranking(cohort: &[NaiveMember]) -> Vec<(String, f64)> {
    let scores: Vec<f64> = (0..cohort.len())
        .map(|i| naive_composite(cohort, i))
        .collect();
    let beats = |a: usize, b: usize| {
        let (ca, cb) = (&cohort[a], &cohort[b]);
        if scores[a] != scores[b] {
            return scores[a] > scores[b];
        }
        if ca.2 != cb.2 {
            return ca.2 > cb.2;
        }
        if ca.1 != cb.1 {
            return ca.1 > cb.1;
        }
        ca.0 < cb.0
    };
    let mut left: Vec<usize> = (0..cohort.len()).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for j in 1..left.len() {
            if beats(left[j], left[best]) {
                best = j;
            }
        }
        let i = left.remove(best);
        out.push((cohort[i].0.clone(), scores[i]));
    }
    out
}

/// Reference blend of one channel value in real arithmetic.
pub fn naive_blend(rgb: u8, lwir: u8, rgb_percent: u8) -> f64 {
    let a = f64::from(rgb_percent) / 100.0;
    a * f64::from(rgb) + (1.0 - a) * f64::from(lwir)
}

/// Tier `1..=5` of each value from its position in the sorted panel.
pub fn naive_quintiles(values: &[f64]) -> Vec<u8> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values
        .iter()
        .map(|v| {
            let first = sorted.iter().position(|s| s == v).unwrap();
            (1 + 5 * first / values.len()) as u8
        })
        .collect()
}

/// `(category, color, rgb_percent) -> (mean, tier)` over fine-tuned trials.
pub fn naive_heatmap(trials: &[Trial]) -> BTreeMap<(IlluminationCategory, String, u8), (f64, u8)> {
    let mut out = BTreeMap::new();
    for cat in IlluminationCategory::ALL {
        let mut panel: BTreeMap<(String, u8), Vec<f64>> = BTreeMap::new();
        for t in trials {
            if t.category == cat && !t.baseline && !t.confidences.is_empty() {
                panel
                    .entry((t.color_label.to_lowercase(), t.fusion_level.rgb_percent()))
                    .or_default()
                    .push(naive_mean(&t.confidences));
            }
        }
        let means: Vec<f64> = panel.values().map(|v| naive_mean(v)).collect();
        let tiers = naive_quintiles(&means);
        for (i, (color, pct)) in panel.into_keys().enumerate() {
            out.insert((cat, color, pct), (means[i], tiers[i]));
        }
    }
    out
}
