use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DatasetError, PairedSample};
use crate::illumination::categorize;
use crate::stable_hash::stable_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratify {
    #[default]
    None,
    Category,
    Color,
    CategoryColor,
}

impl std::str::FromStr for Stratify {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "category" => Ok(Self::Category),
            "color" => Ok(Self::Color),
            "category_color" | "category+color" => Ok(Self::CategoryColor),
            _ => Err(format!("unknown stratification {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitOptions {
    pub train_fraction: f64,
    pub seed: u64,
    /// Keep every frame of a recording on the same side.
    pub group_by_recording: bool,
    pub stratify: Stratify,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            train_fraction: 0.75,
            seed: 0,
            group_by_recording: false,
            stratify: Stratify::None,
        }
    }
}

fn stratum(s: &PairedSample, stratify: Stratify) -> String {
    let cat = || {
        categorize(s.lux)
            .map(|c| c.as_str().to_string())
            .unwrap_or_default()
    };
    match stratify {
        Stratify::None => String::new(),
        Stratify::Category => cat(),
        Stratify::Color => s.color_label.to_lowercase(),
        Stratify::CategoryColor => format!("{}/{}", cat(), s.color_label.to_lowercase()),
    }
}

/// Seeded train/val partition. Within each stratum the units (samples, or
/// whole recordings) are ordered by a stable hash of their id and the first
/// `round(fraction * n)` samples go to train. Both halves keep manifest order.
pub fn split(
    samples: &[PairedSample],
    options: &SplitOptions,
) -> Result<(Vec<PairedSample>, Vec<PairedSample>), DatasetError> {
    if samples.is_empty() {
        return Err(DatasetError::EmptyManifest);
    }
    let f = options.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(DatasetError::InvalidFraction(f));
    }

    // stratum -> unit key -> member indices
    let mut strata: BTreeMap<String, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let unit = if options.group_by_recording {
            s.recording_id.as_str()
        } else {
            s.sample_id.as_str()
        };
        strata
            .entry(stratum(s, options.stratify))
            .or_default()
            .entry(unit)
            .or_default()
            .push(i);
    }
    // a recording that spans strata is placed by its first stratum only
    let mut placed: BTreeMap<&str, bool> = BTreeMap::new();
    let mut in_train = vec![false; samples.len()];
    for units in strata.values() {
        let n: usize = units.values().map(Vec::len).sum();
        let target = (f * n as f64).round() as usize;
        let mut order: Vec<(&str, &Vec<usize>)> = units.iter().map(|(k, v)| (*k, v)).collect();
        order.sort_by_cached_key(|(k, _)| (stable_hash(k, options.seed), *k));
        let mut taken = 0;
        for (key, members) in order {
            let train = match placed.get(key) {
                Some(&t) => t,
                None => {
                    let t = taken < target;
                    placed.insert(key, t);
                    t
                }
            };
            if train {
                taken += members.len();
                for &i in members {
                    in_train[i] = true;
                }
            }
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (s, t) in samples.iter().zip(in_train) {
        if t {
            train.push(s.clone());
        } else {
            val.push(s.clone());
        }
    }
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::path::PathBuf;

    fn sample(i: usize, rec: usize, lux: f64, color: &str) -> PairedSample {
        PairedSample {
            sample_id: format!("r{rec}_{i:05}"),
            recording_id: format!("r{rec}"),
            frame: format!("{i:05}"),
            rgb_path: PathBuf::from("rgb.png"),
            lwir_path: PathBuf::from("lwir.png"),
            label_path: None,
            timestamp_ms: i as i64,
            lux,
            color_label: color.to_string(),
            annotations: Vec::new(),
        }
    }

    fn ids(v: &[PairedSample]) -> BTreeSet<String> {
        v.iter().map(|s| s.sample_id.clone()).collect()
    }

    #[test]
    fn exact_counts_disjoint_and_seeded() {
        let samples: Vec<_> = (0..1000)
            .map(|i| sample(i, i % 7, 500.0, "white"))
            .collect();
        let opts = SplitOptions {
            seed: 11,
            ..Default::default()
        };
        let (train, val) = split(&samples, &opts).unwrap();
        assert_eq!((train.len(), val.len()), (750, 250));
        assert!(ids(&train).is_disjoint(&ids(&val)));
        let again = split(&samples, &opts).unwrap();
        assert_eq!(ids(&again.0), ids(&train));
        let other = split(&samples, &SplitOptions { seed: 12, ..opts }).unwrap();
        assert_ne!(ids(&other.0), ids(&train));
    }

    #[test]
    fn grouping_keeps_recordings_whole() {
        let samples: Vec<_> = (0..200)
            .map(|i| sample(i, i % 10, 500.0, "white"))
            .collect();
        let opts = SplitOptions {
            group_by_recording: true,
            seed: 3,
            ..Default::default()
        };
        let (train, val) = split(&samples, &opts).unwrap();
        let tr: BTreeSet<_> = train.iter().map(|s| s.recording_id.clone()).collect();
        let va: BTreeSet<_> = val.iter().map(|s| s.recording_id.clone()).collect();
        assert!(tr.is_disjoint(&va));
        assert_eq!(train.len(), 160);
    }

    #[test]
    fn stratified_per_category() {
        let samples: Vec<_> = (0..400)
            .map(|i| sample(i, 0, [2000.0, 500.0, 5.0, 50.0][i % 4], "white"))
            .collect();
        let opts = SplitOptions {
            stratify: Stratify::Category,
            ..Default::default()
        };
        let (train, _) = split(&samples, &opts).unwrap();
        let full = train.iter().filter(|s| s.lux > 1000.0).count();
        let no = train.iter().filter(|s| s.lux < 10.0).count();
        assert_eq!((full, no, train.len()), (75, 75, 300));
    }

    #[test]
    fn rejects_empty_and_bad_fraction() {
        assert!(matches!(
            split(&[], &SplitOptions::default()),
            Err(DatasetError::EmptyManifest)
        ));
        let s = vec![sample(0, 0, 1.0, "x")];
        for f in [0.0, 1.0, -0.2, f64::NAN] {
            let opts = SplitOptions {
                train_fraction: f,
                ..Default::default()
            };
            assert!(matches!(
                split(&s, &opts),
                Err(DatasetError::InvalidFraction(_))
            ));
        }
    }
}
