//! Model catalog, composite scoring and per-category ranking.
//!
//! The composite score of a model within a cohort is
//! `(mean - mean_min) / (mean_max - mean_min) - (std - std_min) / (std_max - std_min)`,
//! where a term whose range is zero contributes 0.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::illumination::IlluminationCategory;
use crate::imaging::FusionLevel;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("duplicate model id {0:?}")]
    DuplicateId(String),
    #[error("models {first:?} and {second:?} share fusion level {level} for {category}")]
    DuplicateSlot {
        first: String,
        second: String,
        level: FusionLevel,
        category: IlluminationCategory,
    },
    #[error("unknown model scope {0:?}")]
    UnknownScope(String),
    #[error("model {0:?} is not in the cohort")]
    NotInCohort(String),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("cohort member {model_id:?}: {reason}")]
    InvalidMember { model_id: String, reason: String },
    #[error("no ranking available for {0}")]
    MissingRanking(IlluminationCategory),
    #[error("model {0:?} is not in the registry")]
    UnknownModel(String),
    #[error("model {model_id:?} is registered for {actual} but selected for {expected}")]
    CategoryMismatch {
        model_id: String,
        expected: IlluminationCategory,
        actual: String,
    },
    #[error("registry file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("registry json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Field(String),
}

/// Which illumination regime a model serves. Baselines are generic and
/// evaluated in every regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelScope {
    Category(IlluminationCategory),
    BaselineAny,
}

impl ModelScope {
    pub const BASELINE: &'static str = "baseline-any";

    pub fn category(self) -> Option<IlluminationCategory> {
        match self {
            ModelScope::Category(c) => Some(c),
            ModelScope::BaselineAny => None,
        }
    }
}

impl fmt::Display for ModelScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelScope::Category(c) => c.fmt(f),
            ModelScope::BaselineAny => f.write_str(Self::BASELINE),
        }
    }
}

impl TryFrom<String> for ModelScope {
    type Error = RegistryError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == Self::BASELINE {
            return Ok(ModelScope::BaselineAny);
        }
        s.parse()
            .map(ModelScope::Category)
            .map_err(|_| RegistryError::UnknownScope(s))
    }
}

impl From<ModelScope> for String {
    fn from(scope: ModelScope) -> String {
        scope.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_id: String,
    pub fusion_level: FusionLevel,
    pub category: ModelScope,
    /// Opaque to this crate; resolved by whichever detection backend serves the model.
    pub weights_uri: String,
    #[serde(default)]
    pub training_meta: BTreeMap<String, String>,
}

impl ModelRecord {
    pub fn is_baseline(&self) -> bool {
        self.category == ModelScope::BaselineAny
    }
}

/// Id used for the fine-tuned model of a `(level, category)` slot in the
/// standard registry, e.g. `y11n-f080-full`.
pub fn standard_model_id(level: FusionLevel, category: IlluminationCategory) -> String {
    format!("y11n-f{:03}-{}", level.rgb_percent(), category.short_name())
}

/// Hyperparameters shared by every fine-tuned detector. Metadata only.
pub fn standard_training_meta() -> BTreeMap<String, String> {
    [
        ("optimizer", "AdamW"),
        ("learning_rate", "0.002"),
        ("momentum", "0.9"),
        ("weight_decay", "0.0005"),
        ("image_size", "960"),
        ("batch_size", "16"),
        ("max_epochs", "30"),
        ("early_stopping_patience", "5"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

pub const BASELINE_IDS: [&str; 2] = ["yolo11n-coco", "yolov5n-coco"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Registry {
    records: Vec<ModelRecord>,
}

impl Registry {
    pub fn new(records: Vec<ModelRecord>) -> Result<Self, RegistryError> {
        let mut ids = HashSet::new();
        let mut slots: BTreeMap<(FusionLevel, IlluminationCategory), &str> = BTreeMap::new();
        for r in &records {
            if !ids.insert(r.model_id.as_str()) {
                return Err(RegistryError::DuplicateId(r.model_id.clone()));
            }
            if let ModelScope::Category(c) = r.category {
                if let Some(first) = slots.insert((r.fusion_level, c), &r.model_id) {
                    return Err(RegistryError::DuplicateSlot {
                        first: first.to_string(),
                        second: r.model_id.clone(),
                        level: r.fusion_level,
                        category: c,
                    });
                }
            }
        }
        Ok(Self { records })
    }

    /// Eleven fusion levels for each of the three categories plus two
    /// generic baselines.
    pub fn standard() -> Self {
        let mut records = Vec::with_capacity(35);
        for category in IlluminationCategory::ALL {
            for level in FusionLevel::all() {
                let id = standard_model_id(level, category);
                records.push(ModelRecord {
                    weights_uri: format!("weights/{id}.pt"),
                    model_id: id,
                    fusion_level: level,
                    category: ModelScope::Category(category),
                    training_meta: standard_training_meta(),
                });
            }
        }
        for id in BASELINE_IDS {
            records.push(ModelRecord {
                model_id: id.to_string(),
                fusion_level: FusionLevel::RGB_ONLY,
                category: ModelScope::BaselineAny,
                weights_uri: format!("weights/{id}.pt"),
                training_meta: BTreeMap::from([("pretrained".to_string(), "coco".to_string())]),
            });
        }
        Self::new(records).expect("standard registry is consistent")
    }

    pub fn from_json(json: &str) -> Result<Self, RegistryError> {
        Self::new(serde_json::from_str(json)?)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialize")
    }

    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn get(&self, model_id: &str) -> Option<&ModelRecord> {
        self.records.iter().find(|r| r.model_id == model_id)
    }

    pub fn find(&self, level: FusionLevel, category: IlluminationCategory) -> Option<&ModelRecord> {
        self.records
            .iter()
            .find(|r| r.fusion_level == level && r.category == ModelScope::Category(category))
    }

    pub fn fine_tuned(&self) -> impl Iterator<Item = &ModelRecord> {
        self.records.iter().filter(|r| !r.is_baseline())
    }

    /// True when every `(level, category)` slot has a fine-tuned model.
    pub fn is_complete(&self) -> bool {
        self.fine_tuned().count() == 33
            && IlluminationCategory::ALL
                .iter()
                .all(|c| FusionLevel::all().all(|l| self.find(l, *c).is_some()))
    }
}

/// One model's measured statistics inside a ranking cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMember {
    pub model_id: String,
    pub fusion_level: FusionLevel,
    pub mean: f64,
    pub std: f64,
}

impl CohortMember {
    pub fn new(
        model_id: impl Into<String>,
        fusion_level: FusionLevel,
        mean: f64,
        std: f64,
    ) -> Self {
        Self {
            model_id: model_id.into(),
            fusion_level,
            mean,
            std,
        }
    }
}

/// A validated cohort together with its extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortStats {
    members: Vec<CohortMember>,
    mean_min: f64,
    mean_max: f64,
    std_min: f64,
    std_max: f64,
}

impl CohortStats {
    pub fn new(members: Vec<CohortMember>) -> Result<Self, RegistryError> {
        if members.is_empty() {
            return Err(RegistryError::EmptyCohort);
        }
        let mut ids = HashSet::new();
        for m in &members {
            let invalid = |reason: &str| RegistryError::InvalidMember {
                model_id: m.model_id.clone(),
                reason: reason.to_string(),
            };
            if !ids.insert(m.model_id.as_str()) {
                return Err(invalid("duplicate id"));
            }
            if !(0.0..=1.0).contains(&m.mean) {
                return Err(invalid("mean must lie in [0, 1]"));
            }
            if !(m.std >= 0.0) || !m.std.is_finite() {
                return Err(invalid("std must be finite and non-negative"));
            }
        }
        let fold = |f: fn(&CohortMember) -> f64, pick: fn(f64, f64) -> f64| {
            members.iter().map(f).reduce(pick).expect("non-empty")
        };
        Ok(Self {
            mean_min: fold(|m| m.mean, f64::min),
            mean_max: fold(|m| m.mean, f64::max),
            std_min: fold(|m| m.std, f64::min),
            std_max: fold(|m| m.std, f64::max),
            members,
        })
    }

    pub fn members(&self) -> &[CohortMember] {
        &self.members
    }

    pub fn mean_range(&self) -> (f64, f64) {
        (self.mean_min, self.mean_max)
    }

    pub fn std_range(&self) -> (f64, f64) {
        (self.std_min, self.std_max)
    }

    pub fn member(&self, model_id: &str) -> Option<&CohortMember> {
        self.members.iter().find(|m| m.model_id == model_id)
    }

    fn score(&self, m: &CohortMember) -> f64 {
        let accuracy = normalized(m.mean, self.mean_min, self.mean_max);
        let variability = normalized(m.std, self.std_min, self.std_max);
        accuracy - variability
    }

    /// Composite score in `[-1, 1]` of a cohort member.
    pub fn composite_score(&self, model_id: &str) -> Result<f64, RegistryError> {
        self.member(model_id)
            .map(|m| self.score(m))
            .ok_or_else(|| RegistryError::NotInCohort(model_id.to_string()))
    }

    /// Members in descending composite order. Ties fall back to the higher
    /// mean, then the higher RGB percentage, then the model id.
    pub fn rank(&self) -> Vec<(CohortMember, f64)> {
        let mut scored: Vec<(CohortMember, f64)> = self
            .members
            .iter()
            .map(|m| (m.clone(), self.score(m)))
            .collect();
        scored.sort_by(|(a, sa), (b, sb)| {
            sb.partial_cmp(sa)
                .unwrap_or(Ordering::Equal)
                .then_with(|| b.mean.partial_cmp(&a.mean).unwrap_or(Ordering::Equal))
                .then_with(|| b.fusion_level.cmp(&a.fusion_level))
                .then_with(|| a.model_id.cmp(&b.model_id))
        });
        scored
    }
}

fn normalized(value: f64, min: f64, max: f64) -> f64 {
    let range = max - min;
    if range == 0.0 {
        0.0
    } else {
        (value - min) / range
    }
}

/// One row of a ranking table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub category: IlluminationCategory,
    pub rank: usize,
    pub model_id: String,
    pub fusion_rgb_percent: FusionLevel,
    pub mean: f64,
    pub std: f64,
    pub composite: f64,
}

/// Ranks one category's cohort.
pub fn rank(category: IlluminationCategory, cohort: &CohortStats) -> Vec<RankedModel> {
    cohort
        .rank()
        .into_iter()
        .enumerate()
        .map(|(i, (m, composite))| RankedModel {
            category,
            rank: i + 1,
            model_id: m.model_id,
            fusion_rgb_percent: m.fusion_level,
            mean: m.mean,
            std: m.std,
            composite,
        })
        .collect()
}

/// Per-category ranking tables. Immutable once built; re-ranking makes a new value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rankings {
    tables: BTreeMap<IlluminationCategory, Vec<RankedModel>>,
}

impl Rankings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, category: IlluminationCategory, cohort: &CohortStats) {
        self.tables.insert(category, rank(category, cohort));
    }

    pub fn table(&self, category: IlluminationCategory) -> Option<&[RankedModel]> {
        self.tables.get(&category).map(Vec::as_slice)
    }

    pub fn top(&self, category: IlluminationCategory) -> Option<&RankedModel> {
        self.table(category).and_then(|t| t.first())
    }

    pub fn rows(&self) -> impl Iterator<Item = &RankedModel> {
        self.tables.values().flatten()
    }

    /// CSV: `category,rank,model_id,fusion_rgb_percent,mean,std,composite`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), RegistryError> {
        write_ranking_csv(self.rows(), writer)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, RegistryError> {
        let mut tables: BTreeMap<IlluminationCategory, Vec<RankedModel>> = BTreeMap::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in rdr.deserialize::<RankedModel>() {
            let row = row?;
            tables.entry(row.category).or_default().push(row);
        }
        for t in tables.values_mut() {
            t.sort_by_key(|r| r.rank);
        }
        Ok(Self { tables })
    }
}

pub fn write_ranking_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = &'a RankedModel>,
    writer: W,
) -> Result<(), RegistryError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Returns the rank-1 model for `category`.
pub fn select_active<'r>(
    category: IlluminationCategory,
    registry: &'r Registry,
    rankings: &Rankings,
) -> Result<&'r ModelRecord, RegistryError> {
    let top = rankings
        .top(category)
        .ok_or(RegistryError::MissingRanking(category))?;
    let record = registry
        .get(&top.model_id)
        .ok_or_else(|| RegistryError::UnknownModel(top.model_id.clone()))?;
    check_category(record, category)?;
    Ok(record)
}

fn check_category(
    record: &ModelRecord,
    category: IlluminationCategory,
) -> Result<(), RegistryError> {
    if record.category != ModelScope::Category(category) {
        return Err(RegistryError::CategoryMismatch {
            model_id: record.model_id.clone(),
            expected: category,
            actual: record.category.to_string(),
        });
    }
    Ok(())
}

/// Which model serves each category at runtime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveModels {
    pub full_light: String,
    pub dim_light: String,
    pub no_light: String,
}

impl Default for ActiveModels {
    /// 80/20 in full light, 90/10 in dim light, 40/60 in darkness.
    fn default() -> Self {
        let id = |p: u8, c| standard_model_id(FusionLevel::new(p).expect("valid level"), c);
        Self {
            full_light: id(80, IlluminationCategory::FullLight),
            dim_light: id(90, IlluminationCategory::DimLight),
            no_light: id(40, IlluminationCategory::NoLight),
        }
    }
}

impl ActiveModels {
    pub fn get(&self, category: IlluminationCategory) -> &str {
        match category {
            IlluminationCategory::FullLight => &self.full_light,
            IlluminationCategory::DimLight => &self.dim_light,
            IlluminationCategory::NoLight => &self.no_light,
        }
    }

    /// Takes the rank-1 model of every category.
    pub fn from_rankings(registry: &Registry, rankings: &Rankings) -> Result<Self, RegistryError> {
        let pick = |c| select_active(c, registry, rankings).map(|r| r.model_id.clone());
        Ok(Self {
            full_light: pick(IlluminationCategory::FullLight)?,
            dim_light: pick(IlluminationCategory::DimLight)?,
            no_light: pick(IlluminationCategory::NoLight)?,
        })
    }

    /// Replaces the model of each category the rankings cover and keeps the
    /// rest.
    pub fn with_rankings(
        &self,
        registry: &Registry,
        rankings: &Rankings,
    ) -> Result<Self, RegistryError> {
        let mut next = self.clone();
        for c in IlluminationCategory::ALL {
            if rankings.top(c).is_none() {
                continue;
            }
            let id = select_active(c, registry, rankings)?.model_id.clone();
            match c {
                IlluminationCategory::FullLight => next.full_light = id,
                IlluminationCategory::DimLight => next.dim_light = id,
                IlluminationCategory::NoLight => next.no_light = id,
            }
        }
        Ok(next)
    }

    pub fn resolve<'r>(
        &self,
        category: IlluminationCategory,
        registry: &'r Registry,
    ) -> Result<&'r ModelRecord, RegistryError> {
        let id = self.get(category);
        let record = registry
            .get(id)
            .ok_or_else(|| RegistryError::UnknownModel(id.to_string()))?;
        check_category(record, category)?;
        Ok(record)
    }

    /// Every category must map to a registered model of that category.
    pub fn validate(&self, registry: &Registry) -> Result<(), RegistryError> {
        for c in IlluminationCategory::ALL {
            self.resolve(c, registry)?;
        }
        Ok(())
    }
}

/// A row of a per-model statistics table, as produced by the evaluation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub category: IlluminationCategory,
    pub model_id: String,
    pub fusion_rgb_percent: FusionLevel,
    #[serde(default)]
    pub baseline: bool,
    pub mean: f64,
    pub std: f64,
}

/// Reads a statistics CSV (extra columns ignored) and builds the cohort for
/// one category, leaving baselines out.
pub fn read_cohort_csv<R: Read>(
    reader: R,
    category: IlluminationCategory,
) -> Result<CohortStats, RegistryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut members = Vec::new();
    for row in rdr.deserialize::<StatsRow>() {
        let row = row?;
        if row.category == category && !row.baseline {
            members.push(CohortMember::new(
                row.model_id,
                row.fusion_rgb_percent,
                row.mean,
                row.std,
            ));
        }
    }
    CohortStats::new(members)
}
