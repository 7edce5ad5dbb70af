use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dataset::SplitOptions;
use crate::detection::{
    ConfidenceTable, DetectorBackend, MockDetector, RemoteDetector, SpuriousPolicy,
    DEFAULT_TIMEOUT_MS,
};
use crate::evaluation::EvaluationOptions;
use crate::imaging::Homography;
use crate::registry::{ActiveModels, Registry};
use crate::turret::TargetingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub backend: BackendKind,
    /// Base URL of the detection service, for the remote backend.
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    /// `fusion_rgb_percent,category,color,confidence` CSV for the mock backend.
    pub confidence_table: Option<PathBuf>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Mock,
            endpoint: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            confidence_table: None,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Settings for a run and for the batch tools, loadable from TOML. Every
/// field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Registry JSON; the built-in standard registry when absent.
    pub registry: Option<PathBuf>,
    pub models: ActiveModels,
    /// Serve every frame with this model regardless of lux, as in a
    /// single-model evaluation trial. Switch events are still logged.
    pub fixed_model: Option<String>,
    /// Nine row-major coefficients mapping RGB pixels to LWIR pixels.
    pub homography: Homography,
    pub detector: DetectorConfig,
    pub spurious: SpuriousPolicy,
    pub targeting: TargetingConfig,
    /// Frames later than this after the first one end the trial; 0 disables the limit.
    pub trial_duration_s: f64,
    pub hysteresis_margin: f64,
    /// Record wall-clock stage latencies. Off keeps logs byte-reproducible.
    pub measure_latency: bool,
    /// Worker threads for batch fusion.
    pub jobs: usize,
    pub split: SplitOptions,
    pub evaluation: EvaluationOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            registry: None,
            models: ActiveModels::default(),
            fixed_model: None,
            homography: Homography::identity(),
            detector: DetectorConfig::default(),
            spurious: SpuriousPolicy::default(),
            targeting: TargetingConfig::default(),
            trial_duration_s: 10.0,
            hysteresis_margin: 0.0,
            measure_latency: false,
            jobs: 1,
            split: SplitOptions::default(),
            evaluation: EvaluationOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Parses a file; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut cfg.registry);
        rebase(&mut cfg.detector.confidence_table);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load_registry(&self) -> Result<Registry, PipelineError> {
        match &self.registry {
            Some(p) => Ok(Registry::load(p)?),
            None => Ok(Registry::standard()),
        }
    }

    /// Checks the scalar fields and that every category maps to a
    /// registered model of that category. Backend settings are checked by
    /// [`build_backend`](Self::build_backend).
    pub fn validate(&self, registry: &Registry) -> Result<(), PipelineError> {
        self.models.validate(registry)?;
        if let Some(id) = &self.fixed_model {
            registry.get(id).ok_or_else(|| {
                PipelineError::Registry(crate::registry::RegistryError::UnknownModel(id.clone()))
            })?;
        }
        self.targeting.validate()?;
        if !(self.trial_duration_s >= 0.0 && self.trial_duration_s.is_finite()) {
            return Err(PipelineError::Config(format!(
                "trial_duration_s {} must be a non-negative number",
                self.trial_duration_s
            )));
        }
        if !(self.hysteresis_margin >= 0.0 && self.hysteresis_margin.is_finite()) {
            return Err(PipelineError::Config(format!(
                "hysteresis_margin {} must be a non-negative number",
                self.hysteresis_margin
            )));
        }
        if self.jobs == 0 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(PipelineError::Config(format!(
                "split.train_fraction {f} must lie strictly between 0 and 1"
            )));
        }
        let s = &self.spurious;
        if !(0.0..=1.0).contains(&s.confidence_floor)
            || !(s.max_jump >= 0.0)
            || !(0.0..=1.0).contains(&s.iou_floor)
        {
            return Err(PipelineError::Config(format!(
                "invalid spurious policy {s:?}"
            )));
        }
        Ok(())
    }

    pub fn trial_duration_ms(&self) -> Option<i64> {
        (self.trial_duration_s > 0.0).then(|| (self.trial_duration_s * 1000.0).round() as i64)
    }

    /// Instantiates the configured detection backend.
    pub fn build_backend(
        &self,
        registry: &Registry,
    ) -> Result<Box<dyn DetectorBackend + Send>, PipelineError> {
        let d = &self.detector;
        match d.backend {
            BackendKind::Mock => {
                let path = d.confidence_table.as_ref().ok_or_else(|| {
                    PipelineError::Config("the mock backend needs detector.confidence_table".into())
                })?;
                let file = std::fs::File::open(path).map_err(|source| PipelineError::Io {
                    path: path.clone(),
                    source,
                })?;
                let table = ConfidenceTable::read_csv(file)?;
                Ok(Box::new(
                    MockDetector::new(table, registry).with_noise(d.noise_sigma, d.seed),
                ))
            }
            BackendKind::Remote => {
                let endpoint = d.endpoint.as_deref().ok_or_else(|| {
                    PipelineError::Config("the remote backend needs detector.endpoint".into())
                })?;
                Ok(Box::new(RemoteDetector::new(endpoint, d.timeout_ms)?))
            }
        }
    }
}
