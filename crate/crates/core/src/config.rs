//! Top-level run configuration, loadable from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cardio::RateEstimatorConfig;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::sweep::SweepConfig;

/// Every tunable of a run. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub hr: RateEstimatorConfig,
    pub br: RateEstimatorConfig,
    pub sweep: SweepConfig,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses all cores.
    pub parallelism: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            hr: RateEstimatorConfig::cardiac(),
            br: RateEstimatorConfig::respiratory(),
            sweep: SweepConfig::default(),
            output_dir: None,
            parallelism: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::param(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.pipeline.processing_hz;
        self.hr.validate(fs)?;
        self.br.validate(fs)?;
        if self.parallelism == Some(0) {
            return Err(Error::param("parallelism must be at least 1"));
        }
        Ok(())
    }
}
