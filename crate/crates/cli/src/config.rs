use std::path::{Path, PathBuf};

use manip_core::config::PipelineConfig;
use manip_core::drawer::DrawerConfig;
use manip_core::grasp::GraspConfig;
use manip_core::nav::NavConfig;
use manip_core::optimizer::OptimizerWeights;
use manip_core::sim::{NoiseModel, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Config file layout: the pipeline blocks plus run-level settings. Every
/// key is optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nav: NavConfig,
    pub optimizer: OptimizerWeights,
    pub grasp: GraspConfig,
    pub drawer: DrawerConfig,
    pub sim: SimConfig,
    pub noise: NoiseModel,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Applies command-line overrides on top of the file values.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if out.is_some() {
            self.output_dir = out;
        }
        self
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            nav: self.nav.clone(),
            optimizer: self.optimizer,
            grasp: self.grasp,
            drawer: self.drawer,
            sim: self.sim,
            noise: self.noise,
        }
    }
}
