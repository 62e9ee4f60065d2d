use serde::{Deserialize, Serialize};

use crate::drawer::DrawerConfig;
use crate::grasp::GraspConfig;
use crate::nav::NavConfig;
use crate::optimizer::OptimizerWeights;
use crate::sim::{NoiseModel, SimConfig};

/// Every tunable of the planning pipeline and the simulator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub nav: NavConfig,
    pub optimizer: OptimizerWeights,
    pub grasp: GraspConfig,
    pub drawer: DrawerConfig,
    pub sim: SimConfig,
    pub noise: NoiseModel,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_blocks_fill_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"optimizer": {"lambda_body": 0.5}, "noise": {"depth_sigma": 0}}"#).unwrap();
        assert_eq!(c.optimizer.lambda_body, 0.5);
        assert_eq!(c.optimizer.lambda_align, 0.02);
        assert_eq!(c.noise.depth_sigma, 0.0);
        assert_eq!(c.noise.depth_dropout, 0.1);
        assert_eq!(c.nav, NavConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<PipelineConfig>(r#"{"nav": {"radius": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("radius"));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"navigation": {}}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
