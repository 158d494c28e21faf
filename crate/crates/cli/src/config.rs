//! `--config` file: every section optional, unknown keys rejected.
//!
//! Values are in the library's units (radians for angles, except fields whose
//! name ends in `_deg`). Command-line flags override the file.

use std::path::Path;

use h2rbox_core::constraint_lab::EnumerateOptions;
use h2rbox_core::eval_metrics::EvalConfig;
use h2rbox_core::recovery::RecoveryConfig;
use h2rbox_core::selfcheck::CheckSizes;
use h2rbox_core::views_assign::SceneGenConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Used when `--seed` is not given.
    pub seed: Option<u64>,
    pub recovery: RecoveryConfig,
    pub scene: SceneGenConfig,
    pub constraints: EnumerateOptions,
    pub eval: EvalConfig,
    pub check: CheckSizes,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.recovery.validate().map_err(CliError::config)?;
        cfg.scene.validate().map_err(CliError::config)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.recovery.weights.lambda, 0.4);
        assert_eq!(c.recovery.weights.gamma1, 0.15);
        assert_eq!(c.recovery.weights.gamma2, 1.0);
        assert_eq!((c.recovery.weights.mu1, c.recovery.weights.mu2, c.recovery.weights.mu3), (1.0, 1.0, 1.0));
    }

    #[test]
    fn unknown_keys_rejected_at_every_level() {
        for bad in [
            r#"{"bogus": 1}"#,
            r#"{"recovery": {"stepz": 3}}"#,
            r#"{"recovery": {"weights": {"lamda": 0.3}}}"#,
            r#"{"scene": {"objects": 3}}"#,
            r#"{"constraints": {"grid": 0.1}}"#,
            r#"{"eval": {"s3": true}}"#,
            r#"{"check": {"pairs": 3}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"recovery": {"steps": 10, "weights": {"lambda": 0.7}}}"#).unwrap();
        assert_eq!(c.recovery.steps, 10);
        assert_eq!(c.recovery.weights.lambda, 0.7);
        assert_eq!(c.recovery.weights.gamma1, 0.15);
        assert_eq!(c.recovery.step_size, RecoveryConfig::default().step_size);
    }
}
