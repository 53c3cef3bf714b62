use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::fl::TrainingConfig;
use crate::incentive::RewardPolicy;
use crate::ledger::{GasTable, UpdatePolicy};
use crate::netsim::LinkModel;
use crate::privacy::PrivacyParams;

use super::OrchestratorError;

/// Full description of one experiment. Parsed from a JSON document whose
/// field names match the struct; unknown fields are rejected to catch typos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub clients: usize,
    /// Upper limit on the number of global rounds.
    pub rounds_max: u64,
    /// The run stops early once held-out accuracy reaches this value.
    /// Zero is allowed and makes the target vacuous: round 1 always hits it.
    pub target_accuracy: f64,
    /// `null` or omitted disables clipping and noise entirely.
    #[serde(default)]
    pub privacy: Option<PrivacyParams>,
    pub training: TrainingConfig,
    pub validators: usize,
    pub reward: RewardPolicy,
    pub link: LinkModel,
    #[serde(default)]
    pub gas: GasTable,
    pub dataset: DatasetConfig,
    pub master_seed: u64,
    /// Validator-side acceptance rules for uploaded updates.
    #[serde(default = "default_update_policy")]
    pub policy: UpdatePolicy,
}

fn default_update_policy() -> UpdatePolicy {
    UpdatePolicy { max_norm: 100.0, require_privacy_tag: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Synthetic {
        samples_per_client: usize,
        features: usize,
        classes: usize,
        /// Distance of each class mean from the origin; 0 makes the task
        /// pure chance.
        separation: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// Per-client sample counts, consumed from the file in order.
        partition: Vec<usize>,
    },
}

impl ExperimentConfig {
    /// Desk-scale synthetic scenario used throughout the tests: 10 clients,
    /// 15 rounds, a 3-class 4-feature task with well-separated classes, and
    /// privacy disabled (runs enable it per arm).
    pub fn default_synthetic() -> Self {
        Self {
            clients: 10,
            rounds_max: 15,
            target_accuracy: 1.0,
            privacy: None,
            training: TrainingConfig { learning_rate: 0.1, local_epochs: 1, batch_size: 32 },
            validators: 3,
            reward: RewardPolicy { pool_per_round: 100.0 },
            link: LinkModel {
                drop_probability: 0.0,
                delay_ms: (10.0, 50.0),
                overhead_bytes_per_msg: 30,
            },
            gas: GasTable::default(),
            dataset: DatasetConfig::Synthetic {
                samples_per_client: 200,
                features: 4,
                classes: 3,
                separation: 4.0,
            },
            master_seed: 42,
            policy: default_update_policy(),
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let fail = |msg: String| Err(OrchestratorError::Config(msg));
        if self.clients == 0 {
            return fail("clients must be at least 1".into());
        }
        if self.validators == 0 {
            return fail("validators must be at least 1".into());
        }
        if !(self.target_accuracy >= 0.0 && self.target_accuracy <= 1.0) {
            return fail(format!("target_accuracy {} outside [0, 1]", self.target_accuracy));
        }
        if let Some(p) = &self.privacy {
            p.validate()?;
        }
        self.training.validate()?;
        self.link.validate()?;
        if !(self.reward.pool_per_round >= 0.0) || !self.reward.pool_per_round.is_finite() {
            return fail(format!("reward pool {} must be non-negative", self.reward.pool_per_round));
        }
        if !(self.policy.max_norm > 0.0) || !self.policy.max_norm.is_finite() {
            return fail(format!("policy max_norm {} must be positive", self.policy.max_norm));
        }
        match &self.dataset {
            DatasetConfig::Synthetic { samples_per_client, features, classes, separation } => {
                if *features == 0 {
                    return fail("synthetic features must be at least 1".into());
                }
                if *classes < 2 {
                    return fail("synthetic classes must be at least 2".into());
                }
                if *samples_per_client < 5 {
                    return fail(
                        "samples_per_client must be at least 5 so the 20% holdout is non-empty"
                            .into(),
                    );
                }
                if !(*separation >= 0.0) || !separation.is_finite() {
                    return fail(format!("separation {separation} must be non-negative"));
                }
            }
            DatasetConfig::Idx { partition, .. } => {
                if partition.len() != self.clients {
                    return fail(format!(
                        "partition lists {} sizes for {} clients",
                        partition.len(),
                        self.clients
                    ));
                }
                if partition.iter().any(|&n| n == 0) {
                    return fail("partition sizes must all be positive".into());
                }
                if partition.iter().all(|&n| n < 5) {
                    return fail(
                        "at least one partition size must be 5 or more so the holdout is non-empty"
                            .into(),
                    );
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_json_bytes;

    #[test]
    fn default_config_validates() {
        ExperimentConfig::default_synthetic().validate().unwrap();
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut cfg = ExperimentConfig::default_synthetic();
        cfg.privacy = Some(PrivacyParams { epsilon: 1.18, delta: 1e-5, clip_norm: 1.0 });
        let bytes = canonical_json_bytes(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn omitted_privacy_parses_as_disabled() {
        let mut cfg = ExperimentConfig::default_synthetic();
        cfg.privacy = None;
        let mut doc: serde_json::Value =
            serde_json::from_slice(&canonical_json_bytes(&cfg).unwrap()).unwrap();
        doc.as_object_mut().unwrap().remove("privacy");
        let back: ExperimentConfig = serde_json::from_value(doc).unwrap();
        assert_eq!(back.privacy, None);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let cfg = ExperimentConfig::default_synthetic();
        let mut doc: serde_json::Value =
            serde_json::from_slice(&canonical_json_bytes(&cfg).unwrap()).unwrap();
        doc.as_object_mut().unwrap().insert("tarket_accuracy".into(), 0.5.into());
        assert!(serde_json::from_value::<ExperimentConfig>(doc).is_err());
    }

    #[test]
    fn dataset_kind_tag_is_snake_case() {
        let ds = DatasetConfig::Synthetic {
            samples_per_client: 10,
            features: 2,
            classes: 2,
            separation: 1.0,
        };
        let text = String::from_utf8(canonical_json_bytes(&ds).unwrap()).unwrap();
        assert!(text.contains("\"kind\":\"synthetic\""), "{text}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = ExperimentConfig::default_synthetic();
        let cases: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
            Box::new(|c| c.clients = 0),
            Box::new(|c| c.validators = 0),
            Box::new(|c| c.target_accuracy = 1.5),
            Box::new(|c| c.target_accuracy = -0.1),
            Box::new(|c| c.target_accuracy = f64::NAN),
            Box::new(|c| c.training.batch_size = 0),
            Box::new(|c| c.training.learning_rate = 0.0),
            Box::new(|c| c.link.drop_probability = 1.5),
            Box::new(|c| c.reward.pool_per_round = -5.0),
            Box::new(|c| c.policy.max_norm = 0.0),
            Box::new(|c| {
                c.privacy = Some(PrivacyParams { epsilon: -1.0, delta: 1e-5, clip_norm: 1.0 })
            }),
            Box::new(|c| {
                c.dataset = DatasetConfig::Synthetic {
                    samples_per_client: 4,
                    features: 4,
                    classes: 3,
                    separation: 4.0,
                }
            }),
            Box::new(|c| {
                c.dataset = DatasetConfig::Synthetic {
                    samples_per_client: 10,
                    features: 4,
                    classes: 1,
                    separation: 4.0,
                }
            }),
            Box::new(|c| {
                c.dataset = DatasetConfig::Idx {
                    images: "img".into(),
                    labels: "lbl".into(),
                    partition: vec![10, 10],
                }
            }),
        ];
        for (i, tweak) in cases.iter().enumerate() {
            let mut cfg = base.clone();
            tweak(&mut cfg);
            assert!(cfg.validate().is_err(), "case {i} should fail validation");
        }
    }

    #[test]
    fn zero_target_accuracy_is_allowed() {
        let mut cfg = ExperimentConfig::default_synthetic();
        cfg.target_accuracy = 0.0;
        cfg.validate().unwrap();
    }
}
