//! Local differential privacy: L2 clipping, Gaussian-mechanism noise with
//! closed-form calibration, additive budget accounting, and a brute-force
//! (epsilon, delta) checker for finite mechanisms.

mod budget;
mod mechanism;
mod verifier;

pub use budget::{BudgetAccount, BudgetLedger};
pub use mechanism::{add_gaussian_noise, calibrate_sigma, clip};
pub(crate) use mechanism::standard_normal;
pub use verifier::{verify_dp_inequality, DpVerdict, DpWitness, FiniteMechanism, DP_SLACK_TOLERANCE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("clip_norm must be positive and finite, got {0}")]
    InvalidClipNorm(f64),
    #[error("noise_std must be non-negative and finite, got {0}")]
    InvalidNoiseStd(f64),
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("malformed mechanism: {0}")]
    MalformedMechanism(String),
    #[error("epsilon must be non-negative and finite, got {0}")]
    InvalidEpsilonBound(f64),
    #[error("delta must lie in [0, 1], got {0}")]
    InvalidDeltaBound(f64),
}

/// Per-round privacy settings: the (epsilon, delta) budget spent by one
/// release and the L2 sensitivity bound enforced by clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub clip_norm: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, clip_norm: f64) -> Result<Self, PrivacyError> {
        let p = Self { epsilon, delta, clip_norm };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(PrivacyError::InvalidEpsilon(self.epsilon));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(PrivacyError::InvalidDelta(self.delta));
        }
        if !self.clip_norm.is_finite() || self.clip_norm <= 0.0 {
            return Err(PrivacyError::InvalidClipNorm(self.clip_norm));
        }
        Ok(())
    }
}
