//! Contribution scoring and proportional reward distribution.
//!
//! Accepted updates score their sample count, mirroring the weights used for
//! aggregation; rejected updates score zero. Each round's reward pool is
//! split in proportion to score and recorded as reward transactions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fl::{AcceptanceState, ClientId, ClientUpdate};
use crate::ledger::{Transaction, TxBody};

#[derive(Debug, Error)]
pub enum IncentiveError {
    #[error("update from {client_id} has unresolved acceptance state")]
    PendingUpdate { client_id: ClientId },
    #[error("reward pool must be non-negative, got {0}")]
    NegativePool(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub client_id: ClientId,
    pub round: u64,
    pub sample_count: u64,
    pub accepted: bool,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardPolicy {
    pub pool_per_round: f64,
}

/// Scores one resolved update: the sample count if accepted, zero otherwise.
pub fn score_contribution(u: &ClientUpdate) -> Result<ContributionRecord, IncentiveError> {
    let accepted = match &u.accepted {
        AcceptanceState::Pending => {
            return Err(IncentiveError::PendingUpdate { client_id: u.client_id.clone() })
        }
        AcceptanceState::Accepted => true,
        AcceptanceState::Rejected { .. } => false,
    };
    Ok(ContributionRecord {
        client_id: u.client_id.clone(),
        round: u.round,
        sample_count: u.sample_count,
        accepted,
        score: if accepted { u.sample_count as f64 } else { 0.0 },
    })
}

/// Splits the round's pool in proportion to score. Clients with zero score
/// get no transaction at all; when every score is zero nothing is paid out.
pub fn distribute_rewards(
    records: &[ContributionRecord],
    policy: &RewardPolicy,
) -> Result<Vec<Transaction>, IncentiveError> {
    if !(policy.pool_per_round >= 0.0) {
        return Err(IncentiveError::NegativePool(policy.pool_per_round));
    }
    let total: f64 = records.iter().map(|r| r.score).sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    Ok(records
        .iter()
        .filter(|r| r.score > 0.0)
        .map(|r| {
            Transaction::new(TxBody::Reward {
                client_id: r.client_id.clone(),
                amount: policy.pool_per_round * r.score / total,
            })
        })
        .collect())
}
