use serde::{Deserialize, Serialize};

use crate::fl::{AcceptanceState, ClientId, ClientUpdate};

use super::block::merkle_root;
use super::chain::Chain;
use super::tx::{Transaction, TxBody};
use super::LedgerError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validator {
    pub id: String,
    /// A faulty validator votes against every proposal.
    pub faulty: bool,
}

impl Validator {
    pub fn honest(id: impl Into<String>) -> Self {
        Self { id: id.into(), faulty: false }
    }

    pub fn faulty(id: impl Into<String>) -> Self {
        Self { id: id.into(), faulty: true }
    }
}

/// Acceptance rules every honest validator applies to a submitted update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdatePolicy {
    /// Largest tolerated L2 norm of the released parameters, inclusive.
    pub max_norm: f64,
    pub require_privacy_tag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    NormExceeded { norm: f64, max_norm: f64 },
    MissingPrivacyTag,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::NormExceeded { norm, max_norm } => {
                write!(f, "parameter norm {norm} exceeds limit {max_norm}")
            }
            RejectReason::MissingPrivacyTag => f.write_str("privacy tag required but missing"),
        }
    }
}

/// Accepts an update whose parameter norm is within the limit (boundary
/// inclusive) and which carries a privacy tag when one is required.
pub fn validate_update(u: &ClientUpdate, policy: &UpdatePolicy) -> Result<(), RejectReason> {
    let norm = u.params.l2_norm();
    if norm > policy.max_norm {
        return Err(RejectReason::NormExceeded { norm, max_norm: policy.max_norm });
    }
    if policy.require_privacy_tag && u.privacy_tag.is_none() {
        return Err(RejectReason::MissingPrivacyTag);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedUpdate {
    pub client_id: ClientId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommitOutcome {
    Committed { excluded: Vec<ExcludedUpdate> },
    RejectedByVote { approvals: usize, validators: usize, excluded: Vec<ExcludedUpdate> },
    /// Every transaction was filtered out, so there was nothing to propose.
    NothingToCommit { excluded: Vec<ExcludedUpdate> },
}

/// One consensus step: filter model updates against the policy, let the
/// round-robin proposer build a candidate block, and commit it when a strict
/// majority of validators approves.
///
/// The proposer for block n is `validators[n % validators.len()]`. Excluded
/// updates never enter the proposal; they are reported back to the caller.
/// Surviving model updates are committed with their acceptance state set.
pub fn propose_and_commit(
    validators: &[Validator],
    chain: &mut Chain,
    txs: Vec<Transaction>,
    sim_time: f64,
    policy: &UpdatePolicy,
) -> Result<CommitOutcome, LedgerError> {
    if validators.is_empty() {
        return Err(LedgerError::NoValidators);
    }

    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for tx in txs {
        match tx.body() {
            TxBody::ModelUpdate(update) => match validate_update(update, policy) {
                Ok(()) => {
                    let mut accepted = update.clone();
                    accepted.accepted = AcceptanceState::Accepted;
                    kept.push(Transaction::new(TxBody::ModelUpdate(accepted)));
                }
                Err(reason) => excluded.push(ExcludedUpdate {
                    client_id: update.client_id.clone(),
                    reason: reason.to_string(),
                }),
            },
            _ => kept.push(tx),
        }
    }
    if kept.is_empty() {
        return Ok(CommitOutcome::NothingToCommit { excluded });
    }

    let proposer_idx = chain.len() % validators.len();
    let candidate = chain.build_next(kept, &validators[proposer_idx].id, sim_time)?;

    let mut approvals = 0;
    for validator in validators {
        if validator.faulty {
            continue;
        }
        let linkage_ok = candidate.header.prev_hash == chain.last().hash
            && merkle_root(&candidate.body)
                .map(|r| r == candidate.header.merkle_root)
                .unwrap_or(false);
        let updates_ok = candidate.body.iter().all(|tx| match tx.body() {
            TxBody::ModelUpdate(u) => validate_update(u, policy).is_ok(),
            _ => true,
        });
        if linkage_ok && updates_ok {
            approvals += 1;
        }
    }

    if approvals * 2 > validators.len() {
        chain.push(candidate);
        Ok(CommitOutcome::Committed { excluded })
    } else {
        Ok(CommitOutcome::RejectedByVote { approvals, validators: validators.len(), excluded })
    }
}
