use serde::{Deserialize, Serialize};

use crate::privacy::PrivacyParams;

use super::{ClientId, ParameterVector};

/// Validation status of a submitted update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AcceptanceState {
    Pending,
    Accepted,
    Rejected { reason: String },
}

impl AcceptanceState {
    pub fn is_accepted(&self) -> bool {
        matches!(self, AcceptanceState::Accepted)
    }
}

/// One client's trained model for one round: the released (possibly clipped
/// and noised) parameters, the sample count that weights aggregation, and
/// the privacy settings under which the release was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientUpdate {
    pub client_id: ClientId,
    pub round: u64,
    pub params: ParameterVector,
    pub sample_count: u64,
    pub privacy_tag: Option<PrivacyParams>,
    pub accepted: AcceptanceState,
}

impl ClientUpdate {
    pub fn new(
        client_id: ClientId,
        round: u64,
        params: ParameterVector,
        sample_count: u64,
        privacy_tag: Option<PrivacyParams>,
    ) -> Self {
        Self { client_id, round, params, sample_count, privacy_tag, accepted: AcceptanceState::Pending }
    }
}
