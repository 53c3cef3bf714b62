use serde::{Deserialize, Serialize};

use crate::canonical::{hash_canonical, Hash32};
use crate::fl::{ClientId, ClientUpdate, ParameterVector};

/// Contracts that can be deployed on the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentLabel {
    Migration,
    FederatedContract,
    ContributionContract,
}

/// Transaction content: the kind discriminator plus its kind-specific
/// payload. Serialized adjacently tagged so the wire form carries explicit
/// `kind` and `payload` fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum TxBody {
    Registration { client_id: ClientId },
    ModelUpdate(ClientUpdate),
    Aggregation { round: u64, params: ParameterVector },
    Reward { client_id: ClientId, amount: f64 },
    Deployment(DeploymentLabel),
}

/// A ledger transaction: body plus its content hash. `tx_id` is the SHA-256
/// of the body's canonical JSON, so it recomputes identically from the
/// payload and any body change shows up as an id mismatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    #[serde(flatten)]
    body: TxBody,
    tx_id: Hash32,
}

impl Transaction {
    pub fn new(body: TxBody) -> Self {
        let tx_id = hash_canonical(&body).expect("transaction bodies always serialize");
        Self { body, tx_id }
    }

    pub fn body(&self) -> &TxBody {
        &self.body
    }

    pub fn tx_id(&self) -> &Hash32 {
        &self.tx_id
    }

    /// True when `tx_id` matches the body's canonical hash.
    pub fn id_consistent(&self) -> bool {
        hash_canonical(&self.body).map(|h| h == self.tx_id).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_json_bytes;

    fn reward_tx() -> Transaction {
        Transaction::new(TxBody::Reward { client_id: "c0".into(), amount: 25.0 })
    }

    #[test]
    fn tx_id_recomputes_from_body() {
        let tx = reward_tx();
        assert!(tx.id_consistent());
        assert_eq!(*tx.tx_id(), hash_canonical(tx.body()).unwrap());
    }

    #[test]
    fn wire_form_has_kind_payload_and_id() {
        let bytes = canonical_json_bytes(&reward_tx()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("{\"kind\":\"Reward\""), "got {text}");
        assert!(text.contains("\"payload\":{\"amount\":25.0,\"client_id\":\"c0\"}"));
        assert!(text.contains("\"tx_id\":\""));
    }

    #[test]
    fn deployment_labels_serialize_snake_case() {
        let tx = Transaction::new(TxBody::Deployment(DeploymentLabel::ContributionContract));
        let text = String::from_utf8(canonical_json_bytes(&tx).unwrap()).unwrap();
        assert!(text.contains("\"payload\":\"contribution_contract\""), "got {text}");
    }

    #[test]
    fn round_trip_preserves_everything() {
        let tx = Transaction::new(TxBody::Aggregation {
            round: 3,
            params: ParameterVector::zeros(2, 2),
        });
        let bytes = canonical_json_bytes(&tx).unwrap();
        let back: Transaction = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, tx);
        assert_eq!(canonical_json_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn distinct_bodies_get_distinct_ids() {
        let a = Transaction::new(TxBody::Registration { client_id: "a".into() });
        let b = Transaction::new(TxBody::Registration { client_id: "b".into() });
        assert_ne!(a.tx_id(), b.tx_id());
    }
}
