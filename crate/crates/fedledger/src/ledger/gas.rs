use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::block::Block;
use super::tx::{DeploymentLabel, Transaction, TxBody};
use super::LedgerError;

/// Non-deployment transaction kinds, used as gas-table keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Registration,
    ModelUpdate,
    Aggregation,
    Reward,
}

/// Gas units charged per deployment label and per transaction kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasTable {
    pub deployments: BTreeMap<DeploymentLabel, u64>,
    pub transactions: BTreeMap<TxKind, u64>,
}

impl Default for GasTable {
    fn default() -> Self {
        let deployments = BTreeMap::from([
            (DeploymentLabel::Migration, 164_391),
            (DeploymentLabel::FederatedContract, 263_330),
            (DeploymentLabel::ContributionContract, 1_018_839),
        ]);
        let transactions = BTreeMap::from([
            (TxKind::Registration, 21_000),
            (TxKind::ModelUpdate, 21_000),
            (TxKind::Aggregation, 21_000),
            (TxKind::Reward, 21_000),
        ]);
        Self { deployments, transactions }
    }
}

/// Gas charged for one transaction; unknown table entries are an error.
pub fn gas_cost(table: &GasTable, tx: &Transaction) -> Result<u64, LedgerError> {
    let (map_entry, name): (Option<&u64>, String) = match tx.body() {
        TxBody::Deployment(label) => {
            (table.deployments.get(label), format!("deployment {label:?}"))
        }
        TxBody::Registration { .. } => {
            (table.transactions.get(&TxKind::Registration), "registration tx".into())
        }
        TxBody::ModelUpdate(_) => {
            (table.transactions.get(&TxKind::ModelUpdate), "model update tx".into())
        }
        TxBody::Aggregation { .. } => {
            (table.transactions.get(&TxKind::Aggregation), "aggregation tx".into())
        }
        TxBody::Reward { .. } => (table.transactions.get(&TxKind::Reward), "reward tx".into()),
    };
    map_entry.copied().ok_or(LedgerError::UnknownGasItem(name))
}

/// Total gas of a block: the sum over its transactions.
pub fn block_gas(table: &GasTable, block: &Block) -> Result<u64, LedgerError> {
    block.body.iter().map(|tx| gas_cost(table, tx)).sum()
}
