//! Permissioned ledger: hash-linked blocks with Merkle-rooted bodies,
//! round-robin proposer consensus with strict-majority approval, and gas
//! accounting.

mod block;
mod chain;
mod consensus;
mod gas;
mod tx;

pub use block::{merkle_root, Block, BlockHeader};
pub use chain::{validate_chain, Chain, ChainStatus, ValidationFailure};
pub use consensus::{
    propose_and_commit, validate_update, CommitOutcome, ExcludedUpdate, RejectReason,
    UpdatePolicy, Validator,
};
pub use gas::{block_gas, gas_cost, GasTable, TxKind};
pub use tx::{DeploymentLabel, Transaction, TxBody};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("block body must contain at least one transaction")]
    EmptyBlockBody,
    #[error("timestamp {got} regresses before {min}")]
    TimestampRegression { got: f64, min: f64 },
    #[error("validator set is empty")]
    NoValidators,
    #[error("no gas entry for {0}")]
    UnknownGasItem(String),
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("block {block} failed to parse: {message}")]
    Parse { block: usize, message: String },
    #[error("ledger file contains no blocks")]
    EmptyChain,
}
