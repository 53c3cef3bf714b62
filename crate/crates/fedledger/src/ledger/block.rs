use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical::{canonical_json_bytes, hash_canonical, Hash32};

use super::{LedgerError, Transaction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub number: u64,
    pub prev_hash: Hash32,
    pub merkle_root: Hash32,
    /// Simulation-clock milliseconds, not wall time.
    pub timestamp: f64,
    pub proposer: String,
}

/// A committed block: header, transaction body, and the header's own hash.
///
/// Storing the header hash makes every header field (including the last
/// block's, which no successor links to) verifiable on its own, so any
/// tampering is caught at the block it touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub body: Vec<Transaction>,
    pub hash: Hash32,
}

impl Block {
    pub fn new(header: BlockHeader, body: Vec<Transaction>) -> Self {
        let hash = hash_canonical(&header).expect("headers always serialize");
        Self { header, body, hash }
    }
}

/// Merkle root over the transaction list.
///
/// Leaves are the SHA-256 of each transaction's canonical JSON; parents hash
/// the concatenation of their children; a level with an odd node count
/// duplicates its last node. The root of a single leaf is that leaf's hash.
pub fn merkle_root(txs: &[Transaction]) -> Result<Hash32, LedgerError> {
    if txs.is_empty() {
        return Err(LedgerError::EmptyBlockBody);
    }
    let mut level: Vec<Hash32> = Vec::with_capacity(txs.len());
    for tx in txs {
        let bytes = canonical_json_bytes(tx).map_err(LedgerError::Serialize)?;
        level.push(Hash32(Sha256::digest(&bytes).into()));
    }
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().unwrap());
        }
        level = level
            .chunks(2)
            .map(|pair| {
                let mut hasher = Sha256::new();
                hasher.update(pair[0].0);
                hasher.update(pair[1].0);
                Hash32(hasher.finalize().into())
            })
            .collect();
    }
    Ok(level[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::TxBody;

    fn tx(n: u64) -> Transaction {
        Transaction::new(TxBody::Aggregation {
            round: n,
            params: crate::fl::ParameterVector::zeros(1, 2),
        })
    }

    fn leaf(t: &Transaction) -> Hash32 {
        Hash32(Sha256::digest(canonical_json_bytes(t).unwrap()).into())
    }

    fn pair(a: &Hash32, b: &Hash32) -> Hash32 {
        let mut h = Sha256::new();
        h.update(a.0);
        h.update(b.0);
        Hash32(h.finalize().into())
    }

    #[test]
    fn empty_body_is_an_error() {
        assert!(matches!(merkle_root(&[]), Err(LedgerError::EmptyBlockBody)));
    }

    #[test]
    fn single_tx_root_is_its_leaf_hash() {
        let t = tx(0);
        assert_eq!(merkle_root(std::slice::from_ref(&t)).unwrap(), leaf(&t));
    }

    #[test]
    fn two_tx_root_hashes_the_concatenated_leaves() {
        let (t1, t2) = (tx(1), tx(2));
        let expected = pair(&leaf(&t1), &leaf(&t2));
        assert_eq!(merkle_root(&[t1, t2]).unwrap(), expected);
    }

    #[test]
    fn three_tx_level_duplicates_the_last_leaf() {
        let (t1, t2, t3) = (tx(1), tx(2), tx(3));
        let left = pair(&leaf(&t1), &leaf(&t2));
        let right = pair(&leaf(&t3), &leaf(&t3));
        let expected = pair(&left, &right);
        assert_eq!(merkle_root(&[t1, t2, t3]).unwrap(), expected);
    }

    #[test]
    fn permuting_distinct_txs_changes_the_root() {
        let (t1, t2) = (tx(1), tx(2));
        let forward = merkle_root(&[t1.clone(), t2.clone()]).unwrap();
        let backward = merkle_root(&[t2, t1]).unwrap();
        assert_ne!(forward, backward);
    }

    #[test]
    fn block_hash_covers_the_header() {
        let header = BlockHeader {
            number: 1,
            prev_hash: Hash32::ZERO,
            merkle_root: Hash32::ZERO,
            timestamp: 1000.0,
            proposer: "v-0".into(),
        };
        let block = Block::new(header.clone(), vec![tx(0)]);
        assert_eq!(block.hash, hash_canonical(&header).unwrap());

        let mut altered = header;
        altered.proposer = "v-1".into();
        assert_ne!(hash_canonical(&altered).unwrap(), block.hash);
    }
}
