use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_json_bytes, hash_canonical, Hash32};

use super::block::{merkle_root, Block, BlockHeader};
use super::tx::{DeploymentLabel, Transaction, TxBody};
use super::LedgerError;

pub const GENESIS_PROPOSER: &str = "genesis";

/// The block sequence, always starting from the fixed genesis block:
/// number 0, all-zero previous hash, a single migration deployment,
/// timestamp 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    pub fn new() -> Self {
        let txs = vec![Transaction::new(TxBody::Deployment(DeploymentLabel::Migration))];
        let header = BlockHeader {
            number: 0,
            prev_hash: Hash32::ZERO,
            merkle_root: merkle_root(&txs).expect("genesis body is non-empty"),
            timestamp: 0.0,
            proposer: GENESIS_PROPOSER.to_string(),
        };
        Self { blocks: vec![Block::new(header, txs)] }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn last(&self) -> &Block {
        self.blocks.last().expect("chain always has genesis")
    }

    /// Builds the block that would extend the chain, without committing it.
    pub(super) fn build_next(
        &self,
        txs: Vec<Transaction>,
        proposer: &str,
        timestamp: f64,
    ) -> Result<Block, LedgerError> {
        if txs.is_empty() {
            return Err(LedgerError::EmptyBlockBody);
        }
        let min = self.last().header.timestamp;
        if !(timestamp >= min) {
            return Err(LedgerError::TimestampRegression { got: timestamp, min });
        }
        let header = BlockHeader {
            number: self.blocks.len() as u64,
            prev_hash: self.last().hash,
            merkle_root: merkle_root(&txs)?,
            timestamp,
            proposer: proposer.to_string(),
        };
        Ok(Block::new(header, txs))
    }

    pub(super) fn push(&mut self, block: Block) {
        self.blocks.push(block);
    }

    pub fn append_block(
        &mut self,
        txs: Vec<Transaction>,
        proposer: &str,
        timestamp: f64,
    ) -> Result<&Block, LedgerError> {
        let block = self.build_next(txs, proposer, timestamp)?;
        self.blocks.push(block);
        Ok(self.last())
    }

    /// One canonical-JSON block per line, each line newline-terminated.
    pub fn to_jsonl(&self) -> Result<Vec<u8>, LedgerError> {
        let mut out = Vec::new();
        for block in &self.blocks {
            out.extend_from_slice(&canonical_json_bytes(block)?);
            out.push(b'\n');
        }
        Ok(out)
    }

    /// Parses a ledger file. Parse failures report the zero-based index of
    /// the offending line; structural validity is checked separately by
    /// [`validate_chain`].
    pub fn from_jsonl(bytes: &[u8]) -> Result<Self, LedgerError> {
        let text = std::str::from_utf8(bytes).map_err(|e| {
            let block = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
            LedgerError::Parse { block, message: "invalid utf-8".into() }
        })?;
        let trimmed = text.strip_suffix('\n').unwrap_or(text);
        if trimmed.is_empty() {
            return Err(LedgerError::EmptyChain);
        }
        let mut blocks = Vec::new();
        for (i, line) in trimmed.split('\n').enumerate() {
            let block: Block = serde_json::from_str(line)
                .map_err(|e| LedgerError::Parse { block: i, message: e.to_string() })?;
            // The format is canonical JSON, so the line must re-serialize to
            // itself. This also rejects edits that parse to the same values
            // through an alternative spelling (say, an uppercase exponent).
            if canonical_json_bytes(&block)? != line.as_bytes() {
                return Err(LedgerError::Parse {
                    block: i,
                    message: "non-canonical block encoding".into(),
                });
            }
            blocks.push(block);
        }
        Ok(Self { blocks })
    }
}

impl Default for Chain {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationFailure {
    HashLink,
    Merkle,
    Number,
    Timestamp,
}

impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ValidationFailure::HashLink => "hash-link",
            ValidationFailure::Merkle => "merkle",
            ValidationFailure::Number => "number",
            ValidationFailure::Timestamp => "timestamp",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    Valid,
    Invalid { index: usize, reason: ValidationFailure },
}

/// Checks every block's numbering, header hash, previous-hash link, Merkle
/// root, and timestamp monotonicity, reporting the first failure.
pub fn validate_chain(chain: &Chain) -> ChainStatus {
    let blocks = chain.blocks();
    for (i, block) in blocks.iter().enumerate() {
        let fail = |reason| ChainStatus::Invalid { index: i, reason };
        if block.header.number != i as u64 {
            return fail(ValidationFailure::Number);
        }
        if hash_canonical(&block.header).ok() != Some(block.hash) {
            return fail(ValidationFailure::HashLink);
        }
        let expected_prev = if i == 0 { Hash32::ZERO } else { blocks[i - 1].hash };
        if block.header.prev_hash != expected_prev {
            return fail(ValidationFailure::HashLink);
        }
        match merkle_root(&block.body) {
            Ok(root) if root == block.header.merkle_root => {}
            _ => return fail(ValidationFailure::Merkle),
        }
        if i > 0 && !(block.header.timestamp >= blocks[i - 1].header.timestamp) {
            return fail(ValidationFailure::Timestamp);
        }
    }
    ChainStatus::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reward(id: &str, amount: f64) -> Transaction {
        Transaction::new(TxBody::Reward { client_id: id.into(), amount })
    }

    fn five_block_chain() -> Chain {
        let mut chain = Chain::new();
        for i in 1..5u64 {
            let txs = vec![reward(&format!("a{i}"), i as f64), reward(&format!("b{i}"), 2.0)];
            chain.append_block(txs, "v-0", 1000.0 * i as f64).unwrap();
        }
        chain
    }

    #[test]
    fn genesis_is_fixed() {
        let chain = Chain::new();
        assert_eq!(chain.len(), 1);
        let genesis = chain.last();
        assert_eq!(genesis.header.number, 0);
        assert_eq!(genesis.header.prev_hash, Hash32::ZERO);
        assert_eq!(genesis.header.timestamp, 0.0);
        assert_eq!(genesis.body.len(), 1);
        assert!(matches!(
            genesis.body[0].body(),
            TxBody::Deployment(DeploymentLabel::Migration)
        ));
        assert_eq!(validate_chain(&chain), ChainStatus::Valid);
    }

    #[test]
    fn append_links_to_previous_header_hash() {
        let mut chain = Chain::new();
        let genesis_hash = chain.last().hash;
        chain.append_block(vec![reward("a", 1.0)], "v-1", 5.0).unwrap();
        let block = chain.last();
        assert_eq!(block.header.number, 1);
        assert_eq!(block.header.prev_hash, genesis_hash);
        assert_eq!(block.header.proposer, "v-1");
        assert_eq!(validate_chain(&chain), ChainStatus::Valid);
    }

    #[test]
    fn append_rejects_empty_body_and_time_travel() {
        let mut chain = Chain::new();
        assert!(matches!(
            chain.append_block(vec![], "v-0", 1.0),
            Err(LedgerError::EmptyBlockBody)
        ));
        chain.append_block(vec![reward("a", 1.0)], "v-0", 10.0).unwrap();
        assert!(matches!(
            chain.append_block(vec![reward("b", 1.0)], "v-0", 9.0),
            Err(LedgerError::TimestampRegression { .. })
        ));
        assert!(chain.append_block(vec![reward("b", 1.0)], "v-0", 10.0).is_ok());
    }

    #[test]
    fn five_block_chain_validates() {
        assert_eq!(validate_chain(&five_block_chain()), ChainStatus::Valid);
    }

    #[test]
    fn zeroed_prev_hash_fails_at_that_block() {
        let mut chain = five_block_chain();
        chain.blocks[3].header.prev_hash = Hash32::ZERO;
        chain.blocks[3].hash = hash_canonical(&chain.blocks[3].header).unwrap();
        assert_eq!(
            validate_chain(&chain),
            ChainStatus::Invalid { index: 3, reason: ValidationFailure::HashLink }
        );
    }

    #[test]
    fn stored_hash_flip_is_a_hash_link_failure() {
        let mut chain = five_block_chain();
        chain.blocks[2].hash = Hash32::ZERO;
        assert_eq!(
            validate_chain(&chain),
            ChainStatus::Invalid { index: 2, reason: ValidationFailure::HashLink }
        );
    }

    #[test]
    fn reordered_body_fails_merkle() {
        let mut chain = five_block_chain();
        chain.blocks[2].body.swap(0, 1);
        assert_eq!(
            validate_chain(&chain),
            ChainStatus::Invalid { index: 2, reason: ValidationFailure::Merkle }
        );
    }

    #[test]
    fn wrong_number_with_consistent_hash_fails_number() {
        let mut chain = five_block_chain();
        chain.blocks[4].header.number = 7;
        chain.blocks[4].hash = hash_canonical(&chain.blocks[4].header).unwrap();
        assert_eq!(
            validate_chain(&chain),
            ChainStatus::Invalid { index: 4, reason: ValidationFailure::Number }
        );
    }

    #[test]
    fn hand_built_timestamp_regression_fails_timestamp() {
        let mut chain = five_block_chain();
        // Rebuild block 3 with a timestamp before block 2 and fix up every
        // hash so only the timestamp rule can fire.
        chain.blocks[3].header.timestamp = 1.0;
        chain.blocks[3].hash = hash_canonical(&chain.blocks[3].header).unwrap();
        chain.blocks[4].header.prev_hash = chain.blocks[3].hash;
        chain.blocks[4].hash = hash_canonical(&chain.blocks[4].header).unwrap();
        assert_eq!(
            validate_chain(&chain),
            ChainStatus::Invalid { index: 3, reason: ValidationFailure::Timestamp }
        );
    }

    #[test]
    fn payload_tamper_in_serialized_form_fails_merkle_at_that_block() {
        let chain = five_block_chain();
        let text = String::from_utf8(chain.to_jsonl().unwrap()).unwrap();
        // Block 1's first tx pays 1.0; bump it to 9.0 in the raw text.
        let tampered = text.replacen("\"amount\":1.0", "\"amount\":9.0", 1);
        assert_ne!(tampered, text);
        let reparsed = Chain::from_jsonl(tampered.as_bytes()).unwrap();
        assert_eq!(
            validate_chain(&reparsed),
            ChainStatus::Invalid { index: 1, reason: ValidationFailure::Merkle }
        );
    }

    #[test]
    fn jsonl_round_trip_is_byte_identical() {
        let chain = five_block_chain();
        let bytes = chain.to_jsonl().unwrap();
        assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), chain.len());
        let back = Chain::from_jsonl(&bytes).unwrap();
        assert_eq!(back, chain);
        assert_eq!(back.to_jsonl().unwrap(), bytes);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(Chain::from_jsonl(b""), Err(LedgerError::EmptyChain)));
    }

    #[test]
    fn non_canonical_spellings_are_rejected() {
        let chain = five_block_chain();
        let text = String::from_utf8(chain.to_jsonl().unwrap()).unwrap();

        // Extra whitespace parses fine but is not canonical.
        let spaced = text.replacen("\"number\":0", "\"number\": 0", 1);
        assert!(matches!(
            Chain::from_jsonl(spaced.as_bytes()),
            Err(LedgerError::Parse { block: 0, .. })
        ));

        // An uppercase exponent parses to the same float; only the
        // canonical-form check can see it.
        let respelled = text.replacen("\"amount\":1.0", "\"amount\":1E0", 1);
        assert_ne!(respelled, text);
        assert!(matches!(
            Chain::from_jsonl(respelled.as_bytes()),
            Err(LedgerError::Parse { block: 1, .. })
        ));
    }

    #[test]
    fn garbage_line_reports_its_index() {
        let chain = five_block_chain();
        let mut bytes = chain.to_jsonl().unwrap();
        let second_line_start = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        bytes[second_line_start] = b'x';
        match Chain::from_jsonl(&bytes) {
            Err(LedgerError::Parse { block: 1, .. }) => {}
            other => panic!("expected parse failure at block 1, got {other:?}"),
        }
    }

    #[test]
    fn random_single_bit_flips_are_always_detected() {
        let chain = five_block_chain();
        let clean = chain.to_jsonl().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..150 {
            let mut bytes = clean.clone();
            let pos = rng.random_range(0..bytes.len());
            let bit = rng.random_range(0..8u32);
            bytes[pos] ^= 1 << bit;
            let expected = bytes[..pos].iter().filter(|&&b| b == b'\n').count();
            let detected = match Chain::from_jsonl(&bytes) {
                Err(LedgerError::Parse { block, .. }) => block,
                Err(other) => panic!("unexpected error {other:?}"),
                Ok(parsed) => match validate_chain(&parsed) {
                    ChainStatus::Invalid { index, .. } => index,
                    ChainStatus::Valid => {
                        panic!("flip at byte {pos} bit {bit} went undetected")
                    }
                },
            };
            assert_eq!(detected, expected, "flip at byte {pos} bit {bit}");
        }
    }
}
