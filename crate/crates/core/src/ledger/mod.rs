//! Account-based ledger with gas metering, a fee-ordered mempool and
//! deterministic single-proposer block production.
//!
//! Blocks are replayable: any node applying the same block sequence from the
//! same genesis computes the same state roots, and a block whose declared root
//! disagrees with the recomputed one is rejected.

mod block;
mod chain;
mod mempool;
mod state;
mod tx;

pub use block::{apply_block, produce_block, Block, ProducedBlock};
pub use chain::{Chain, DumpRecord, MinedBlock};
pub use mempool::{select_transactions, submit_to_mempool, AdmissionError, Mempool, MinerPolicy};
pub use state::{
    median, AuthorizationSetup, BlockRecord, ChainState, GenesisConfig, IncludedTx, Mint, Outcome,
};
pub use tx::{build_transaction, build_transaction_with_limit, SignedTransaction};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contracts::ContractCall;
use crate::digest::{to_hex, Digest};

/// Gas prices and balances are denominated in Gwei.
pub type Gwei = u64;

pub const GWEI_PER_ETH: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSchedule {
    pub storage_gas_per_byte: u64,
    pub base_transaction_gas: u64,
    pub gwei_per_eth: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        Self {
            storage_gas_per_byte: 625,
            base_transaction_gas: 21_000,
            gwei_per_eth: GWEI_PER_ETH,
        }
    }
}

impl GasSchedule {
    pub fn storage_gas(&self, bytes: usize) -> u64 {
        self.storage_gas_per_byte * bytes as u64
    }

    /// Gas a payload is metered at: the base cost plus storage for any payload
    /// bytes the call persists. Undecodable payloads cost the base only.
    pub fn gas_for_payload(&self, payload: &[u8]) -> u64 {
        let stored = ContractCall::decode(payload)
            .map(|c| c.stored_payload_bytes())
            .unwrap_or(0);
        self.base_transaction_gas + self.storage_gas(stored)
    }
}

/// Why a transaction cannot be included at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxRejection {
    #[error("signature does not match sender")]
    BadSignature,
    #[error("nonce {got} does not match account nonce {expected}")]
    NonceMismatch { expected: u64, got: u64 },
    #[error("gas limit {limit} below intrinsic cost {required}")]
    IntrinsicGas { limit: u64, required: u64 },
    #[error("balance {available} Gwei cannot cover {needed} Gwei")]
    InsufficientFunds { needed: u128, available: Gwei },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("block height {got} does not follow head height {head}")]
    HeightMismatch { head: u64, got: u64 },
    #[error("block parent {} does not match head {}", to_hex(.got), to_hex(.head))]
    ParentMismatch { head: Digest, got: Digest },
    #[error("state root mismatch: block declares {}, replay computed {}", to_hex(.declared), to_hex(.computed))]
    StateRootMismatch { declared: Digest, computed: Digest },
    #[error("transaction {index} in block is invalid: {reason}")]
    InvalidTransaction { index: usize, reason: TxRejection },
    #[error("mint amount must be positive")]
    ZeroMint,
    #[error("chain dump line {line}: {reason}")]
    Dump { line: usize, reason: String },
}

#[cfg(test)]
mod tests;
