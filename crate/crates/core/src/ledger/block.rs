use serde::{Deserialize, Serialize};

use crate::digest::{self, sha256, Digest};
use crate::identity::Address;
use crate::wire::{Canonical, Encoder};

use super::{ChainState, LedgerError, Mint, SignedTransaction, TxRejection};

const BLOCK_DOMAIN: &str = "reviewchain/block/v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    #[serde(with = "digest::hex32")]
    pub parent_digest: Digest,
    pub miner: Address,
    /// Faucet credits applied before the transactions.
    pub mints: Vec<Mint>,
    pub transactions: Vec<SignedTransaction>,
    #[serde(with = "digest::hex32")]
    pub state_root: Digest,
}

impl Block {
    pub fn digest(&self) -> Digest {
        sha256(&self.to_canonical())
    }
}

impl Canonical for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(BLOCK_DOMAIN)
            .u64(self.height)
            .fixed(&self.parent_digest)
            .put(&self.miner)
            .len(self.mints.len());
        for m in &self.mints {
            enc.put(m);
        }
        enc.len(self.transactions.len());
        for tx in &self.transactions {
            enc.fixed(&tx.hash());
        }
        enc.fixed(&self.state_root);
    }
}

/// A freshly produced block, the state after it, and the candidates that
/// turned out to be invalid when executed.
#[derive(Debug, Clone)]
pub struct ProducedBlock {
    pub block: Block,
    pub state: ChainState,
    pub dropped: Vec<(SignedTransaction, TxRejection)>,
}

/// Execute `selected` on top of `state` and seal the result. Candidates that
/// fail validity checks are left out of the block rather than aborting it.
pub fn produce_block(
    state: &ChainState,
    selected: Vec<SignedTransaction>,
    mints: Vec<Mint>,
    miner: Address,
) -> Result<ProducedBlock, LedgerError> {
    let mut next = state.clone();
    let height = state.height() + 1;
    for m in &mints {
        next.faucet_fund(m.to, m.amount)?;
    }
    next.begin_block(height, miner);
    let mut included = Vec::with_capacity(selected.len());
    let mut dropped = Vec::new();
    for tx in selected {
        match next.execute(&tx) {
            Ok(_) => included.push(tx),
            Err(reason) => dropped.push((tx, reason)),
        }
    }
    next.end_block();
    let block = Block {
        height,
        parent_digest: state.head(),
        miner,
        mints,
        transactions: included,
        state_root: next.state_root(),
    };
    next.set_head(block.digest());
    Ok(ProducedBlock {
        block,
        state: next,
        dropped,
    })
}

/// Replay `block` on top of `state`. Any invalid transaction, a broken parent
/// link or a declared state root that disagrees with the replay rejects the
/// whole block.
pub fn apply_block(state: &ChainState, block: &Block) -> Result<ChainState, LedgerError> {
    if block.height != state.height() + 1 {
        return Err(LedgerError::HeightMismatch {
            head: state.height(),
            got: block.height,
        });
    }
    if block.parent_digest != state.head() {
        return Err(LedgerError::ParentMismatch {
            head: state.head(),
            got: block.parent_digest,
        });
    }
    let mut next = state.clone();
    for m in &block.mints {
        next.faucet_fund(m.to, m.amount)?;
    }
    next.begin_block(block.height, block.miner);
    for (index, tx) in block.transactions.iter().enumerate() {
        next.execute(tx)
            .map_err(|reason| LedgerError::InvalidTransaction { index, reason })?;
    }
    next.end_block();
    let computed = next.state_root();
    if computed != block.state_root {
        return Err(LedgerError::StateRootMismatch {
            declared: block.state_root,
            computed,
        });
    }
    next.set_head(block.digest());
    Ok(next)
}
