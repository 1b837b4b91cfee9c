use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::digest::Digest;
use crate::identity::Address;

use super::{ChainState, Gwei, SignedTransaction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdmissionError {
    #[error("bad signature")]
    BadSignature,
    #[error("stale nonce {got}: account already at {account_nonce}")]
    StaleNonce { account_nonce: u64, got: u64 },
    #[error("transaction already pending")]
    Duplicate,
    #[error("gas limit {limit} below intrinsic cost {required}")]
    IntrinsicGas { limit: u64, required: u64 },
    #[error("insufficient funds: need {needed} Gwei, have {available}")]
    InsufficientFunds { needed: u128, available: u128 },
}

#[derive(Debug, Clone)]
struct Entry {
    tx: SignedTransaction,
    arrival: u64,
}

/// Pending transactions, in arrival order.
#[derive(Debug, Clone, Default)]
pub struct Mempool {
    entries: BTreeMap<Digest, Entry>,
    next_arrival: u64,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, hash: &Digest) -> bool {
        self.entries.contains_key(hash)
    }

    pub fn pending(&self) -> impl Iterator<Item = &SignedTransaction> {
        let mut v: Vec<_> = self.entries.values().collect();
        v.sort_by_key(|e| e.arrival);
        v.into_iter().map(|e| &e.tx)
    }

    /// Admit `tx` if its signature is valid, its nonce is not yet consumed and
    /// the sender can cover `gas_limit × gas_price`. `pending_credit` is value
    /// the sender will receive before the next block (queued faucet mints).
    pub fn submit(
        &mut self,
        state: &ChainState,
        tx: SignedTransaction,
        pending_credit: Gwei,
    ) -> Result<Digest, AdmissionError> {
        if !tx.verify() {
            return Err(AdmissionError::BadSignature);
        }
        let account_nonce = state.nonce(&tx.sender);
        if tx.nonce < account_nonce {
            return Err(AdmissionError::StaleNonce {
                account_nonce,
                got: tx.nonce,
            });
        }
        let required = state.schedule().base_transaction_gas;
        if tx.gas_limit < required {
            return Err(AdmissionError::IntrinsicGas {
                limit: tx.gas_limit,
                required,
            });
        }
        let available = u128::from(state.balance(&tx.sender)) + u128::from(pending_credit);
        if available < tx.max_fee() {
            return Err(AdmissionError::InsufficientFunds {
                needed: tx.max_fee(),
                available,
            });
        }
        let hash = tx.hash();
        if self.entries.contains_key(&hash) {
            return Err(AdmissionError::Duplicate);
        }
        self.entries.insert(
            hash,
            Entry {
                tx,
                arrival: self.next_arrival,
            },
        );
        self.next_arrival += 1;
        Ok(hash)
    }

    pub fn remove(&mut self, hash: &Digest) -> Option<SignedTransaction> {
        self.entries.remove(hash).map(|e| e.tx)
    }

    /// Drop everything whose nonce the chain has already consumed.
    pub fn prune(&mut self, state: &ChainState) {
        self.entries
            .retain(|_, e| e.tx.nonce >= state.nonce(&e.tx.sender));
    }
}

pub fn submit_to_mempool(
    state: &ChainState,
    mempool: &mut Mempool,
    tx: SignedTransaction,
) -> Result<Digest, AdmissionError> {
    mempool.submit(state, tx, 0)
}

/// How a miner picks transactions for its next block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerPolicy {
    pub min_gas_price: Gwei,
    /// Include zero-price transactions addressed to the refund-eligible contract.
    pub accept_zero_for_refund_contract: bool,
    /// Maximum transactions per block.
    pub capacity: usize,
    /// Senders this miner refuses to include.
    pub censored_senders: BTreeSet<Address>,
}

impl MinerPolicy {
    pub fn new(min_gas_price: Gwei, accept_zero_for_refund_contract: bool, capacity: usize) -> Self {
        Self {
            min_gas_price,
            accept_zero_for_refund_contract,
            capacity,
            censored_senders: BTreeSet::new(),
        }
    }

    pub fn censoring(mut self, senders: impl IntoIterator<Item = Address>) -> Self {
        self.censored_senders.extend(senders);
        self
    }

    pub fn admits(&self, tx: &SignedTransaction, refund_eligible: &Address) -> bool {
        if self.censored_senders.contains(&tx.sender) {
            return false;
        }
        if tx.gas_price == 0 {
            return self.accept_zero_for_refund_contract && tx.recipient == *refund_eligible;
        }
        tx.gas_price >= self.min_gas_price
    }
}

/// Pick transactions for a block: those the policy admits, by gas price
/// descending then arrival, taking each sender's nonces strictly in sequence.
/// A transaction whose predecessor is not yet takeable waits for a later block,
/// which keeps prices in the block non-increasing.
pub fn select_transactions(
    mempool: &Mempool,
    state: &ChainState,
    policy: &MinerPolicy,
) -> Vec<SignedTransaction> {
    let eligible = state.refund_eligible_contract();
    let mut candidates: Vec<&Entry> = mempool
        .entries
        .values()
        .filter(|e| policy.admits(&e.tx, &eligible))
        .collect();
    candidates.sort_by(|a, b| {
        b.tx.gas_price
            .cmp(&a.tx.gas_price)
            .then(a.arrival.cmp(&b.arrival))
    });

    let mut next_nonce: BTreeMap<Address, u64> = BTreeMap::new();
    let mut out = Vec::new();
    for e in candidates {
        if out.len() >= policy.capacity {
            break;
        }
        let expected = next_nonce
            .entry(e.tx.sender)
            .or_insert_with(|| state.nonce(&e.tx.sender));
        if e.tx.nonce == *expected {
            *expected += 1;
            out.push(e.tx.clone());
        }
    }
    out
}
