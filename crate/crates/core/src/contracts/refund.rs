use std::collections::{BTreeMap, BTreeSet};

use crate::identity::Address;
use crate::wire::{Canonical, Encoder};

use super::ContractError;

/// Blocks of fee history the refund median is taken over.
pub const DEFAULT_REFUND_WINDOW: u64 = 1_500;

/// Facts about an included transaction that a refund claim points at, as
/// recorded by the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefundClaim {
    pub height: u64,
    pub tx_index: u32,
    pub recipient: Address,
    pub gas_price: u64,
    pub gas_used: u64,
    pub block_miner: Address,
}

/// Vendor-funded pool reimbursing miners for zero-price review transactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefundPool {
    balance: u64,
    vendor_deposits: BTreeMap<Address, u64>,
    refunds_paid: BTreeMap<Address, u64>,
    claimed: BTreeSet<(u64, u32)>,
    window: u64,
    eligible_contract: Address,
}

impl RefundPool {
    pub fn new(eligible_contract: Address, window: u64) -> Self {
        Self {
            balance: 0,
            vendor_deposits: BTreeMap::new(),
            refunds_paid: BTreeMap::new(),
            claimed: BTreeSet::new(),
            window: window.max(1),
            eligible_contract,
        }
    }

    pub fn balance(&self) -> u64 {
        self.balance
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn eligible_contract(&self) -> Address {
        self.eligible_contract
    }

    pub fn vendor_deposits(&self) -> &BTreeMap<Address, u64> {
        &self.vendor_deposits
    }

    pub fn refunds_paid(&self) -> &BTreeMap<Address, u64> {
        &self.refunds_paid
    }

    pub fn total_deposits(&self) -> u64 {
        self.vendor_deposits.values().sum()
    }

    pub fn total_refunds(&self) -> u64 {
        self.refunds_paid.values().sum()
    }

    pub fn is_claimed(&self, height: u64, tx_index: u32) -> bool {
        self.claimed.contains(&(height, tx_index))
    }

    pub fn deposit(&mut self, vendor: Address, amount: u64) -> Result<(), ContractError> {
        if amount == 0 {
            return Err(ContractError::ZeroDeposit);
        }
        self.balance += amount;
        *self.vendor_deposits.entry(vendor).or_default() += amount;
        Ok(())
    }

    /// Validate a claim and book the refund of `median_fee × gas_used`.
    /// Returns the amount the caller must move from the pool account to the miner.
    pub fn claim_refund(
        &mut self,
        miner: Address,
        claim: &RefundClaim,
        median_fee: u64,
    ) -> Result<u64, ContractError> {
        if claim.recipient != self.eligible_contract {
            return Err(ContractError::NotRefundEligible);
        }
        if claim.gas_price != 0 {
            return Err(ContractError::NonzeroGasPrice(claim.gas_price));
        }
        if claim.block_miner != miner {
            return Err(ContractError::WrongMiner);
        }
        if self.is_claimed(claim.height, claim.tx_index) {
            return Err(ContractError::DoubleClaim);
        }
        let amount = median_fee
            .checked_mul(claim.gas_used)
            .ok_or(ContractError::InsufficientPool {
                available: self.balance,
                needed: u64::MAX,
            })?;
        if amount > self.balance {
            return Err(ContractError::InsufficientPool {
                available: self.balance,
                needed: amount,
            });
        }
        self.balance -= amount;
        *self.refunds_paid.entry(miner).or_default() += amount;
        self.claimed.insert((claim.height, claim.tx_index));
        Ok(amount)
    }
}

impl Canonical for RefundPool {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.balance).len(self.vendor_deposits.len());
        for (a, v) in &self.vendor_deposits {
            enc.put(a).u64(*v);
        }
        enc.len(self.refunds_paid.len());
        for (a, v) in &self.refunds_paid {
            enc.put(a).u64(*v);
        }
        enc.len(self.claimed.len());
        for (h, i) in &self.claimed {
            enc.u64(*h).u32(*i);
        }
        enc.u64(self.window).put(&self.eligible_contract);
    }
}
