use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::contracts::{
    AuthorizationMode, ContractCall, ContractError, ContractState, RefundClaim, RefundPool,
    ReviewContract,
};
use crate::digest::{sha256, sha256_parts, Digest};
use crate::identity::Address;
use crate::wire::{Canonical, Encoder};

use super::{GasSchedule, Gwei, LedgerError, SignedTransaction, TxRejection};

const STATE_DOMAIN: &str = "reviewchain/state/v1";
const GENESIS_DOMAIN: &str = "reviewchain/genesis/v1";

/// Balance credit created outside of any transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mint {
    pub to: Address,
    pub amount: Gwei,
}

impl Canonical for Mint {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.to).u64(self.amount);
    }
}

/// Serializable description of the review contract's starting authorization mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorizationSetup {
    Whitelist {
        addresses: Vec<Address>,
        open_registration: bool,
    },
    AccessToken,
    PoolKey {
        shared_address: Address,
    },
}

impl AuthorizationSetup {
    pub fn to_mode(&self) -> AuthorizationMode {
        match self {
            Self::Whitelist {
                addresses,
                open_registration,
            } => AuthorizationMode::Whitelist {
                addresses: addresses.iter().copied().collect(),
                open_registration: *open_registration,
            },
            Self::AccessToken => AuthorizationMode::access_token(),
            Self::PoolKey { shared_address } => AuthorizationMode::pool_key(*shared_address),
        }
    }
}

/// Everything needed to rebuild the state at height zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub schedule: GasSchedule,
    pub review_contract: Address,
    pub refund_pool: Address,
    pub authorization: AuthorizationSetup,
    pub refund_window: u64,
    pub allocations: Vec<Mint>,
}

impl GenesisConfig {
    pub fn new(authorization: AuthorizationSetup) -> Self {
        Self {
            schedule: GasSchedule::default(),
            review_contract: Address::from_label("review-contract"),
            refund_pool: Address::from_label("refund-pool"),
            authorization,
            refund_window: crate::contracts::DEFAULT_REFUND_WINDOW,
            allocations: Vec::new(),
        }
    }

    pub fn digest(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.str(GENESIS_DOMAIN)
            .u64(self.schedule.storage_gas_per_byte)
            .u64(self.schedule.base_transaction_gas)
            .u64(self.schedule.gwei_per_eth)
            .put(&self.review_contract)
            .put(&self.refund_pool)
            .put(&self.authorization.to_mode())
            .u64(self.refund_window)
            .len(self.allocations.len());
        for m in &self.allocations {
            enc.put(m);
        }
        sha256(&enc.finish())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum Outcome {
    Success,
    Reverted(String),
    OutOfGas,
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }
}

/// What the ledger remembers about each included transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncludedTx {
    #[serde(with = "crate::digest::hex32")]
    pub hash: Digest,
    pub sender: Address,
    pub recipient: Address,
    pub gas_price: Gwei,
    pub gas_used: u64,
    /// Portion of `gas_used` charged for persisted payload bytes.
    pub storage_gas: u64,
    pub fee: Gwei,
    /// Value moved by the call itself (pool deposit or refund).
    pub transfer: Gwei,
    pub outcome: Outcome,
}

impl Canonical for IncludedTx {
    fn encode(&self, enc: &mut Encoder) {
        enc.fixed(&self.hash)
            .put(&self.sender)
            .put(&self.recipient)
            .u64(self.gas_price)
            .u64(self.gas_used)
            .u64(self.storage_gas)
            .u64(self.fee)
            .u64(self.transfer);
        match &self.outcome {
            Outcome::Success => enc.u8(0),
            Outcome::Reverted(r) => enc.u8(1).str(r),
            Outcome::OutOfGas => enc.u8(2),
        };
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockRecord {
    pub height: u64,
    pub miner: Address,
    pub transactions: Vec<IncludedTx>,
}

impl Canonical for BlockRecord {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.height).put(&self.miner).len(self.transactions.len());
        for t in &self.transactions {
            enc.put(t);
        }
    }
}

/// Account balances, nonces, contract states and per-block execution history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    schedule: GasSchedule,
    review_contract: Address,
    refund_pool: Address,
    balances: BTreeMap<Address, Gwei>,
    nonces: BTreeMap<Address, u64>,
    contracts: BTreeMap<Address, ContractState>,
    history: Vec<BlockRecord>,
    /// Rolling digest over `history`, so the state root need not re-hash it.
    history_digest: Digest,
    minted: u128,
    height: u64,
    head: Digest,
}

impl ChainState {
    pub fn genesis(config: &GenesisConfig) -> Self {
        let mut contracts = BTreeMap::new();
        contracts.insert(
            config.review_contract,
            ContractState::Review(ReviewContract::new(config.authorization.to_mode())),
        );
        contracts.insert(
            config.refund_pool,
            ContractState::RefundPool(RefundPool::new(
                config.review_contract,
                config.refund_window,
            )),
        );
        let mut state = Self {
            schedule: config.schedule,
            review_contract: config.review_contract,
            refund_pool: config.refund_pool,
            balances: BTreeMap::new(),
            nonces: BTreeMap::new(),
            contracts,
            history: Vec::new(),
            history_digest: config.digest(),
            minted: 0,
            height: 0,
            head: config.digest(),
        };
        for m in &config.allocations {
            state
                .faucet_fund(m.to, m.amount)
                .expect("genesis allocations must be positive");
        }
        state
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    /// Digest of the latest block (the genesis digest at height zero).
    pub fn head(&self) -> Digest {
        self.head
    }

    pub(crate) fn set_head(&mut self, head: Digest) {
        self.head = head;
    }

    pub fn review_contract_address(&self) -> Address {
        self.review_contract
    }

    pub fn refund_pool_address(&self) -> Address {
        self.refund_pool
    }

    pub fn balance(&self, who: &Address) -> Gwei {
        self.balances.get(who).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> &BTreeMap<Address, Gwei> {
        &self.balances
    }

    pub fn nonce(&self, who: &Address) -> u64 {
        self.nonces.get(who).copied().unwrap_or(0)
    }

    pub fn total_balance(&self) -> u128 {
        self.balances.values().map(|&b| u128::from(b)).sum()
    }

    pub fn total_minted(&self) -> u128 {
        self.minted
    }

    pub fn contract(&self, address: &Address) -> Option<&ContractState> {
        self.contracts.get(address)
    }

    pub fn review_contract(&self) -> &ReviewContract {
        self.contracts[&self.review_contract]
            .as_review()
            .expect("review contract deployed at genesis")
    }

    pub fn refund_pool(&self) -> &RefundPool {
        self.contracts[&self.refund_pool]
            .as_refund_pool()
            .expect("refund pool deployed at genesis")
    }

    /// The contract whose zero-price transactions miners may be refunded for.
    pub fn refund_eligible_contract(&self) -> Address {
        self.refund_pool().eligible_contract()
    }

    pub fn history(&self) -> &[BlockRecord] {
        &self.history
    }

    pub fn included(&self, height: u64, tx_index: u32) -> Option<(&BlockRecord, &IncludedTx)> {
        let block = self.history.get(usize::try_from(height).ok()?.checked_sub(1)?)?;
        Some((block, block.transactions.get(tx_index as usize)?))
    }

    /// Gas prices paid in each block, oldest first, zero-price ones included.
    pub fn fee_history(&self) -> Vec<Vec<Gwei>> {
        self.history
            .iter()
            .map(|b| b.transactions.iter().map(|t| t.gas_price).collect())
            .collect()
    }

    /// Median nonzero gas price over the last `window` blocks; 0 without history.
    pub fn median_fee(&self, window: u64) -> Gwei {
        let window = usize::try_from(window.max(1)).unwrap_or(usize::MAX);
        let start = self.history.len().saturating_sub(window);
        let prices: Vec<Gwei> = self.history[start..]
            .iter()
            .flat_map(|b| b.transactions.iter().map(|t| t.gas_price))
            .filter(|&p| p > 0)
            .collect();
        median(prices)
    }

    pub fn faucet_fund(&mut self, target: Address, amount: Gwei) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroMint);
        }
        *self.balances.entry(target).or_default() += amount;
        self.minted += u128::from(amount);
        Ok(())
    }

    pub fn state_root(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.str(STATE_DOMAIN)
            .u64(self.height)
            .fixed(&self.history_digest)
            .len(self.balances.len());
        for (a, b) in &self.balances {
            enc.put(a).u64(*b);
        }
        enc.len(self.nonces.len());
        for (a, n) in &self.nonces {
            enc.put(a).u64(*n);
        }
        enc.len(self.contracts.len());
        for (a, c) in &self.contracts {
            enc.put(a).put(c);
        }
        enc.u64((self.minted >> 64) as u64).u64(self.minted as u64);
        sha256(&enc.finish())
    }

    pub(crate) fn begin_block(&mut self, height: u64, miner: Address) {
        self.height = height;
        self.history.push(BlockRecord {
            height,
            miner,
            transactions: Vec::new(),
        });
    }

    pub(crate) fn end_block(&mut self) {
        let record = self.history.last().expect("block in progress");
        self.history_digest = sha256_parts(&[&self.history_digest, &record.to_canonical()]);
    }

    fn debit(&mut self, who: Address, amount: Gwei) {
        let bal = self.balances.entry(who).or_default();
        *bal = bal.checked_sub(amount).expect("debit checked by caller");
    }

    fn credit(&mut self, who: Address, amount: Gwei) {
        if amount > 0 {
            *self.balances.entry(who).or_default() += amount;
        }
    }

    /// Execute one transaction inside the block opened by [`begin_block`].
    ///
    /// Validity failures (`TxRejection`) leave the state untouched. Contract
    /// failures are recorded as reverted, still charge gas and bump the nonce.
    pub(crate) fn execute(&mut self, tx: &SignedTransaction) -> Result<&IncludedTx, TxRejection> {
        let record = self.history.last().expect("block in progress");
        let (height, miner) = (record.height, record.miner);

        if !tx.verify() {
            return Err(TxRejection::BadSignature);
        }
        let expected = self.nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(TxRejection::NonceMismatch {
                expected,
                got: tx.nonce,
            });
        }
        if tx.gas_limit < self.schedule.base_transaction_gas {
            return Err(TxRejection::IntrinsicGas {
                limit: tx.gas_limit,
                required: self.schedule.base_transaction_gas,
            });
        }
        let available = self.balance(&tx.sender);
        if u128::from(available) < tx.max_fee() {
            return Err(TxRejection::InsufficientFunds {
                needed: tx.max_fee(),
                available,
            });
        }

        let call = ContractCall::decode(&tx.payload);
        let stored = call.as_ref().map_or(0, ContractCall::stored_payload_bytes);
        let storage_gas = self.schedule.storage_gas(stored);
        let required = self.schedule.base_transaction_gas + storage_gas;

        let out_of_gas = required > tx.gas_limit;
        let gas_used = if out_of_gas { tx.gas_limit } else { required };
        let fee = gas_used * tx.gas_price;
        self.debit(tx.sender, fee);
        let (storage_gas, outcome, transfer) = if out_of_gas {
            (0, Outcome::OutOfGas, 0)
        } else {
            match self.dispatch(tx, call.map_err(|e| e.to_string()), height) {
                Ok(transfer) => (storage_gas, Outcome::Success, transfer),
                Err(e) => (storage_gas, Outcome::Reverted(e.to_string()), 0),
            }
        };
        self.credit(miner, fee);
        *self.nonces.entry(tx.sender).or_default() += 1;

        let record = self.history.last_mut().expect("block in progress");
        record.transactions.push(IncludedTx {
            hash: tx.hash(),
            sender: tx.sender,
            recipient: tx.recipient,
            gas_price: tx.gas_price,
            gas_used,
            storage_gas,
            fee,
            transfer,
            outcome,
        });
        Ok(record.transactions.last().expect("just pushed"))
    }

    /// Run the call against the recipient contract. The fee has already been
    /// debited from the sender. Returns value moved by the call.
    fn dispatch(
        &mut self,
        tx: &SignedTransaction,
        call: Result<ContractCall, String>,
        height: u64,
    ) -> Result<Gwei, ContractError> {
        if !self.contracts.contains_key(&tx.recipient) {
            // Plain message to an account: nothing to execute.
            return Ok(0);
        }
        let call = call.map_err(ContractError::MalformedCall)?;
        let caller = tx.sender;
        let recipient = tx.recipient;

        if recipient == self.refund_pool {
            return match call {
                ContractCall::DepositPool { amount } => {
                    if self.balance(&caller) < amount {
                        return Err(ContractError::MalformedCall(format!(
                            "deposit of {amount} Gwei exceeds sender balance"
                        )));
                    }
                    self.pool_mut().deposit(caller, amount)?;
                    self.debit(caller, amount);
                    self.credit(recipient, amount);
                    Ok(amount)
                }
                ContractCall::ClaimRefund { height: h, tx_index } => {
                    if h >= height {
                        return Err(ContractError::UnknownTransaction);
                    }
                    let (block, included) = self
                        .included(h, tx_index)
                        .ok_or(ContractError::UnknownTransaction)?;
                    let claim = RefundClaim {
                        height: h,
                        tx_index,
                        recipient: included.recipient,
                        gas_price: included.gas_price,
                        gas_used: included.gas_used,
                        block_miner: block.miner,
                    };
                    let median = self.median_fee(self.refund_pool().window());
                    let amount = self.pool_mut().claim_refund(caller, &claim, median)?;
                    self.debit(recipient, amount);
                    self.credit(caller, amount);
                    Ok(amount)
                }
                _ => Err(ContractError::UnsupportedMethod),
            };
        }

        let contract = self
            .contracts
            .get_mut(&recipient)
            .and_then(ContractState::as_review_mut)
            .expect("every deployed contract is a review contract or the pool");
        match call {
            ContractCall::RegisterVendor {
                product_id,
                vendor_key,
            } => contract.register_vendor(&product_id, &vendor_key)?,
            ContractCall::WhitelistRegister { address } => contract.whitelist_register(address)?,
            ContractCall::IssueToken(receipt) => contract.issue_token(caller, &receipt)?,
            ContractCall::TokenTransfer {
                to,
                product_id,
                product_version,
            } => contract.token_transfer(caller, to, &product_id, &product_version)?,
            ContractCall::SubmitReview(submission) => {
                contract.submit_review(caller, submission, height)?;
            }
            ContractCall::DepositPool { .. } | ContractCall::ClaimRefund { .. } => {
                return Err(ContractError::UnsupportedMethod)
            }
        }
        Ok(0)
    }

    fn pool_mut(&mut self) -> &mut RefundPool {
        self.contracts
            .get_mut(&self.refund_pool)
            .and_then(ContractState::as_refund_pool_mut)
            .expect("refund pool deployed at genesis")
    }
}

/// Median of the values; the mean of the two middle values (rounded down)
/// for even counts, 0 when empty.
pub fn median(mut values: Vec<u64>) -> u64 {
    if values.is_empty() {
        return 0;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        ((u128::from(values[mid - 1]) + u128::from(values[mid])) / 2) as u64
    }
}
