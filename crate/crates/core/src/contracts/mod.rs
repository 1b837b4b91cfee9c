//! Deterministic contract state machines and their call encoding.
//!
//! Contract methods validate every precondition before mutating anything, so a
//! rejected call leaves state untouched.

mod call;
mod refund;
mod review;

pub use call::{ContractCall, Selector};
pub use refund::{RefundClaim, RefundPool, DEFAULT_REFUND_WINDOW};
pub use review::{
    review_signing_bytes, AuthorizationMode, AuthorizationKind, PurchaseReceipt, Review,
    ReviewContract, ReviewSubmission, TokenKey,
};

use thiserror::Error;

use crate::identity::Address;
use crate::wire::{Canonical, Encoder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("product `{0}` already has a registered vendor")]
    DuplicateVendor(String),
    #[error("unknown product `{0}`")]
    UnknownProduct(String),
    #[error("malformed vendor key")]
    MalformedVendorKey,
    #[error("whitelist registration is closed")]
    RegistrationClosed,
    #[error("operation requires {expected} mode, contract is in {actual} mode")]
    WrongMode {
        expected: AuthorizationKind,
        actual: AuthorizationKind,
    },
    #[error("purchase receipt does not verify against the vendor key")]
    BadReceipt,
    #[error("caller is not the registered vendor of the product")]
    NotVendor,
    #[error("access token already issued for this buyer and product version")]
    DoubleIssuance,
    #[error("access tokens are not transferable")]
    TransferForbidden,
    #[error("caller is not authorized to submit reviews")]
    Unauthorized,
    #[error("author already reviewed this product version")]
    DuplicateReview,
    #[error("malformed review: {0}")]
    MalformedReview(String),
    #[error("review signature does not match the caller")]
    BadReviewSignature,
    #[error("deposit amount must be positive")]
    ZeroDeposit,
    #[error("referenced transaction not found")]
    UnknownTransaction,
    #[error("referenced transaction was not sent to the refund-eligible contract")]
    NotRefundEligible,
    #[error("referenced transaction paid a nonzero gas price ({0} Gwei)")]
    NonzeroGasPrice(u64),
    #[error("claimant did not mine the referenced block")]
    WrongMiner,
    #[error("refund already claimed")]
    DoubleClaim,
    #[error("refund pool holds {available} Gwei, claim needs {needed}")]
    InsufficientPool { available: u64, needed: u64 },
    #[error("method not supported by this contract")]
    UnsupportedMethod,
    #[error("malformed call payload: {0}")]
    MalformedCall(String),
}

/// State of a deployed contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractState {
    Review(ReviewContract),
    RefundPool(RefundPool),
}

impl ContractState {
    pub fn as_review(&self) -> Option<&ReviewContract> {
        match self {
            ContractState::Review(c) => Some(c),
            ContractState::RefundPool(_) => None,
        }
    }

    pub fn as_review_mut(&mut self) -> Option<&mut ReviewContract> {
        match self {
            ContractState::Review(c) => Some(c),
            ContractState::RefundPool(_) => None,
        }
    }

    pub fn as_refund_pool(&self) -> Option<&RefundPool> {
        match self {
            ContractState::RefundPool(p) => Some(p),
            ContractState::Review(_) => None,
        }
    }

    pub fn as_refund_pool_mut(&mut self) -> Option<&mut RefundPool> {
        match self {
            ContractState::RefundPool(p) => Some(p),
            ContractState::Review(_) => None,
        }
    }
}

impl Canonical for ContractState {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            ContractState::Review(c) => {
                enc.u8(0).put(c);
            }
            ContractState::RefundPool(p) => {
                enc.u8(1).put(p);
            }
        }
    }
}

pub(crate) fn encode_address_set<'a>(
    enc: &mut Encoder,
    set: impl ExactSizeIterator<Item = &'a Address>,
) {
    enc.len(set.len());
    for a in set {
        enc.put(a);
    }
}
