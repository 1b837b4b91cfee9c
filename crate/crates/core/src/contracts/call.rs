//! Contract call payloads: one selector byte followed by the method's arguments
//! in canonical wire encoding (see [`crate::wire`]).
//!
//! | selector | method             | arguments                                                    |
//! |----------|--------------------|--------------------------------------------------------------|
//! | `0x01`   | register_vendor    | product_id: text, vendor_key: bytes                          |
//! | `0x02`   | whitelist_register | address: 20 bytes                                            |
//! | `0x03`   | issue_token        | buyer: 20 bytes, product_id: text, version: text, sig: 65 B  |
//! | `0x04`   | token_transfer     | to: 20 bytes, product_id: text, version: text                |
//! | `0x05`   | submit_review      | product_id, version: text, rating: u8, ref, sig: 65 B        |
//! | `0x06`   | deposit_pool       | amount: u64                                                  |
//! | `0x07`   | claim_refund       | height: u64, tx_index: u32                                   |

use crate::identity::{Address, Signature};
use crate::storage::StorageRef;
use crate::wire::{Canonical, Decoder, Encoder, WireError};

use super::review::{PurchaseReceipt, ReviewSubmission};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Selector {
    RegisterVendor = 0x01,
    WhitelistRegister = 0x02,
    IssueToken = 0x03,
    TokenTransfer = 0x04,
    SubmitReview = 0x05,
    DepositPool = 0x06,
    ClaimRefund = 0x07,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractCall {
    RegisterVendor {
        product_id: String,
        vendor_key: Vec<u8>,
    },
    WhitelistRegister {
        address: Address,
    },
    IssueToken(PurchaseReceipt),
    TokenTransfer {
        to: Address,
        product_id: String,
        product_version: String,
    },
    SubmitReview(ReviewSubmission),
    DepositPool {
        amount: u64,
    },
    ClaimRefund {
        height: u64,
        tx_index: u32,
    },
}

impl ContractCall {
    pub fn selector(&self) -> Selector {
        match self {
            ContractCall::RegisterVendor { .. } => Selector::RegisterVendor,
            ContractCall::WhitelistRegister { .. } => Selector::WhitelistRegister,
            ContractCall::IssueToken(_) => Selector::IssueToken,
            ContractCall::TokenTransfer { .. } => Selector::TokenTransfer,
            ContractCall::SubmitReview(_) => Selector::SubmitReview,
            ContractCall::DepositPool { .. } => Selector::DepositPool,
            ContractCall::ClaimRefund { .. } => Selector::ClaimRefund,
        }
    }

    /// Payload bytes this call persists on chain and is charged storage gas for.
    pub fn stored_payload_bytes(&self) -> usize {
        match self {
            ContractCall::SubmitReview(s) => s.storage_ref.on_chain_bytes(),
            _ => 0,
        }
    }

    pub fn decode(payload: &[u8]) -> Result<Self, WireError> {
        let mut dec = Decoder::new(payload);
        let call = match dec.u8()? {
            0x01 => ContractCall::RegisterVendor {
                product_id: dec.string()?,
                vendor_key: dec.bytes()?,
            },
            0x02 => ContractCall::WhitelistRegister {
                address: Address(dec.fixed()?),
            },
            0x03 => ContractCall::IssueToken(PurchaseReceipt {
                buyer: Address(dec.fixed()?),
                product_id: dec.string()?,
                product_version: dec.string()?,
                vendor_signature: Signature(dec.fixed()?),
            }),
            0x04 => ContractCall::TokenTransfer {
                to: Address(dec.fixed()?),
                product_id: dec.string()?,
                product_version: dec.string()?,
            },
            0x05 => ContractCall::SubmitReview(ReviewSubmission {
                product_id: dec.string()?,
                product_version: dec.string()?,
                rating: dec.u8()?,
                storage_ref: StorageRef::decode_from(&mut dec)?,
                signature: Signature(dec.fixed()?),
            }),
            0x06 => ContractCall::DepositPool { amount: dec.u64()? },
            0x07 => ContractCall::ClaimRefund {
                height: dec.u64()?,
                tx_index: dec.u32()?,
            },
            _ => return Err(WireError::Invalid("method selector")),
        };
        dec.finish()?;
        Ok(call)
    }
}

impl Canonical for ContractCall {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(self.selector() as u8);
        match self {
            ContractCall::RegisterVendor {
                product_id,
                vendor_key,
            } => {
                enc.str(product_id).bytes(vendor_key);
            }
            ContractCall::WhitelistRegister { address } => {
                enc.put(address);
            }
            ContractCall::IssueToken(r) => {
                enc.put(&r.buyer)
                    .str(&r.product_id)
                    .str(&r.product_version)
                    .put(&r.vendor_signature);
            }
            ContractCall::TokenTransfer {
                to,
                product_id,
                product_version,
            } => {
                enc.put(to).str(product_id).str(product_version);
            }
            ContractCall::SubmitReview(s) => {
                enc.str(&s.product_id)
                    .str(&s.product_version)
                    .u8(s.rating)
                    .put(&s.storage_ref)
                    .put(&s.signature);
            }
            ContractCall::DepositPool { amount } => {
                enc.u64(*amount);
            }
            ContractCall::ClaimRefund { height, tx_index } => {
                enc.u64(*height).u32(*tx_index);
            }
        }
    }
}
