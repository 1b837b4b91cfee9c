//! Deterministic simulator for tamper-resistant product reviews on an
//! account-based ledger.
//!
//! The crate models the full review pipeline: key management, signed
//! transactions and gas-metered blocks, contract state machines gating who may
//! review, three payload storage designs, cost arithmetic, verified retrieval
//! and an end-to-end scenario runner that scores design configurations.

pub mod contracts;
pub mod digest;
pub mod economics;
pub mod identity;
pub mod ledger;
pub mod retrieval;
pub mod scenarios;
pub mod storage;
pub mod wire;
