//! Scoring a configuration on security, trust and cost.
//!
//! Each design choice carries penalty points on one or more dimensions. A
//! dimension's grade comes from its point total: 0 is Good, 1 is Medium,
//! 2 or more is Poor. The table is the whole rubric; nothing else feeds it.
//!
//! | choice                    | security | trust | cost |
//! |---------------------------|---------:|------:|-----:|
//! | relay submission          |        2 |     2 |      |
//! | whitelist                 |        1 |       |      |
//! | access token              |          |     1 |      |
//! | pool key                  |        2 |       |      |
//! | on-chain storage          |          |       |    2 |
//! | anchored central storage  |          |     1 |      |
//! | content-addressed storage |          |       |    1 |
//! | faucet                    |          |     1 |      |
//! | central zero-price miner  |          |     1 |      |
//! | remote node reader        |          |     1 |      |
//!
//! Relay custody exposes every user key and lets the operator censor. An open
//! whitelist admits anyone who registers. The pool key ships in every app
//! copy. Access tokens and faucets depend on one issuer. Anchored payloads
//! depend on one store. On-chain bytes are the most expensive storage; a
//! content-addressed network adds pinning cost over a single store.

use std::fmt;

use serde::Serialize;

use crate::storage::StorageKind;

use super::{Authorization, Fees, Retrieval, ScenarioConfig, Submission};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Grade {
    Good,
    Medium,
    Poor,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::Good => "Good",
            Grade::Medium => "Medium",
            Grade::Poor => "Poor",
        })
    }
}

pub fn grade(points: u32) -> Grade {
    match points {
        0 => Grade::Good,
        1 => Grade::Medium,
        _ => Grade::Poor,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TradeoffRating {
    pub security: Grade,
    pub trust: Grade,
    pub cost: Grade,
}

impl fmt::Display for TradeoffRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.security, self.trust, self.cost)
    }
}

/// Penalty points for one design choice: (security, trust, cost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Penalty {
    pub choice: &'static str,
    pub security: u32,
    pub trust: u32,
    pub cost: u32,
}

const fn p(choice: &'static str, security: u32, trust: u32, cost: u32) -> Penalty {
    Penalty {
        choice,
        security,
        trust,
        cost,
    }
}

pub const RELAY: Penalty = p("relay submission", 2, 2, 0);
pub const DIRECT: Penalty = p("direct submission", 0, 0, 0);
pub const WHITELIST: Penalty = p("whitelist", 1, 0, 0);
pub const ACCESS_TOKEN: Penalty = p("access token", 0, 1, 0);
pub const POOL_KEY: Penalty = p("pool key", 2, 0, 0);
pub const ON_CHAIN: Penalty = p("on-chain storage", 0, 0, 2);
pub const ANCHORED: Penalty = p("anchored central storage", 0, 1, 0);
pub const CONTENT_ADDRESSED: Penalty = p("content-addressed storage", 0, 0, 1);
pub const FAUCET: Penalty = p("faucet", 0, 1, 0);
pub const CENTRAL_MINER: Penalty = p("central zero-price miner", 0, 1, 0);
pub const REFUND_CONTRACT: Penalty = p("refund contract", 0, 0, 0);
pub const REMOTE: Penalty = p("remote node reader", 0, 1, 0);
pub const LOCAL: Penalty = p("local replica reader", 0, 0, 0);

/// The penalty rows that apply to `config`, one per dimension choice.
pub fn penalties(config: &ScenarioConfig) -> [Penalty; 5] {
    [
        match config.submission {
            Submission::Relay => RELAY,
            Submission::Direct => DIRECT,
        },
        match config.authorization {
            Authorization::Whitelist => WHITELIST,
            Authorization::AccessToken => ACCESS_TOKEN,
            Authorization::PoolKey => POOL_KEY,
        },
        match config.storage {
            StorageKind::OnChain => ON_CHAIN,
            StorageKind::Anchored => ANCHORED,
            StorageKind::ContentAddressed => CONTENT_ADDRESSED,
        },
        match config.fees {
            Fees::Faucet => FAUCET,
            Fees::CentralMinerZeroPrice => CENTRAL_MINER,
            Fees::RefundContract => REFUND_CONTRACT,
        },
        match config.retrieval {
            Retrieval::Remote => REMOTE,
            Retrieval::Local => LOCAL,
        },
    ]
}

pub fn evaluate_tradeoffs(config: &ScenarioConfig) -> TradeoffRating {
    let rows = penalties(config);
    let sum = |f: fn(&Penalty) -> u32| rows.iter().map(f).sum::<u32>();
    TradeoffRating {
        security: grade(sum(|p| p.security)),
        trust: grade(sum(|p| p.trust)),
        cost: grade(sum(|p| p.cost)),
    }
}

/// The three configurations of the trade-off table, each optimized for one
/// dimension, with the ratings they are expected to receive.
pub fn table1_configs() -> [(&'static str, ScenarioConfig, TradeoffRating); 3] {
    use Grade::*;
    let cfg = |authorization, storage| {
        ScenarioConfig::new(Submission::Direct, authorization, storage, Fees::RefundContract, Retrieval::Local)
    };
    let rating = |security, trust, cost| TradeoffRating { security, trust, cost };
    [
        (
            "Security",
            cfg(Authorization::AccessToken, StorageKind::ContentAddressed),
            rating(Good, Medium, Medium),
        ),
        (
            "Trust",
            cfg(Authorization::PoolKey, StorageKind::ContentAddressed),
            rating(Poor, Good, Medium),
        ),
        (
            "Costs",
            cfg(Authorization::AccessToken, StorageKind::Anchored),
            rating(Good, Poor, Good),
        ),
    ]
}
