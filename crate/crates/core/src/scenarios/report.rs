use std::collections::BTreeMap;
use std::fmt::{self, Write};

use serde::Serialize;

use crate::identity::Address;
use crate::ledger::Gwei;
use crate::retrieval::SyncStats;

use super::{evaluate_tradeoffs, ScenarioConfig, TradeoffRating};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubmissionStatus {
    Accepted { height: u64 },
    Rejected { reason: String },
    /// Withheld by the relay; never reached the chain.
    Censored,
    /// Admitted or queued but never mined.
    NotIncluded { reason: String },
}

impl SubmissionStatus {
    pub fn is_accepted(&self) -> bool {
        matches!(self, SubmissionStatus::Accepted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmissionRecord {
    pub index: usize,
    pub author: Address,
    pub product_id: String,
    pub product_version: String,
    pub rating: u8,
    pub text_bytes: usize,
    /// Payload bytes the transaction persists on chain.
    pub stored_bytes: usize,
    pub gas_used: u64,
    pub storage_gas: u64,
    pub status: SubmissionStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackOutcome {
    pub attack: &'static str,
    pub applicable: bool,
    /// True when the attacker got what they wanted.
    pub succeeded: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostSummary {
    pub accepted_reviews: usize,
    pub stored_bytes: u64,
    pub storage_gas: u64,
    pub review_gas: u64,
    pub gas_price_gwei: Gwei,
    pub storage_eth: String,
    pub storage_usd: String,
    pub review_usd: String,
    pub usd_per_review: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeeSummary {
    /// End balance minus genesis balance for every review author.
    pub author_balance_deltas: BTreeMap<Address, i64>,
    pub faucet_minted: Gwei,
    pub pool_deposited: Gwei,
    pub pool_decrements: Gwei,
    pub miner_refund_credits: Gwei,
    /// Gas the central zero-price miner included without payment.
    pub central_miner_unpaid_gas: u64,
}

impl FeeSummary {
    pub fn authors_paid_nothing(&self) -> bool {
        self.author_balance_deltas.values().all(|&d| d == 0)
    }

    pub fn pool_balanced(&self) -> bool {
        self.pool_decrements == self.miner_refund_credits
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetrievalSummary {
    pub reader: &'static str,
    pub listed: usize,
    pub verified: usize,
    pub tampered: usize,
    pub unavailable: usize,
    pub divergent: usize,
    pub sync: Option<SyncStats>,
    /// Review fields no verification step covers.
    pub unsigned_fields: Vec<&'static str>,
    /// Altered fields that escaped every check during the scenario.
    pub undetected_residue: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSummary {
    pub blocks: u64,
    pub transactions: usize,
    pub head: String,
    pub state_root: String,
    pub median_fee_gwei: Gwei,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub rating: TradeoffRating,
    pub chain: ChainSummary,
    pub accepted: usize,
    pub rejected: usize,
    pub censored: usize,
    pub not_included: usize,
    pub submissions: Vec<SubmissionRecord>,
    pub attacks: Vec<AttackOutcome>,
    pub costs: CostSummary,
    pub fees: FeeSummary,
    pub retrieval: RetrievalSummary,
}

impl ScenarioReport {
    pub fn attack(&self, name: &str) -> Option<&AttackOutcome> {
        self.attacks.iter().find(|a| a.attack == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn rejection_reasons(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in &self.submissions {
            if let SubmissionStatus::Rejected { reason } = &s.status {
                *out.entry(reason.clone()).or_default() += 1;
            }
        }
        out
    }

    pub(crate) fn rating_is_consistent(&self) -> bool {
        evaluate_tradeoffs(&self.config) == self.rating
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        let mut out = String::new();
        let w = &mut out;
        writeln!(
            w,
            "scenario: submission={:?} authorization={:?} storage={:?} fees={:?} retrieval={:?} seed={}",
            c.submission, c.authorization, c.storage, c.fees, c.retrieval, c.seed
        )?;
        writeln!(
            w,
            "rating: security={} trust={} cost={}",
            self.rating.security, self.rating.trust, self.rating.cost
        )?;
        writeln!(
            w,
            "chain: {} blocks, {} transactions, median fee {} Gwei, state root {}",
            self.chain.blocks, self.chain.transactions, self.chain.median_fee_gwei, self.chain.state_root
        )?;
        writeln!(
            w,
            "submissions: {} total, {} accepted, {} rejected, {} censored, {} not included",
            self.submissions.len(),
            self.accepted,
            self.rejected,
            self.censored,
            self.not_included
        )?;
        for (reason, n) in self.rejection_reasons() {
            writeln!(w, "  rejected x{n}: {reason}")?;
        }
        writeln!(w, "attacks:")?;
        for a in &self.attacks {
            let verdict = match (a.applicable, a.succeeded) {
                (false, _) => "n/a",
                (true, true) => "SUCCEEDED",
                (true, false) => "defeated",
            };
            writeln!(w, "  {:<18} {:<9} {}", a.attack, verdict, a.detail)?;
        }
        let k = &self.costs;
        writeln!(
            w,
            "costs: {} accepted reviews, {} bytes on chain, {} storage gas, {} review gas",
            k.accepted_reviews, k.stored_bytes, k.storage_gas, k.review_gas
        )?;
        writeln!(
            w,
            "  at {} Gwei: storage {} ETH = ${}, all review gas ${}, {} per review",
            k.gas_price_gwei, k.storage_eth, k.storage_usd, k.review_usd, k.usd_per_review
        )?;
        let fees = &self.fees;
        writeln!(
            w,
            "fees: authors paid nothing: {}, faucet minted {} Gwei, pool deposited {} Gwei",
            fees.authors_paid_nothing(),
            fees.faucet_minted,
            fees.pool_deposited
        )?;
        writeln!(
            w,
            "  pool decrements {} Gwei, miner refund credits {} Gwei, central miner unpaid gas {}",
            fees.pool_decrements, fees.miner_refund_credits, fees.central_miner_unpaid_gas
        )?;
        let r = &self.retrieval;
        writeln!(
            w,
            "retrieval ({}): {} listed, {} verified, {} tampered, {} unavailable, {} divergent",
            r.reader, r.listed, r.verified, r.tampered, r.unavailable, r.divergent
        )?;
        if let Some(s) = r.sync {
            writeln!(w, "  replica sync: {} blocks, {} bytes", s.blocks, s.bytes)?;
        }
        writeln!(
            w,
            "  unsigned fields: [{}], undetected residue: [{}]",
            r.unsigned_fields.join(", "),
            r.undetected_residue.join(", ")
        )?;
        f.write_str(&out)
    }
}
