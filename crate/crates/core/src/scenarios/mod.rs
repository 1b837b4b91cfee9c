//! End-to-end scenarios: one configuration per design dimension, a seeded
//! workload of purchasers reviewing products, staged attacks, and a report
//! covering acceptance, attack outcomes, cost, fees and retrieval.
//!
//! Everything is driven by one ChaCha8 stream seeded from the config, so the
//! same config always produces the same report.

mod config;
mod report;
mod rubric;
mod runner;
mod workload;

pub use config::{
    Adversary, Authorization, Fees, Registration, Retrieval, ScenarioConfig, Submission, TextLength, Workload,
    DEFAULT_MEAN_TEXT,
};
pub use report::{
    AttackOutcome, ChainSummary, CostSummary, FeeSummary, RetrievalSummary, ScenarioReport, SubmissionRecord,
    SubmissionStatus,
};
pub use rubric::{evaluate_tradeoffs, grade, penalties, table1_configs, Grade, Penalty, TradeoffRating};
pub use runner::{execute, run_scenario, ScenarioRun};
pub use workload::{review_text, sample_length};

use serde::Serialize;
use thiserror::Error;

use crate::identity::IdentityError;
use crate::ledger::LedgerError;
use crate::retrieval::RetrievalError;
use crate::storage::StorageError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("scenario setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

/// One row of the trade-off table.
#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub label: &'static str,
    pub config: ScenarioConfig,
    pub rating: TradeoffRating,
    pub expected: TradeoffRating,
    pub accepted: usize,
    pub attacks_succeeded: Vec<&'static str>,
}

/// Run the three trade-off configurations with `reviews` reviews each.
pub fn table1(reviews: usize, seed: u64) -> Result<Vec<Table1Row>, ScenarioError> {
    table1_configs()
        .into_iter()
        .map(|(label, config, expected)| {
            let config = config.with_reviews(reviews).with_seed(seed);
            let report = run_scenario(&config)?;
            Ok(Table1Row {
                label,
                rating: report.rating,
                expected,
                accepted: report.accepted,
                attacks_succeeded: report
                    .attacks
                    .iter()
                    .filter(|a| a.applicable && a.succeeded)
                    .map(|a| a.attack)
                    .collect(),
                config,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
