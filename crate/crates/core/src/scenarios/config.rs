use serde::{Deserialize, Serialize};

use crate::storage::{StorageKind, MAX_REVIEW_TEXT};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Submission {
    /// A backend holds the users' keys and submits on their behalf.
    Relay,
    /// Each user signs and submits from their own device.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Authorization {
    Whitelist,
    AccessToken,
    PoolKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fees {
    /// A faucet mints each author exactly what their transaction costs.
    Faucet,
    /// One designated miner includes zero-price review transactions for free.
    CentralMinerZeroPrice,
    /// Any miner includes zero-price reviews and claims a refund from the
    /// vendor-funded pool.
    RefundContract,
}

impl Fees {
    pub fn is_sponsored(self) -> bool {
        matches!(self, Fees::CentralMinerZeroPrice | Fees::RefundContract)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retrieval {
    Remote,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Registration {
    /// Anyone may add an address to the whitelist.
    Open,
    /// Only the genesis list (the vendor's purchasers) is whitelisted.
    Closed,
}

/// Review text length in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum TextLength {
    Fixed { bytes: usize },
    Uniform { min: usize, max: usize },
    /// Exponential with the given mean, clamped to 1..=8192.
    Exponential { mean: f64 },
}

/// Average review size of the reference corpus: 270,110 bytes over 3,025 reviews.
pub const DEFAULT_MEAN_TEXT: f64 = 270_110.0 / 3_025.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Workload {
    pub reviews: usize,
    pub products: usize,
    /// Transactions per block.
    pub block_capacity: usize,
    /// Market transactions from non-review traders added before each block.
    pub background_txs_per_block: usize,
    pub text_length: TextLength,
    pub whitelist_registration: Registration,
}

impl Default for Workload {
    fn default() -> Self {
        Self {
            reviews: 100,
            products: 3,
            block_capacity: 64,
            background_txs_per_block: 3,
            text_length: TextLength::Exponential {
                mean: DEFAULT_MEAN_TEXT,
            },
            whitelist_registration: Registration::Open,
        }
    }
}

/// Attacks to stage. Each one only runs where it applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Adversary {
    pub censor: bool,
    pub relay_rewrite: bool,
    pub fake_review: bool,
    pub key_extraction: bool,
    pub duplicate_review: bool,
    pub central_tamper: bool,
    pub store_outage: bool,
    pub remote_tamper: bool,
    pub freeloader: bool,
}

impl Default for Adversary {
    fn default() -> Self {
        Self::all(true)
    }
}

impl Adversary {
    pub fn all(on: bool) -> Self {
        Self {
            censor: on,
            relay_rewrite: on,
            fake_review: on,
            key_extraction: on,
            duplicate_review: on,
            central_tamper: on,
            store_outage: on,
            remote_tamper: on,
            freeloader: on,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub submission: Submission,
    pub authorization: Authorization,
    pub storage: StorageKind,
    pub fees: Fees,
    pub retrieval: Retrieval,
    #[serde(default)]
    pub workload: Workload,
    #[serde(default)]
    pub adversary: Adversary,
}

impl ScenarioConfig {
    pub fn new(
        submission: Submission,
        authorization: Authorization,
        storage: StorageKind,
        fees: Fees,
        retrieval: Retrieval,
    ) -> Self {
        Self {
            seed: 0,
            submission,
            authorization,
            storage,
            fees,
            retrieval,
            workload: Workload::default(),
            adversary: Adversary::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reviews(mut self, reviews: usize) -> Self {
        self.workload.reviews = reviews;
        self
    }

    /// Every combination of the five design dimensions, with default workload.
    pub fn all_combinations() -> Vec<ScenarioConfig> {
        let mut out = Vec::with_capacity(108);
        for submission in [Submission::Relay, Submission::Direct] {
            for authorization in [Authorization::Whitelist, Authorization::AccessToken, Authorization::PoolKey] {
                for storage in StorageKind::ALL {
                    for fees in [Fees::Faucet, Fees::CentralMinerZeroPrice, Fees::RefundContract] {
                        for retrieval in [Retrieval::Remote, Retrieval::Local] {
                            out.push(Self::new(submission, authorization, storage, fees, retrieval));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let config: Self = toml::from_str(text).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let w = &self.workload;
        let bad = |msg: String| Err(ScenarioError::InvalidConfig(msg));
        if w.products == 0 {
            return bad("workload.products must be at least 1".into());
        }
        if w.block_capacity < 2 {
            return bad("workload.block_capacity must be at least 2".into());
        }
        match w.text_length {
            TextLength::Fixed { bytes } if !(1..=MAX_REVIEW_TEXT).contains(&bytes) => {
                bad(format!("fixed text length {bytes} outside 1..={MAX_REVIEW_TEXT}"))
            }
            TextLength::Uniform { min, max } if min == 0 || min > max || max > MAX_REVIEW_TEXT => {
                bad(format!("uniform text length {min}..={max} outside 1..={MAX_REVIEW_TEXT}"))
            }
            TextLength::Exponential { mean } if !(mean.is_finite() && mean >= 1.0) => {
                bad(format!("exponential mean {mean} must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            seed = 7
            submission = "direct"
            authorization = "access_token"
            storage = "content_addressed"
            fees = "refund_contract"
            retrieval = "local"

            [workload]
            reviews = 12
            text_length = { distribution = "uniform", min = 10, max = 40 }
        "#;
        let c = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(c.workload.reviews, 12);
        assert_eq!(c.workload.products, 3);
        assert!(c.adversary.fake_review);
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn invalid_configs() {
        let base = ScenarioConfig::new(
            Submission::Direct,
            Authorization::AccessToken,
            StorageKind::OnChain,
            Fees::Faucet,
            Retrieval::Local,
        );
        let mut c = base.clone();
        c.workload.text_length = TextLength::Fixed { bytes: 9000 };
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.workload.products = 0;
        assert!(c.validate().is_err());
        assert!(ScenarioConfig::from_toml("seed = 1").is_err());
        assert!(ScenarioConfig::from_toml(&base.to_toml().replace("local", "satellite")).is_err());
    }

    #[test]
    fn every_combination_is_enumerated() {
        let all = ScenarioConfig::all_combinations();
        assert_eq!(all.len(), 2 * 3 * 3 * 3 * 2);
        assert!(all.iter().all(|c| c.validate().is_ok()));
    }
}
