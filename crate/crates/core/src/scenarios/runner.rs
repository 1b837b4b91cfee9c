use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contracts::{ContractCall, PurchaseReceipt, Review, ReviewSubmission};
use crate::digest::{to_hex, Digest};
use crate::economics::{self, exact_decimal, format_fixed, per_review_display, rational};
use crate::identity::{keystore_decrypt, keystore_encrypt_with_salt, Address, KdfPreset, KeyPair};
use crate::ledger::{
    build_transaction, AdmissionError, AuthorizationSetup, Chain, GenesisConfig, Gwei, IncludedTx,
    MinerPolicy, Mint, Outcome, GWEI_PER_ETH,
};
use crate::retrieval::{
    list_reviews, undetected_residue, verify_review, LocalReplica, RemoteNode, ReviewSource,
    VerificationStatus, VerifiedReview,
};
use crate::storage::{Storage, StorageKind, StorageRef};
use crate::wire::Canonical;

use super::report::{
    AttackOutcome, ChainSummary, CostSummary, FeeSummary, RetrievalSummary, ScenarioReport,
    SubmissionRecord, SubmissionStatus,
};
use super::workload::{fresh_key, review_text, sample_length};
use super::{
    evaluate_tradeoffs, Authorization, Fees, Registration, Retrieval, ScenarioConfig, ScenarioError,
    Submission,
};

const VENDOR_FUNDS: Gwei = 1_000 * GWEI_PER_ETH;
const TRADER_FUNDS: Gwei = 100 * GWEI_PER_ETH;
const MINER_FUNDS: Gwei = GWEI_PER_ETH;
const POOL_DEPOSIT: Gwei = 500 * GWEI_PER_ETH;
const MINERS: usize = 3;
const TRADERS: usize = 3;
/// Prices background traders bid; their median is the 22 Gwei market rate.
const MARKET_PRICES: [Gwei; 5] = [5, 22, 22, 22, 35];
const VENDOR_PRICE: Gwei = economics::MEDIAN.gwei;
const CLAIM_PRICE: Gwei = economics::MEDIAN.gwei;
const FAUCET_PRICE: Gwei = economics::FAST.gwei;

const VERSION: &str = "1.0";
const FAKE_VERSION: &str = "2.0";
const EXTRACTION_VERSION: &str = "3.0";
const DUPLICATE_VERSION: &str = "4.0";
const APP_PASSPHRASE: &str = "bundled-with-every-install";
const CENSOR_TARGET: usize = 0;
const REWRITE_TARGET: usize = 1;

/// A finished scenario: its report plus the chain and payload stores it built.
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub chain: Chain,
    pub storage: Storage,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    Ok(execute(config, Storage::in_memory())?.report)
}

/// Run `config` against `storage`, which may be backed by disk.
pub fn execute(config: &ScenarioConfig, storage: Storage) -> Result<ScenarioRun, ScenarioError> {
    config.validate()?;
    let mut sim = Sim::new(config, storage)?;
    sim.setup()?;
    let mut records = sim.workload()?;
    let mut attacks = Vec::new();
    let adv = config.adversary;
    attacks.push(sim.censorship(&records, adv.censor));
    attacks.push(sim.relay_rewrite(&records, adv.relay_rewrite));
    attacks.push(sim.fake_review(adv.fake_review)?);
    attacks.push(sim.key_extraction(adv.key_extraction)?);
    attacks.push(sim.duplicate_review(&records, adv.duplicate_review)?);
    attacks.push(sim.central_tamper(adv.central_tamper)?);
    attacks.push(sim.store_outage(adv.store_outage));
    let (remote, residue) = sim.remote_tamper(adv.remote_tamper)?;
    attacks.push(remote);
    let claims = sim.claim_refunds()?;
    attacks.push(sim.freeloader(adv.freeloader)?);

    // Statuses may have moved on while attack transactions were mined.
    for r in records.iter_mut() {
        if let SubmissionStatus::NotIncluded { .. } = r.status {
            if let Some(h) = sim.hashes.get(&r.index) {
                let (status, gas, storage_gas) = sim.resolve(h);
                r.status = status;
                r.gas_used = gas;
                r.storage_gas = storage_gas;
            }
        }
    }

    let retrieval = sim.retrieval_summary(residue)?;
    let fees = sim.fee_summary(claims);
    let costs = sim.cost_summary(&records);
    let state = sim.chain.state();
    let chain = ChainSummary {
        blocks: state.height(),
        transactions: state.history().iter().map(|b| b.transactions.len()).sum(),
        head: to_hex(&state.head()),
        state_root: to_hex(&state.state_root()),
        median_fee_gwei: state.median_fee(state.refund_pool().window()),
    };
    let count = |f: fn(&SubmissionStatus) -> bool| records.iter().filter(|r| f(&r.status)).count();
    let report = ScenarioReport {
        config: config.clone(),
        rating: evaluate_tradeoffs(config),
        chain,
        accepted: count(|s| s.is_accepted()),
        rejected: count(|s| matches!(s, SubmissionStatus::Rejected { .. })),
        censored: count(|s| matches!(s, SubmissionStatus::Censored)),
        not_included: count(|s| matches!(s, SubmissionStatus::NotIncluded { .. })),
        submissions: records,
        attacks,
        costs,
        fees,
        retrieval,
    };
    debug_assert!(report.rating_is_consistent());
    Ok(ScenarioRun {
        report,
        chain: sim.chain,
        storage: sim.storage,
    })
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    rng: ChaCha8Rng,
    chain: Chain,
    storage: Storage,
    next_nonce: BTreeMap<Address, u64>,
    miners: Vec<KeyPair>,
    policies: Vec<MinerPolicy>,
    traders: Vec<KeyPair>,
    sink: Address,
    vendor: KeyPair,
    pool_key: KeyPair,
    adversary: KeyPair,
    extractor: KeyPair,
    late_buyers: [KeyPair; 2],
    humans: Vec<KeyPair>,
    products: Vec<String>,
    review_contract: Address,
    refund_pool: Address,
    /// Where each mined transaction landed.
    included: BTreeMap<Digest, (u64, u32)>,
    dropped: BTreeMap<Digest, String>,
    /// Workload submission index to transaction hash.
    hashes: BTreeMap<usize, Digest>,
    faucet_minted: Gwei,
    authors: BTreeSet<Address>,
    rewritten: Option<(u8, u8)>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, storage: Storage) -> Result<Self, ScenarioError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let vendor = fresh_key(&mut rng);
        let miners: Vec<KeyPair> = (0..MINERS).map(|_| fresh_key(&mut rng)).collect();
        let traders: Vec<KeyPair> = (0..TRADERS).map(|_| fresh_key(&mut rng)).collect();
        let pool_key = fresh_key(&mut rng);
        let adversary = fresh_key(&mut rng);
        let extractor = fresh_key(&mut rng);
        let late_buyers = [fresh_key(&mut rng), fresh_key(&mut rng)];
        let humans: Vec<KeyPair> = (0..cfg.workload.reviews).map(|_| fresh_key(&mut rng)).collect();

        let authorization = match cfg.authorization {
            Authorization::Whitelist => AuthorizationSetup::Whitelist {
                addresses: humans
                    .iter()
                    .chain(late_buyers.iter())
                    .map(KeyPair::address)
                    .collect(),
                open_registration: cfg.workload.whitelist_registration == Registration::Open,
            },
            Authorization::AccessToken => AuthorizationSetup::AccessToken,
            Authorization::PoolKey => AuthorizationSetup::PoolKey {
                shared_address: pool_key.address(),
            },
        };
        let mut genesis = GenesisConfig::new(authorization);
        genesis.allocations.push(Mint {
            to: vendor.address(),
            amount: VENDOR_FUNDS,
        });
        for t in &traders {
            genesis.allocations.push(Mint {
                to: t.address(),
                amount: TRADER_FUNDS,
            });
        }
        for m in &miners {
            genesis.allocations.push(Mint {
                to: m.address(),
                amount: MINER_FUNDS,
            });
        }
        let chain = Chain::new(genesis)?;

        let policies = (0..MINERS)
            .map(|i| {
                let zero_ok = match cfg.fees {
                    Fees::Faucet => false,
                    Fees::CentralMinerZeroPrice => i == 0,
                    Fees::RefundContract => true,
                };
                MinerPolicy::new(1, zero_ok, cfg.workload.block_capacity)
            })
            .collect();
        let products = (0..cfg.workload.products).map(|i| format!("app-{i}")).collect();
        let review_contract = chain.state().review_contract_address();
        let refund_pool = chain.state().refund_pool_address();
        Ok(Self {
            cfg,
            rng,
            chain,
            storage,
            next_nonce: BTreeMap::new(),
            miners,
            policies,
            traders,
            sink: Address::from_label("market-sink"),
            vendor,
            pool_key,
            adversary,
            extractor,
            late_buyers,
            humans,
            products,
            review_contract,
            refund_pool,
            included: BTreeMap::new(),
            dropped: BTreeMap::new(),
            hashes: BTreeMap::new(),
            faucet_minted: 0,
            authors: BTreeSet::new(),
            rewritten: None,
        })
    }

    fn product_of(&self, i: usize) -> String {
        self.products[i % self.products.len()].clone()
    }

    /// The key a purchaser's review is signed with.
    fn signing_key(&self, purchaser: &KeyPair) -> KeyPair {
        match self.cfg.authorization {
            Authorization::PoolKey => self.pool_key.clone(),
            _ => purchaser.clone(),
        }
    }

    fn send(&mut self, key: &KeyPair, to: Address, payload: Vec<u8>, price: Gwei) -> Result<Digest, AdmissionError> {
        let addr = key.address();
        let state_nonce = self.chain.state().nonce(&addr);
        let nonce = *self.next_nonce.entry(addr).or_insert(state_nonce);
        let hash = self
            .chain
            .submit(build_transaction(key, to, payload, price, nonce))?;
        self.next_nonce.insert(addr, nonce + 1);
        Ok(hash)
    }

    /// Send a call to the review contract under the scenario's fee model.
    fn send_author(&mut self, key: &KeyPair, call: &ContractCall) -> Result<Digest, AdmissionError> {
        let payload = call.to_canonical();
        let price = if self.cfg.fees.is_sponsored() { 0 } else { FAUCET_PRICE };
        if price > 0 {
            let cost = self.chain.state().schedule().gas_for_payload(&payload) * price;
            self.chain
                .faucet_fund(key.address(), cost)
                .expect("faucet amount is positive");
            self.faucet_minted += cost;
        }
        self.send(key, self.review_contract, payload, price)
    }

    fn send_vendor(&mut self, to: Address, call: &ContractCall) -> Result<Digest, ScenarioError> {
        let vendor = self.vendor.clone();
        self.send(&vendor, to, call.to_canonical(), VENDOR_PRICE)
            .map_err(|e| ScenarioError::Setup(format!("vendor transaction refused: {e}")))
    }

    fn mine_one(&mut self) -> Result<(), ScenarioError> {
        for _ in 0..self.cfg.workload.background_txs_per_block {
            let trader = self.traders[self.rng.gen_range(0..TRADERS)].clone();
            let price = MARKET_PRICES[self.rng.gen_range(0..MARKET_PRICES.len())];
            let _ = self.send(&trader, self.sink, Vec::new(), price);
        }
        let turn = (self.chain.height() % MINERS as u64) as usize;
        let mined = self
            .chain
            .mine(self.miners[turn].address(), &self.policies[turn])?;
        for (tx, reason) in mined.dropped {
            self.dropped.insert(tx.hash(), reason.to_string());
        }
        let record = self.chain.state().history().last().expect("just mined");
        for (i, t) in record.transactions.iter().enumerate() {
            self.included.insert(t.hash, (record.height, i as u32));
        }
        Ok(())
    }

    /// Mine until none of `hashes` is pending, or give up after enough
    /// blocks that every miner has had several turns.
    fn settle(&mut self, hashes: &[Digest]) -> Result<(), ScenarioError> {
        let capacity = self.cfg.workload.block_capacity;
        let limit = MINERS * (hashes.len() / capacity + 3) + 6;
        for _ in 0..limit {
            if !hashes.iter().any(|h| self.chain.mempool().contains(h)) {
                break;
            }
            self.mine_one()?;
        }
        Ok(())
    }

    fn included_tx(&self, hash: &Digest) -> Option<(u64, &IncludedTx)> {
        let &(height, idx) = self.included.get(hash)?;
        self.chain
            .state()
            .included(height, idx)
            .map(|(_, t)| (height, t))
    }

    /// Status, gas used and storage gas of a submitted transaction.
    fn resolve(&self, hash: &Digest) -> (SubmissionStatus, u64, u64) {
        if let Some((height, t)) = self.included_tx(hash) {
            let status = match &t.outcome {
                Outcome::Success => SubmissionStatus::Accepted { height },
                Outcome::Reverted(reason) => SubmissionStatus::Rejected {
                    reason: reason.clone(),
                },
                Outcome::OutOfGas => SubmissionStatus::Rejected {
                    reason: "out of gas".into(),
                },
            };
            return (status, t.gas_used, t.storage_gas);
        }
        let status = match self.dropped.get(hash) {
            Some(reason) => SubmissionStatus::Rejected {
                reason: format!("dropped: {reason}"),
            },
            None => SubmissionStatus::NotIncluded {
                reason: "still pending".into(),
            },
        };
        (status, 0, 0)
    }

    fn describe(&self, hash: Result<Digest, AdmissionError>) -> (bool, String) {
        match hash {
            Ok(h) => match self.resolve(&h).0 {
                SubmissionStatus::Accepted { height } => (true, format!("accepted at height {height}")),
                SubmissionStatus::Rejected { reason } => (false, format!("rejected: {reason}")),
                SubmissionStatus::Censored => (false, "censored".into()),
                SubmissionStatus::NotIncluded { reason } => (false, format!("not included: {reason}")),
            },
            Err(e) => (false, format!("refused at admission: {e}")),
        }
    }

    fn setup(&mut self) -> Result<(), ScenarioError> {
        let mut hashes = Vec::new();
        let vendor_key = self.vendor.public_key().to_vec();
        for product_id in self.products.clone() {
            let call = ContractCall::RegisterVendor {
                product_id,
                vendor_key: vendor_key.clone(),
            };
            hashes.push(self.send_vendor(self.review_contract, &call)?);
        }
        if self.cfg.authorization == Authorization::AccessToken {
            let mut grants: Vec<(Address, String, &str)> = self
                .humans
                .iter()
                .enumerate()
                .map(|(i, h)| (h.address(), self.product_of(i), VERSION))
                .collect();
            for b in &self.late_buyers {
                grants.push((b.address(), self.products[0].clone(), DUPLICATE_VERSION));
            }
            for (buyer, product, version) in grants {
                let receipt = PurchaseReceipt::issue(&self.vendor, buyer, &product, version);
                hashes.push(self.send_vendor(self.review_contract, &ContractCall::IssueToken(receipt))?);
            }
        }
        if self.cfg.fees == Fees::RefundContract {
            let call = ContractCall::DepositPool { amount: POOL_DEPOSIT };
            hashes.push(self.send_vendor(self.refund_pool, &call)?);
        }
        self.settle(&hashes)?;
        for h in &hashes {
            match self.resolve(h).0 {
                SubmissionStatus::Accepted { .. } => {}
                other => return Err(ScenarioError::Setup(format!("vendor setup failed: {other:?}"))),
            }
        }
        Ok(())
    }

    fn workload(&mut self) -> Result<Vec<SubmissionRecord>, ScenarioError> {
        let relay = self.cfg.submission == Submission::Relay;
        let mut records = Vec::with_capacity(self.humans.len());
        let mut since_block = 0;
        for i in 0..self.humans.len() {
            let product_id = self.product_of(i);
            let len = sample_length(&mut self.rng, &self.cfg.workload.text_length);
            let text = review_text(&mut self.rng, len);
            let mut rating = self.rng.gen_range(1..=5u8);
            let signer = self.signing_key(&self.humans[i].clone());
            self.authors.insert(signer.address());
            let mut record = SubmissionRecord {
                index: i,
                author: signer.address(),
                product_id: product_id.clone(),
                product_version: VERSION.into(),
                rating,
                text_bytes: len,
                stored_bytes: 0,
                gas_used: 0,
                storage_gas: 0,
                status: SubmissionStatus::NotIncluded {
                    reason: "not submitted".into(),
                },
            };
            if relay && self.cfg.adversary.censor && i == CENSOR_TARGET {
                record.status = SubmissionStatus::Censored;
                records.push(record);
                continue;
            }
            if relay && self.cfg.adversary.relay_rewrite && i == REWRITE_TARGET {
                let forged = rating % 5 + 1;
                self.rewritten = Some((rating, forged));
                rating = forged;
                record.rating = forged;
            }
            let storage_ref = match self.storage.store_payload(self.cfg.storage, text.as_bytes()) {
                Ok(r) => r,
                Err(e) => {
                    record.status = SubmissionStatus::Rejected {
                        reason: format!("payload store failed: {e}"),
                    };
                    records.push(record);
                    continue;
                }
            };
            record.stored_bytes = storage_ref.on_chain_bytes();
            let submission = ReviewSubmission::signed(&signer, &product_id, VERSION, rating, storage_ref);
            match self.send_author(&signer, &ContractCall::SubmitReview(submission)) {
                Ok(h) => {
                    self.hashes.insert(i, h);
                    since_block += 1;
                }
                Err(e) => {
                    record.status = SubmissionStatus::Rejected {
                        reason: format!("refused at admission: {e}"),
                    }
                }
            }
            records.push(record);
            if since_block >= self.cfg.workload.block_capacity {
                self.mine_one()?;
                since_block = 0;
            }
        }
        let pending: Vec<Digest> = self.hashes.values().copied().collect();
        self.settle(&pending)?;
        for r in records.iter_mut() {
            if let Some(h) = self.hashes.get(&r.index) {
                let (status, gas, storage_gas) = self.resolve(h);
                r.status = status;
                r.gas_used = gas;
                r.storage_gas = storage_gas;
            }
        }
        Ok(records)
    }

    fn not_applicable(attack: &'static str, why: &str) -> AttackOutcome {
        AttackOutcome {
            attack,
            applicable: false,
            succeeded: false,
            detail: why.into(),
        }
    }

    fn disabled(attack: &'static str) -> AttackOutcome {
        Self::not_applicable(attack, "disabled in config")
    }

    fn censorship(&self, records: &[SubmissionRecord], enabled: bool) -> AttackOutcome {
        const NAME: &str = "censorship";
        if !enabled {
            return Self::disabled(NAME);
        }
        let Some(target) = records.get(CENSOR_TARGET) else {
            return Self::not_applicable(NAME, "no submissions");
        };
        let absent = !target.status.is_accepted();
        let detail = match (self.cfg.submission, absent) {
            (Submission::Relay, true) => "relay withheld the targeted author's review".to_string(),
            (Submission::Relay, false) => "targeted review reached the chain".to_string(),
            (Submission::Direct, false) => "author submitted directly; review present".to_string(),
            (Submission::Direct, true) => format!("targeted review absent: {:?}", target.status),
        };
        AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: absent,
            detail,
        }
    }

    fn relay_rewrite(&self, records: &[SubmissionRecord], enabled: bool) -> AttackOutcome {
        const NAME: &str = "relay_rewrite";
        if !enabled {
            return Self::disabled(NAME);
        }
        if self.cfg.submission != Submission::Relay {
            return Self::not_applicable(NAME, "authors hold their own keys");
        }
        let (Some((original, forged)), Some(record)) = (self.rewritten, records.get(REWRITE_TARGET)) else {
            return Self::not_applicable(NAME, "no review to rewrite");
        };
        let accepted = record.status.is_accepted();
        AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: accepted,
            detail: format!(
                "relay signed rating {forged} instead of {original} with the custodial key; {}",
                if accepted { "accepted and verifies" } else { "not accepted" }
            ),
        }
    }

    fn fake_review(&mut self, enabled: bool) -> Result<AttackOutcome, ScenarioError> {
        const NAME: &str = "fake_review";
        if !enabled {
            return Ok(Self::disabled(NAME));
        }
        let adversary = self.adversary.clone();
        let product = self.products[0].clone();
        let mut steps = Vec::new();
        if self.cfg.authorization == Authorization::Whitelist {
            let register = ContractCall::WhitelistRegister {
                address: adversary.address(),
            };
            steps.push(self.send_author(&adversary, &register));
        }
        // Under a pool key anyone who installs the app signs with the shared key.
        let signer = self.signing_key(&adversary);
        let text = b"never bought it, one star";
        let submission = self.signed_submission(&signer, &product, FAKE_VERSION, 1, text)?;
        let review = self.send_author(&signer, &ContractCall::SubmitReview(submission));
        let pending: Vec<Digest> = steps.iter().chain([&review]).filter_map(|r| r.clone().ok()).collect();
        self.settle(&pending)?;
        let (accepted, detail) = self.describe(review);
        let prefix = match self.cfg.authorization {
            Authorization::Whitelist => match self.cfg.workload.whitelist_registration {
                Registration::Open => "non-purchaser self-registered on the open whitelist; review ",
                Registration::Closed => "non-purchaser could not register; review ",
            },
            Authorization::AccessToken => "non-purchaser holds no access token; review ",
            Authorization::PoolKey => "non-purchaser used the app's shared key; review ",
        };
        Ok(AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: accepted,
            detail: format!("{prefix}{detail}"),
        })
    }

    fn signed_submission(
        &self,
        signer: &KeyPair,
        product: &str,
        version: &str,
        rating: u8,
        text: &[u8],
    ) -> Result<ReviewSubmission, ScenarioError> {
        let storage_ref = self.storage.store_payload(self.cfg.storage, text)?;
        Ok(ReviewSubmission::signed(signer, product, version, rating, storage_ref))
    }

    fn key_extraction(&mut self, enabled: bool) -> Result<AttackOutcome, ScenarioError> {
        const NAME: &str = "key_extraction";
        if !enabled {
            return Ok(Self::disabled(NAME));
        }
        let product = self.products[0].clone();
        let (signer, how) = if self.cfg.authorization == Authorization::PoolKey {
            // The app ships the shared key in a light keystore together with
            // its passphrase; both come out of any installed copy.
            let mut salt = [0u8; 16];
            self.rng.fill(&mut salt);
            let bundled = keystore_encrypt_with_salt(&self.pool_key, APP_PASSPHRASE, KdfPreset::Light, &salt)?;
            let key = keystore_decrypt(&bundled, APP_PASSPHRASE)?;
            (
                key,
                format!(
                    "shared key recovered from the app's {}-iteration keystore and used outside the app; review ",
                    KdfPreset::Light.iterations()
                ),
            )
        } else {
            (
                self.extractor.clone(),
                "app bundles no shared key; attacker's own key, no registration or token; review ".to_string(),
            )
        };
        let submission = self.signed_submission(&signer, &product, EXTRACTION_VERSION, 5, b"best app ever")?;
        let hash = self.send_author(&signer, &ContractCall::SubmitReview(submission));
        let pending: Vec<Digest> = hash.iter().copied().collect();
        self.settle(&pending)?;
        let (accepted, detail) = self.describe(hash);
        Ok(AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: accepted,
            detail: format!("{how}{detail}"),
        })
    }

    fn duplicate_review(&mut self, records: &[SubmissionRecord], enabled: bool) -> Result<AttackOutcome, ScenarioError> {
        const NAME: &str = "duplicate_review";
        if !enabled {
            return Ok(Self::disabled(NAME));
        }
        let product = self.products[0].clone();
        let mut pending = Vec::new();

        // The same author tries a second review of a version they reviewed.
        let repeat = records.iter().find(|r| r.status.is_accepted()).map(|r| {
            let signer = self.signing_key(&self.humans[r.index].clone());
            (signer, r.product_id.clone())
        });
        let repeat_hash = match repeat {
            Some((signer, product_id)) => {
                let sub = self.signed_submission(&signer, &product_id, VERSION, 2, b"changed my mind")?;
                let h = self.send_author(&signer, &ContractCall::SubmitReview(sub));
                pending.extend(h.iter().copied());
                Some(h)
            }
            None => None,
        };

        // Two different purchasers review the same fresh version.
        let mut cross = Vec::new();
        for (n, buyer) in self.late_buyers.clone().iter().enumerate() {
            let signer = self.signing_key(buyer);
            self.authors.insert(signer.address());
            let text = format!("purchaser {n} reviewing the new version");
            let sub = self.signed_submission(&signer, &product, DUPLICATE_VERSION, 4, text.as_bytes())?;
            let h = self.send_author(&signer, &ContractCall::SubmitReview(sub));
            pending.extend(h.iter().copied());
            cross.push(h);
        }
        self.settle(&pending)?;

        let (repeat_accepted, repeat_detail) = match repeat_hash {
            Some(h) => self.describe(h),
            None => (false, "no accepted review to repeat".into()),
        };
        let outcomes: Vec<(bool, String)> = cross.into_iter().map(|h| self.describe(h)).collect();
        let lost = outcomes.iter().filter(|(ok, _)| !ok).count();
        let succeeded = repeat_accepted || lost > 0;
        Ok(AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded,
            detail: format!(
                "same-author repeat {repeat_detail}; two purchasers of one version: {} of 2 accepted{}",
                2 - lost,
                if lost > 0 {
                    format!(" ({})", outcomes.iter().find(|(ok, _)| !ok).map(|o| o.1.as_str()).unwrap_or(""))
                } else {
                    String::new()
                }
            ),
        })
    }

    fn accepted_reviews(&self) -> Vec<Review> {
        self.chain.state().review_contract().reviews().to_vec()
    }

    fn central_tamper(&mut self, enabled: bool) -> Result<AttackOutcome, ScenarioError> {
        const NAME: &str = "central_tamper";
        if !enabled {
            return Ok(Self::disabled(NAME));
        }
        if self.cfg.storage != StorageKind::Anchored {
            return Ok(Self::not_applicable(NAME, "no centrally stored payloads"));
        }
        let Some(review) = self.accepted_reviews().into_iter().next() else {
            return Ok(Self::not_applicable(NAME, "no accepted review"));
        };
        let StorageRef::Anchored { locator, .. } = &review.storage_ref else {
            unreachable!("anchored scenario stores anchored references")
        };
        let original = self.storage.fetch_encoded(&review.storage_ref)?;
        let mut altered = original.clone();
        let at = self.rng.gen_range(0..altered.len());
        altered[at] ^= 1 << self.rng.gen_range(0..8);
        self.storage.tamper_centralized(locator, &altered)?;
        let status = verify_review(&review, &self.storage).status;
        self.storage.tamper_centralized(locator, &original)?;
        let detected = matches!(status, VerificationStatus::Tampered { .. });
        Ok(AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: !detected,
            detail: format!("flipped one bit at byte {at} of a stored payload; reader reports {}", status.label()),
        })
    }

    fn store_outage(&self, enabled: bool) -> AttackOutcome {
        const NAME: &str = "store_outage";
        if !enabled {
            return Self::disabled(NAME);
        }
        if self.cfg.storage != StorageKind::Anchored {
            return Self::not_applicable(NAME, "payloads do not depend on one store");
        }
        let reviews = self.accepted_reviews();
        self.storage.central().set_available(false);
        let lost = reviews
            .iter()
            .filter(|r| matches!(verify_review(r, &self.storage).status, VerificationStatus::Unavailable { .. }))
            .count();
        self.storage.central().set_available(true);
        AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: lost > 0,
            detail: format!("central store offline: {lost} of {} review texts unreadable", reviews.len()),
        }
    }

    fn remote_tamper(&mut self, enabled: bool) -> Result<(AttackOutcome, Vec<String>), ScenarioError> {
        const NAME: &str = "remote_tamper";
        if !enabled {
            return Ok((Self::disabled(NAME), Vec::new()));
        }
        if self.cfg.retrieval != Retrieval::Remote {
            return Ok((Self::not_applicable(NAME, "reader replays its own replica"), Vec::new()));
        }
        let node = RemoteNode::with_hook(
            self.chain.state().clone(),
            Box::new(|reviews: &mut Vec<Review>| {
                if let Some(r) = reviews.first_mut() {
                    r.rating = r.rating % 5 + 1;
                }
            }),
        );
        let product = self.products[0].clone();
        let listed = list_reviews(&node, &self.storage, &product, None)?;
        let truth: Vec<Review> = self
            .accepted_reviews()
            .into_iter()
            .filter(|r| r.product_id == product)
            .collect();
        let residue = undetected_residue(&truth, &listed);
        let flagged = listed
            .iter()
            .filter(|v| matches!(v.status, VerificationStatus::Tampered { .. }))
            .count();
        let outcome = if listed.is_empty() {
            Self::not_applicable(NAME, "no reviews to rewrite")
        } else {
            AttackOutcome {
                attack: NAME,
                applicable: true,
                succeeded: !residue.is_empty() || flagged == 0,
                detail: format!("remote node rewrote one rating; {flagged} review flagged tampered"),
            }
        };
        Ok((outcome, residue))
    }

    /// Every miner claims a refund for each zero-price review transaction it
    /// included. Returns the value the pool paid out.
    fn claim_refunds(&mut self) -> Result<Gwei, ScenarioError> {
        if self.cfg.fees != Fees::RefundContract {
            return Ok(0);
        }
        let mut claims = Vec::new();
        for block in self.chain.state().history() {
            for (i, t) in block.transactions.iter().enumerate() {
                if t.recipient == self.review_contract && t.gas_price == 0 {
                    claims.push((block.miner, block.height, i as u32));
                }
            }
        }
        let mut hashes = Vec::new();
        for (miner, height, tx_index) in claims {
            let key = self
                .miners
                .iter()
                .find(|m| m.address() == miner)
                .expect("blocks are mined by scenario miners")
                .clone();
            let call = ContractCall::ClaimRefund { height, tx_index };
            if let Ok(h) = self.send(&key, self.refund_pool, call.to_canonical(), CLAIM_PRICE) {
                hashes.push(h);
            }
        }
        self.settle(&hashes)?;
        Ok(hashes
            .iter()
            .filter_map(|h| self.included_tx(h))
            .filter(|(_, t)| t.outcome.is_success())
            .map(|(_, t)| t.transfer)
            .sum())
    }

    fn freeloader(&mut self, enabled: bool) -> Result<AttackOutcome, ScenarioError> {
        const NAME: &str = "freeloader";
        if !enabled {
            return Ok(Self::disabled(NAME));
        }
        if self.cfg.fees != Fees::RefundContract {
            return Ok(Self::not_applicable(NAME, "no refund pool"));
        }
        let history = self.chain.state().history();
        let sponsored = history.iter().find_map(|b| {
            b.transactions
                .iter()
                .position(|t| t.recipient == self.review_contract && t.gas_price == 0)
                .map(|i| (b.miner, b.height, i as u32))
        });
        let paid = history.iter().find_map(|b| {
            b.transactions
                .iter()
                .position(|t| t.gas_price > 0)
                .map(|i| (b.miner, b.height, i as u32))
        });
        let Some((miner, height, index)) = sponsored else {
            return Ok(Self::not_applicable(NAME, "no sponsored transaction to claim"));
        };
        let key_of = |addr: Address| self.miners.iter().find(|m| m.address() == addr).cloned();
        let owner = key_of(miner).expect("scenario miner");
        let other = self
            .miners
            .iter()
            .find(|m| m.address() != miner)
            .cloned()
            .expect("several miners");
        let mut attempts = vec![
            ("claim for another miner's block", other, height, index),
            ("second claim for the same transaction", owner, height, index),
        ];
        if let Some((m, h, i)) = paid {
            attempts.push(("claim for a fee-paying transaction", key_of(m).expect("scenario miner"), h, i));
        }
        let mut sent = Vec::new();
        for (label, key, h, i) in attempts {
            let call = ContractCall::ClaimRefund { height: h, tx_index: i };
            sent.push((label, self.send(&key, self.refund_pool, call.to_canonical(), CLAIM_PRICE)));
        }
        let pending: Vec<Digest> = sent.iter().filter_map(|(_, h)| h.clone().ok()).collect();
        self.settle(&pending)?;
        let mut paid_out = false;
        let mut parts = Vec::new();
        for (label, h) in sent {
            let (ok, detail) = self.describe(h);
            paid_out |= ok;
            parts.push(format!("{label}: {detail}"));
        }
        Ok(AttackOutcome {
            attack: NAME,
            applicable: true,
            succeeded: paid_out,
            detail: parts.join("; "),
        })
    }

    fn retrieval_summary(&self, residue: Vec<String>) -> Result<RetrievalSummary, ScenarioError> {
        let mut listed: Vec<VerifiedReview> = Vec::new();
        let mut sync = None;
        let local;
        let remote;
        let source: &dyn ReviewSource = match self.cfg.retrieval {
            Retrieval::Local => {
                let mut replica = LocalReplica::new();
                sync = Some(replica.sync_local(&self.chain.dump())?);
                if replica.state_root() != Some(self.chain.state().state_root()) {
                    return Err(ScenarioError::Setup("replica state root differs from node".into()));
                }
                local = replica;
                &local
            }
            Retrieval::Remote => {
                remote = RemoteNode::honest(self.chain.state().clone());
                &remote
            }
        };
        for product in &self.products {
            listed.extend(list_reviews(source, &self.storage, product, None)?);
        }
        let count = |label: &str| listed.iter().filter(|v| v.status.label() == label).count();
        Ok(RetrievalSummary {
            reader: source.reader_name(),
            listed: listed.len(),
            verified: count("verified"),
            tampered: count("tampered"),
            unavailable: count("unavailable"),
            divergent: count("divergent"),
            sync,
            unsigned_fields: vec!["block_height"],
            undetected_residue: residue,
        })
    }

    fn fee_summary(&self, pool_decrements: Gwei) -> FeeSummary {
        let state = self.chain.state();
        let genesis: BTreeMap<Address, Gwei> = self
            .chain
            .genesis()
            .allocations
            .iter()
            .map(|m| (m.to, m.amount))
            .collect();
        let author_balance_deltas = self
            .authors
            .iter()
            .map(|a| {
                let start = genesis.get(a).copied().unwrap_or(0);
                (*a, state.balance(a) as i64 - start as i64)
            })
            .collect();
        let central_miner_unpaid_gas = if self.cfg.fees == Fees::CentralMinerZeroPrice {
            state
                .history()
                .iter()
                .flat_map(|b| b.transactions.iter())
                .filter(|t| t.gas_price == 0)
                .map(|t| t.gas_used)
                .sum()
        } else {
            0
        };
        FeeSummary {
            author_balance_deltas,
            faucet_minted: self.faucet_minted,
            pool_deposited: state.refund_pool().total_deposits(),
            pool_decrements,
            miner_refund_credits: state.refund_pool().total_refunds(),
            central_miner_unpaid_gas,
        }
    }

    fn cost_summary(&self, records: &[SubmissionRecord]) -> CostSummary {
        let accepted: Vec<&SubmissionRecord> = records.iter().filter(|r| r.status.is_accepted()).collect();
        let stored_bytes = accepted.iter().map(|r| r.stored_bytes as u64).sum();
        let storage_gas = accepted.iter().map(|r| r.storage_gas).sum();
        let review_gas = accepted.iter().map(|r| r.gas_used).sum();
        let state = self.chain.state();
        let price = state.median_fee(state.refund_pool().window());
        let rate = rational(economics::REFERENCE_ETH_USD);
        let (storage_eth, storage_usd) = economics::gas_cost(storage_gas, price, &rate).expect("positive rate");
        let (_, review_usd) = economics::gas_cost(review_gas, price, &rate).expect("positive rate");
        let usd_per_review = if accepted.is_empty() {
            "n/a".to_string()
        } else {
            per_review_display(&(&review_usd / rational(accepted.len() as u64)))
        };
        CostSummary {
            accepted_reviews: accepted.len(),
            stored_bytes,
            storage_gas,
            review_gas,
            gas_price_gwei: price,
            storage_eth: exact_decimal(&storage_eth, 18).unwrap_or_else(|| format_fixed(&storage_eth, 9)),
            storage_usd: format_fixed(&storage_usd, 2),
            review_usd: format_fixed(&review_usd, 2),
            usd_per_review,
        }
    }
}
