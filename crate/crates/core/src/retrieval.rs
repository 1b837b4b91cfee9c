//! Reading reviews back and checking they are the ones that were committed.
//!
//! A [`LocalReplica`] replays a chain dump from genesis and answers from its
//! own state. A [`RemoteNode`] answers from someone else's state, passed
//! through an optional response hook that models a dishonest node. Every
//! answer is verified the same way: the author signature must recover to the
//! recorded author and the payload fetched through the review's storage
//! reference must match the committed digest.
//!
//! `block_height` is not covered by the author's signature, so a remote node
//! can alter it undetected by verification alone. [`cross_check`] against a
//! local replica catches that, and [`undetected_residue`] names whatever
//! slipped through both.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::contracts::Review;
use crate::digest::Digest;
use crate::identity::Address;
use crate::ledger::{Chain, ChainState, LedgerError};
use crate::storage::{CentralStore, Storage, StorageError, StorageRef};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("unknown product `{0}`")]
    UnknownProduct(String),
    #[error("local replica has not been synced")]
    NotSynced,
    #[error("sync failed: {0}")]
    Sync(#[from] LedgerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerificationStatus {
    Verified,
    Tampered { reason: String },
    Unavailable { reason: String },
    /// Verified on its own but disagreeing with a cross-check reader.
    Divergent { fields: Vec<String> },
}

impl VerificationStatus {
    pub fn is_verified(&self) -> bool {
        matches!(self, VerificationStatus::Verified)
    }

    pub fn label(&self) -> &'static str {
        match self {
            VerificationStatus::Verified => "verified",
            VerificationStatus::Tampered { .. } => "tampered",
            VerificationStatus::Unavailable { .. } => "unavailable",
            VerificationStatus::Divergent { .. } => "divergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifiedReview {
    pub review: Review,
    /// Payload text, present only when it was fetched and matched.
    pub text: Option<String>,
    pub status: VerificationStatus,
}

/// Anything that can answer "which reviews exist for this product".
pub trait ReviewSource {
    fn reader_name(&self) -> &'static str;

    fn reviews_for(&self, product_id: &str, version: Option<&str>) -> Result<Vec<Review>, RetrievalError>;
}

fn reviews_from_state(
    state: &ChainState,
    product_id: &str,
    version: Option<&str>,
) -> Result<Vec<Review>, RetrievalError> {
    let contract = state.review_contract();
    if !contract.is_known_product(product_id) {
        return Err(RetrievalError::UnknownProduct(product_id.to_string()));
    }
    Ok(contract
        .reviews()
        .iter()
        .filter(|r| r.product_id == product_id && version.is_none_or(|v| r.product_version == v))
        .cloned()
        .collect())
}

/// Cost of bringing a replica up to the producing node's head.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SyncStats {
    pub blocks: u64,
    pub bytes: u64,
}

/// A full copy of the chain, rebuilt by replaying every block.
#[derive(Debug, Clone, Default)]
pub struct LocalReplica {
    chain: Option<Chain>,
    stats: SyncStats,
}

impl LocalReplica {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replace the replica's view with a replay of `dump`. On error the
    /// previous view is kept.
    pub fn sync_local(&mut self, dump: &str) -> Result<SyncStats, RetrievalError> {
        let chain = Chain::load(dump)?;
        self.stats = SyncStats {
            blocks: chain.blocks().len() as u64,
            bytes: dump.len() as u64,
        };
        self.chain = Some(chain);
        Ok(self.stats)
    }

    pub fn stats(&self) -> SyncStats {
        self.stats
    }

    pub fn state(&self) -> Option<&ChainState> {
        self.chain.as_ref().map(Chain::state)
    }

    pub fn state_root(&self) -> Option<Digest> {
        self.state().map(ChainState::state_root)
    }
}

impl ReviewSource for LocalReplica {
    fn reader_name(&self) -> &'static str {
        "local"
    }

    fn reviews_for(&self, product_id: &str, version: Option<&str>) -> Result<Vec<Review>, RetrievalError> {
        let state = self.state().ok_or(RetrievalError::NotSynced)?;
        reviews_from_state(state, product_id, version)
    }
}

pub type ResponseHook = Box<dyn Fn(&mut Vec<Review>) + Send + Sync>;

/// Someone else's node. Its answers pass through `hook` before we see them.
pub struct RemoteNode {
    state: ChainState,
    hook: Option<ResponseHook>,
}

impl RemoteNode {
    pub fn honest(state: ChainState) -> Self {
        Self { state, hook: None }
    }

    pub fn with_hook(state: ChainState, hook: ResponseHook) -> Self {
        Self {
            state,
            hook: Some(hook),
        }
    }

    /// A node that rewrites individual reviews in its responses.
    pub fn rewriting(state: ChainState, rewrite: impl Fn(&mut Review) + Send + Sync + 'static) -> Self {
        Self::with_hook(
            state,
            Box::new(move |reviews: &mut Vec<Review>| reviews.iter_mut().for_each(&rewrite)),
        )
    }
}

impl ReviewSource for RemoteNode {
    fn reader_name(&self) -> &'static str {
        "remote"
    }

    fn reviews_for(&self, product_id: &str, version: Option<&str>) -> Result<Vec<Review>, RetrievalError> {
        let mut reviews = reviews_from_state(&self.state, product_id, version)?;
        if let Some(hook) = &self.hook {
            hook(&mut reviews);
        }
        Ok(reviews)
    }
}

/// Check one review's signature and re-fetch its payload.
pub fn verify_review(review: &Review, storage: &Storage) -> VerifiedReview {
    let verdict = |status, text| VerifiedReview {
        review: review.clone(),
        text,
        status,
    };
    if !review.signature_matches_author() {
        return verdict(
            VerificationStatus::Tampered {
                reason: "signature does not recover to author".into(),
            },
            None,
        );
    }
    if let StorageRef::Anchored { digest, locator } = &review.storage_ref {
        if *locator != CentralStore::locator_for(digest) {
            return verdict(
                VerificationStatus::Tampered {
                    reason: "locator does not match anchored digest".into(),
                },
                None,
            );
        }
    }
    match storage.fetch_payload(&review.storage_ref) {
        Ok(bytes) => verdict(
            VerificationStatus::Verified,
            Some(String::from_utf8_lossy(&bytes).into_owned()),
        ),
        Err(e @ (StorageError::Unavailable(_) | StorageError::NotFound(_) | StorageError::Io(_))) => {
            verdict(VerificationStatus::Unavailable { reason: e.to_string() }, None)
        }
        Err(e) => verdict(VerificationStatus::Tampered { reason: e.to_string() }, None),
    }
}

/// Reviews for `product_id` (optionally one version) from `source`, each
/// paired with its verification status. Reading costs no fee.
pub fn list_reviews(
    source: &dyn ReviewSource,
    storage: &Storage,
    product_id: &str,
    version: Option<&str>,
) -> Result<Vec<VerifiedReview>, RetrievalError> {
    Ok(source
        .reviews_for(product_id, version)?
        .iter()
        .map(|r| verify_review(r, storage))
        .collect())
}

type ReviewKey = (Address, String, String);

fn key_of(r: &Review) -> ReviewKey {
    (r.author, r.product_id.clone(), r.product_version.clone())
}

/// Names of the fields that differ between two reviews.
pub fn differing_fields(a: &Review, b: &Review) -> Vec<String> {
    let mut out = Vec::new();
    let mut diff = |name: &str, differs: bool| {
        if differs {
            out.push(name.to_string());
        }
    };
    diff("product_id", a.product_id != b.product_id);
    diff("product_version", a.product_version != b.product_version);
    diff("rating", a.rating != b.rating);
    diff("author", a.author != b.author);
    diff("storage_ref", a.storage_ref != b.storage_ref);
    diff("signature", a.signature != b.signature);
    diff("block_height", a.block_height != b.block_height);
    out
}

/// Outcome of comparing a reader's answer against a trusted reference.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrossCheck {
    /// Reviews the reference has but the reader did not return.
    pub omitted: Vec<Review>,
    /// Reviews the reader returned that the reference does not know.
    pub injected: Vec<Review>,
}

/// Mark verified entries of `listed` that disagree with `reference` as
/// divergent, and report omissions and injections.
pub fn cross_check(listed: &mut [VerifiedReview], reference: &[Review]) -> CrossCheck {
    let by_key: BTreeMap<ReviewKey, &Review> = reference.iter().map(|r| (key_of(r), r)).collect();
    let mut seen = Vec::new();
    let mut injected = Vec::new();
    for entry in listed.iter_mut() {
        let key = key_of(&entry.review);
        match by_key.get(&key) {
            Some(truth) => {
                seen.push(key);
                let fields = differing_fields(truth, &entry.review);
                if !fields.is_empty() && entry.status.is_verified() {
                    entry.status = VerificationStatus::Divergent { fields };
                }
            }
            None => injected.push(entry.review.clone()),
        }
    }
    let omitted = reference
        .iter()
        .filter(|r| !seen.contains(&key_of(r)))
        .cloned()
        .collect();
    CrossCheck { omitted, injected }
}

/// Fields that were altered relative to `original` yet still came back
/// `Verified`: alterations no check caught.
pub fn undetected_residue(original: &[Review], listed: &[VerifiedReview]) -> Vec<String> {
    let by_key: BTreeMap<ReviewKey, &Review> = original.iter().map(|r| (key_of(r), r)).collect();
    let mut residue: Vec<String> = listed
        .iter()
        .filter(|v| v.status.is_verified())
        .flat_map(|v| match by_key.get(&key_of(&v.review)) {
            Some(truth) => differing_fields(truth, &v.review),
            None => vec!["injected review".to_string()],
        })
        .collect();
    residue.sort();
    residue.dedup();
    residue
}
