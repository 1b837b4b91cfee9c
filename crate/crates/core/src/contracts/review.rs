use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::digest::Digest;
use crate::identity::{self, derive_address, Address, KeyPair, Signature};
use crate::storage::{StorageRef, MAX_REVIEW_TEXT};
use crate::wire::{Canonical, Encoder};

use super::{encode_address_set, ContractError};

const REVIEW_DOMAIN: &str = "reviewchain/review/v1";
const RECEIPT_DOMAIN: &str = "reviewchain/receipt/v1";

/// Bytes an author signs for a review: product, version, rating and the
/// digest of the encoded payload.
pub fn review_signing_bytes(
    product_id: &str,
    product_version: &str,
    rating: u8,
    payload_digest: &Digest,
) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.str(REVIEW_DOMAIN)
        .str(product_id)
        .str(product_version)
        .u8(rating)
        .fixed(payload_digest);
    enc.finish()
}

/// Arguments of a `submit_review` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewSubmission {
    pub product_id: String,
    pub product_version: String,
    pub rating: u8,
    pub storage_ref: StorageRef,
    pub signature: Signature,
}

impl ReviewSubmission {
    pub fn signed(
        author: &KeyPair,
        product_id: &str,
        product_version: &str,
        rating: u8,
        storage_ref: StorageRef,
    ) -> Self {
        let msg = review_signing_bytes(
            product_id,
            product_version,
            rating,
            &storage_ref.payload_digest(),
        );
        Self {
            product_id: product_id.to_string(),
            product_version: product_version.to_string(),
            rating,
            signature: identity::sign(&msg, author),
            storage_ref,
        }
    }
}

/// A registered review. The text lives behind `storage_ref`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Review {
    pub product_id: String,
    pub product_version: String,
    pub rating: u8,
    pub author: Address,
    pub storage_ref: StorageRef,
    pub signature: Signature,
    pub block_height: u64,
}

impl Review {
    pub fn payload_digest(&self) -> Digest {
        self.storage_ref.payload_digest()
    }

    pub fn signing_bytes(&self) -> Vec<u8> {
        review_signing_bytes(
            &self.product_id,
            &self.product_version,
            self.rating,
            &self.payload_digest(),
        )
    }

    /// True when the signature over the signed fields recovers to `author`.
    pub fn signature_matches_author(&self) -> bool {
        self.signature.recover_address(&self.signing_bytes()) == Some(self.author)
    }
}

impl Canonical for Review {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(&self.product_id)
            .str(&self.product_version)
            .u8(self.rating)
            .put(&self.author)
            .put(&self.storage_ref)
            .put(&self.signature)
            .u64(self.block_height);
    }
}

/// Vendor-signed proof that `buyer` purchased a product version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurchaseReceipt {
    pub buyer: Address,
    pub product_id: String,
    pub product_version: String,
    pub vendor_signature: Signature,
}

impl PurchaseReceipt {
    pub fn signing_bytes(buyer: &Address, product_id: &str, product_version: &str) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.str(RECEIPT_DOMAIN)
            .put(buyer)
            .str(product_id)
            .str(product_version);
        enc.finish()
    }

    pub fn issue(vendor: &KeyPair, buyer: Address, product_id: &str, product_version: &str) -> Self {
        let msg = Self::signing_bytes(&buyer, product_id, product_version);
        Self {
            buyer,
            product_id: product_id.to_string(),
            product_version: product_version.to_string(),
            vendor_signature: identity::sign(&msg, vendor),
        }
    }

    pub fn verify(&self, vendor_key: &[u8]) -> bool {
        let msg = Self::signing_bytes(&self.buyer, &self.product_id, &self.product_version);
        identity::verify(&msg, &self.vendor_signature, vendor_key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenKey {
    pub holder: Address,
    pub product_id: String,
    pub product_version: String,
}

impl TokenKey {
    pub fn new(holder: Address, product_id: &str, product_version: &str) -> Self {
        Self {
            holder,
            product_id: product_id.to_string(),
            product_version: product_version.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorizationKind {
    Whitelist,
    AccessToken,
    PoolKey,
}

impl fmt::Display for AuthorizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuthorizationKind::Whitelist => "whitelist",
            AuthorizationKind::AccessToken => "access-token",
            AuthorizationKind::PoolKey => "pool-key",
        })
    }
}

/// Who may submit reviews.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthorizationMode {
    /// Senders are compared against a list that anyone may extend while
    /// registration is open.
    Whitelist {
        addresses: BTreeSet<Address>,
        open_registration: bool,
    },
    /// One non-transferable token per purchased product version.
    AccessToken {
        balances: BTreeMap<TokenKey, u32>,
        issued: BTreeSet<TokenKey>,
    },
    /// A single app-bundled key shared by every user.
    PoolKey { shared_address: Address },
}

impl AuthorizationMode {
    pub fn whitelist(open_registration: bool) -> Self {
        Self::Whitelist {
            addresses: BTreeSet::new(),
            open_registration,
        }
    }

    pub fn access_token() -> Self {
        Self::AccessToken {
            balances: BTreeMap::new(),
            issued: BTreeSet::new(),
        }
    }

    pub fn pool_key(shared_address: Address) -> Self {
        Self::PoolKey { shared_address }
    }

    pub fn kind(&self) -> AuthorizationKind {
        match self {
            Self::Whitelist { .. } => AuthorizationKind::Whitelist,
            Self::AccessToken { .. } => AuthorizationKind::AccessToken,
            Self::PoolKey { .. } => AuthorizationKind::PoolKey,
        }
    }
}

impl Canonical for AuthorizationMode {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            Self::Whitelist {
                addresses,
                open_registration,
            } => {
                enc.u8(0).u8(u8::from(*open_registration));
                encode_address_set(enc, addresses.iter());
            }
            Self::AccessToken { balances, issued } => {
                enc.u8(1).len(balances.len());
                for (k, count) in balances {
                    enc.put(&k.holder)
                        .str(&k.product_id)
                        .str(&k.product_version)
                        .u32(*count);
                }
                enc.len(issued.len());
                for k in issued {
                    enc.put(&k.holder).str(&k.product_id).str(&k.product_version);
                }
            }
            Self::PoolKey { shared_address } => {
                enc.u8(2).put(shared_address);
            }
        }
    }
}

type ReviewKey = (Address, String, String);

/// Review registry plus the authorization state gating it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewContract {
    mode: AuthorizationMode,
    vendors: BTreeMap<String, Vec<u8>>,
    reviews: Vec<Review>,
    by_author: BTreeMap<ReviewKey, usize>,
}

impl ReviewContract {
    pub fn new(mode: AuthorizationMode) -> Self {
        Self {
            mode,
            vendors: BTreeMap::new(),
            reviews: Vec::new(),
            by_author: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> &AuthorizationMode {
        &self.mode
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn register_vendor(&mut self, product_id: &str, vendor_key: &[u8]) -> Result<(), ContractError> {
        if product_id.is_empty() {
            return Err(ContractError::UnknownProduct(String::new()));
        }
        if self.vendors.contains_key(product_id) {
            return Err(ContractError::DuplicateVendor(product_id.to_string()));
        }
        derive_address(vendor_key).map_err(|_| ContractError::MalformedVendorKey)?;
        self.vendors.insert(product_id.to_string(), vendor_key.to_vec());
        Ok(())
    }

    pub fn vendor_key(&self, product_id: &str) -> Result<&[u8], ContractError> {
        self.vendors
            .get(product_id)
            .map(Vec::as_slice)
            .ok_or_else(|| ContractError::UnknownProduct(product_id.to_string()))
    }

    /// A product is known once it has a vendor or at least one review.
    pub fn is_known_product(&self, product_id: &str) -> bool {
        self.vendors.contains_key(product_id)
            || self.reviews.iter().any(|r| r.product_id == product_id)
    }

    pub fn whitelist_register(&mut self, address: Address) -> Result<(), ContractError> {
        match &mut self.mode {
            AuthorizationMode::Whitelist {
                addresses,
                open_registration,
            } => {
                if !*open_registration {
                    return Err(ContractError::RegistrationClosed);
                }
                addresses.insert(address);
                Ok(())
            }
            other => Err(ContractError::WrongMode {
                expected: AuthorizationKind::Whitelist,
                actual: other.kind(),
            }),
        }
    }

    pub fn is_whitelisted(&self, address: &Address) -> bool {
        matches!(&self.mode, AuthorizationMode::Whitelist { addresses, .. } if addresses.contains(address))
    }

    /// Issue a review token to the buyer named in `receipt`. `caller` must be
    /// the product's registered vendor.
    pub fn issue_token(&mut self, caller: Address, receipt: &PurchaseReceipt) -> Result<(), ContractError> {
        let actual = self.mode.kind();
        if actual != AuthorizationKind::AccessToken {
            return Err(ContractError::WrongMode {
                expected: AuthorizationKind::AccessToken,
                actual,
            });
        }
        let vendor_key = self.vendor_key(&receipt.product_id)?;
        if !receipt.verify(vendor_key) {
            return Err(ContractError::BadReceipt);
        }
        if derive_address(vendor_key).ok() != Some(caller) {
            return Err(ContractError::NotVendor);
        }
        let key = TokenKey::new(receipt.buyer, &receipt.product_id, &receipt.product_version);
        let AuthorizationMode::AccessToken { balances, issued } = &mut self.mode else {
            unreachable!("mode checked above")
        };
        if issued.contains(&key) {
            return Err(ContractError::DoubleIssuance);
        }
        issued.insert(key.clone());
        balances.insert(key, 1);
        Ok(())
    }

    pub fn token_balance(&self, holder: Address, product_id: &str, product_version: &str) -> u32 {
        match &self.mode {
            AuthorizationMode::AccessToken { balances, .. } => balances
                .get(&TokenKey::new(holder, product_id, product_version))
                .copied()
                .unwrap_or(0),
            _ => 0,
        }
    }

    pub fn token_issued(&self, holder: Address, product_id: &str, product_version: &str) -> bool {
        matches!(&self.mode, AuthorizationMode::AccessToken { issued, .. }
            if issued.contains(&TokenKey::new(holder, product_id, product_version)))
    }

    /// Tokens are bound to their holder: every transfer fails.
    pub fn token_transfer(
        &self,
        _from: Address,
        _to: Address,
        _product_id: &str,
        _product_version: &str,
    ) -> Result<(), ContractError> {
        Err(ContractError::TransferForbidden)
    }

    pub fn has_reviewed(&self, author: Address, product_id: &str, product_version: &str) -> bool {
        self.by_author.contains_key(&(
            author,
            product_id.to_string(),
            product_version.to_string(),
        ))
    }

    pub fn submit_review(
        &mut self,
        caller: Address,
        submission: ReviewSubmission,
        block_height: u64,
    ) -> Result<&Review, ContractError> {
        if !(1..=5).contains(&submission.rating) {
            return Err(ContractError::MalformedReview(format!(
                "rating {} outside 1..=5",
                submission.rating
            )));
        }
        if submission.product_id.is_empty() {
            return Err(ContractError::MalformedReview("empty product id".into()));
        }
        if let StorageRef::OnChain(bytes) = &submission.storage_ref {
            if bytes.is_empty() || bytes.len() > MAX_REVIEW_TEXT {
                return Err(ContractError::MalformedReview(format!(
                    "inline payload of {} bytes",
                    bytes.len()
                )));
            }
        }
        let msg = review_signing_bytes(
            &submission.product_id,
            &submission.product_version,
            submission.rating,
            &submission.storage_ref.payload_digest(),
        );
        if submission.signature.recover_address(&msg) != Some(caller) {
            return Err(ContractError::BadReviewSignature);
        }
        let key: ReviewKey = (
            caller,
            submission.product_id.clone(),
            submission.product_version.clone(),
        );
        if self.by_author.contains_key(&key) {
            return Err(ContractError::DuplicateReview);
        }
        let token = TokenKey::new(caller, &submission.product_id, &submission.product_version);
        match &self.mode {
            AuthorizationMode::Whitelist { addresses, .. } => {
                if !addresses.contains(&caller) {
                    return Err(ContractError::Unauthorized);
                }
            }
            AuthorizationMode::AccessToken { balances, .. } => {
                if balances.get(&token).copied().unwrap_or(0) == 0 {
                    return Err(ContractError::Unauthorized);
                }
            }
            AuthorizationMode::PoolKey { shared_address } => {
                if caller != *shared_address {
                    return Err(ContractError::Unauthorized);
                }
            }
        }

        if let AuthorizationMode::AccessToken { balances, .. } = &mut self.mode {
            balances.remove(&token);
        }
        self.by_author.insert(key, self.reviews.len());
        self.reviews.push(Review {
            product_id: submission.product_id,
            product_version: submission.product_version,
            rating: submission.rating,
            author: caller,
            storage_ref: submission.storage_ref,
            signature: submission.signature,
            block_height,
        });
        Ok(self.reviews.last().expect("just pushed"))
    }
}

impl Canonical for ReviewContract {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.mode).len(self.vendors.len());
        for (product, key) in &self.vendors {
            enc.str(product).bytes(key);
        }
        enc.len(self.reviews.len());
        for r in &self.reviews {
            enc.put(r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::generate_keypair;

    fn key(b: u8) -> KeyPair {
        generate_keypair(&[b; 32]).unwrap()
    }

    fn submission(author: &KeyPair, version: &str) -> ReviewSubmission {
        ReviewSubmission::signed(author, "app", version, 4, StorageRef::OnChain(b"good".to_vec()))
    }

    fn token_contract(vendor: &KeyPair) -> ReviewContract {
        let mut c = ReviewContract::new(AuthorizationMode::access_token());
        c.register_vendor("app", vendor.public_key()).unwrap();
        c
    }

    #[test]
    fn vendor_registry() {
        let v = key(1);
        let mut c = token_contract(&v);
        assert_eq!(c.vendor_key("app").unwrap(), v.public_key());
        assert_eq!(
            c.register_vendor("app", v.public_key()),
            Err(ContractError::DuplicateVendor("app".into()))
        );
        assert_eq!(
            c.vendor_key("other"),
            Err(ContractError::UnknownProduct("other".into()))
        );
    }

    #[test]
    fn whitelist_registration_rules() {
        let mut open = ReviewContract::new(AuthorizationMode::whitelist(true));
        let stranger = key(9);
        assert_eq!(
            open.submit_review(stranger.address(), submission(&stranger, "1"), 1)
                .unwrap_err(),
            ContractError::Unauthorized
        );
        open.whitelist_register(stranger.address()).unwrap();
        // Registration proves nothing about purchase; the stranger gets in.
        assert!(open
            .submit_review(stranger.address(), submission(&stranger, "1"), 1)
            .is_ok());

        let mut closed = ReviewContract::new(AuthorizationMode::whitelist(false));
        assert_eq!(
            closed.whitelist_register(stranger.address()),
            Err(ContractError::RegistrationClosed)
        );
        let mut tokens = ReviewContract::new(AuthorizationMode::access_token());
        assert!(matches!(
            tokens.whitelist_register(stranger.address()),
            Err(ContractError::WrongMode { .. })
        ));
    }

    #[test]
    fn token_issuance() {
        let v = key(1);
        let buyer = key(2);
        let mut c = token_contract(&v);
        let receipt = PurchaseReceipt::issue(&v, buyer.address(), "app", "1.0");
        c.issue_token(v.address(), &receipt).unwrap();
        assert_eq!(c.token_balance(buyer.address(), "app", "1.0"), 1);
        assert_eq!(
            c.issue_token(v.address(), &receipt),
            Err(ContractError::DoubleIssuance)
        );

        let forged = PurchaseReceipt::issue(&buyer, buyer.address(), "app", "2.0");
        assert_eq!(c.issue_token(v.address(), &forged), Err(ContractError::BadReceipt));
        let other_version = PurchaseReceipt::issue(&v, buyer.address(), "app", "2.0");
        assert_eq!(
            c.issue_token(buyer.address(), &other_version),
            Err(ContractError::NotVendor)
        );
        c.issue_token(v.address(), &other_version).unwrap();
    }

    #[test]
    fn transfers_always_fail() {
        let v = key(1);
        let buyer = key(2);
        let mut c = token_contract(&v);
        c.issue_token(v.address(), &PurchaseReceipt::issue(&v, buyer.address(), "app", "1.0"))
            .unwrap();
        let before = c.clone();
        for to in [key(3).address(), buyer.address()] {
            assert_eq!(
                c.token_transfer(buyer.address(), to, "app", "1.0"),
                Err(ContractError::TransferForbidden)
            );
        }
        assert_eq!(
            c.token_transfer(key(4).address(), buyer.address(), "app", "1.0"),
            Err(ContractError::TransferForbidden)
        );
        assert_eq!(c, before);
    }

    #[test]
    fn token_gated_review_and_duplicate() {
        let v = key(1);
        let buyer = key(2);
        let mut c = token_contract(&v);
        c.issue_token(v.address(), &PurchaseReceipt::issue(&v, buyer.address(), "app", "1.0"))
            .unwrap();
        assert!(!c.has_reviewed(buyer.address(), "app", "1.0"));
        c.submit_review(buyer.address(), submission(&buyer, "1.0"), 7).unwrap();
        assert_eq!(c.reviews().len(), 1);
        assert_eq!(c.reviews()[0].block_height, 7);
        assert!(c.has_reviewed(buyer.address(), "app", "1.0"));
        assert!(!c.has_reviewed(buyer.address(), "app", "2.0"));
        assert_eq!(c.token_balance(buyer.address(), "app", "1.0"), 0);
        assert_eq!(
            c.submit_review(buyer.address(), submission(&buyer, "1.0"), 8)
                .unwrap_err(),
            ContractError::DuplicateReview
        );
    }

    #[test]
    fn pool_key_cannot_tell_humans_apart() {
        let pool = key(5);
        let mut c = ReviewContract::new(AuthorizationMode::pool_key(pool.address()));
        // Two different people on the same app build share the key.
        let alice = ReviewSubmission::signed(&pool, "app", "1.0", 5, StorageRef::OnChain(b"alice".to_vec()));
        let bob = ReviewSubmission::signed(&pool, "app", "1.0", 2, StorageRef::OnChain(b"bob".to_vec()));
        c.submit_review(pool.address(), alice, 1).unwrap();
        assert_eq!(
            c.submit_review(pool.address(), bob, 1).unwrap_err(),
            ContractError::DuplicateReview
        );
        let outsider = key(6);
        assert_eq!(
            c.submit_review(outsider.address(), submission(&outsider, "1.0"), 1)
                .unwrap_err(),
            ContractError::Unauthorized
        );
    }

    #[test]
    fn malformed_reviews() {
        let pool = key(5);
        let mut c = ReviewContract::new(AuthorizationMode::pool_key(pool.address()));
        for rating in [0u8, 6] {
            let s = ReviewSubmission::signed(&pool, "app", "1", rating, StorageRef::OnChain(b"x".to_vec()));
            assert!(matches!(
                c.submit_review(pool.address(), s, 1),
                Err(ContractError::MalformedReview(_))
            ));
        }
        let s = ReviewSubmission::signed(&pool, "", "1", 3, StorageRef::OnChain(b"x".to_vec()));
        assert!(matches!(
            c.submit_review(pool.address(), s, 1),
            Err(ContractError::MalformedReview(_))
        ));
        let big = vec![b'a'; MAX_REVIEW_TEXT + 1];
        let s = ReviewSubmission::signed(&pool, "app", "1", 3, StorageRef::OnChain(big));
        assert!(matches!(
            c.submit_review(pool.address(), s, 1),
            Err(ContractError::MalformedReview(_))
        ));
    }

    #[test]
    fn review_signature_must_match_caller() {
        let pool = key(5);
        let other = key(6);
        let mut c = ReviewContract::new(AuthorizationMode::pool_key(pool.address()));
        let mut s = submission(&other, "1");
        assert_eq!(
            c.submit_review(pool.address(), s.clone(), 1).unwrap_err(),
            ContractError::BadReviewSignature
        );
        s = submission(&pool, "1");
        s.rating = 1;
        assert_eq!(
            c.submit_review(pool.address(), s, 1).unwrap_err(),
            ContractError::BadReviewSignature
        );
    }
}
