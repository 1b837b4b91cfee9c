use super::*;
use crate::storage::StorageKind;

fn small(mut c: ScenarioConfig) -> ScenarioConfig {
    c.workload.reviews = 12;
    c.workload.block_capacity = 8;
    c.seed = 11;
    c
}

fn cfg(s: Submission, a: Authorization, st: StorageKind, f: Fees, r: Retrieval) -> ScenarioConfig {
    small(ScenarioConfig::new(s, a, st, f, r))
}

fn succeeded(report: &ScenarioReport, attack: &str) -> bool {
    let a = report.attack(attack).unwrap();
    assert!(a.applicable, "{attack} not applicable: {}", a.detail);
    a.succeeded
}

#[test]
fn security_row_defeats_every_attack() {
    let c = cfg(
        Submission::Direct,
        Authorization::AccessToken,
        StorageKind::ContentAddressed,
        Fees::RefundContract,
        Retrieval::Local,
    );
    let r = run_scenario(&c).unwrap();
    assert_eq!(r.accepted, 12, "{r}");
    for a in &r.attacks {
        assert!(!a.succeeded, "{}: {}", a.attack, a.detail);
    }
    assert_eq!(r.retrieval.verified, r.retrieval.listed);
    assert!(r.fees.authors_paid_nothing());
    assert!(r.fees.pool_balanced());
    assert!(r.fees.pool_decrements > 0);
}

#[test]
fn pool_key_weaknesses_manifest() {
    let c = cfg(
        Submission::Direct,
        Authorization::PoolKey,
        StorageKind::ContentAddressed,
        Fees::RefundContract,
        Retrieval::Local,
    );
    let r = run_scenario(&c).unwrap();
    assert!(succeeded(&r, "fake_review"));
    assert!(succeeded(&r, "key_extraction"));
    assert!(succeeded(&r, "duplicate_review"));
    // One shared address can review each product version once.
    assert_eq!(r.accepted, c.workload.products);
}

#[test]
fn anchored_storage_detects_tamper_but_can_lose_data() {
    let c = cfg(
        Submission::Direct,
        Authorization::AccessToken,
        StorageKind::Anchored,
        Fees::RefundContract,
        Retrieval::Local,
    );
    let r = run_scenario(&c).unwrap();
    assert!(!succeeded(&r, "central_tamper"));
    assert!(succeeded(&r, "store_outage"));
    assert_eq!(r.retrieval.verified, r.retrieval.listed);
}

#[test]
fn relay_censors_and_rewrites() {
    let c = cfg(
        Submission::Relay,
        Authorization::AccessToken,
        StorageKind::OnChain,
        Fees::Faucet,
        Retrieval::Remote,
    );
    let r = run_scenario(&c).unwrap();
    assert!(succeeded(&r, "censorship"));
    assert!(succeeded(&r, "relay_rewrite"));
    assert_eq!(r.censored, 1);
    assert!(!succeeded(&r, "remote_tamper"));
    assert!(r.retrieval.undetected_residue.is_empty());

    let direct = ScenarioConfig {
        submission: Submission::Direct,
        ..c
    };
    let r = run_scenario(&direct).unwrap();
    assert!(!succeeded(&r, "censorship"));
    assert!(!r.attack("relay_rewrite").unwrap().applicable);
}

#[test]
fn whitelist_registration_controls_fake_reviews() {
    let open = cfg(
        Submission::Direct,
        Authorization::Whitelist,
        StorageKind::OnChain,
        Fees::CentralMinerZeroPrice,
        Retrieval::Local,
    );
    assert!(succeeded(&run_scenario(&open).unwrap(), "fake_review"));
    let mut closed = open.clone();
    closed.workload.whitelist_registration = Registration::Closed;
    let r = run_scenario(&closed).unwrap();
    assert!(!succeeded(&r, "fake_review"));
    assert!(!succeeded(&r, "key_extraction"));
    assert!(r.fees.authors_paid_nothing());
    assert!(r.fees.central_miner_unpaid_gas > 0);
}

#[test]
fn on_chain_storage_gas_matches_schedule() {
    let c = cfg(
        Submission::Direct,
        Authorization::AccessToken,
        StorageKind::OnChain,
        Fees::Faucet,
        Retrieval::Local,
    );
    let r = run_scenario(&c).unwrap();
    for s in r.submissions.iter().filter(|s| s.status.is_accepted()) {
        assert_eq!(s.stored_bytes, s.text_bytes);
        assert_eq!(s.storage_gas, 625 * s.text_bytes as u64);
    }
    assert!(r.fees.faucet_minted > 0);
    assert!(r.fees.authors_paid_nothing());
}

#[test]
fn reports_are_deterministic() {
    let c = cfg(
        Submission::Relay,
        Authorization::Whitelist,
        StorageKind::Anchored,
        Fees::RefundContract,
        Retrieval::Remote,
    );
    let a = run_scenario(&c).unwrap();
    let b = run_scenario(&c).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_string(), b.to_string());
    let other = run_scenario(&c.clone().with_seed(12)).unwrap();
    assert_ne!(a.chain.state_root, other.chain.state_root);
}

#[test]
fn zero_review_workload_runs() {
    let mut c = cfg(
        Submission::Direct,
        Authorization::PoolKey,
        StorageKind::Anchored,
        Fees::RefundContract,
        Retrieval::Remote,
    );
    c.workload.reviews = 0;
    let r = run_scenario(&c).unwrap();
    assert_eq!(r.submissions.len(), 0);
    assert!(!r.attack("censorship").unwrap().applicable);
}
