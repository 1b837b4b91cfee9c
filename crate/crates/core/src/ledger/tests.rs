use super::*;
use crate::contracts::{ContractCall, PurchaseReceipt, ReviewSubmission};
use crate::identity::{generate_keypair, Address, KeyPair};
use crate::storage::StorageRef;
use crate::wire::Canonical;

fn key(b: u8) -> KeyPair {
    generate_keypair(&[b; 32]).unwrap()
}

const ETH: Gwei = GWEI_PER_ETH;

fn chain_with(funded: &[(&KeyPair, Gwei)]) -> Chain {
    let mut genesis = GenesisConfig::new(AuthorizationSetup::AccessToken);
    genesis.allocations = funded
        .iter()
        .map(|(k, amount)| Mint { to: k.address(), amount: *amount })
        .collect();
    Chain::new(genesis).unwrap()
}

fn open_policy() -> MinerPolicy {
    MinerPolicy::new(1, true, 100)
}

fn plain(from: &KeyPair, price: Gwei, nonce: u64) -> SignedTransaction {
    build_transaction(from, Address([0xee; 20]), Vec::new(), price, nonce)
}

#[test]
fn tampered_payload_is_rejected_at_admission() {
    let a = key(1);
    let mut chain = chain_with(&[(&a, ETH)]);
    let mut tx = build_transaction(
        &a,
        chain.state().refund_pool_address(),
        ContractCall::DepositPool { amount: 5 }.to_canonical(),
        5,
        0,
    );
    tx.payload[8] = 6;
    assert_eq!(chain.submit(tx), Err(AdmissionError::BadSignature));
}

#[test]
fn admission_rules() {
    let a = key(1);
    let broke = key(2);
    let miner = key(9).address();
    let mut chain = chain_with(&[(&a, ETH)]);

    let tx = plain(&a, 5, 0);
    chain.submit(tx.clone()).unwrap();
    assert_eq!(chain.submit(tx.clone()), Err(AdmissionError::Duplicate));
    chain.mine(miner, &open_policy()).unwrap();
    assert_eq!(
        chain.submit(tx),
        Err(AdmissionError::StaleNonce { account_nonce: 1, got: 0 })
    );

    assert!(matches!(
        chain.submit(plain(&broke, 5, 0)),
        Err(AdmissionError::InsufficientFunds { .. })
    ));
    // Zero price owes nothing, so an empty account may submit.
    let review_contract = chain.state().review_contract_address();
    let zero = build_transaction(&broke, review_contract, Vec::new(), 0, 0);
    chain.submit(zero).unwrap();

    let low = build_transaction_with_limit(&a, miner, Vec::new(), 5, 20_999, 1);
    assert!(matches!(chain.submit(low), Err(AdmissionError::IntrinsicGas { .. })));
}

#[test]
fn queued_mints_count_toward_admission() {
    let a = key(1);
    let mut chain = chain_with(&[]);
    assert!(chain.submit(plain(&a, 5, 0)).is_err());
    chain.faucet_fund(a.address(), ETH).unwrap();
    chain.submit(plain(&a, 5, 0)).unwrap();
    let mined = chain.mine(key(9).address(), &open_policy()).unwrap();
    assert_eq!(mined.included, 1);
    assert_eq!(chain.state().balance(&a.address()), ETH - 5 * 21_000);
}

#[test]
fn miner_selection_by_price() {
    let senders = [key(1), key(2), key(3)];
    let chain = chain_with(&[(&senders[0], ETH), (&senders[1], ETH), (&senders[2], ETH)]);
    let mut pool = Mempool::new();
    for (k, price) in senders.iter().zip([3, 5, 22]) {
        pool.submit(chain.state(), plain(k, price, 0), 0).unwrap();
    }
    let picked: Vec<Gwei> = select_transactions(&pool, chain.state(), &MinerPolicy::new(5, false, 10))
        .iter()
        .map(|t| t.gas_price)
        .collect();
    assert_eq!(picked, vec![22, 5]);
}

#[test]
fn zero_price_needs_flag_and_eligible_recipient() {
    let a = key(1);
    let chain = chain_with(&[]);
    let reviews = chain.state().review_contract_address();
    let mut pool = Mempool::new();
    pool.submit(chain.state(), build_transaction(&a, reviews, Vec::new(), 0, 0), 0)
        .unwrap();
    pool.submit(
        chain.state(),
        build_transaction(&key(2), Address([1; 20]), Vec::new(), 0, 0),
        0,
    )
    .unwrap();

    let off = MinerPolicy::new(0, false, 10);
    assert!(select_transactions(&pool, chain.state(), &off).is_empty());
    let on = MinerPolicy::new(5, true, 10);
    let picked = select_transactions(&pool, chain.state(), &on);
    assert_eq!(picked.len(), 1);
    assert_eq!(picked[0].recipient, reviews);
}

#[test]
fn selection_respects_capacity_nonce_order_and_censorship() {
    let a = key(1);
    let b = key(2);
    let chain = chain_with(&[(&a, ETH), (&b, ETH)]);
    let mut pool = Mempool::new();
    // a's second transaction pays more but must wait for its first.
    pool.submit(chain.state(), plain(&a, 30, 1), 0).unwrap();
    pool.submit(chain.state(), plain(&a, 5, 0), 0).unwrap();
    pool.submit(chain.state(), plain(&b, 10, 0), 0).unwrap();

    let picked = select_transactions(&pool, chain.state(), &MinerPolicy::new(1, false, 10));
    let shape: Vec<(u64, Gwei)> = picked.iter().map(|t| (t.nonce, t.gas_price)).collect();
    assert_eq!(shape, vec![(0, 10), (0, 5)]);

    let capped = select_transactions(&pool, chain.state(), &MinerPolicy::new(1, false, 1));
    assert_eq!(capped.len(), 1);

    let censor = MinerPolicy::new(1, false, 10).censoring([b.address()]);
    let picked = select_transactions(&pool, chain.state(), &censor);
    assert!(picked.iter().all(|t| t.sender != b.address()));
}

#[test]
fn fees_move_from_sender_to_miner() {
    let a = key(1);
    let miner = key(9).address();
    let mut chain = chain_with(&[(&a, ETH)]);
    chain.submit(plain(&a, 22, 0)).unwrap();
    chain.mine(miner, &open_policy()).unwrap();
    let fee = 22 * 21_000;
    assert_eq!(chain.state().balance(&a.address()), ETH - fee);
    assert_eq!(chain.state().balance(&miner), fee);
    assert_eq!(chain.state().total_balance(), chain.state().total_minted());
    assert_eq!(chain.state().nonce(&a.address()), 1);
}

fn two_block_chain() -> Chain {
    let a = key(1);
    let b = key(2);
    let mut chain = chain_with(&[(&a, ETH), (&b, ETH)]);
    chain.submit(plain(&a, 5, 0)).unwrap();
    chain.submit(plain(&b, 22, 0)).unwrap();
    chain.mine(key(8).address(), &open_policy()).unwrap();
    chain.submit(plain(&a, 7, 1)).unwrap();
    chain.mine(key(9).address(), &open_policy()).unwrap();
    chain
}

#[test]
fn replay_is_deterministic() {
    let chain = two_block_chain();
    let replay = |c: &Chain| {
        let mut state = ChainState::genesis(c.genesis());
        let mut roots = Vec::new();
        for b in c.blocks() {
            state = apply_block(&state, b).unwrap();
            roots.push(state.state_root());
        }
        roots
    };
    let first = replay(&chain);
    assert_eq!(first, replay(&chain));
    assert_eq!(first.last(), Some(&chain.blocks()[1].state_root));
}

#[test]
fn tampered_blocks_are_rejected() {
    let chain = two_block_chain();
    let genesis = ChainState::genesis(chain.genesis());

    let mut bad_root = chain.blocks()[0].clone();
    bad_root.state_root[0] ^= 1;
    assert!(matches!(
        apply_block(&genesis, &bad_root),
        Err(LedgerError::StateRootMismatch { .. })
    ));

    let mut bad_parent = chain.blocks()[0].clone();
    bad_parent.parent_digest[0] ^= 1;
    assert!(matches!(
        apply_block(&genesis, &bad_parent),
        Err(LedgerError::ParentMismatch { .. })
    ));

    assert!(matches!(
        apply_block(&genesis, &chain.blocks()[1]),
        Err(LedgerError::HeightMismatch { .. })
    ));

    let mut bad_tx = chain.blocks()[0].clone();
    bad_tx.transactions[0].gas_price += 1;
    assert!(matches!(
        apply_block(&genesis, &bad_tx),
        Err(LedgerError::InvalidTransaction { index: 0, reason: TxRejection::BadSignature })
    ));
}

#[test]
fn faucet_funding() {
    let nobody = key(3).address();
    let mut chain = chain_with(&[]);
    chain.faucet_fund(nobody, ETH).unwrap();
    chain.faucet_fund(nobody, ETH).unwrap();
    assert_eq!(chain.faucet_fund(nobody, 0), Err(LedgerError::ZeroMint));
    chain.mine(key(9).address(), &open_policy()).unwrap();
    // Funding an address that never reviews anything is allowed.
    assert_eq!(chain.state().balance(&nobody), 2 * ETH);
    assert_eq!(chain.state().total_minted(), 2 * ETH as u128);
}

#[test]
fn median_fee_over_history() {
    let a = key(1);
    let b = key(2);
    let c = key(3);
    let mut chain = chain_with(&[(&a, ETH), (&b, ETH), (&c, ETH)]);
    assert_eq!(chain.state().median_fee(1_500), 0);

    chain.submit(plain(&a, 5, 0)).unwrap();
    chain.mine(key(9).address(), &open_policy()).unwrap();
    assert_eq!(chain.state().median_fee(1_500), 5);

    chain.submit(plain(&b, 22, 0)).unwrap();
    chain.submit(plain(&c, 22, 0)).unwrap();
    chain.mine(key(9).address(), &open_policy()).unwrap();
    assert_eq!(chain.state().fee_history(), vec![vec![5], vec![22, 22]]);
    assert_eq!(chain.state().median_fee(1_500), 22);
    assert_eq!(chain.state().median_fee(1), 22);
}

#[test]
fn sponsored_review_and_refund_claim() {
    let vendor = key(1);
    let buyer = key(2);
    let miner = key(9);
    let mut chain = chain_with(&[(&vendor, 10 * ETH), (&miner, ETH)]);
    let reviews = chain.state().review_contract_address();
    let pool = chain.state().refund_pool_address();
    let policy = open_policy();

    let setup = [
        ContractCall::RegisterVendor {
            product_id: "app".into(),
            vendor_key: vendor.public_key().to_vec(),
        },
        ContractCall::IssueToken(PurchaseReceipt::issue(&vendor, buyer.address(), "app", "1.0")),
    ];
    for (nonce, call) in setup.iter().enumerate() {
        chain
            .submit(build_transaction(&vendor, reviews, call.to_canonical(), 22, nonce as u64))
            .unwrap();
    }
    chain
        .submit(build_transaction(
            &vendor,
            pool,
            ContractCall::DepositPool { amount: ETH }.to_canonical(),
            22,
            2,
        ))
        .unwrap();
    chain.mine(miner.address(), &policy).unwrap();
    assert_eq!(chain.state().median_fee(1_500), 22);
    assert_eq!(chain.state().balance(&pool), ETH);

    let text = b"works offline".to_vec();
    let submission = ReviewSubmission::signed(&buyer, "app", "1.0", 5, StorageRef::OnChain(text.clone()));
    let review_tx = build_transaction(
        &buyer,
        reviews,
        ContractCall::SubmitReview(submission).to_canonical(),
        0,
        0,
    );
    chain.submit(review_tx).unwrap();
    chain.mine(miner.address(), &policy).unwrap();
    let (_, included) = chain.state().included(2, 0).unwrap();
    assert!(included.outcome.is_success());
    assert_eq!(included.storage_gas, 625 * text.len() as u64);
    let gas_used = included.gas_used;
    assert_eq!(chain.state().balance(&buyer.address()), 0);

    let miner_before = chain.state().balance(&miner.address());
    let claim = |nonce| {
        build_transaction(
            &miner,
            pool,
            ContractCall::ClaimRefund { height: 2, tx_index: 0 }.to_canonical(),
            22,
            nonce,
        )
    };
    chain.submit(claim(0)).unwrap();
    chain.mine(miner.address(), &policy).unwrap();
    let (_, receipt) = chain.state().included(3, 0).unwrap();
    assert!(receipt.outcome.is_success(), "{:?}", receipt.outcome);
    assert_eq!(receipt.transfer, 22 * gas_used);
    // Miner paid its own claim fee to itself.
    assert_eq!(chain.state().balance(&miner.address()), miner_before + 22 * gas_used);
    assert_eq!(chain.state().balance(&pool), ETH - 22 * gas_used);
    assert_eq!(chain.state().refund_pool().balance(), chain.state().balance(&pool));

    chain.submit(claim(1)).unwrap();
    chain.mine(miner.address(), &policy).unwrap();
    let (_, again) = chain.state().included(4, 0).unwrap();
    assert!(matches!(&again.outcome, Outcome::Reverted(r) if r.contains("already claimed")));
    assert_eq!(chain.state().total_balance(), chain.state().total_minted());
}

#[test]
fn reverted_calls_still_pay_gas_and_consume_nonce() {
    let a = key(1);
    let miner = key(9).address();
    let mut chain = chain_with(&[(&a, ETH)]);
    let reviews = chain.state().review_contract_address();
    let transfer = ContractCall::TokenTransfer {
        to: key(2).address(),
        product_id: "app".into(),
        product_version: "1".into(),
    };
    chain
        .submit(build_transaction(&a, reviews, transfer.to_canonical(), 5, 0))
        .unwrap();
    chain.submit(build_transaction(&a, reviews, vec![0xff], 5, 1)).unwrap();
    chain.mine(miner, &open_policy()).unwrap();
    let record = &chain.state().history()[0];
    assert!(matches!(&record.transactions[0].outcome, Outcome::Reverted(r) if r.contains("not transferable")));
    assert!(matches!(&record.transactions[1].outcome, Outcome::Reverted(r) if r.contains("malformed call")));
    assert_eq!(chain.state().nonce(&a.address()), 2);
    assert_eq!(chain.state().balance(&miner), 2 * 5 * 21_000);
}

#[test]
fn out_of_gas_charges_the_limit() {
    let a = key(1);
    let miner = key(9).address();
    let mut chain = chain_with(&[(&a, ETH)]);
    let reviews = chain.state().review_contract_address();
    let submission = ReviewSubmission::signed(&a, "app", "1", 3, StorageRef::OnChain(vec![b'x'; 100]));
    let payload = ContractCall::SubmitReview(submission).to_canonical();
    chain
        .submit(build_transaction_with_limit(&a, reviews, payload, 5, 21_000, 0))
        .unwrap();
    chain.mine(miner, &open_policy()).unwrap();
    let t = &chain.state().history()[0].transactions[0];
    assert_eq!(t.outcome, Outcome::OutOfGas);
    assert_eq!(t.gas_used, 21_000);
    assert_eq!(t.storage_gas, 0);
}

#[test]
fn dump_round_trips_bit_exactly() {
    let chain = two_block_chain();
    let text = chain.dump();
    let loaded = Chain::load(&text).unwrap();
    assert_eq!(loaded.state().state_root(), chain.state().state_root());
    assert_eq!(loaded.blocks(), chain.blocks());
    assert_eq!(loaded.dump(), text);
}

#[test]
fn corrupt_dumps_are_rejected() {
    let text = two_block_chain().dump();
    let lines: Vec<&str> = text.lines().collect();

    let truncated = lines[..lines.len() - 1].join("\n");
    assert!(matches!(Chain::load(&truncated), Err(LedgerError::Dump { .. })));
    let cut = &text[..text.len() / 2];
    assert!(matches!(Chain::load(cut), Err(LedgerError::Dump { .. })));
    assert!(matches!(Chain::load(""), Err(LedgerError::Dump { line: 1, .. })));

    let tampered = text.replacen("\"gas_price\":22", "\"gas_price\":23", 1);
    assert_ne!(tampered, text);
    assert!(Chain::load(&tampered).is_err());
}
