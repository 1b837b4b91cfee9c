#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reviewchain::digest::Digest;
use reviewchain::ledger::{apply_block, Chain, ChainState, LedgerError};
use reviewchain::scenarios::{execute, ScenarioConfig, ScenarioRun, TextLength};
use reviewchain::storage::Storage;

/// A small scenario with every knob drawn from `seed`.
pub fn random_config(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let combos = ScenarioConfig::all_combinations();
    let mut config = combos[rng.gen_range(0..combos.len())].clone().with_seed(rng.gen());
    config.workload.reviews = rng.gen_range(1..10);
    config.workload.products = rng.gen_range(1..4);
    config.workload.block_capacity = rng.gen_range(4..20);
    config.workload.background_txs_per_block = rng.gen_range(0..4);
    config.workload.text_length = TextLength::Uniform {
        min: 1,
        max: rng.gen_range(1..2_000),
    };
    config
}

pub fn random_workload(seed: u64) -> ScenarioRun {
    execute(&random_config(seed), Storage::in_memory()).expect("random workload runs")
}

/// Re-execute every block from genesis, checking that value is conserved
/// after each one, and return the final state root.
pub fn replay_from_genesis(chain: &Chain) -> Result<Digest, LedgerError> {
    let mut state = ChainState::genesis(chain.genesis());
    for block in chain.blocks() {
        state = apply_block(&state, block)?;
        assert_eq!(state.total_balance(), state.total_minted(), "value not conserved at {}", block.height);
    }
    Ok(state.state_root())
}
