//! A single node: genesis, blocks, current state, mempool and queued mints.
//!
//! Chain dump format: newline-delimited JSON, one record per line.
//!
//! ```text
//! {"genesis":{...}}                      first line
//! {"block":{"height":1,...}}             one line per block, in order
//! {"end":{"blocks":N,"head":"<hex>"}}    last line
//! ```
//!
//! Digests, addresses, payloads and signatures are lowercase hex. Loading a
//! dump replays every block and checks each declared state root, so a dump
//! can only be loaded if it is internally consistent.

use serde::{Deserialize, Serialize};

use crate::digest::{self, Digest};
use crate::identity::Address;

use super::{
    apply_block, produce_block, select_transactions, AdmissionError, Block, ChainState,
    GenesisConfig, Gwei, LedgerError, Mempool, MinerPolicy, Mint, SignedTransaction, TxRejection,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpRecord {
    Genesis(GenesisConfig),
    Block(Block),
    End {
        blocks: u64,
        #[serde(with = "digest::hex32")]
        head: Digest,
    },
}

#[derive(Debug, Clone)]
pub struct MinedBlock {
    pub height: u64,
    pub included: usize,
    pub dropped: Vec<(SignedTransaction, TxRejection)>,
}

#[derive(Debug, Clone)]
pub struct Chain {
    genesis: GenesisConfig,
    blocks: Vec<Block>,
    state: ChainState,
    mempool: Mempool,
    pending_mints: Vec<Mint>,
}

impl Chain {
    pub fn new(genesis: GenesisConfig) -> Result<Self, LedgerError> {
        if genesis.allocations.iter().any(|m| m.amount == 0) {
            return Err(LedgerError::ZeroMint);
        }
        let state = ChainState::genesis(&genesis);
        Ok(Self {
            genesis,
            blocks: Vec::new(),
            state,
            mempool: Mempool::new(),
            pending_mints: Vec::new(),
        })
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    pub fn height(&self) -> u64 {
        self.state.height()
    }

    /// Queue a faucet credit; it lands in the next produced block.
    pub fn faucet_fund(&mut self, target: Address, amount: Gwei) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroMint);
        }
        self.pending_mints.push(Mint { to: target, amount });
        Ok(())
    }

    fn pending_credit(&self, who: &Address) -> Gwei {
        self.pending_mints
            .iter()
            .filter(|m| m.to == *who)
            .map(|m| m.amount)
            .sum()
    }

    pub fn submit(&mut self, tx: SignedTransaction) -> Result<Digest, AdmissionError> {
        let credit = self.pending_credit(&tx.sender);
        self.mempool.submit(&self.state, tx, credit)
    }

    /// Produce, apply and append the next block as `miner` under `policy`.
    pub fn mine(&mut self, miner: Address, policy: &MinerPolicy) -> Result<MinedBlock, LedgerError> {
        let selected = select_transactions(&self.mempool, &self.state, policy);
        let mints = std::mem::take(&mut self.pending_mints);
        let produced = produce_block(&self.state, selected, mints, miner)?;
        for tx in &produced.block.transactions {
            self.mempool.remove(&tx.hash());
        }
        for (tx, _) in &produced.dropped {
            self.mempool.remove(&tx.hash());
        }
        self.state = produced.state;
        self.mempool.prune(&self.state);
        let mined = MinedBlock {
            height: produced.block.height,
            included: produced.block.transactions.len(),
            dropped: produced.dropped,
        };
        self.blocks.push(produced.block);
        Ok(mined)
    }

    /// Append a block produced elsewhere.
    pub fn import(&mut self, block: Block) -> Result<(), LedgerError> {
        self.state = apply_block(&self.state, &block)?;
        self.blocks.push(block);
        self.mempool.prune(&self.state);
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut push = |record: &DumpRecord| {
            out.push_str(&serde_json::to_string(record).expect("dump records serialize"));
            out.push('\n');
        };
        push(&DumpRecord::Genesis(self.genesis.clone()));
        for b in &self.blocks {
            push(&DumpRecord::Block(b.clone()));
        }
        push(&DumpRecord::End {
            blocks: self.blocks.len() as u64,
            head: self.state.head(),
        });
        out
    }

    /// Rebuild a chain from a dump, replaying and verifying every block.
    pub fn load(text: &str) -> Result<Self, LedgerError> {
        let err = |line: usize, reason: String| LedgerError::Dump { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        let (n, first) = lines
            .next()
            .ok_or_else(|| err(1, "empty dump".into()))?;
        let genesis = match serde_json::from_str(first).map_err(|e| err(n, e.to_string()))? {
            DumpRecord::Genesis(g) => g,
            _ => return Err(err(n, "first record must be genesis".into())),
        };
        let mut chain = Chain::new(genesis)?;

        for (n, line) in lines {
            match serde_json::from_str(line).map_err(|e| err(n, e.to_string()))? {
                DumpRecord::Block(block) => chain.import(block).map_err(|e| err(n, e.to_string()))?,
                DumpRecord::End { blocks, head } => {
                    if blocks != chain.blocks.len() as u64 || head != chain.state.head() {
                        return Err(err(n, "end record disagrees with replayed chain".into()));
                    }
                    if n != text.lines().count() {
                        return Err(err(n + 1, "records after end marker".into()));
                    }
                    return Ok(chain);
                }
                DumpRecord::Genesis(_) => return Err(err(n, "duplicate genesis record".into())),
            }
        }
        Err(err(text.lines().count() + 1, "missing end record (truncated dump)".into()))
    }
}
