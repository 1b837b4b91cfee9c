use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reviewchain::economics::{self, parse_decimal, PricePreset};
use reviewchain::identity::{generate_keypair, keystore_decrypt, keystore_encrypt, KdfPreset, Keystore};
use reviewchain::ledger::Chain;
use reviewchain::retrieval::{list_reviews, LocalReplica, RemoteNode, ReviewSource};
use reviewchain::scenarios::{self, ScenarioConfig, Submission};
use reviewchain::storage::{Storage, StorageKind};

type CliResult = Result<(), Box<dyn Error>>;

const CHAIN_FILE: &str = "chain.ndjson";
const STORAGE_DIR: &str = "storage";

#[derive(Parser)]
#[command(name = "reviewchain", version, about = "Tamper-resistant review simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Storage cost table for a review corpus at the named gas prices.
    Cost {
        #[arg(long, default_value_t = economics::REFERENCE_BYTES)]
        bytes: u64,
        #[arg(long, default_value_t = economics::REFERENCE_REVIEWS)]
        reviews: u64,
        /// USD per ETH, decimal.
        #[arg(long, default_value = "885")]
        eth_usd: String,
        /// Extra gas prices in Gwei, added after the two presets.
        #[arg(long = "gwei")]
        extra_gwei: Vec<u64>,
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    #[command(subcommand)]
    Reviews(ReviewsCommand),
    #[command(subcommand)]
    Keystore(KeystoreCommand),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Run one scenario from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write chain dump, payload stores and reports here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run and rate the three trade-off configurations.
    Table1 {
        #[arg(long, default_value_t = 100)]
        reviews: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Print a config file with every field at its default.
    Template,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reader {
    Local,
    Remote,
}

#[derive(Subcommand)]
enum ReviewsCommand {
    /// List and verify reviews from a scenario output directory.
    List {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        product: String,
        #[arg(long)]
        version: Option<String>,
        #[arg(long, value_enum, default_value = "local")]
        reader: Reader,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum KeystoreCommand {
    /// Derive a key from a 32-byte hex seed and write an encrypted keystore.
    Create {
        #[arg(long)]
        seed: String,
        #[arg(long)]
        passphrase: String,
        #[arg(long, default_value = "standard")]
        preset: KdfPreset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decrypt a keystore and print its address.
    Open {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        passphrase: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cost {
            bytes,
            reviews,
            eth_usd,
            extra_gwei,
            json,
        } => cost(bytes, reviews, &eth_usd, &extra_gwei, json),
        Command::Scenario(cmd) => scenario(cmd),
        Command::Reviews(ReviewsCommand::List {
            dir,
            product,
            version,
            reader,
            json,
        }) => reviews_list(&dir, &product, version.as_deref(), reader, json),
        Command::Keystore(cmd) => keystore(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cost(bytes: u64, reviews: u64, eth_usd: &str, extra_gwei: &[u64], json: bool) -> CliResult {
    let rate = parse_decimal(eth_usd).ok_or_else(|| format!("bad --eth-usd value `{eth_usd}`"))?;
    let mut presets = economics::PRESETS.to_vec();
    presets.extend(extra_gwei.iter().map(|&gwei| PricePreset { label: "custom", gwei }));
    let rows = economics::cost_table(bytes, reviews, &rate, &presets)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!("{bytes} bytes, {reviews} reviews, ${eth_usd}/ETH");
        for row in rows {
            println!("{row}");
        }
    }
    Ok(())
}

fn scenario(cmd: ScenarioCommand) -> CliResult {
    match cmd {
        ScenarioCommand::Run {
            config,
            seed,
            out,
            json,
        } => {
            let text = fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let mut config = ScenarioConfig::from_toml(&text)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let storage = match &out {
                Some(dir) => Storage::open(&dir.join(STORAGE_DIR))?,
                None => Storage::in_memory(),
            };
            let run = scenarios::execute(&config, storage)?;
            if let Some(dir) = &out {
                fs::write(dir.join(CHAIN_FILE), run.chain.dump())?;
                fs::write(dir.join("config.toml"), config.to_toml())?;
                fs::write(dir.join("report.txt"), run.report.to_string())?;
                fs::write(dir.join("report.json"), run.report.to_json())?;
            }
            if json {
                println!("{}", run.report.to_json());
            } else {
                print!("{}", run.report);
            }
        }
        ScenarioCommand::Table1 { reviews, seed, json } => {
            let rows = scenarios::table1(reviews, seed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                println!(
                    "{:<9} {:<10} {:<12} {:<17} {:<23} {:<8} {:<32} attacks that succeeded",
                    "optimum", "submission", "authorize", "storage", "fees", "reader", "(security, trust, cost)"
                );
                for r in &rows {
                    let c = &r.config;
                    println!(
                        "{:<9} {:<10} {:<12} {:<17} {:<23} {:<8} {:<32} {}",
                        r.label,
                        format!("{:?}", c.submission),
                        format!("{:?}", c.authorization),
                        format!("{:?}", c.storage),
                        format!("{:?}", c.fees),
                        format!("{:?}", c.retrieval),
                        r.rating.to_string(),
                        if r.attacks_succeeded.is_empty() { "none".to_string() } else { r.attacks_succeeded.join(", ") }
                    );
                }
            }
            if let Some(r) = rows.iter().find(|r| r.rating != r.expected) {
                return Err(format!("{} row rated {} but expected {}", r.label, r.rating, r.expected).into());
            }
        }
        ScenarioCommand::Template => {
            let config = ScenarioConfig::new(
                Submission::Direct,
                scenarios::Authorization::AccessToken,
                StorageKind::ContentAddressed,
                scenarios::Fees::RefundContract,
                scenarios::Retrieval::Local,
            );
            print!("{}", config.to_toml());
        }
    }
    Ok(())
}

fn reviews_list(dir: &Path, product: &str, version: Option<&str>, reader: Reader, json: bool) -> CliResult {
    let chain_path = dir.join(CHAIN_FILE);
    let dump = fs::read_to_string(&chain_path).map_err(|e| format!("{}: {e}", chain_path.display()))?;
    let storage = Storage::open(&dir.join(STORAGE_DIR))?;
    let local;
    let remote;
    let source: &dyn ReviewSource = match reader {
        Reader::Local => {
            let mut replica = LocalReplica::new();
            let stats = replica.sync_local(&dump)?;
            if !json {
                println!("synced {} blocks ({} bytes) from genesis", stats.blocks, stats.bytes);
            }
            local = replica;
            &local
        }
        Reader::Remote => {
            remote = RemoteNode::honest(Chain::load(&dump)?.state().clone());
            &remote
        }
    };
    let listed = list_reviews(source, &storage, product, version)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&listed)?);
        return Ok(());
    }
    println!("{:<42} {:<8} {:>6} {:<12} text", "author", "version", "rating", "status");
    for v in &listed {
        let text = v.text.as_deref().unwrap_or("-");
        let short: String = text.chars().take(40).collect();
        println!(
            "{:<42} {:<8} {:>6} {:<12} {}",
            v.review.author.to_string(),
            v.review.product_version,
            v.review.rating,
            v.status.label(),
            short
        );
    }
    println!("{} reviews", listed.len());
    Ok(())
}

fn keystore(cmd: KeystoreCommand) -> CliResult {
    match cmd {
        KeystoreCommand::Create {
            seed,
            passphrase,
            preset,
            out,
        } => {
            let key = generate_keypair(&hex::decode(seed.trim())?)?;
            let store = keystore_encrypt(&key, &passphrase, preset)?;
            fs::write(&out, store.to_json())?;
            println!("{}", key.address());
        }
        KeystoreCommand::Open { file, passphrase } => {
            let store = Keystore::from_json(&fs::read_to_string(&file)?)?;
            let key = keystore_decrypt(&store, &passphrase)?;
            println!("{}", key.address());
        }
    }
    Ok(())
}
