//! `dsf`: one binary exposing every security aspect as a subcommand.
//!
//! Exit codes: 0 success, 1 verification failure or rejected input,
//! 2 usage error, 3 I/O or key error.

mod cmd;
mod context;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dsf_core::config::{ConfigError, SecurityConfig};
use dsf_core::confidentiality::AnonError;
use dsf_core::storage::{ErrorClass, StoreError};

use context::{Ctx, Outcome, UsageError};
use output::Format;

#[derive(Debug, Parser)]
#[command(name = "dsf", version, about = "Data security framework: confidentiality, integrity, authentication and SQL randomization")]
struct Cli {
    /// security.properties file.
    #[arg(long, global = true, env = "DSF_CONFIG")]
    config: Option<PathBuf>,

    /// Key store directory.
    #[arg(long, global = true, env = "DSF_KEYS", default_value = "keys")]
    keys: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed for every random choice, for reproducible runs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key generation.
    #[command(subcommand)]
    Keys(cmd::keys::KeysCmd),
    /// Record store with the configured security pipeline.
    #[command(subcommand)]
    Store(cmd::store::StoreCmd),
    /// k-anonymity, generalization and l-diversity.
    #[command(subcommand)]
    Anon(cmd::anon::AnonCmd),
    /// Searchable encryption over word lists.
    #[command(subcommand)]
    Search(cmd::search::SearchCmd),
    /// Relational watermarks.
    #[command(subcommand)]
    Wm(cmd::wm::WmCmd),
    /// Block-wise fragile image watermark.
    #[command(subcommand)]
    Img(cmd::img::ImgCmd),
    /// Payload authentication tags.
    #[command(subcommand)]
    Auth(cmd::auth::AuthCmd),
    /// Signed Merkle trees and membership proofs.
    #[command(subcommand)]
    Merkle(cmd::merkle::MerkleCmd),
    /// Authenticated range aggregates.
    #[command(subcommand)]
    Agg(cmd::agg::AggCmd),
    /// SQL keyword randomization and its proxy.
    #[command(subcommand)]
    Sqlrand(cmd::sqlrand::SqlrandCmd),
}

fn load_config(path: Option<&PathBuf>) -> Result<SecurityConfig> {
    let Some(path) = path else {
        return Ok(SecurityConfig::default());
    };
    let (cfg, warnings) = SecurityConfig::load(path)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    let config = load_config(cli.config.as_ref())?;
    let ctx = Ctx::new(config, cli.keys, cli.format, cli.seed);
    match cli.command {
        Command::Keys(c) => cmd::keys::run(&ctx, c),
        Command::Store(c) => cmd::store::run(&ctx, c),
        Command::Anon(c) => cmd::anon::run(&ctx, c),
        Command::Search(c) => cmd::search::run(&ctx, c),
        Command::Wm(c) => cmd::wm::run(&ctx, c),
        Command::Img(c) => cmd::img::run(&ctx, c),
        Command::Auth(c) => cmd::auth::run(&ctx, c),
        Command::Merkle(c) => cmd::merkle::run(&ctx, c),
        Command::Agg(c) => cmd::agg::run(&ctx, c),
        Command::Sqlrand(c) => cmd::sqlrand::run(&ctx, c),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<StoreError>() {
            let class = e.class();
            if class.is_verification() || matches!(class, ErrorClass::ConfigMismatch | ErrorClass::NotFound) {
                return 1;
            }
        }
        if let Some(e) = cause.downcast_ref::<ConfigError>() {
            if !matches!(e, ConfigError::NotFound(_) | ConfigError::Io(_) | ConfigError::MissingKey { .. }) {
                return 2;
            }
        }
        if let Some(e) = cause.downcast_ref::<AnonError>() {
            if matches!(
                e,
                AnonError::KTooSmall(_) | AnonError::LZero | AnonError::EmptyQi | AnonError::VectorOutOfRange
            ) {
                return 2;
            }
        }
    }
    3
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
