use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Subcommand, ValueEnum};
use dsf_core::keys::{KeyKind, KeyMaterial};
use dsf_core::sqlrand::{
    derandomize, key_update_compose, keygen, randomize, spawn_proxy, suffix_from_key, EchoUpstream, KeywordSet,
    Proxy, ProxyClient, ProxyMode, RandomizationKey, Request, Response,
};
use rand::RngCore;

use crate::context::{read_file, usage, write_file, Ctx, Outcome};
use crate::output::Report;

const DEFAULT_KEY_ID: &str = "sqlrand";

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Static,
    Dynamic,
}

#[derive(Debug, Args)]
pub struct SuffixSource {
    /// The suffix itself.
    #[arg(long, conflicts_with = "key_id")]
    key: Option<u32>,
    /// A localized key from `sqlrand keygen`; defaults to `randomization.key`,
    /// then `sqlrand`.
    #[arg(long)]
    key_id: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SqlrandCmd {
    /// Derives the localized key from a password and stores it.
    Keygen {
        #[arg(long, env = "DSF_SQLRAND_PASSWORD", hide_env_values = true, conflicts_with = "password_file")]
        password: Option<String>,
        /// First line of the file is the password.
        #[arg(long)]
        password_file: Option<PathBuf>,
        /// Binds the key to one deployment, e.g. a host name.
        #[arg(long)]
        localizer: String,
        #[arg(long)]
        key_id: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Appends the suffix to every keyword of the query on stdin.
    Randomize {
        #[command(flatten)]
        suffix: SuffixSource,
    },
    /// Strips the suffix from the query on stdin, refusing bare keywords.
    Derandomize {
        #[command(flatten)]
        suffix: SuffixSource,
    },
    /// Composes a key-change message from the current key to a new one.
    Keyupdate {
        #[arg(long)]
        key_id: Option<String>,
        #[arg(long)]
        new_key_id: String,
        /// Generates the new key when missing.
        #[arg(long)]
        create_new: bool,
        #[arg(long, default_value_t = 16)]
        random_len: usize,
        #[arg(long, required_unless_present = "send")]
        out: Option<PathBuf>,
        /// Sends the message to a running proxy.
        #[arg(long)]
        send: Option<String>,
    },
    /// Runs the proxy with an echoing upstream until killed.
    Proxy {
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        #[arg(long)]
        key_id: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Dynamic)]
        mode: Mode,
    },
    /// Sends the query on stdin through a proxy.
    Query {
        #[arg(long)]
        connect: String,
    },
}

fn key_id<'a>(ctx: &'a Ctx, explicit: Option<&'a str>) -> &'a str {
    explicit.or(ctx.config.randomization_key.as_deref()).unwrap_or(DEFAULT_KEY_ID)
}

fn randomization_key(ctx: &Ctx, src: &SuffixSource) -> Result<RandomizationKey> {
    let suffix = match src.key {
        Some(0) => return Err(usage("--key must be positive")),
        Some(s) => s,
        None => suffix_from_key(ctx.key(key_id(ctx, src.key_id.as_deref()))?.bytes()),
    };
    Ok(RandomizationKey { suffix, epoch: 0 })
}

fn read_stdin() -> Result<String> {
    let mut s = String::new();
    io::stdin().read_to_string(&mut s)?;
    Ok(s)
}

fn reject(reason: dsf_core::sqlrand::RejectReason) -> Outcome {
    eprintln!("rejected: {reason} (code {})", reason.code());
    Outcome::Negative
}

pub fn run(ctx: &Ctx, cmd: SqlrandCmd) -> Result<Outcome> {
    match cmd {
        SqlrandCmd::Keygen { password, password_file, localizer, key_id: id, force } => {
            let password = match (password, password_file) {
                (Some(p), _) => p,
                (None, Some(f)) => {
                    let text = String::from_utf8(read_file(&f)?).map_err(|_| anyhow!("{} is not UTF-8", f.display()))?;
                    text.lines().next().unwrap_or_default().to_string()
                }
                (None, None) => return Err(usage("pass --password, DSF_SQLRAND_PASSWORD or --password-file")),
            };
            let id = key_id(ctx, id.as_deref()).to_string();
            let ks = ctx.keystore()?;
            if ks.contains(&id) && !force {
                return Err(usage(format!("key `{id}` exists; pass --force to replace it")));
            }
            let (chain, key) = keygen(ctx.provider, &password, localizer.as_bytes())?;
            ks.put(&KeyMaterial::new(ctx.provider, id.clone(), KeyKind::Prf, chain.digest2)?)?;
            ctx.emit(Report::new().field("id", id).field("epoch", key.epoch));
            Ok(Outcome::Ok)
        }
        SqlrandCmd::Randomize { suffix } => {
            let key = randomization_key(ctx, &suffix)?;
            let out = randomize(&read_stdin()?, &key, &KeywordSet::standard())?;
            io::stdout().write_all(out.as_bytes())?;
            Ok(Outcome::Ok)
        }
        SqlrandCmd::Derandomize { suffix } => {
            let key = randomization_key(ctx, &suffix)?;
            match derandomize(&read_stdin()?, &key, &KeywordSet::standard()) {
                Ok(sql) => {
                    io::stdout().write_all(sql.as_bytes())?;
                    Ok(Outcome::Ok)
                }
                Err(reason) => Ok(reject(reason)),
            }
        }
        SqlrandCmd::Keyupdate { key_id: old_id, new_key_id, create_new, random_len, out, send } => {
            let ks = ctx.keystore()?;
            let old = ctx.key(key_id(ctx, old_id.as_deref()))?;
            if create_new && !ks.contains(&new_key_id) {
                ks.put(&KeyMaterial::generate(ctx.provider, new_key_id.clone(), KeyKind::Prf, &mut ctx.rng_for(&new_key_id)))?;
            }
            let new = ctx.key(&new_key_id)?;
            let mut random = vec![0u8; random_len];
            ctx.rng_for("keyupdate").fill_bytes(&mut random);
            let msg = key_update_compose(ctx.provider, old.bytes(), new.bytes(), &random)?;
            if let Some(path) = &out {
                write_file(path, &msg)?;
            }
            let mut r = Report::new();
            r.field("message_bytes", msg.len());
            if let Some(addr) = send {
                match ProxyClient::connect(&addr)?.send(&Request::KeyChange(msg))? {
                    Response::Ack(epoch) => r.field("epoch", epoch),
                    _ => bail!("proxy refused the key change"),
                };
            }
            ctx.emit(&r);
            Ok(Outcome::Ok)
        }
        SqlrandCmd::Proxy { listen, key_id: id, mode } => {
            let secret = ctx.key(key_id(ctx, id.as_deref()))?.bytes().to_vec();
            let mode = match mode {
                Mode::Static => ProxyMode::Static,
                Mode::Dynamic => ProxyMode::Dynamic,
            };
            let proxy = Arc::new(Proxy::new(ctx.provider, mode, secret, Arc::new(EchoUpstream)));
            let addr = spawn_proxy(&listen, proxy)?;
            ctx.emit(Report::new().field("listening", addr));
            io::stdout().flush()?;
            loop {
                thread::park();
            }
        }
        SqlrandCmd::Query { connect } => match ProxyClient::connect(&connect)?.send(&Request::Query(read_stdin()?))? {
            Response::Ok(rows) => {
                io::stdout().write_all(&rows)?;
                Ok(Outcome::Ok)
            }
            Response::Reject(reason) => Ok(reject(reason)),
            Response::Ack(_) | Response::Err => bail!("proxy returned an error"),
        },
    }
}
