//! Per-invocation state shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use dsf_core::config::SecurityConfig;
use dsf_core::keys::{KeyMaterial, KeyStore};
use dsf_core::model::Table;
use dsf_core::provider::{entropy_rng, seeded_rng, AlgorithmProvider, HashChoice, Rng};
use dsf_core::storage::read_table_csv;
use thiserror::Error;

use crate::output::{parse_kv, Format, Report};

/// A malformed invocation that clap could not catch.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Verification failed or input was rejected.
    Negative,
}

impl Outcome {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Ok
        } else {
            Outcome::Negative
        }
    }
}

pub struct Ctx {
    pub config: SecurityConfig,
    pub provider: &'static dyn AlgorithmProvider,
    pub format: Format,
    keys_dir: PathBuf,
    seed: Option<u64>,
}

impl Ctx {
    pub fn new(config: SecurityConfig, keys_dir: PathBuf, format: Format, seed: Option<u64>) -> Self {
        Self {
            provider: config.provider.provider(),
            config,
            format,
            keys_dir,
            seed,
        }
    }

    pub fn keystore(&self) -> Result<KeyStore> {
        KeyStore::open(&self.keys_dir).with_context(|| format!("opening key store {}", self.keys_dir.display()))
    }

    pub fn key(&self, id: &str) -> Result<KeyMaterial> {
        Ok(self.keystore()?.get(self.provider, id)?)
    }

    /// `explicit`, else the config's reference for `aspect`.
    pub fn key_id<'a>(&'a self, explicit: Option<&'a str>, fallback: Option<&'a str>, aspect: &str) -> Result<&'a str> {
        explicit
            .or(fallback)
            .ok_or_else(|| usage(format!("no key given: pass --key-id or set {aspect}.key in the config")))
    }

    pub fn rng(&self) -> Rng {
        match self.seed {
            Some(s) => seeded_rng(s),
            None => entropy_rng(),
        }
    }

    /// Like [`Ctx::rng`], but seeded runs get a distinct stream per label,
    /// so keys generated under different ids differ.
    pub fn rng_for(&self, label: &str) -> Rng {
        match self.seed {
            Some(s) => {
                let h = self.provider.hash(HashChoice::A, &[&s.to_be_bytes(), label.as_bytes()].concat());
                seeded_rng(u64::from_be_bytes(h[..8].try_into().expect("hash is at least 8 bytes")))
            }
            None => entropy_rng(),
        }
    }

    pub fn emit(&self, report: &Report) {
        report.print(self.format);
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}

pub fn read_table(path: &Path) -> Result<Table> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_table_csv(name, file).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_kv_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = String::from_utf8(read_file(path)?).map_err(|_| anyhow!("{} is not UTF-8", path.display()))?;
    Ok(parse_kv(&text))
}

/// Looks up `key` in parsed `key=value` pairs.
pub fn kv_get<'a>(kv: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| anyhow!("{} has no `{key}` line", path.display()))
}

pub fn kv_hex(kv: &[(String, String)], key: &str, path: &Path) -> Result<Vec<u8>> {
    hex::decode(kv_get(kv, key, path)?).map_err(|_| anyhow!("{}: `{key}` is not hex", path.display()))
}

/// Splits `a,b,c`, dropping empty items.
pub fn comma_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

pub fn parse_numbers<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    comma_list(s)
        .into_iter()
        .map(|x| x.parse().map_err(|_| usage(format!("{what}: `{x}` is not a number"))))
        .collect()
}
