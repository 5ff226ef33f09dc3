use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Args, Subcommand};
use dsf_core::confidentiality::{canonical_word, index_build, index_search, EncryptedIndex, SearchKeys, SearchParams};
use dsf_core::envelope::SecurityEnvelope;
use dsf_core::keys::{KeyKind, KeyMaterial};

use crate::context::{read_file, write_file, Ctx, Outcome};
use crate::output::Report;

#[derive(Debug, Args)]
pub struct KeyPrefix {
    /// Keys are `<prefix>-word`, `<prefix>-left` and `<prefix>-stream`.
    #[arg(long, default_value = "search")]
    key_prefix: String,
}

#[derive(Debug, Subcommand)]
pub enum SearchCmd {
    /// Encrypts a whitespace-separated word list into a searchable index.
    Build {
        #[arg(long)]
        input: PathBuf,
        /// Word size in bits.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Check bits per word; false matches occur with rate 2^-m.
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[command(flatten)]
        keys: KeyPrefix,
        /// Generates the three keys when they are missing.
        #[arg(long)]
        create_keys: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lists the positions at which a word may occur.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        word: String,
        #[command(flatten)]
        keys: KeyPrefix,
        /// Decrypts each match and drops the false ones.
        #[arg(long)]
        exact: bool,
    },
}

fn load_keys(ctx: &Ctx, prefix: &KeyPrefix, create: bool) -> Result<SearchKeys> {
    let ks = ctx.keystore()?;
    let get = |part: &str| -> Result<KeyMaterial> {
        let id = format!("{}-{part}", prefix.key_prefix);
        if create && !ks.contains(&id) {
            ks.put(&KeyMaterial::generate(ctx.provider, id.clone(), KeyKind::Prf, &mut ctx.rng_for(&id)))?;
        }
        Ok(ks.get(ctx.provider, &id)?)
    };
    Ok(SearchKeys::new(get("word")?, get("left")?, get("stream")?)?)
}

pub fn run(ctx: &Ctx, cmd: SearchCmd) -> Result<Outcome> {
    match cmd {
        SearchCmd::Build { input, n, m, keys, create_keys, out } => {
            let params = SearchParams::new(n, m)?;
            let keys = load_keys(ctx, &keys, create_keys)?;
            let text = String::from_utf8(read_file(&input)?).map_err(|_| anyhow!("{} is not UTF-8", input.display()))?;
            let words: Vec<_> = text.split_whitespace().map(|w| canonical_word(w, n)).collect();
            let index = index_build(ctx.provider, params, &keys, &words)?;
            write_file(&out, index.to_envelope()?.encode()?)?;
            ctx.emit(Report::new().field("words", words.len()).field("n", n).field("m", m));
            Ok(Outcome::Ok)
        }
        SearchCmd::Query { index, word, keys, exact } => {
            let env = SecurityEnvelope::decode(&read_file(&index)?)?;
            let idx = EncryptedIndex::from_envelope(&env)?;
            let keys = load_keys(ctx, &keys, false)?;
            let target = canonical_word(&word, idx.params.n);
            let mut hits = index_search(ctx.provider, &idx, &keys, &target)?;
            if exact {
                let mut kept = Vec::with_capacity(hits.len());
                for i in hits {
                    if idx.recover(ctx.provider, &keys, i)? == target {
                        kept.push(i);
                    }
                }
                hits = kept;
            }
            let list: Vec<String> = hits.iter().map(usize::to_string).collect();
            ctx.emit(Report::new().field("count", hits.len()).field("positions", list.join(",")));
            Ok(Outcome::from_ok(!hits.is_empty()))
        }
    }
}
