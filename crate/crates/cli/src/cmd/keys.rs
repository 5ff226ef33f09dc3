use anyhow::{anyhow, Result};
use clap::Subcommand;
use dsf_core::keys::{KeyKind, KeyMaterial};

use crate::context::{usage, Ctx, Outcome};
use crate::output::Report;

#[derive(Debug, Subcommand)]
pub enum KeysCmd {
    /// Generates a random key into the key store.
    Gen {
        #[arg(long)]
        id: String,
        /// cipher, hmac, signature-private, signature-public or prf.
        #[arg(long)]
        kind: KeyKind,
        /// Replace an existing key with the same id.
        #[arg(long)]
        force: bool,
    },
    /// Stores the public half of a signature key under a new id.
    Public {
        #[arg(long)]
        id: String,
        #[arg(long)]
        out_id: String,
    },
}

pub fn run(ctx: &Ctx, cmd: KeysCmd) -> Result<Outcome> {
    let ks = ctx.keystore()?;
    let (id, kind) = match cmd {
        KeysCmd::Gen { id, kind, force } => {
            if ks.contains(&id) && !force {
                return Err(usage(format!("key `{id}` exists; pass --force to replace it")));
            }
            ks.put(&KeyMaterial::generate(ctx.provider, id.clone(), kind, &mut ctx.rng_for(&id)))?;
            (id, kind)
        }
        KeysCmd::Public { id, out_id } => {
            let key = ks.get(ctx.provider, &id)?;
            let public = key
                .public_half(ctx.provider)
                .ok_or_else(|| anyhow!("key `{id}` is {}, not a signature key", key.kind()))?;
            ks.put(&KeyMaterial::new(ctx.provider, out_id.clone(), KeyKind::SignaturePublic, public.bytes().to_vec())?)?;
            (out_id, KeyKind::SignaturePublic)
        }
    };
    ctx.emit(Report::new().field("id", id).field("kind", kind).field("provider", ctx.provider.name()));
    Ok(Outcome::Ok)
}
