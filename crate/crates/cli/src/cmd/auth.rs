use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Subcommand;
use dsf_core::authentication::{auth_tag, auth_verify, AuthScheme, AuthenticationTag};
use dsf_core::keys::KeyKind;

use crate::context::{kv_get, kv_hex, read_file, read_kv_file, usage, write_file, Ctx, Outcome};
use crate::output::{Format, Report};

#[derive(Debug, Subcommand)]
pub enum AuthCmd {
    /// Tags a file. An hmac key gives an HMAC tag, a signature-private key
    /// a signature.
    Tag {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `authentication.key`.
        #[arg(long)]
        key_id: Option<String>,
        /// Tag file, `key=value` lines.
        #[arg(long)]
        out: PathBuf,
    },
    /// Checks a tag file against the payload.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tag: PathBuf,
        /// Defaults to `authentication.key`, then the signer named in the tag.
        #[arg(long)]
        key_id: Option<String>,
    },
}

pub fn run(ctx: &Ctx, cmd: AuthCmd) -> Result<Outcome> {
    match cmd {
        AuthCmd::Tag { input, key_id, out } => {
            let id = ctx.key_id(key_id.as_deref(), ctx.config.authentication.key.as_deref(), "authentication")?;
            let key = ctx.key(id)?;
            let scheme = match key.kind() {
                KeyKind::Hmac => AuthScheme::Hmac,
                KeyKind::SignaturePrivate => AuthScheme::Signature,
                other => return Err(usage(format!("key `{id}` is {other}; tags need hmac or signature-private"))),
            };
            let tag = auth_tag(ctx.provider, &read_file(&input)?, &key, scheme)?;
            let mut file = Report::new();
            file.field("scheme", tag.scheme.as_str())
                .field("signer", &tag.signer_id)
                .field("tag", hex::encode(&tag.tag));
            write_file(&out, file.render(Format::Kv))?;
            ctx.emit(Report::new().field("scheme", tag.scheme.as_str()).field("signer", &tag.signer_id));
            Ok(Outcome::Ok)
        }
        AuthCmd::Verify { input, tag, key_id } => {
            let kv = read_kv_file(&tag)?;
            let scheme = match kv_get(&kv, "scheme", &tag)? {
                s if s == AuthScheme::Hmac.as_str() => AuthScheme::Hmac,
                s if s == AuthScheme::Signature.as_str() => AuthScheme::Signature,
                s => return Err(anyhow!("{}: unknown scheme `{s}`", tag.display())),
            };
            let parsed = AuthenticationTag {
                scheme,
                tag: kv_hex(&kv, "tag", &tag)?,
                signer_id: kv_get(&kv, "signer", &tag)?.to_string(),
            };
            let fallback = ctx.config.authentication.key.as_deref().or(Some(parsed.signer_id.as_str()));
            let key = ctx.key(ctx.key_id(key_id.as_deref(), fallback, "authentication")?)?;
            let ok = auth_verify(ctx.provider, &read_file(&input)?, &parsed, &key);
            ctx.emit(Report::new().field("scheme", scheme.as_str()).field("verified", ok));
            Ok(Outcome::from_ok(ok))
        }
    }
}
