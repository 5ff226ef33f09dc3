use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Subcommand};
use dsf_core::authentication::{merkle_build, merkle_prove, merkle_update, merkle_verify, MembershipProof, MerkleTree, SignedRoot};
use dsf_core::keys::{KeyKind, KeyMaterial};
use dsf_core::model::{Table, Value};
use dsf_core::storage::write_table_csv;

use crate::context::{kv_hex, read_file, read_kv_file, read_table, usage, write_file, Ctx, Outcome};
use crate::output::{Format, Report};

#[derive(Debug, Args)]
pub struct Owner {
    /// CSV with header `id,value:KIND`.
    #[arg(long)]
    entries: PathBuf,
    /// Owner's signature-private key; defaults to `authentication.key`.
    #[arg(long)]
    key_id: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum MerkleCmd {
    /// Builds the tree and writes the signed root.
    Build {
        #[command(flatten)]
        owner: Owner,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes a membership proof for the entry with id `key`.
    Prove {
        #[command(flatten)]
        owner: Owner,
        #[arg(long)]
        key: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Checks a proof against a signed root.
    Verify {
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        key: u64,
        /// Value as text.
        #[arg(long, conflicts_with = "value_hex", required_unless_present = "value_hex")]
        value: Option<String>,
        /// Value as hex, for `bytes` columns.
        #[arg(long)]
        value_hex: Option<String>,
        /// Owner's public key (a private key is reduced to its public half).
        #[arg(long)]
        key_id: Option<String>,
    },
    /// Changes one value, rewrites the entries file and the signed root.
    Update {
        #[command(flatten)]
        owner: Owner,
        #[arg(long)]
        key: u64,
        #[arg(long)]
        value: String,
        #[arg(long)]
        out_root: PathBuf,
    },
}

fn value_bytes(v: &Value) -> Vec<u8> {
    match v {
        Value::Bytes(b) => b.clone(),
        other => other.render().into_bytes(),
    }
}

fn load_entries(path: &Path) -> Result<Table> {
    let mut t = read_table(path)?;
    if t.schema.len() != 1 {
        return Err(usage(format!("{}: expected exactly one value column", path.display())));
    }
    t.records.sort_by_key(|r| r.id);
    Ok(t)
}

fn pairs(t: &Table) -> Vec<(u64, Vec<u8>)> {
    t.records.iter().map(|r| (r.id, value_bytes(&r.values[0]))).collect()
}

fn owner_key(ctx: &Ctx, explicit: Option<&str>) -> Result<KeyMaterial> {
    ctx.key(ctx.key_id(explicit, ctx.config.authentication.key.as_deref(), "authentication")?)
}

fn position(t: &Table, key: u64) -> Result<usize> {
    t.records.binary_search_by_key(&key, |r| r.id).map_err(|_| anyhow!("no entry with id {key}"))
}

fn write_root(path: &Path, tree: &MerkleTree) -> Result<()> {
    let root = tree.signed_root();
    let mut r = Report::new();
    r.field("root", hex::encode(&root.root))
        .field("signature", hex::encode(&root.signature))
        .field("entries", tree.len())
        .field("height", tree.height());
    write_file(path, r.render(Format::Kv))
}

fn summary(tree: &MerkleTree) -> Report {
    let mut r = Report::new();
    r.field("entries", tree.len()).field("height", tree.height()).field("root", hex::encode(tree.root()));
    r
}

pub fn run(ctx: &Ctx, cmd: MerkleCmd) -> Result<Outcome> {
    match cmd {
        MerkleCmd::Build { owner, out } => {
            let t = load_entries(&owner.entries)?;
            let tree = merkle_build(ctx.provider, pairs(&t), &owner_key(ctx, owner.key_id.as_deref())?)?;
            write_root(&out, &tree)?;
            ctx.emit(&summary(&tree));
            Ok(Outcome::Ok)
        }
        MerkleCmd::Prove { owner, key, out } => {
            let t = load_entries(&owner.entries)?;
            let tree = merkle_build(ctx.provider, pairs(&t), &owner_key(ctx, owner.key_id.as_deref())?)?;
            let proof = merkle_prove(&tree, position(&t, key)?)?;
            write_file(&out, proof.to_bytes())?;
            ctx.emit(Report::new().field("key", key).field("index", proof.index).field("siblings", proof.siblings.len()));
            Ok(Outcome::Ok)
        }
        MerkleCmd::Verify { proof, root, key, value, value_hex, key_id } => {
            let proof_parsed = MembershipProof::from_bytes(&read_file(&proof)?)?;
            let kv = read_kv_file(&root)?;
            let signed = SignedRoot { root: kv_hex(&kv, "root", &root)?, signature: kv_hex(&kv, "signature", &root)? };
            let value = match (value, value_hex) {
                (Some(v), _) => v.into_bytes(),
                (None, Some(h)) => hex::decode(h.trim()).map_err(|_| usage("--value-hex is not hex"))?,
                (None, None) => unreachable!("clap requires one of --value and --value-hex"),
            };
            let mut pk = owner_key(ctx, key_id.as_deref())?;
            if pk.kind() == KeyKind::SignaturePrivate {
                pk = pk.public_half(ctx.provider).expect("signature keys have a public half");
            }
            let ok = merkle_verify(ctx.provider, &proof_parsed, (key, &value), &signed, &pk);
            ctx.emit(Report::new().field("key", key).field("verified", ok));
            Ok(Outcome::from_ok(ok))
        }
        MerkleCmd::Update { owner, key, value, out_root } => {
            let mut t = load_entries(&owner.entries)?;
            let sk = owner_key(ctx, owner.key_id.as_deref())?;
            let tree = merkle_build(ctx.provider, pairs(&t), &sk)?;
            let i = position(&t, key)?;
            let kind = t.schema.columns()[0].kind;
            let parsed = Value::parse(kind, &value).map_err(|e| usage(format!("--value: {e}")))?;
            let updated = merkle_update(ctx.provider, &tree, i, value_bytes(&parsed), &sk)?;
            t.records[i].values[0] = parsed;
            let changed: usize = tree
                .levels()
                .iter()
                .zip(updated.levels())
                .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
                .sum();
            let file = File::create(&owner.entries).with_context(|| format!("writing {}", owner.entries.display()))?;
            write_table_csv(&t, file)?;
            write_root(&out_root, &updated)?;
            let mut r = summary(&updated);
            r.field("changed_nodes", changed);
            ctx.emit(&r);
            Ok(Outcome::Ok)
        }
    }
}
