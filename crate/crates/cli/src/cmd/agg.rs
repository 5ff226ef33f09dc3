use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Subcommand;
use dsf_core::authentication::{agg_build, agg_query, agg_verify, AggAnswer, Aggregate, AggregateProof, AuthError, SignedRoot};
use dsf_core::keys::KeyKind;
use dsf_core::model::{Value, ValueKind};

use crate::context::{kv_hex, read_file, read_kv_file, read_table, usage, write_file, Ctx, Outcome};
use crate::output::{Format, Report};

#[derive(Debug, Subcommand)]
pub enum AggCmd {
    /// Answers an aggregate over ids in `[from, to]` and writes its proof.
    Query {
        /// CSV with header `id,value:int`.
        #[arg(long)]
        entries: PathBuf,
        /// Owner's signature-private key; defaults to `authentication.key`.
        #[arg(long)]
        key_id: Option<String>,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        /// sum, count, avg, min or max.
        #[arg(long)]
        agg: Aggregate,
        #[arg(long)]
        proof_out: PathBuf,
        #[arg(long)]
        root_out: PathBuf,
    },
    /// Checks a claimed answer against a proof and signed root.
    Verify {
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long)]
        agg: Aggregate,
        /// The claimed value; `SUM/COUNT` for avg.
        #[arg(long, allow_hyphen_values = true)]
        answer: String,
        /// Owner's public key (a private key is reduced to its public half).
        #[arg(long)]
        key_id: Option<String>,
    },
}

fn load_entries(path: &Path) -> Result<Vec<(u64, i64)>> {
    let t = read_table(path)?;
    if t.schema.len() != 1 || t.schema.columns()[0].kind != ValueKind::Int {
        return Err(usage(format!("{}: expected header `id,value:int`", path.display())));
    }
    let mut out: Vec<(u64, i64)> = t
        .records
        .iter()
        .map(|r| match r.values[0] {
            Value::Int(v) => (r.id, v),
            _ => unreachable!("schema checked above"),
        })
        .collect();
    out.sort_by_key(|e| e.0);
    Ok(out)
}

fn parse_answer(agg: Aggregate, s: &str) -> Result<AggAnswer> {
    let bad = || usage(format!("--answer `{s}` does not fit {agg:?}"));
    let s = s.trim();
    Ok(match agg {
        Aggregate::Sum => AggAnswer::Sum(s.parse().map_err(|_| bad())?),
        Aggregate::Count => AggAnswer::Count(s.parse().map_err(|_| bad())?),
        Aggregate::Min => AggAnswer::Min(s.parse().map_err(|_| bad())?),
        Aggregate::Max => AggAnswer::Max(s.parse().map_err(|_| bad())?),
        Aggregate::Avg => {
            let (sum, count) = s.split_once('/').ok_or_else(bad)?;
            AggAnswer::Avg { sum: sum.trim().parse().map_err(|_| bad())?, count: count.trim().parse().map_err(|_| bad())? }
        }
        Aggregate::Median => return Err(AuthError::UnsupportedAggregate("median").into()),
    })
}

pub fn run(ctx: &Ctx, cmd: AggCmd) -> Result<Outcome> {
    match cmd {
        AggCmd::Query { entries, key_id, from, to, agg, proof_out, root_out } => {
            let sk = ctx.key(ctx.key_id(key_id.as_deref(), ctx.config.authentication.key.as_deref(), "authentication")?)?;
            let tree = agg_build(ctx.provider, load_entries(&entries)?, &sk)?;
            let (answer, proof) = match agg_query(&tree, from, to, agg) {
                Ok(x) => x,
                Err(AuthError::EmptyRange) => {
                    ctx.emit(Report::new().field("range", format!("{from}..={to}")).field("result", "empty"));
                    return Ok(Outcome::Negative);
                }
                Err(e) => return Err(e.into()),
            };
            write_file(&proof_out, proof.to_bytes())?;
            let root = tree.signed_root();
            let mut rf = Report::new();
            rf.field("root", hex::encode(&root.root)).field("signature", hex::encode(&root.signature));
            write_file(&root_out, rf.render(Format::Kv))?;
            ctx.emit(Report::new().extend_kv(&answer.to_kv()).field("proof_items", proof.items.len()));
            Ok(Outcome::Ok)
        }
        AggCmd::Verify { proof, root, from, to, agg, answer, key_id } => {
            let claimed = parse_answer(agg, &answer)?;
            let proof = AggregateProof::from_bytes(&read_file(&proof)?)?;
            let kv = read_kv_file(&root)?;
            let signed = SignedRoot { root: kv_hex(&kv, "root", &root)?, signature: kv_hex(&kv, "signature", &root)? };
            let mut pk = ctx.key(ctx.key_id(key_id.as_deref(), ctx.config.authentication.key.as_deref(), "authentication")?)?;
            if pk.kind() == KeyKind::SignaturePrivate {
                pk = pk.public_half(ctx.provider).expect("signature keys have a public half");
            }
            let ok = agg_verify(ctx.provider, &proof, from, to, &claimed, &signed, &pk);
            ctx.emit(Report::new().field("verified", ok));
            Ok(Outcome::from_ok(ok))
        }
    }
}
