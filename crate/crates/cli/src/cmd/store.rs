use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Subcommand;
use dsf_core::model::{Column, Record, Schema, Table, Value, ValueKind};
use dsf_core::storage::{write_table_csv, SecureStore};

use crate::context::{comma_list, usage, Ctx, Outcome};
use crate::output::Report;

#[derive(Debug, Subcommand)]
pub enum StoreCmd {
    /// Writes one record.
    Put {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        table: String,
        #[arg(long)]
        id: u64,
        /// One per column.
        #[arg(long = "value", value_name = "COLUMN=TEXT")]
        values: Vec<String>,
        /// Creates the table when missing, e.g. `name:str,salary:int`.
        #[arg(long)]
        schema: Option<String>,
    },
    /// Reads and verifies one record.
    Get {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        table: String,
        #[arg(long)]
        id: u64,
    },
    /// Loads a CSV file whose header is `id,name:kind,...`.
    Ingest {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        table: String,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Writes every record that verifies as CSV.
    Export {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        table: String,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open(ctx: &Ctx, dir: &PathBuf) -> Result<SecureStore> {
    let store = SecureStore::open(dir, ctx.config.clone(), &ctx.keystore()?)?;
    Ok(store.with_rng(ctx.rng()))
}

fn parse_schema(spec: &str) -> Result<Schema> {
    let columns = comma_list(spec)
        .into_iter()
        .map(|c| {
            let (name, kind) = c.split_once(':').unwrap_or((c, "str"));
            let kind: ValueKind = kind.parse().map_err(|_| usage(format!("unknown column kind in `{c}`")))?;
            Ok(Column::new(name, kind))
        })
        .collect::<Result<Vec<_>>>()?;
    Schema::new(columns).map_err(|e| usage(format!("--schema: {e}")))
}

fn record_from_args(schema: &Schema, id: u64, values: &[String]) -> Result<Record> {
    let mut out = Vec::with_capacity(schema.len());
    for col in schema.columns() {
        let text = values
            .iter()
            .filter_map(|v| v.split_once('='))
            .find(|(k, _)| *k == col.name)
            .map(|(_, v)| v)
            .ok_or_else(|| usage(format!("missing --value {}=...", col.name)))?;
        out.push(Value::parse(col.kind, text).map_err(|e| usage(format!("column `{}`: {e}", col.name)))?);
    }
    if values.len() != schema.len() {
        return Err(usage(format!("expected {} --value arguments, got {}", schema.len(), values.len())));
    }
    Ok(Record::new(id, out))
}

pub fn run(ctx: &Ctx, cmd: StoreCmd) -> Result<Outcome> {
    match cmd {
        StoreCmd::Put { dir, table, id, values, schema } => {
            let mut store = open(ctx, &dir)?;
            if !store.has_table(&table) {
                let spec = schema.ok_or_else(|| usage(format!("table `{table}` does not exist; pass --schema")))?;
                store.create_table(&table, &parse_schema(&spec)?)?;
            }
            let record = record_from_args(&store.schema(&table)?, id, &values)?;
            store.put(&table, &record)?;
            ctx.emit(Report::new().field("table", &table).field("id", id));
            Ok(Outcome::Ok)
        }
        StoreCmd::Get { dir, table, id } => {
            let store = open(ctx, &dir)?;
            let schema = store.schema(&table)?;
            let record = store.get(&table, id)?;
            let mut r = Report::new();
            r.field("id", record.id);
            for (col, v) in schema.columns().iter().zip(&record.values) {
                r.field(&col.name, v.render());
            }
            ctx.emit(&r);
            Ok(Outcome::Ok)
        }
        StoreCmd::Ingest { dir, table, csv } => {
            let mut store = open(ctx, &dir)?;
            let file = File::open(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let n = store.ingest_csv(&table, file)?;
            ctx.emit(Report::new().field("table", &table).field("records", n));
            Ok(Outcome::Ok)
        }
        StoreCmd::Export { dir, table, out } => {
            let store = open(ctx, &dir)?;
            let sel = store.select(&table)?;
            let t = Table::with_records(table.as_str(), store.schema(&table)?, sel.records)?;
            match &out {
                Some(path) => write_table_csv(&t, File::create(path).with_context(|| format!("writing {}", path.display()))?)?,
                None => write_table_csv(&t, io::stdout().lock())?,
            }
            let mut r = Report::new();
            r.field("records", t.len()).field("filtered", sel.filtered.len());
            for (id, class) in &sel.filtered {
                r.field("filtered_id", format!("{id}:{}", class.as_str()));
            }
            if out.is_some() {
                ctx.emit(&r);
            } else {
                io::stderr().write_all(r.render(ctx.format).as_bytes())?;
            }
            Ok(Outcome::from_ok(sel.filtered.is_empty()))
        }
    }
}
