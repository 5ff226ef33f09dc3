use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Subcommand;
use dsf_core::integrity::{wm_detect, wm_insert, WatermarkParams};
use dsf_core::storage::write_table_csv;

use crate::context::{read_table, Ctx, Outcome};
use crate::output::Report;

#[derive(Debug, Subcommand)]
pub enum WmCmd {
    /// Marks a table. Parameters come from the `watermark.*` config keys.
    Insert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `integrity.key`.
        #[arg(long)]
        key_id: Option<String>,
    },
    /// Tests a table for the mark.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        key_id: Option<String>,
    },
}

fn params(ctx: &Ctx, key_id: Option<&str>) -> Result<WatermarkParams> {
    let id = ctx.key_id(key_id, ctx.config.integrity.key.as_deref(), "integrity")?;
    let key = ctx.key(id)?;
    Ok(WatermarkParams::new(ctx.config.watermark, key.bytes())?)
}

pub fn run(ctx: &Ctx, cmd: WmCmd) -> Result<Outcome> {
    match cmd {
        WmCmd::Insert { input, out, key_id } => {
            let p = params(ctx, key_id.as_deref())?;
            let (marked, omega) = wm_insert(ctx.provider, &read_table(&input)?, &p)?;
            write_table_csv(&marked, File::create(&out).with_context(|| format!("writing {}", out.display()))?)?;
            ctx.emit(Report::new().field("records", marked.len()).field("omega", omega));
            Ok(Outcome::Ok)
        }
        WmCmd::Detect { input, key_id } => {
            let p = params(ctx, key_id.as_deref())?;
            let report = wm_detect(ctx.provider, &read_table(&input)?, &p)?;
            ctx.emit(Report::new().extend_kv(&report.to_kv()));
            Ok(Outcome::from_ok(report.detected))
        }
    }
}
