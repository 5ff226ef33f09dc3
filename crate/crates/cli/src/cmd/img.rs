use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand, ValueEnum};
use dsf_core::integrity::{read_pgm, GrayImage, wong_embed, wong_verify, write_pgm, Bitmap, ImageBlockWatermark, WongMode};

use crate::context::{usage, Ctx, Outcome};
use crate::output::Report;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Cipher,
    Hmac,
}

#[derive(Debug, Args)]
pub struct MarkArgs {
    /// Binary PGM image.
    #[arg(long)]
    input: PathBuf,
    /// PGM logo; pixels darker than mid-grey are set. Tiled when smaller
    /// than the image.
    #[arg(long)]
    logo: PathBuf,
    /// Block size as ROWSxCOLS. Must hold exactly one cipher block (cipher)
    /// or one hash output (hmac) of bits.
    #[arg(long, default_value = "8x16")]
    block: String,
    #[arg(long, value_enum, default_value_t = Mode::Cipher)]
    mode: Mode,
    /// A cipher or hmac key matching the mode.
    #[arg(long)]
    key_id: String,
}

#[derive(Debug, Subcommand)]
pub enum ImgCmd {
    /// Writes block signatures into the least significant bits.
    Embed {
        #[command(flatten)]
        mark: MarkArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lists the blocks whose signature no longer matches.
    Verify {
        #[command(flatten)]
        mark: MarkArgs,
    },
}

fn parse_block(s: &str) -> Result<(usize, usize)> {
    let bad = || usage(format!("--block `{s}` is not ROWSxCOLS"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn load(ctx: &Ctx, a: &MarkArgs) -> Result<(GrayImage, ImageBlockWatermark)> {
    let img = read_pgm(&a.input)?;
    let (block_rows, block_cols) = parse_block(&a.block)?;
    let logo = Bitmap::from_gray(&read_pgm(&a.logo)?).tiled(img.height() as usize, img.width() as usize);
    let mode = match a.mode {
        Mode::Cipher => WongMode::Cipher,
        Mode::Hmac => WongMode::Hmac,
    };
    let wm = ImageBlockWatermark { block_rows, block_cols, mode, key: ctx.key(&a.key_id)?, logo };
    Ok((img, wm))
}

pub fn run(ctx: &Ctx, cmd: ImgCmd) -> Result<Outcome> {
    match cmd {
        ImgCmd::Embed { mark, out } => {
            let (img, wm) = load(ctx, &mark)?;
            let marked = wong_embed(ctx.provider, &img, &wm)?;
            write_pgm(&out, &marked)?;
            ctx.emit(
                Report::new()
                    .field("width", img.width())
                    .field("height", img.height())
                    .field("blocks", (img.height() as usize / wm.block_rows) * (img.width() as usize / wm.block_cols)),
            );
            Ok(Outcome::Ok)
        }
        ImgCmd::Verify { mark } => {
            let (img, wm) = load(ctx, &mark)?;
            let report = wong_verify(ctx.provider, &img, &wm)?;
            let bad: Vec<String> = report.tampered_blocks().iter().map(|(r, c)| format!("{r}:{c}")).collect();
            ctx.emit(
                Report::new()
                    .field("blocks", report.tampered.len())
                    .field("tampered", bad.len())
                    .field("tampered_blocks", bad.join(",")),
            );
            Ok(Outcome::from_ok(report.all_ok()))
        }
    }
}
