//! Fragile block watermark for 8-bit grayscale images.
//!
//! The image is cut into O×P blocks. For each block the least significant bits
//! are cleared, the result is hashed together with the image dimensions, the
//! hash is XORed with the block's slice of a binary logo, and the keyed
//! signature of that value replaces the block's LSB plane. Verification
//! recomputes each block independently, so tampering is localized to blocks.
//!
//! Block position is not hashed: two blocks with equal high bits and equal
//! logo slices may be swapped without detection.

use std::io::Cursor;
use std::path::Path;

use bitvec::prelude::*;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{GrayImage, ImageEncoder, ImageFormat};

use super::IntegrityError;
use crate::keys::{KeyKind, KeyMaterial};
use crate::provider::{ct_eq, require_kind, AlgorithmProvider, HashChoice};

/// How block signatures are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WongMode {
    /// `S = E_k(H xor W)`; verification decrypts and recovers `W`.
    /// Blocks must hold exactly one cipher block of bits.
    #[default]
    Cipher,
    /// `S = HMAC_k(H xor W)`; verification recomputes and compares.
    /// Blocks must hold exactly one hash-A output of bits.
    Hmac,
}

/// A binary logo, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

impl Bitmap {
    /// Dark pixels (below 128) are ones.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            rows: img.height() as usize,
            cols: img.width() as usize,
            bits: img.pixels().map(|p| p.0[0] < 128).collect(),
        }
    }

    /// Repeats this bitmap to cover `rows × cols`.
    pub fn tiled(&self, rows: usize, cols: usize) -> Self {
        let bits = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| self.bits[(r % self.rows) * self.cols + c % self.cols])
            .collect();
        Self { rows, cols, bits }
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }
}

#[derive(Debug, Clone)]
pub struct ImageBlockWatermark {
    /// O: block height in pixels.
    pub block_rows: usize,
    /// P: block width in pixels.
    pub block_cols: usize,
    pub mode: WongMode,
    pub key: KeyMaterial,
    /// W, the same size as the image.
    pub logo: Bitmap,
}

/// Per-block verification result, blocks in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockReport {
    pub blocks_down: usize,
    pub blocks_across: usize,
    pub tampered: Vec<bool>,
}

impl BlockReport {
    pub fn all_ok(&self) -> bool {
        !self.tampered.iter().any(|&t| t)
    }

    /// `(block_row, block_col)` of each failing block.
    pub fn tampered_blocks(&self) -> Vec<(usize, usize)> {
        self.tampered
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| (i / self.blocks_across, i % self.blocks_across))
            .collect()
    }
}

struct Geometry {
    rows: usize,
    cols: usize,
    down: usize,
    across: usize,
    bits: usize,
}

fn geometry(
    provider: &dyn AlgorithmProvider,
    img: &GrayImage,
    wm: &ImageBlockWatermark,
) -> Result<Geometry, IntegrityError> {
    let (rows, cols) = (img.height() as usize, img.width() as usize);
    let (o, p) = (wm.block_rows, wm.block_cols);
    if o == 0 || p == 0 || rows % o != 0 || cols % p != 0 {
        return Err(IntegrityError::Dimension(format!(
            "{rows}x{cols} image is not a whole number of {o}x{p} blocks"
        )));
    }
    if wm.logo.rows != rows || wm.logo.cols != cols {
        return Err(IntegrityError::Dimension(format!(
            "logo is {}x{}, image is {rows}x{cols}",
            wm.logo.rows, wm.logo.cols
        )));
    }
    let (sig_bits, kind) = match wm.mode {
        WongMode::Cipher => (provider.block_size() * 8, KeyKind::Cipher),
        WongMode::Hmac => (provider.hash_len(HashChoice::A) * 8, KeyKind::Hmac),
    };
    if o * p != sig_bits {
        return Err(IntegrityError::Dimension(format!(
            "{o}x{p} blocks hold {} bits, the signature has {sig_bits}",
            o * p
        )));
    }
    require_kind(&wm.key, kind)?;
    Ok(Geometry {
        rows,
        cols,
        down: rows / o,
        across: cols / p,
        bits: sig_bits,
    })
}

fn block_coords(wm: &ImageBlockWatermark, br: usize, bc: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
    let (o, p) = (wm.block_rows, wm.block_cols);
    (0..o).flat_map(move |r| (0..p).map(move |c| ((bc * p + c) as u32, (br * o + r) as u32)))
}

/// `H_r xor W_r` for one block, `g.bits` long.
fn masked_hash(
    provider: &dyn AlgorithmProvider,
    img: &GrayImage,
    wm: &ImageBlockWatermark,
    g: &Geometry,
    br: usize,
    bc: usize,
) -> Vec<u8> {
    let mut h = provider.hasher(HashChoice::A);
    h.update(&(g.rows as u32).to_be_bytes());
    h.update(&(g.cols as u32).to_be_bytes());
    let cleared: Vec<u8> = block_coords(wm, br, bc)
        .map(|(x, y)| img.get_pixel(x, y).0[0] & 0xFE)
        .collect();
    h.update(&cleared);
    let mut out = h.finalize().to_vec();
    out.truncate(g.bits / 8);
    let bits = out.view_bits_mut::<Msb0>();
    for (i, (x, y)) in block_coords(wm, br, bc).enumerate() {
        let w = wm.logo.get(y as usize, x as usize);
        let cur = bits[i];
        bits.set(i, cur ^ w);
    }
    out
}

fn sign_block(provider: &dyn AlgorithmProvider, wm: &ImageBlockWatermark, masked: &[u8]) -> Result<Vec<u8>, IntegrityError> {
    Ok(match wm.mode {
        WongMode::Cipher => {
            let mut block = masked.to_vec();
            provider.encrypt_block(wm.key.bytes(), &mut block)?;
            block
        }
        WongMode::Hmac => provider.hmac(HashChoice::A, wm.key.bytes(), masked),
    })
}

pub fn wong_embed(
    provider: &dyn AlgorithmProvider,
    img: &GrayImage,
    wm: &ImageBlockWatermark,
) -> Result<GrayImage, IntegrityError> {
    let g = geometry(provider, img, wm)?;
    let mut out = img.clone();
    for br in 0..g.down {
        for bc in 0..g.across {
            let sig = sign_block(provider, wm, &masked_hash(provider, img, wm, &g, br, bc))?;
            let sig_bits = sig.view_bits::<Msb0>();
            for (i, (x, y)) in block_coords(wm, br, bc).enumerate() {
                let px = &mut out.get_pixel_mut(x, y).0[0];
                *px = (*px & 0xFE) | sig_bits[i] as u8;
            }
        }
    }
    Ok(out)
}

pub fn wong_verify(
    provider: &dyn AlgorithmProvider,
    img: &GrayImage,
    wm: &ImageBlockWatermark,
) -> Result<BlockReport, IntegrityError> {
    let g = geometry(provider, img, wm)?;
    let mut tampered = Vec::with_capacity(g.down * g.across);
    for br in 0..g.down {
        for bc in 0..g.across {
            let mut found = bitvec![u8, Msb0; 0; g.bits];
            for (i, (x, y)) in block_coords(wm, br, bc).enumerate() {
                found.set(i, img.get_pixel(x, y).0[0] & 1 == 1);
            }
            let found = found.into_vec();
            let expected_masked = masked_hash(provider, img, wm, &g, br, bc);
            let ok = match wm.mode {
                WongMode::Cipher => {
                    // recovered W = D(S) xor H, compared with the logo slice
                    let mut plain = found;
                    provider.decrypt_block(wm.key.bytes(), &mut plain)?;
                    ct_eq(&plain, &expected_masked)
                }
                WongMode::Hmac => ct_eq(&sign_block(provider, wm, &expected_masked)?, &found),
            };
            tampered.push(!ok);
        }
    }
    Ok(BlockReport {
        blocks_down: g.down,
        blocks_across: g.across,
        tampered,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage, IntegrityError> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| IntegrityError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    decode_pgm(&data)
}

pub fn decode_pgm(data: &[u8]) -> Result<GrayImage, IntegrityError> {
    let img = image::load_from_memory_with_format(data, ImageFormat::Pnm)
        .map_err(|e| IntegrityError::Image(e.to_string()))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => Ok(g),
        other => Err(IntegrityError::Image(format!(
            "expected an 8-bit graymap, found {:?}",
            other.color()
        ))),
    }
}

/// Binary (P5) encoding.
pub fn encode_pgm(img: &GrayImage) -> Result<Vec<u8>, IntegrityError> {
    let mut buf = Cursor::new(Vec::new());
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::L8)
        .map_err(|e| IntegrityError::Image(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<(), IntegrityError> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img)?).map_err(|e| IntegrityError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
