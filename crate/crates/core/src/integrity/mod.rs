//! Integrity aspect: integrity-lock stamps, relational watermarks and the
//! block image watermark.

mod lock;
mod threshold;
mod watermark;
pub mod wong;

use thiserror::Error;

use crate::provider::CryptoError;

pub use lock::{
    stamp, stamp_bytes, verify_stamp, verify_stamp_bytes, Clock, FixedClock, IntegrityStamp,
    SystemClock,
};
pub use threshold::{binomial_half_tail, detect_threshold};
pub use watermark::{mark_site, wm_detect, wm_insert, DetectionReport, MarkSite, WatermarkParams};
pub use image::GrayImage;
pub use wong::{
    decode_pgm, encode_pgm, read_pgm, wong_embed, wong_verify, write_pgm, Bitmap, BlockReport,
    ImageBlockWatermark, WongMode,
};

#[derive(Debug, Error)]
pub enum IntegrityError {
    #[error("table has no int columns to mark")]
    NoMarkableAttributes,
    #[error("nu = {nu} but only {available} int columns are available")]
    NuTooLarge { nu: u32, available: usize },
    #[error("invalid watermark parameters: {0}")]
    Params(String),
    #[error("marking record {id} would overflow a 64-bit integer")]
    Overflow { id: u64 },
    #[error("{0}")]
    Dimension(String),
    #[error("image: {0}")]
    Image(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}
