//! The security envelope: a stored record's payload together with whatever
//! protection was applied to it.
//!
//! Binary layout, all integers big-endian:
//!
//! ```text
//! flags   u8     bit 0 confidentiality applied
//!                bit 1 integrity stamp present
//!                bit 2 authentication tag present
//! id      u64
//! payload u32 length, bytes
//! stamp   u64 timestamp, u32 length, mac bytes             (if bit 1)
//! tag     u8 scheme, u32 length, signer id, u32 length, tag (if bit 2)
//! ```
//!
//! An envelope with no payload and no protection encodes to 13 bytes.

use crate::authentication::{AuthScheme, AuthenticationTag};
use crate::codec::{CodecError, Reader, Writer};
use crate::integrity::IntegrityStamp;

const FLAG_CONFIDENTIAL: u8 = 0b001;
const FLAG_STAMP: u8 = 0b010;
const FLAG_TAG: u8 = 0b100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityEnvelope {
    pub record_id: u64,
    /// Plain record bytes, or `iv || ciphertext` when confidentiality was
    /// applied.
    pub payload: Vec<u8>,
    pub confidentiality_applied: bool,
    pub integrity_stamp: Option<IntegrityStamp>,
    pub auth_tag: Option<AuthenticationTag>,
}

impl SecurityEnvelope {
    pub fn plain(record_id: u64, payload: Vec<u8>) -> Self {
        Self {
            record_id,
            payload,
            confidentiality_applied: false,
            integrity_stamp: None,
            auth_tag: None,
        }
    }

    pub fn flags(&self) -> u8 {
        let mut f = 0;
        if self.confidentiality_applied {
            f |= FLAG_CONFIDENTIAL;
        }
        if self.integrity_stamp.is_some() {
            f |= FLAG_STAMP;
        }
        if self.auth_tag.is_some() {
            f |= FLAG_TAG;
        }
        f
    }

    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        self.encode_inner(true)
    }

    /// Encoding with the authentication tag left out: the bytes an
    /// authentication tag is computed over.
    pub fn signed_bytes(&self) -> Result<Vec<u8>, CodecError> {
        self.encode_inner(false)
    }

    fn encode_inner(&self, with_tag: bool) -> Result<Vec<u8>, CodecError> {
        let mut w = Writer::new();
        let mut flags = self.flags();
        if !with_tag {
            flags &= !FLAG_TAG;
        }
        w.u8(flags).u64(self.record_id).bytes(&self.payload)?;
        if let Some(stamp) = &self.integrity_stamp {
            w.u64(stamp.timestamp).bytes(&stamp.mac)?;
        }
        if let (true, Some(tag)) = (with_tag, &self.auth_tag) {
            w.u8(tag.scheme.code())
                .bytes(tag.signer_id.as_bytes())?
                .bytes(&tag.tag)?;
        }
        Ok(w.finish())
    }

    pub fn decode(data: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(data);
        let flags = r.u8()?;
        if flags & !(FLAG_CONFIDENTIAL | FLAG_STAMP | FLAG_TAG) != 0 {
            return Err(CodecError::Invalid("unknown envelope flag bits"));
        }
        let record_id = r.u64()?;
        let payload = r.bytes()?.to_vec();
        let integrity_stamp = if flags & FLAG_STAMP != 0 {
            Some(IntegrityStamp {
                timestamp: r.u64()?,
                mac: r.bytes()?.to_vec(),
            })
        } else {
            None
        };
        let auth_tag = if flags & FLAG_TAG != 0 {
            let scheme = AuthScheme::from_code(r.u8()?)
                .ok_or(CodecError::Invalid("unknown authentication scheme"))?;
            let signer_id = std::str::from_utf8(r.bytes()?)
                .map_err(|_| CodecError::Invalid("signer id is not UTF-8"))?
                .to_string();
            Some(AuthenticationTag {
                scheme,
                tag: r.bytes()?.to_vec(),
                signer_id,
            })
        } else {
            None
        };
        r.finish()?;
        Ok(Self {
            record_id,
            payload,
            confidentiality_applied: flags & FLAG_CONFIDENTIAL != 0,
            integrity_stamp,
            auth_tag,
        })
    }
}
