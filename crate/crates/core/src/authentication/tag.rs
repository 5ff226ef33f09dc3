//! Per-payload authentication tags: an HMAC, or an owner signature over the
//! payload's hash.

use super::AuthError;
use crate::keys::{KeyKind, KeyMaterial};
use crate::provider::{ct_eq, require_kind, AlgorithmProvider, HashChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthScheme {
    Hmac,
    Signature,
}

impl AuthScheme {
    pub fn code(self) -> u8 {
        match self {
            AuthScheme::Hmac => 1,
            AuthScheme::Signature => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(AuthScheme::Hmac),
            2 => Some(AuthScheme::Signature),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AuthScheme::Hmac => "hmac",
            AuthScheme::Signature => "signature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthenticationTag {
    pub scheme: AuthScheme,
    pub tag: Vec<u8>,
    pub signer_id: String,
}

/// Tags `payload` with an hmac key or a signature-private key.
pub fn auth_tag(
    provider: &dyn AlgorithmProvider,
    payload: &[u8],
    key: &KeyMaterial,
    scheme: AuthScheme,
) -> Result<AuthenticationTag, AuthError> {
    let tag = match scheme {
        AuthScheme::Hmac => {
            require_kind(key, KeyKind::Hmac)?;
            provider.hmac(HashChoice::A, key.bytes(), payload)
        }
        AuthScheme::Signature => {
            require_kind(key, KeyKind::SignaturePrivate)?;
            provider.sign(key.bytes(), &provider.hash(HashChoice::A, payload))?
        }
    };
    Ok(AuthenticationTag {
        scheme,
        tag,
        signer_id: key.id().to_string(),
    })
}

/// Checks a tag with the hmac key, or with either half of the signer's key
/// pair.
pub fn auth_verify(
    provider: &dyn AlgorithmProvider,
    payload: &[u8],
    tag: &AuthenticationTag,
    key: &KeyMaterial,
) -> bool {
    match (tag.scheme, key.kind()) {
        (AuthScheme::Hmac, KeyKind::Hmac) => {
            ct_eq(&provider.hmac(HashChoice::A, key.bytes(), payload), &tag.tag)
        }
        (AuthScheme::Signature, KeyKind::SignaturePublic | KeyKind::SignaturePrivate) => {
            match key.public_half(provider) {
                Some(pk) => provider.verify_signature(
                    pk.bytes(),
                    &provider.hash(HashChoice::A, payload),
                    &tag.tag,
                ),
                None => false,
            }
        }
        _ => false,
    }
}
