//! Cipher block chaining over the provider's block cipher.
//!
//! Padding appends `p` bytes of value `p`, with `1 <= p <= B`, so a plaintext
//! that is already block aligned gains a full block of padding.

use super::{require_kind, AlgorithmProvider, CryptoError};
use crate::keys::{KeyKind, KeyMaterial};

fn check_iv(block: usize, iv: &[u8]) -> Result<(), CryptoError> {
    if iv.len() != block {
        return Err(CryptoError::IvLength {
            expected: block,
            got: iv.len(),
        });
    }
    Ok(())
}

/// `C_i = E_k(P_i XOR C_{i-1})` with `C_0 = iv`. The iv is not part of the
/// output.
pub fn cbc_encrypt(
    provider: &dyn AlgorithmProvider,
    key: &KeyMaterial,
    iv: &[u8],
    plaintext: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    require_kind(key, KeyKind::Cipher)?;
    let b = provider.block_size();
    check_iv(b, iv)?;

    let pad = b - plaintext.len() % b;
    let mut out = Vec::with_capacity(plaintext.len() + pad);
    out.extend_from_slice(plaintext);
    out.resize(plaintext.len() + pad, pad as u8);

    let mut prev = iv.to_vec();
    for block in out.chunks_mut(b) {
        for (x, p) in block.iter_mut().zip(&prev) {
            *x ^= p;
        }
        provider.encrypt_block(key.bytes(), block)?;
        prev.copy_from_slice(block);
    }
    Ok(out)
}

/// Inverse of [`cbc_encrypt`], including padding validation.
pub fn cbc_decrypt(
    provider: &dyn AlgorithmProvider,
    key: &KeyMaterial,
    iv: &[u8],
    ciphertext: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    require_kind(key, KeyKind::Cipher)?;
    let b = provider.block_size();
    check_iv(b, iv)?;
    if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(b) {
        return Err(CryptoError::CiphertextLength(ciphertext.len()));
    }

    let mut out = ciphertext.to_vec();
    let mut prev = iv.to_vec();
    for block in out.chunks_mut(b) {
        let saved = block.to_vec();
        provider.decrypt_block(key.bytes(), block)?;
        for (x, p) in block.iter_mut().zip(&prev) {
            *x ^= p;
        }
        prev = saved;
    }

    let pad = *out.last().expect("non-empty") as usize;
    if pad == 0 || pad > b || out[out.len() - pad..].iter().any(|&x| x as usize != pad) {
        return Err(CryptoError::BadPadding);
    }
    out.truncate(out.len() - pad);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::Classic;

    fn key() -> KeyMaterial {
        KeyMaterial::new(&Classic, "c", KeyKind::Cipher, (0u8..16).collect()).unwrap()
    }

    #[test]
    fn aligned_plaintext_gains_full_pad_block() {
        let ct = cbc_encrypt(&Classic, &key(), &[0; 16], &[7; 32]).unwrap();
        assert_eq!(ct.len(), 48);
        assert_eq!(cbc_encrypt(&Classic, &key(), &[0; 16], &[]).unwrap().len(), 16);
    }

    #[test]
    fn rejects_bad_iv_and_lengths() {
        assert!(matches!(
            cbc_encrypt(&Classic, &key(), &[0; 8], b"x"),
            Err(CryptoError::IvLength { expected: 16, got: 8 })
        ));
        assert!(matches!(
            cbc_decrypt(&Classic, &key(), &[0; 16], &[0; 8]),
            Err(CryptoError::CiphertextLength(8))
        ));
        assert!(matches!(
            cbc_decrypt(&Classic, &key(), &[0; 16], &[]),
            Err(CryptoError::CiphertextLength(0))
        ));
    }

    #[test]
    fn aes128_fips197_vector_through_single_block() {
        // FIPS-197 C.1; an all-zero iv makes the first CBC block a raw encryption
        let key = KeyMaterial::new(&Classic, "c", KeyKind::Cipher, (0u8..16).collect()).unwrap();
        let pt: Vec<u8> = (0u8..16).map(|i| i * 0x11).collect();
        let ct = cbc_encrypt(&Classic, &key, &[0; 16], &pt).unwrap();
        assert_eq!(
            &ct[..16],
            &[
                0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4,
                0xc5, 0x5a
            ]
        );
    }
}
