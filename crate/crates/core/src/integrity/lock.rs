//! Integrity-lock stamps: a keyed MAC over a record's bytes, a timestamp and
//! the record id, checked by the trusted front end on every read.

use crate::keys::KeyMaterial;
use crate::model::Record;
use crate::provider::{ct_eq, hmac_tag, AlgorithmProvider, CryptoError, HashChoice};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityStamp {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub mac: Vec<u8>,
}

/// Source of stamp timestamps.
pub trait Clock {
    fn now(&self) -> u64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now(&self) -> u64 {
        self.0
    }
}

fn mac_input(bytes: &[u8], timestamp: u64, record_id: u64) -> Vec<u8> {
    let mut m = Vec::with_capacity(bytes.len() + 16);
    m.extend_from_slice(bytes);
    m.extend_from_slice(&timestamp.to_be_bytes());
    m.extend_from_slice(&record_id.to_be_bytes());
    m
}

/// Stamps arbitrary bytes belonging to `record_id`.
pub fn stamp_bytes(
    provider: &dyn AlgorithmProvider,
    bytes: &[u8],
    record_id: u64,
    key: &KeyMaterial,
    clock: &dyn Clock,
) -> Result<IntegrityStamp, CryptoError> {
    let timestamp = clock.now();
    let mac = hmac_tag(provider, key, &mac_input(bytes, timestamp, record_id), HashChoice::A)?;
    Ok(IntegrityStamp { timestamp, mac })
}

pub fn verify_stamp_bytes(
    provider: &dyn AlgorithmProvider,
    bytes: &[u8],
    record_id: u64,
    stamp: &IntegrityStamp,
    key: &KeyMaterial,
) -> bool {
    match hmac_tag(provider, key, &mac_input(bytes, stamp.timestamp, record_id), HashChoice::A) {
        Ok(mac) => ct_eq(&mac, &stamp.mac),
        Err(_) => false,
    }
}

/// Stamps the canonical encoding of `record`.
pub fn stamp(
    provider: &dyn AlgorithmProvider,
    record: &Record,
    key: &KeyMaterial,
    clock: &dyn Clock,
) -> Result<IntegrityStamp, CryptoError> {
    stamp_bytes(provider, &record.to_bytes(), record.id, key, clock)
}

pub fn verify_stamp(
    provider: &dyn AlgorithmProvider,
    record: &Record,
    stamp: &IntegrityStamp,
    key: &KeyMaterial,
) -> bool {
    verify_stamp_bytes(provider, &record.to_bytes(), record.id, stamp, key)
}
