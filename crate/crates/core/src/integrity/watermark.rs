//! Keyed LSB watermarking of integer attributes.
//!
//! For a tuple with primary key `P`, let `h = hashA(K || P)` and
//! `F = hashA(K || h)` read as a big-endian integer. The tuple is marked when
//! `F mod γ == 0`; the marked attribute is `(F / γ) mod ν`, the bit is
//! `(F / γ / ν) mod ξ`, and the bit is set to the parity of `h`.

use num_bigint::BigUint;

use super::threshold::detect_threshold;
use super::IntegrityError;
use crate::config::WatermarkSettings;
use crate::model::{Table, Value, ValueKind};
use crate::provider::{AlgorithmProvider, HashChoice};

#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkParams {
    pub settings: WatermarkSettings,
    pub key: Vec<u8>,
}

impl WatermarkParams {
    pub fn new(settings: WatermarkSettings, key: impl Into<Vec<u8>>) -> Result<Self, IntegrityError> {
        let s = settings;
        if s.nu < 1 || s.xi < 1 || s.xi > 62 || s.gamma < 1 || !(s.alpha > 0.0 && s.alpha < 1.0) {
            return Err(IntegrityError::Params(format!(
                "need nu >= 1, 1 <= xi <= 62, gamma >= 1, 0 < alpha < 1; got {s:?}"
            )));
        }
        Ok(Self {
            settings,
            key: key.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionReport {
    /// ω: tuples selected for marking.
    pub totalcount: u64,
    pub matchcount: u64,
    pub tau: u64,
    pub detected: bool,
}

impl DetectionReport {
    pub fn to_kv(&self) -> String {
        format!(
            "totalcount={}\nmatchcount={}\ntau={}\ndetected={}\n",
            self.totalcount, self.matchcount, self.tau, self.detected
        )
    }
}

/// Where a selected tuple carries its mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkSite {
    pub attribute: usize,
    pub bit: u32,
    pub value: bool,
}

/// The mark site for primary key `id`, or `None` if the tuple is not selected.
pub fn mark_site(provider: &dyn AlgorithmProvider, params: &WatermarkParams, id: u64) -> Option<MarkSite> {
    let s = &params.settings;
    let inner = provider.hash_parts(HashChoice::A, &[&params.key, &id.to_be_bytes()]);
    let outer = provider.hash_parts(HashChoice::A, &[&params.key, &inner]);
    let f = BigUint::from_bytes_be(&outer);
    let gamma = BigUint::from(s.gamma);
    if (&f % &gamma) != BigUint::ZERO {
        return None;
    }
    let q = f / gamma;
    let nu = BigUint::from(s.nu);
    let attribute = small(&(&q % &nu));
    let bit = small(&((q / nu) % BigUint::from(s.xi)));
    let ones: u32 = inner.iter().map(|b| b.count_ones()).sum();
    Some(MarkSite {
        attribute: attribute as usize,
        bit: bit as u32,
        value: ones % 2 == 1,
    })
}

fn small(n: &BigUint) -> u64 {
    n.iter_u64_digits().next().unwrap_or(0)
}

/// Indices of the first ν int columns.
fn markable(table: &Table, nu: u32) -> Result<Vec<usize>, IntegrityError> {
    let ints: Vec<usize> = table
        .schema
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ValueKind::Int)
        .map(|(i, _)| i)
        .collect();
    if ints.is_empty() {
        return Err(IntegrityError::NoMarkableAttributes);
    }
    if nu as usize > ints.len() {
        return Err(IntegrityError::NuTooLarge {
            nu,
            available: ints.len(),
        });
    }
    Ok(ints[..nu as usize].to_vec())
}

fn magnitude_bit(v: i64, bit: u32) -> bool {
    (v.unsigned_abs() >> bit) & 1 == 1
}

fn with_magnitude_bit(id: u64, v: i64, bit: u32, on: bool) -> Result<i64, IntegrityError> {
    let mag = v.unsigned_abs();
    let mag = if on { mag | (1 << bit) } else { mag & !(1 << bit) };
    let mag = i64::try_from(mag).map_err(|_| IntegrityError::Overflow { id })?;
    Ok(if v < 0 { -mag } else { mag })
}

/// Marks the table; returns the marked table and ω.
pub fn wm_insert(
    provider: &dyn AlgorithmProvider,
    table: &Table,
    params: &WatermarkParams,
) -> Result<(Table, u64), IntegrityError> {
    let cols = markable(table, params.settings.nu)?;
    let mut out = table.clone();
    let mut omega = 0;
    for r in &mut out.records {
        if let Some(site) = mark_site(provider, params, r.id) {
            let c = cols[site.attribute];
            let Value::Int(v) = r.values[c] else {
                unreachable!("markable columns are int")
            };
            r.values[c] = Value::Int(with_magnitude_bit(r.id, v, site.bit, site.value)?);
            omega += 1;
        }
    }
    Ok((out, omega))
}

pub fn wm_detect(
    provider: &dyn AlgorithmProvider,
    table: &Table,
    params: &WatermarkParams,
) -> Result<DetectionReport, IntegrityError> {
    let cols = markable(table, params.settings.nu)?;
    let (mut total, mut matched) = (0u64, 0u64);
    for r in &table.records {
        if let Some(site) = mark_site(provider, params, r.id) {
            total += 1;
            if let Value::Int(v) = r.values[cols[site.attribute]] {
                if magnitude_bit(v, site.bit) == site.value {
                    matched += 1;
                }
            }
        }
    }
    let tau = detect_threshold(total, params.settings.alpha);
    Ok(DetectionReport {
        totalcount: total,
        matchcount: matched,
        tau,
        detected: matched >= tau,
    })
}
