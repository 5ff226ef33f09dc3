//! The secure record store.
//!
//! Each table lives in three files inside the store directory:
//! `<table>.schema` (one `name:kind` line per column), `<table>.env`
//! (a log of u32-length-prefixed envelopes) and `<table>.idx` (16-byte
//! `id, offset` pairs; the last entry for an id wins). An envelope is
//! appended before its index entry, so readers never see a partial write.
//!
//! Write path: serialize, encrypt (random IV kept in front of the
//! ciphertext), stamp the payload, tag the envelope. The read path checks in
//! the opposite order, so a forged origin is refused before any decryption.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::RngCore;

use super::csv::{read_table_csv, write_table_csv};
use super::{ErrorClass, StoreError};
use crate::authentication::{auth_tag, auth_verify, AuthScheme};
use crate::config::{AuthenticationMode, FailurePolicy, IntegrityMode, SecurityConfig};
use crate::envelope::SecurityEnvelope;
use crate::integrity::{stamp_bytes, verify_stamp_bytes, Clock, SystemClock};
use crate::keys::{valid_id, KeyKind, KeyMaterial, KeyStore};
use crate::model::{Column, Record, Schema, Table, ValueKind};
use crate::provider::{cbc_decrypt, cbc_encrypt, entropy_rng, AlgorithmProvider, Rng};

struct Keys {
    cipher: Option<KeyMaterial>,
    lock: Option<KeyMaterial>,
    /// Hmac key, or the signer's private key.
    auth: Option<KeyMaterial>,
}

pub struct SecureStore {
    dir: PathBuf,
    config: SecurityConfig,
    provider: &'static dyn AlgorithmProvider,
    keys: Keys,
    clock: Box<dyn Clock + Send + Sync>,
    rng: Mutex<Rng>,
    index: Mutex<HashMap<String, BTreeMap<u64, u64>>>,
}

/// Result of a policy-governed scan.
#[derive(Debug, Default)]
pub struct Selection {
    pub records: Vec<Record>,
    /// Records dropped under the `filter` policy.
    pub filtered: Vec<(u64, ErrorClass)>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn load_key(
    keystore: &KeyStore,
    provider: &dyn AlgorithmProvider,
    id: Option<&str>,
    aspect: &'static str,
    kind: KeyKind,
) -> Result<KeyMaterial, StoreError> {
    let id = id.ok_or(StoreError::Config(crate::config::ConfigError::MissingKeyRef { aspect }))?;
    let key = keystore.get(provider, id)?;
    if key.kind() != kind {
        return Err(StoreError::KeyKind {
            aspect,
            expected: kind,
            got: key.kind(),
        });
    }
    Ok(key)
}

impl SecureStore {
    /// Opens (creating if needed) a store directory under `config`, loading
    /// every enabled aspect's key from `keystore`.
    pub fn open(dir: impl AsRef<Path>, config: SecurityConfig, keystore: &KeyStore) -> Result<Self, StoreError> {
        config.validate_keys(keystore)?;
        if config.integrity.enabled && config.integrity.mode == IntegrityMode::Watermark {
            return Err(StoreError::UnsupportedMode(
                "integrity.mode=watermark marks whole tables; use `wm insert` instead of the record store",
            ));
        }
        let provider = config.provider.provider();
        let keys = Keys {
            cipher: config
                .confidentiality
                .enabled
                .then(|| load_key(keystore, provider, config.confidentiality.key.as_deref(), "confidentiality", KeyKind::Cipher))
                .transpose()?,
            lock: config
                .integrity
                .enabled
                .then(|| load_key(keystore, provider, config.integrity.key.as_deref(), "integrity", KeyKind::Hmac))
                .transpose()?,
            auth: config
                .authentication
                .enabled
                .then(|| {
                    let kind = match config.authentication.mode {
                        AuthenticationMode::Hmac => KeyKind::Hmac,
                        AuthenticationMode::Merkle => KeyKind::SignaturePrivate,
                    };
                    load_key(keystore, provider, config.authentication.key.as_deref(), "authentication", kind)
                })
                .transpose()?,
        };
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            config,
            provider,
            keys,
            clock: Box::new(SystemClock),
            rng: Mutex::new(entropy_rng()),
            index: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_clock(mut self, clock: impl Clock + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    /// Replaces the IV source, for reproducible runs.
    pub fn with_rng(mut self, rng: Rng) -> Self {
        self.rng = Mutex::new(rng);
        self
    }

    pub fn config(&self) -> &SecurityConfig {
        &self.config
    }

    pub fn provider(&self) -> &'static dyn AlgorithmProvider {
        self.provider
    }

    fn path(&self, table: &str, ext: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(table) {
            return Err(StoreError::InvalidTableName(table.to_string()));
        }
        Ok(self.dir.join(format!("{table}.{ext}")))
    }

    pub fn create_table(&self, table: &str, schema: &Schema) -> Result<(), StoreError> {
        let path = self.path(table, "schema")?;
        if path.exists() {
            return Err(StoreError::TableExists(table.to_string()));
        }
        let text: String = schema
            .columns()
            .iter()
            .map(|c| format!("{}:{}\n", c.name, c.kind))
            .collect();
        fs::write(&path, text).map_err(io_err(&path))?;
        for ext in ["env", "idx"] {
            let p = self.path(table, ext)?;
            File::create(&p).map_err(io_err(&p))?;
        }
        Ok(())
    }

    pub fn has_table(&self, table: &str) -> bool {
        self.path(table, "schema").map(|p| p.exists()).unwrap_or(false)
    }

    pub fn schema(&self, table: &str) -> Result<Schema, StoreError> {
        let path = self.path(table, "schema")?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::UnknownTable(table.to_string()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let mut cols = Vec::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (name, kind) = line
                .rsplit_once(':')
                .ok_or_else(|| StoreError::CorruptTable(table.to_string()))?;
            cols.push(Column::new(name, kind.parse::<ValueKind>()?));
        }
        Ok(Schema::new(cols)?)
    }

    fn with_index<T>(&self, table: &str, f: impl FnOnce(&mut BTreeMap<u64, u64>) -> T) -> Result<T, StoreError> {
        let mut all = self.index.lock().expect("index lock");
        if !all.contains_key(table) {
            if !self.has_table(table) {
                return Err(StoreError::UnknownTable(table.to_string()));
            }
            let path = self.path(table, "idx")?;
            let raw = fs::read(&path).map_err(io_err(&path))?;
            if raw.len() % 16 != 0 {
                return Err(StoreError::CorruptTable(table.to_string()));
            }
            let map = raw
                .chunks(16)
                .map(|c| {
                    let id = u64::from_be_bytes(c[..8].try_into().expect("8 bytes"));
                    let off = u64::from_be_bytes(c[8..].try_into().expect("8 bytes"));
                    (id, off)
                })
                .collect();
            all.insert(table.to_string(), map);
        }
        Ok(f(all.get_mut(table).expect("just loaded")))
    }

    pub fn ids(&self, table: &str) -> Result<Vec<u64>, StoreError> {
        self.with_index(table, |m| m.keys().copied().collect())
    }

    /// Appends an envelope as-is, bypassing the pipeline.
    pub fn write_envelope(&self, table: &str, env: &SecurityEnvelope) -> Result<(), StoreError> {
        let bytes = env.encode().map_err(|e| StoreError::Envelope { id: env.record_id, source: e })?;
        let env_path = self.path(table, "env")?;
        let idx_path = self.path(table, "idx")?;
        self.with_index(table, |_| ())?;
        let mut f = OpenOptions::new().append(true).open(&env_path).map_err(io_err(&env_path))?;
        let offset = f.seek(SeekFrom::End(0)).map_err(io_err(&env_path))?;
        let mut framed = (bytes.len() as u32).to_be_bytes().to_vec();
        framed.extend_from_slice(&bytes);
        f.write_all(&framed).and_then(|_| f.sync_data()).map_err(io_err(&env_path))?;

        let mut entry = env.record_id.to_be_bytes().to_vec();
        entry.extend_from_slice(&offset.to_be_bytes());
        let mut ix = OpenOptions::new().append(true).open(&idx_path).map_err(io_err(&idx_path))?;
        ix.write_all(&entry).map_err(io_err(&idx_path))?;
        self.with_index(table, |m| m.insert(env.record_id, offset))?;
        Ok(())
    }

    /// The stored envelope for `id`, undecoded by the pipeline.
    pub fn read_envelope(&self, table: &str, id: u64) -> Result<SecurityEnvelope, StoreError> {
        let offset = self
            .with_index(table, |m| m.get(&id).copied())?
            .ok_or_else(|| StoreError::NotFound { table: table.to_string(), id })?;
        let path = self.path(table, "env")?;
        let mut f = File::open(&path).map_err(io_err(&path))?;
        f.seek(SeekFrom::Start(offset)).map_err(io_err(&path))?;
        let mut len = [0u8; 4];
        f.read_exact(&mut len).map_err(io_err(&path))?;
        let mut buf = vec![0u8; u32::from_be_bytes(len) as usize];
        f.read_exact(&mut buf).map_err(io_err(&path))?;
        let env = SecurityEnvelope::decode(&buf).map_err(|e| StoreError::Envelope { id, source: e })?;
        if env.record_id != id {
            return Err(StoreError::ConfigMismatch {
                id,
                reason: "envelope id differs from index",
            });
        }
        Ok(env)
    }

    /// Runs the write pipeline without persisting.
    pub fn seal(&self, record: &Record) -> Result<SecurityEnvelope, StoreError> {
        let p = self.provider;
        let mut env = SecurityEnvelope::plain(record.id, record.to_bytes());
        if let Some(k) = &self.keys.cipher {
            let mut iv = vec![0u8; p.block_size()];
            self.rng.lock().expect("rng lock").fill_bytes(&mut iv);
            let ct = cbc_encrypt(p, k, &iv, &env.payload)?;
            iv.extend(ct);
            env.payload = iv;
            env.confidentiality_applied = true;
        }
        if let Some(k) = &self.keys.lock {
            env.integrity_stamp = Some(stamp_bytes(p, &env.payload, record.id, k, self.clock.as_ref())?);
        }
        if let Some(k) = &self.keys.auth {
            let scheme = match self.config.authentication.mode {
                AuthenticationMode::Hmac => AuthScheme::Hmac,
                AuthenticationMode::Merkle => AuthScheme::Signature,
            };
            let signed = env.signed_bytes().map_err(|e| StoreError::Envelope { id: record.id, source: e })?;
            env.auth_tag = Some(auth_tag(p, &signed, k, scheme)?);
        }
        Ok(env)
    }

    /// Runs the read pipeline on an envelope.
    pub fn open_envelope(&self, env: &SecurityEnvelope, schema: &Schema) -> Result<Record, StoreError> {
        let p = self.provider;
        let id = env.record_id;
        let mismatch = |reason| StoreError::ConfigMismatch { id, reason };
        if env.confidentiality_applied != self.keys.cipher.is_some() {
            return Err(mismatch("confidentiality flag disagrees with configuration"));
        }
        if env.integrity_stamp.is_some() != self.keys.lock.is_some() {
            return Err(mismatch("integrity stamp presence disagrees with configuration"));
        }
        if env.auth_tag.is_some() != self.keys.auth.is_some() {
            return Err(mismatch("authentication tag presence disagrees with configuration"));
        }

        if let (Some(k), Some(tag)) = (&self.keys.auth, &env.auth_tag) {
            let expected = match self.config.authentication.mode {
                AuthenticationMode::Hmac => AuthScheme::Hmac,
                AuthenticationMode::Merkle => AuthScheme::Signature,
            };
            if tag.scheme != expected {
                return Err(mismatch("authentication scheme disagrees with configuration"));
            }
            let signed = env.signed_bytes().map_err(|e| StoreError::Envelope { id, source: e })?;
            if !auth_verify(p, &signed, tag, k) {
                return Err(StoreError::Authentication { id });
            }
        }
        if let (Some(k), Some(stamp)) = (&self.keys.lock, &env.integrity_stamp) {
            if !verify_stamp_bytes(p, &env.payload, id, stamp, k) {
                return Err(StoreError::Integrity { id });
            }
        }
        let plain = match &self.keys.cipher {
            Some(k) => {
                let b = p.block_size();
                if env.payload.len() < 2 * b {
                    return Err(StoreError::Confidentiality { id });
                }
                let (iv, ct) = env.payload.split_at(b);
                cbc_decrypt(p, k, iv, ct).map_err(|_| StoreError::Confidentiality { id })?
            }
            None => env.payload.clone(),
        };
        let record = Record::from_bytes(&plain).map_err(|e| {
            if env.confidentiality_applied {
                StoreError::Confidentiality { id }
            } else {
                StoreError::Corrupt { id, source: e }
            }
        })?;
        if record.id != id {
            return Err(if env.confidentiality_applied {
                StoreError::Confidentiality { id }
            } else {
                mismatch("record id differs from envelope id")
            });
        }
        schema
            .check(&record)
            .map_err(|e| StoreError::Corrupt { id, source: e })?;
        Ok(record)
    }

    /// Stores `record`, replacing any earlier record with the same id.
    pub fn put(&mut self, table: &str, record: &Record) -> Result<u64, StoreError> {
        let schema = self.schema(table)?;
        schema.check(record)?;
        let env = self.seal(record)?;
        self.write_envelope(table, &env)?;
        Ok(record.id)
    }

    /// Reads one record. Verification failures are always errors here; the
    /// `filter` policy applies to [`SecureStore::select`].
    pub fn get(&self, table: &str, id: u64) -> Result<Record, StoreError> {
        let schema = self.schema(table)?;
        let env = self.read_envelope(table, id)?;
        self.open_envelope(&env, &schema)
    }

    /// Reads every record in id order. Under `storage.on_failure=filter`
    /// records that fail verification are left out and listed; under
    /// `error` the first failure is returned.
    pub fn select(&self, table: &str) -> Result<Selection, StoreError> {
        let schema = self.schema(table)?;
        let mut sel = Selection::default();
        for id in self.ids(table)? {
            let res = self
                .read_envelope(table, id)
                .and_then(|env| self.open_envelope(&env, &schema));
            match (res, self.config.on_failure) {
                (Ok(r), _) => sel.records.push(r),
                (Err(e), FailurePolicy::Filter) if e.class().is_verification() => {
                    log::warn!("filtered record {id} of `{table}`: {e}");
                    sel.filtered.push((id, e.class()));
                }
                (Err(e), _) => return Err(e),
            }
        }
        Ok(sel)
    }

    /// Loads a CSV file into `table`, creating it from the header if needed.
    pub fn ingest_csv(&mut self, table: &str, reader: impl Read) -> Result<usize, StoreError> {
        let t = read_table_csv(table, reader)?;
        if self.has_table(table) {
            if self.schema(table)? != t.schema {
                return Err(StoreError::SchemaMismatch(table.to_string()));
            }
        } else {
            self.create_table(table, &t.schema)?;
        }
        for r in &t.records {
            self.put(table, r)?;
        }
        Ok(t.len())
    }

    pub fn table(&self, table: &str) -> Result<Table, StoreError> {
        let schema = self.schema(table)?;
        let sel = self.select(table)?;
        Ok(Table::with_records(table, schema, sel.records)?)
    }

    pub fn export_csv(&self, table: &str, writer: impl Write) -> Result<usize, StoreError> {
        let t = self.table(table)?;
        write_table_csv(&t, writer)?;
        Ok(t.len())
    }

    /// Re-writes every record of `table` into `dest`, which may use a
    /// different configuration.
    pub fn migrate_table(&self, table: &str, dest: &mut SecureStore) -> Result<usize, StoreError> {
        let t = self.table(table)?;
        if !dest.has_table(table) {
            dest.create_table(table, &t.schema)?;
        }
        for r in &t.records {
            dest.put(table, r)?;
        }
        Ok(t.len())
    }
}
