//! `security.properties` configuration.
//!
//! The file is UTF-8 `key=value` lines; blank lines and lines starting with
//! `#` are ignored. Keys outside the known namespace produce warnings rather
//! than errors so that plug-ins can carry their own settings in the same file.
//!
//! ```text
//! provider=classic
//! confidentiality.enabled=true
//! confidentiality.mode=cbc
//! confidentiality.key=conf
//! integrity.enabled=true
//! integrity.mode=hmac-lock
//! integrity.key=lock
//! integrity.watermark.gamma=10
//! authentication.enabled=true
//! authentication.mode=hmac
//! authentication.key=auth
//! randomization.mode=off
//! storage.on_failure=error
//! ```

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::keys::KeyStore;
use crate::provider::ProviderKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0} not found")]
    NotFound(PathBuf),
    #[error("reading config: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: &'static str },
    #[error("`{key}` does not accept `{value}` (allowed: {allowed})")]
    InvalidValue {
        key: String,
        value: String,
        allowed: &'static str,
    },
    #[error("{aspect} is enabled but `{aspect}.key` is not set")]
    MissingKeyRef { aspect: &'static str },
    #[error("{aspect} references key `{id}` which is not in the key store")]
    MissingKey { aspect: &'static str, id: String },
}

macro_rules! config_enum {
    ($(#[$meta:meta])* $name:ident { $first:ident => $ftext:literal $(, $variant:ident => $text:literal)* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
        pub enum $name {
            #[default]
            $first,
            $($variant),*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$name::$first, $($name::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $name::$first => $ftext,
                    $($name::$variant => $text),*
                }
            }

            fn parse(key: &str, value: &str) -> Result<Self, ConfigError> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == value)
                    .ok_or_else(|| ConfigError::InvalidValue {
                        key: key.to_string(),
                        value: value.to_string(),
                        allowed: concat!($ftext $(, " ", $text)*),
                    })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

config_enum!(ConfidentialityMode { Cbc => "cbc", None => "none" });
config_enum!(IntegrityMode { HmacLock => "hmac-lock", Watermark => "watermark" });
config_enum!(AuthenticationMode { Hmac => "hmac", Merkle => "merkle" });
config_enum!(RandomizationMode { Off => "off", Static => "static", Dynamic => "dynamic" });
config_enum!(
    /// What a read does with a record that fails verification.
    FailurePolicy { Error => "error", Filter => "filter" }
);

/// Relational watermark parameters other than the secret key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatermarkSettings {
    /// ν: number of markable attributes.
    pub nu: u32,
    /// ξ: least significant bits available per attribute.
    pub xi: u32,
    /// γ: one tuple in γ is marked.
    pub gamma: u64,
    /// α: significance level of the detection test.
    pub alpha: f64,
}

impl Default for WatermarkSettings {
    fn default() -> Self {
        Self {
            nu: 1,
            xi: 1,
            gamma: 10,
            alpha: 0.01,
        }
    }
}

impl WatermarkSettings {
    /// Fraction of tuples marked, `1/γ`.
    pub fn marked_fraction(&self) -> f64 {
        1.0 / self.gamma as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AspectConfig<M> {
    pub enabled: bool,
    pub mode: M,
    pub key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SecurityConfig {
    pub provider: ProviderKind,
    pub confidentiality: AspectConfig<ConfidentialityMode>,
    pub integrity: AspectConfig<IntegrityMode>,
    pub watermark: WatermarkSettings,
    pub authentication: AspectConfig<AuthenticationMode>,
    pub randomization: RandomizationMode,
    pub randomization_key: Option<String>,
    pub on_failure: FailurePolicy,
}

/// A key the parser did not recognise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigWarning {
    pub line: usize,
    pub key: String,
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: unknown key `{}` ignored", self.line, self.key)
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            allowed: "true false",
        }),
    }
}

fn parse_num<T: std::str::FromStr>(
    key: &str,
    value: &str,
    allowed: &'static str,
    ok: impl Fn(&T) -> bool,
) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .ok()
        .filter(|v| ok(v))
        .ok_or_else(|| ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            allowed,
        })
}

impl SecurityConfig {
    /// Every aspect switched on with default modes and the given key ids.
    pub fn all_on(conf_key: &str, lock_key: &str, auth_key: &str) -> Self {
        Self {
            confidentiality: AspectConfig {
                enabled: true,
                mode: ConfidentialityMode::Cbc,
                key: Some(conf_key.into()),
            },
            integrity: AspectConfig {
                enabled: true,
                mode: IntegrityMode::HmacLock,
                key: Some(lock_key.into()),
            },
            authentication: AspectConfig {
                enabled: true,
                mode: AuthenticationMode::Hmac,
                key: Some(auth_key.into()),
            },
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<(Self, Vec<ConfigWarning>), ConfigError> {
        let mut cfg = SecurityConfig::default();
        let mut warnings = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Malformed {
                line,
                reason: "expected key=value",
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Malformed {
                    line,
                    reason: "empty key",
                });
            }
            let key_ref = || (!value.is_empty()).then(|| value.to_string());
            match key {
                "provider" => {
                    cfg.provider =
                        value
                            .parse()
                            .map_err(|v: String| ConfigError::InvalidValue {
                                key: key.into(),
                                value: v,
                                allowed: "classic modern",
                            })?
                }
                "confidentiality.enabled" => cfg.confidentiality.enabled = parse_bool(key, value)?,
                "confidentiality.mode" => {
                    cfg.confidentiality.mode = ConfidentialityMode::parse(key, value)?
                }
                "confidentiality.key" => cfg.confidentiality.key = key_ref(),
                "integrity.enabled" => cfg.integrity.enabled = parse_bool(key, value)?,
                "integrity.mode" => cfg.integrity.mode = IntegrityMode::parse(key, value)?,
                "integrity.key" => cfg.integrity.key = key_ref(),
                "integrity.watermark.nu" => {
                    cfg.watermark.nu = parse_num(key, value, "integer >= 1", |v: &u32| *v >= 1)?
                }
                "integrity.watermark.xi" => {
                    cfg.watermark.xi =
                        parse_num(key, value, "integer in 1..=62", |v: &u32| (1..=62).contains(v))?
                }
                "integrity.watermark.gamma" => {
                    cfg.watermark.gamma =
                        parse_num(key, value, "integer >= 1", |v: &u64| *v >= 1)?
                }
                "integrity.watermark.alpha" => {
                    cfg.watermark.alpha = parse_num(key, value, "number in (0,1)", |v: &f64| {
                        *v > 0.0 && *v < 1.0
                    })?
                }
                "authentication.enabled" => cfg.authentication.enabled = parse_bool(key, value)?,
                "authentication.mode" => {
                    cfg.authentication.mode = AuthenticationMode::parse(key, value)?
                }
                "authentication.key" => cfg.authentication.key = key_ref(),
                "randomization.mode" => cfg.randomization = RandomizationMode::parse(key, value)?,
                "randomization.key" => cfg.randomization_key = key_ref(),
                "storage.on_failure" => cfg.on_failure = FailurePolicy::parse(key, value)?,
                _ => {
                    log::warn!("security.properties line {line}: unknown key `{key}`");
                    warnings.push(ConfigWarning {
                        line,
                        key: key.to_string(),
                    });
                }
            }
        }
        cfg.validate()?;
        Ok((cfg, warnings))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<ConfigWarning>), ConfigError> {
        let path = path.as_ref();
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(ConfigError::NotFound(path.to_path_buf()))
            }
            Err(e) => return Err(e.into()),
        };
        Self::parse(&text)
    }

    /// Structural checks that do not need the key store.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.confidentiality.enabled && self.confidentiality.mode == ConfidentialityMode::None {
            return Err(ConfigError::InvalidValue {
                key: "confidentiality.mode".into(),
                value: "none".into(),
                allowed: "cbc (when confidentiality.enabled=true)",
            });
        }
        for (aspect, enabled, key) in self.key_refs() {
            if enabled && key.is_none() {
                return Err(ConfigError::MissingKeyRef { aspect });
            }
        }
        Ok(())
    }

    /// Checks that every enabled aspect's key exists in `store`.
    pub fn validate_keys(&self, store: &KeyStore) -> Result<(), ConfigError> {
        self.validate()?;
        for (aspect, enabled, key) in self.key_refs() {
            if let (true, Some(id)) = (enabled, key) {
                if !store.contains(id) {
                    return Err(ConfigError::MissingKey {
                        aspect,
                        id: id.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    fn key_refs(&self) -> [(&'static str, bool, Option<&str>); 4] {
        [
            (
                "confidentiality",
                self.confidentiality.enabled,
                self.confidentiality.key.as_deref(),
            ),
            (
                "integrity",
                self.integrity.enabled,
                self.integrity.key.as_deref(),
            ),
            (
                "authentication",
                self.authentication.enabled,
                self.authentication.key.as_deref(),
            ),
            (
                "randomization",
                self.randomization != RandomizationMode::Off,
                self.randomization_key.as_deref(),
            ),
        ]
    }

    /// Renders the config back to properties form. `parse(to_properties(c))`
    /// yields `c`.
    pub fn to_properties(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| out.push_str(&format!("{k}={v}\n"));
        kv("provider", &self.provider.as_str());
        kv("confidentiality.enabled", &self.confidentiality.enabled);
        kv("confidentiality.mode", &self.confidentiality.mode);
        if let Some(k) = &self.confidentiality.key {
            kv("confidentiality.key", k);
        }
        kv("integrity.enabled", &self.integrity.enabled);
        kv("integrity.mode", &self.integrity.mode);
        if let Some(k) = &self.integrity.key {
            kv("integrity.key", k);
        }
        kv("integrity.watermark.nu", &self.watermark.nu);
        kv("integrity.watermark.xi", &self.watermark.xi);
        kv("integrity.watermark.gamma", &self.watermark.gamma);
        kv("integrity.watermark.alpha", &self.watermark.alpha);
        kv("authentication.enabled", &self.authentication.enabled);
        kv("authentication.mode", &self.authentication.mode);
        if let Some(k) = &self.authentication.key {
            kv("authentication.key", k);
        }
        kv("randomization.mode", &self.randomization);
        if let Some(k) = &self.randomization_key {
            kv("randomization.key", k);
        }
        kv("storage.on_failure", &self.on_failure);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_disabled_line_gives_defaults() {
        let (cfg, warnings) = SecurityConfig::parse("confidentiality.enabled=false\n").unwrap();
        assert_eq!(cfg, SecurityConfig::default());
        assert!(!cfg.integrity.enabled && !cfg.authentication.enabled);
        assert_eq!(cfg.randomization, RandomizationMode::Off);
        assert!(warnings.is_empty());
    }

    #[test]
    fn watermark_gamma_sets_marked_fraction() {
        let (cfg, _) =
            SecurityConfig::parse("integrity.mode=watermark\nintegrity.watermark.gamma=10\n")
                .unwrap();
        assert_eq!(cfg.integrity.mode, IntegrityMode::Watermark);
        assert_eq!(cfg.watermark.gamma, 10);
        assert_eq!(cfg.watermark.marked_fraction(), 0.1);
    }

    #[test]
    fn enum_violation_is_rejected() {
        let err = SecurityConfig::parse("authentication.mode=rot13").unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { ref key, .. } if key == "authentication.mode"));
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = SecurityConfig::parse("# c\n\nnot a pair\n").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 3, .. }));
    }

    #[test]
    fn enabled_aspect_without_key_reference() {
        let err = SecurityConfig::parse("integrity.enabled=true").unwrap_err();
        assert!(matches!(err, ConfigError::MissingKeyRef { aspect: "integrity" }));
        let err = SecurityConfig::parse("randomization.mode=static").unwrap_err();
        assert!(matches!(err, ConfigError::MissingKeyRef { aspect: "randomization" }));
    }

    #[test]
    fn unknown_keys_warn() {
        let (_, w) = SecurityConfig::parse("plugin.audio.band=3\n").unwrap();
        assert_eq!(
            w,
            vec![ConfigWarning {
                line: 1,
                key: "plugin.audio.band".into()
            }]
        );
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            SecurityConfig::load("/nonexistent/security.properties"),
            Err(ConfigError::NotFound(_))
        ));
    }

    #[test]
    fn key_store_cross_check() {
        let dir = tempfile::tempdir().unwrap();
        let store = KeyStore::open(dir.path()).unwrap();
        let cfg = SecurityConfig::all_on("c", "i", "a");
        assert!(matches!(
            cfg.validate_keys(&store),
            Err(ConfigError::MissingKey { aspect: "confidentiality", .. })
        ));
    }

    fn arb_config() -> impl Strategy<Value = SecurityConfig> {
        let id = "[a-z]{1,6}";
        (
            any::<[bool; 4]>(),
            (id, id, id, id),
            (1u32..5, 1u32..=62, 1u64..100, 1u32..99),
            (0usize..2, 0usize..2, 0usize..3, 0usize..2),
        )
            .prop_map(|(flags, (k1, k2, k3, k4), (nu, xi, gamma, a), (im, am, rm, fp))| {
                SecurityConfig {
                    provider: if flags[3] { ProviderKind::Modern } else { ProviderKind::Classic },
                    confidentiality: AspectConfig {
                        enabled: flags[0],
                        mode: ConfidentialityMode::Cbc,
                        key: Some(k1),
                    },
                    integrity: AspectConfig {
                        enabled: flags[1],
                        mode: [IntegrityMode::HmacLock, IntegrityMode::Watermark][im],
                        key: Some(k2),
                    },
                    watermark: WatermarkSettings {
                        nu,
                        xi,
                        gamma,
                        alpha: a as f64 / 100.0,
                    },
                    authentication: AspectConfig {
                        enabled: flags[2],
                        mode: [AuthenticationMode::Hmac, AuthenticationMode::Merkle][am],
                        key: Some(k3),
                    },
                    randomization: [
                        RandomizationMode::Off,
                        RandomizationMode::Static,
                        RandomizationMode::Dynamic,
                    ][rm],
                    randomization_key: Some(k4),
                    on_failure: [FailurePolicy::Error, FailurePolicy::Filter][fp],
                }
            })
    }

    proptest! {
        #[test]
        fn serialize_reparse_is_identity(cfg in arb_config()) {
            let (again, warnings) = SecurityConfig::parse(&cfg.to_properties()).unwrap();
            prop_assert!(warnings.is_empty());
            prop_assert_eq!(&again, &cfg);
            prop_assert_eq!(again.to_properties(), cfg.to_properties());
        }
    }
}
