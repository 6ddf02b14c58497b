//! `key = value` service configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Every key is optional; defaults are listed in [`ServiceConfig::default`].

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::otp::{OtpConfig, DEFAULT_OTP_COUNT, DEFAULT_OTP_DIGITS, DEFAULT_OTP_TTL};
use crate::validator::DEFAULT_MAX_MISTYPES;
use crate::vault::{KdfParams, AEAD_ALGORITHM, DIGEST_ALGORITHM};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MailChannelKind {
    Mock,
    Smtp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub n_otps: usize,
    pub otp_digits: u32,
    pub otp_ttl_seconds: u64,
    pub max_mistypes: u32,
    pub demo_mode: bool,
    pub chain_path: PathBuf,
    pub store_path: PathBuf,
    pub bind_address: String,
    pub kdf: KdfParams,
    pub digest_algorithm: String,
    pub aead_algorithm: String,
    pub mail_channel: MailChannelKind,
    pub smtp_relay: Option<String>,
    pub smtp_from: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            n_otps: DEFAULT_OTP_COUNT,
            otp_digits: DEFAULT_OTP_DIGITS,
            otp_ttl_seconds: DEFAULT_OTP_TTL.as_secs(),
            max_mistypes: DEFAULT_MAX_MISTYPES,
            demo_mode: true,
            chain_path: PathBuf::from("chain.dat"),
            store_path: PathBuf::from("accounts.db"),
            bind_address: "127.0.0.1:8080".into(),
            kdf: KdfParams::default(),
            digest_algorithm: DIGEST_ALGORITHM.into(),
            aead_algorithm: AEAD_ALGORITHM.into(),
            mail_channel: MailChannelKind::Mock,
            smtp_relay: None,
            smtp_from: None,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.into(),
        reason: e.to_string(),
    })
}

impl ServiceConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_otps" => c.n_otps = parse_value(line, key, value)?,
                "otp_digits" => c.otp_digits = parse_value(line, key, value)?,
                "otp_ttl_seconds" => c.otp_ttl_seconds = parse_value(line, key, value)?,
                "max_mistypes" => c.max_mistypes = parse_value(line, key, value)?,
                "demo_mode" => c.demo_mode = parse_value(line, key, value)?,
                "chain_path" => c.chain_path = PathBuf::from(value),
                "store_path" => c.store_path = PathBuf::from(value),
                "bind_address" => c.bind_address = value.to_string(),
                "kdf_memory_kib" => c.kdf.memory_kib = parse_value(line, key, value)?,
                "kdf_iterations" => c.kdf.iterations = parse_value(line, key, value)?,
                "kdf_parallelism" => c.kdf.parallelism = parse_value(line, key, value)?,
                "digest_algorithm" => c.digest_algorithm = value.to_ascii_lowercase(),
                "aead_algorithm" => c.aead_algorithm = value.to_ascii_lowercase(),
                "mail_channel" => {
                    c.mail_channel = match value {
                        "mock" => MailChannelKind::Mock,
                        "smtp" => MailChannelKind::Smtp,
                        other => {
                            return Err(ConfigError::BadValue {
                                line,
                                key: key.into(),
                                reason: format!("`{other}` is not mock or smtp"),
                            })
                        }
                    }
                }
                "smtp_relay" => c.smtp_relay = Some(value.to_string()),
                "smtp_from" => c.smtp_from = Some(value.to_string()),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.into(),
                    })
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn otp_config(&self) -> OtpConfig {
        OtpConfig {
            n: self.n_otps,
            otp_digits: self.otp_digits,
            ttl: Duration::from_secs(self.otp_ttl_seconds),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.n_otps < 2 {
            return invalid("n_otps must be at least 2");
        }
        self.otp_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.max_mistypes == 0 {
            return invalid("max_mistypes must be at least 1");
        }
        self.kdf
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.digest_algorithm != DIGEST_ALGORITHM {
            return invalid("digest_algorithm: only sha256 is supported");
        }
        if self.aead_algorithm != AEAD_ALGORITHM {
            return invalid("aead_algorithm: only xchacha20poly1305 is supported");
        }
        if self.mail_channel == MailChannelKind::Smtp {
            if !cfg!(feature = "smtp") {
                return invalid("mail_channel = smtp needs a build with the `smtp` feature");
            }
            if self.smtp_relay.is_none() || self.smtp_from.is_none() {
                return invalid("mail_channel = smtp needs smtp_relay and smtp_from");
            }
        }
        Ok(())
    }
}
