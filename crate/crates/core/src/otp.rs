//! Per-session OTP sets.
//!
//! Every login issues `n` fixed-length decimal OTPs. Exactly one of them, the
//! one at the account's registered [`HoneytokenPosition`], is the valid
//! second factor; the rest are decoys whose use is treated as an intrusion
//! signal by the validator.

use std::fmt;
use std::time::Duration;

use rand::{CryptoRng, Rng, RngCore};
use thiserror::Error;

use crate::ids::SessionId;
use crate::time::Millis;

pub const DEFAULT_OTP_COUNT: usize = 3;
pub const DEFAULT_OTP_DIGITS: u32 = 6;
pub const DEFAULT_OTP_TTL: Duration = Duration::from_secs(300);

const MIN_DIGITS: u32 = 4;
// 10^18 still fits a u64 draw.
const MAX_DIGITS: u32 = 18;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OtpError {
    #[error("honeytoken position {position} is outside 1..={n}")]
    InvalidPosition { position: usize, n: usize },
    #[error("invalid otp configuration: {0}")]
    ConfigInvalid(&'static str),
    #[error("otp must be a non-empty string of ascii digits")]
    Malformed,
}

/// A single one-time password: a string of ASCII decimal digits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Otp(String);

impl Otp {
    pub fn new(digits: impl Into<String>) -> Result<Self, OtpError> {
        let s = digits.into();
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(OtpError::Malformed);
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Debug for Otp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Otp(******)")
    }
}

impl fmt::Display for Otp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// 1-based index of the honeytoken within an OTP set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HoneytokenPosition(usize);

impl HoneytokenPosition {
    /// Checks `1 <= position <= n`.
    pub fn new(position: usize, n: usize) -> Result<Self, OtpError> {
        if position == 0 || position > n {
            return Err(OtpError::InvalidPosition { position, n });
        }
        Ok(Self(position))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for HoneytokenPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtpConfig {
    pub n: usize,
    pub otp_digits: u32,
    pub ttl: Duration,
}

impl Default for OtpConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_OTP_COUNT,
            otp_digits: DEFAULT_OTP_DIGITS,
            ttl: DEFAULT_OTP_TTL,
        }
    }
}

impl OtpConfig {
    pub fn validate(&self) -> Result<(), OtpError> {
        if self.n == 0 {
            return Err(OtpError::ConfigInvalid("n must be at least 1"));
        }
        if !(MIN_DIGITS..=MAX_DIGITS).contains(&self.otp_digits) {
            return Err(OtpError::ConfigInvalid("otp_digits must be within 4..=18"));
        }
        if self.ttl.is_zero() {
            return Err(OtpError::ConfigInvalid("ttl must be positive"));
        }
        if self.n as u128 > self.space() as u128 {
            return Err(OtpError::ConfigInvalid(
                "n exceeds the number of distinct otp values",
            ));
        }
        Ok(())
    }

    fn space(&self) -> u64 {
        10u64.pow(self.otp_digits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtpSet {
    pub session_id: SessionId,
    pub otps: Vec<Otp>,
    pub honeytoken_index: HoneytokenPosition,
    pub issued_at: Millis,
    pub ttl: Duration,
}

impl OtpSet {
    pub fn honeytoken(&self) -> &Otp {
        &self.otps[self.honeytoken_index.get() - 1]
    }

    pub fn decoys(&self) -> impl Iterator<Item = &Otp> {
        let skip = self.honeytoken_index.get() - 1;
        self.otps
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != skip)
            .map(|(_, otp)| otp)
    }

    pub fn expires_at(&self) -> Millis {
        self.issued_at.saturating_add(self.ttl)
    }

    /// Strictly after `issued_at + ttl`; the boundary instant itself is live.
    pub fn is_expired(&self, now: Millis) -> bool {
        is_expired(self.issued_at, self.ttl, now)
    }
}

pub fn is_expired(issued_at: Millis, ttl: Duration, now: Millis) -> bool {
    now > issued_at.saturating_add(ttl)
}

/// Draws `config.n` pairwise-distinct OTPs uniformly from `rng`.
pub fn generate_otp_set<R: RngCore + CryptoRng>(
    config: &OtpConfig,
    honeytoken_position: usize,
    session_id: SessionId,
    issued_at: Millis,
    rng: &mut R,
) -> Result<OtpSet, OtpError> {
    config.validate()?;
    let position = HoneytokenPosition::new(honeytoken_position, config.n)?;
    let space = config.space();
    let width = config.otp_digits as usize;

    let mut drawn: Vec<u64> = Vec::with_capacity(config.n);
    while drawn.len() < config.n {
        let candidate = rng.gen_range(0..space);
        if !drawn.contains(&candidate) {
            drawn.push(candidate);
        }
    }

    let otps = drawn
        .into_iter()
        .map(|v| Otp(format!("{v:0width$}")))
        .collect();

    Ok(OtpSet {
        session_id,
        otps,
        honeytoken_index: position,
        issued_at,
        ttl: config.ttl,
    })
}
