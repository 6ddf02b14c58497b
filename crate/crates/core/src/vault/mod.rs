//! Sealing of honeytoken payloads and credential hashing.
//!
//! The vault holds a single server master key, addressed by a [`KeyId`]
//! derived from the key itself. Payloads are sealed with XChaCha20-Poly1305
//! under random 192-bit nonces; the associated data binds the key id and the
//! caller's context (session id and user reference). SHA-256 is the digest
//! for everything else, including the ledger's block hashes.

mod password;
mod payload;

use std::collections::HashMap;
use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{Key, XChaCha20Poly1305, XNonce};
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest as _, Sha256};
use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::codec::{CodecError, Encoder};

pub use password::{hash_password, verify_password, CredentialRecord, KdfParams, MIN_SALT_LEN};
pub use payload::{HoneytokenPayload, SealedHoneytoken};

pub const DIGEST_LEN: usize = 32;
pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 24;

/// Environment variable carrying the hex-encoded 256-bit master key.
pub const MASTER_KEY_ENV: &str = "HONEYAUTH_MASTER_KEY";

/// Algorithm names accepted in configuration. Only these are implemented.
pub const DIGEST_ALGORITHM: &str = "sha256";
pub const AEAD_ALGORITHM: &str = "xchacha20poly1305";

pub type Digest = [u8; DIGEST_LEN];

#[derive(Debug, Error)]
pub enum VaultError {
    #[error("unknown key id {0}")]
    UnknownKey(KeyId),
    #[error("authentication failure: envelope rejected")]
    AuthenticationFailure,
    #[error("serialization failure: {0}")]
    Serialization(#[from] CodecError),
    #[error("invalid payload: {0}")]
    InvalidPayload(&'static str),
    #[error("password must not be empty")]
    EmptyPassword,
    #[error("malformed credential record: {0}")]
    MalformedRecord(&'static str),
    #[error("invalid kdf parameters: {0}")]
    Kdf(String),
    #[error("master key must be {} hex characters", KEY_LEN * 2)]
    InvalidMasterKey,
    #[error("environment variable {MASTER_KEY_ENV} is not set")]
    MissingMasterKey,
}

pub fn digest(bytes: &[u8]) -> Digest {
    Sha256::digest(bytes).into()
}

/// `SHA-256(salt || value)`.
pub fn salted_digest(salt: &[u8], value: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(value);
    h.finalize().into()
}

/// Constant-time byte comparison. Every secret comparison in the crate goes
/// through here.
pub fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    #[cfg(test)]
    ct_probe::hit();
    a.ct_eq(b).into()
}


#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KeyId(String);

impl KeyId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn for_key(key: &[u8; KEY_LEN]) -> Self {
        let mut h = Sha256::new();
        h.update(b"honeyauth-key-id");
        h.update(key);
        let fp: Digest = h.finalize().into();
        Self(format!("k1-{}", hex::encode(&fp[..8])))
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyId({})", self.0)
    }
}

/// Read-only keystore plus the seal/unseal operations over it.
pub struct Vault {
    keys: HashMap<KeyId, XChaCha20Poly1305>,
    active: KeyId,
}

impl fmt::Debug for Vault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vault")
            .field("active", &self.active)
            .finish_non_exhaustive()
    }
}

impl Vault {
    pub fn from_master_key(key: [u8; KEY_LEN]) -> Self {
        let id = KeyId::for_key(&key);
        let cipher = XChaCha20Poly1305::new(Key::from_slice(&key));
        Self {
            keys: HashMap::from([(id.clone(), cipher)]),
            active: id,
        }
    }

    pub fn from_hex(hex_key: &str) -> Result<Self, VaultError> {
        let raw = hex::decode(hex_key.trim()).map_err(|_| VaultError::InvalidMasterKey)?;
        let key: [u8; KEY_LEN] = raw.try_into().map_err(|_| VaultError::InvalidMasterKey)?;
        Ok(Self::from_master_key(key))
    }

    pub fn from_env() -> Result<Self, VaultError> {
        let value = std::env::var(MASTER_KEY_ENV).map_err(|_| VaultError::MissingMasterKey)?;
        Self::from_hex(&value)
    }

    /// A vault with a fresh random key. Nothing sealed under it survives the
    /// process.
    pub fn ephemeral() -> Self {
        let mut key = [0u8; KEY_LEN];
        OsRng.fill_bytes(&mut key);
        Self::from_master_key(key)
    }

    pub fn active_key(&self) -> &KeyId {
        &self.active
    }

    fn cipher(&self, key_id: &KeyId) -> Result<&XChaCha20Poly1305, VaultError> {
        self.keys
            .get(key_id)
            .ok_or_else(|| VaultError::UnknownKey(key_id.clone()))
    }

    pub fn seal(
        &self,
        payload: &HoneytokenPayload,
        key_id: &KeyId,
        aad: &[u8],
    ) -> Result<SealedHoneytoken, VaultError> {
        let cipher = self.cipher(key_id)?;
        payload.check()?;
        let plaintext = payload.to_bytes();

        let mut nonce = [0u8; NONCE_LEN];
        OsRng.fill_bytes(&mut nonce);
        let bound = associated_data(key_id, aad);
        let ciphertext = cipher
            .encrypt(
                XNonce::from_slice(&nonce),
                Payload {
                    msg: &plaintext,
                    aad: &bound,
                },
            )
            .map_err(|_| VaultError::InvalidPayload("encryption failed"))?;

        Ok(SealedHoneytoken {
            ciphertext,
            nonce,
            key_id: key_id.clone(),
            aad_digest: digest(aad),
        })
    }

    /// Fails closed: any mismatch in key, nonce, ciphertext, or `aad`
    /// surfaces as [`VaultError::AuthenticationFailure`].
    pub fn unseal(
        &self,
        sealed: &SealedHoneytoken,
        key_id: &KeyId,
        aad: &[u8],
    ) -> Result<HoneytokenPayload, VaultError> {
        let cipher = self.cipher(key_id)?;
        if sealed.key_id != *key_id || !ct_eq(&sealed.aad_digest, &digest(aad)) {
            return Err(VaultError::AuthenticationFailure);
        }
        let bound = associated_data(key_id, aad);
        let plaintext = cipher
            .decrypt(
                XNonce::from_slice(&sealed.nonce),
                Payload {
                    msg: &sealed.ciphertext,
                    aad: &bound,
                },
            )
            .map_err(|_| VaultError::AuthenticationFailure)?;
        let payload = HoneytokenPayload::from_bytes(&plaintext)?;
        payload.check()?;
        Ok(payload)
    }
}

fn associated_data(key_id: &KeyId, aad: &[u8]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.bytes(key_id.as_str().as_bytes()).bytes(aad);
    e.finish()
}
