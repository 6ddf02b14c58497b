//! Argon2id credential records.

use argon2::{Algorithm, Argon2, Params, Version};
use rand::rngs::OsRng;
use rand::RngCore;

use super::{ct_eq, VaultError};

pub const MIN_SALT_LEN: usize = 16;
const OUTPUT_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KdfParams {
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

impl Default for KdfParams {
    fn default() -> Self {
        Self {
            memory_kib: 19 * 1024,
            iterations: 2,
            parallelism: 1,
        }
    }
}

impl KdfParams {
    /// Cheap parameters for tests and demos. Not for production use.
    pub fn insecure_fast() -> Self {
        Self {
            memory_kib: 256,
            iterations: 1,
            parallelism: 1,
        }
    }

    fn argon2(&self) -> Result<Argon2<'static>, VaultError> {
        let params = Params::new(
            self.memory_kib,
            self.iterations,
            self.parallelism,
            Some(OUTPUT_LEN),
        )
        .map_err(|e| VaultError::Kdf(e.to_string()))?;
        Ok(Argon2::new(Algorithm::Argon2id, Version::V0x13, params))
    }

    pub fn validate(&self) -> Result<(), VaultError> {
        self.argon2().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CredentialRecord {
    pub password_digest: Vec<u8>,
    pub salt: Vec<u8>,
    pub kdf_params: KdfParams,
}

pub fn hash_password(password: &str, params: &KdfParams) -> Result<CredentialRecord, VaultError> {
    if password.is_empty() {
        return Err(VaultError::EmptyPassword);
    }
    let mut salt = vec![0u8; MIN_SALT_LEN];
    OsRng.fill_bytes(&mut salt);
    let mut out = vec![0u8; OUTPUT_LEN];
    params
        .argon2()?
        .hash_password_into(password.as_bytes(), &salt, &mut out)
        .map_err(|e| VaultError::Kdf(e.to_string()))?;
    Ok(CredentialRecord {
        password_digest: out,
        salt,
        kdf_params: *params,
    })
}

pub fn verify_password(password: &str, record: &CredentialRecord) -> Result<bool, VaultError> {
    if record.salt.len() < MIN_SALT_LEN {
        return Err(VaultError::MalformedRecord("salt shorter than 16 bytes"));
    }
    if record.password_digest.len() != OUTPUT_LEN {
        return Err(VaultError::MalformedRecord("digest length"));
    }
    let kdf = record
        .kdf_params
        .argon2()
        .map_err(|_| VaultError::MalformedRecord("kdf parameters"))?;
    let mut out = vec![0u8; OUTPUT_LEN];
    kdf.hash_password_into(password.as_bytes(), &record.salt, &mut out)
        .map_err(|e| VaultError::Kdf(e.to_string()))?;
    Ok(ct_eq(&out, &record.password_digest))
}
