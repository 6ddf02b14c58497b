use rand::{CryptoRng, RngCore};

use super::{ct_eq, salted_digest, Digest, KeyId, VaultError, DIGEST_LEN, NONCE_LEN};
use crate::codec::{CodecError, Decoder, Encoder};
use crate::ids::SessionId;
use crate::otp::{Otp, OtpSet};

const PAYLOAD_SALT_LEN: usize = 16;

/// What the validation process needs from one login: the honeytoken in the
/// clear, and only salted digests of the decoys.
///
/// It exists in plaintext only transiently, inside the issuing and validating
/// code paths; on the ledger it is always sealed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoneytokenPayload {
    pub honeytoken_otp: Otp,
    pub decoy_digests: Vec<Digest>,
    pub session_id: SessionId,
    pub salt: Vec<u8>,
}

impl HoneytokenPayload {
    pub fn from_otp_set<R: RngCore + CryptoRng>(set: &OtpSet, rng: &mut R) -> Self {
        let mut salt = vec![0u8; PAYLOAD_SALT_LEN];
        rng.fill_bytes(&mut salt);
        let decoy_digests = set
            .decoys()
            .map(|d| salted_digest(&salt, d.as_bytes()))
            .collect();
        Self {
            honeytoken_otp: set.honeytoken().clone(),
            decoy_digests,
            session_id: set.session_id,
            salt,
        }
    }

    pub fn otp_count(&self) -> usize {
        self.decoy_digests.len() + 1
    }

    /// The honeytoken must not collide with any decoy digest.
    pub(crate) fn check(&self) -> Result<(), VaultError> {
        let own = salted_digest(&self.salt, self.honeytoken_otp.as_bytes());
        if self.decoy_digests.iter().any(|d| ct_eq(d, &own)) {
            return Err(VaultError::InvalidPayload(
                "honeytoken matches a decoy digest",
            ));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.bytes(self.honeytoken_otp.as_bytes());
        e.u64(self.decoy_digests.len() as u64);
        for d in &self.decoy_digests {
            e.bytes(d);
        }
        e.bytes(self.session_id.as_bytes()).bytes(&self.salt);
        e.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self, CodecError> {
        let mut d = Decoder::new(raw)?;
        let honeytoken_otp =
            Otp::new(d.string()?).map_err(|_| CodecError::Invalid("honeytoken is not an otp"))?;
        let count = d.u64()?;
        // Every digest costs at least 40 encoded bytes; bound before allocating.
        if count > (raw.len() / (8 + DIGEST_LEN)) as u64 {
            return Err(CodecError::UnexpectedEnd);
        }
        let decoy_digests = (0..count)
            .map(|_| d.array::<DIGEST_LEN>())
            .collect::<Result<Vec<_>, _>>()?;
        let session_id = SessionId::from_bytes(d.array()?);
        let salt = d.bytes()?.to_vec();
        d.finish()?;
        Ok(Self {
            honeytoken_otp,
            decoy_digests,
            session_id,
            salt,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedHoneytoken {
    pub ciphertext: Vec<u8>,
    pub nonce: [u8; NONCE_LEN],
    pub key_id: KeyId,
    /// Digest of the associated data the envelope was sealed under.
    pub aad_digest: Digest,
}

impl SealedHoneytoken {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.bytes(&self.ciphertext)
            .bytes(&self.nonce)
            .bytes(self.key_id.as_str().as_bytes())
            .bytes(&self.aad_digest);
        e.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self, CodecError> {
        let mut d = Decoder::new(raw)?;
        let ciphertext = d.bytes()?.to_vec();
        let nonce = d.array()?;
        let key_id = KeyId::new(d.string()?);
        let aad_digest = d.array()?;
        d.finish()?;
        Ok(Self {
            ciphertext,
            nonce,
            key_id,
            aad_digest,
        })
    }
}
