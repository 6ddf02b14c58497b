use crate::codec::{CodecError, Decoder, Encoder};
use crate::ids::{SessionId, UserRef};
use crate::time::Millis;
use crate::vault::{digest, Digest, SealedHoneytoken, DIGEST_LEN};

pub const GENESIS_PAYLOAD: &[u8] = b"HONEYAUTH-GENESIS";
pub const ZERO_HASH: Digest = [0u8; DIGEST_LEN];

/// One ledger record.
///
/// `hash` covers the canonical encoding of every other field, so any change
/// to index, timestamp, payload, or link is visible as a hash mismatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub timestamp: Millis,
    pub payload: Vec<u8>,
    pub prev_hash: Digest,
    pub hash: Digest,
}

impl Block {
    pub fn genesis() -> Self {
        Self::sealed_at(0, Millis(0), GENESIS_PAYLOAD.to_vec(), ZERO_HASH)
    }

    pub(crate) fn sealed_at(
        index: u64,
        timestamp: Millis,
        payload: Vec<u8>,
        prev_hash: Digest,
    ) -> Self {
        let mut block = Self {
            index,
            timestamp,
            payload,
            prev_hash,
            hash: ZERO_HASH,
        };
        block.hash = block.compute_hash();
        block
    }

    fn encoder(&self) -> Encoder {
        let mut e = Encoder::new();
        e.u64(self.index)
            .u64(self.timestamp.0)
            .bytes(&self.payload)
            .bytes(&self.prev_hash);
        e
    }

    /// The bytes the block hash is computed over.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.encoder().finish()
    }

    pub fn compute_hash(&self) -> Digest {
        digest(&self.canonical_bytes())
    }

    /// Canonical bytes followed by the stored hash.
    pub fn to_record(&self) -> Vec<u8> {
        let mut e = self.encoder();
        e.bytes(&self.hash);
        e.finish()
    }

    pub fn from_record(raw: &[u8]) -> Result<Self, CodecError> {
        let mut d = Decoder::new(raw)?;
        let index = d.u64()?;
        let timestamp = Millis(d.u64()?);
        let payload = d.bytes()?.to_vec();
        let prev_hash = d.array()?;
        let hash = d.array()?;
        d.finish()?;
        Ok(Self {
            index,
            timestamp,
            payload,
            prev_hash,
            hash,
        })
    }
}

/// Contents of a non-genesis block: who, which login, and the sealed
/// honeytoken. Never a username or a plaintext OTP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPayload {
    pub user_ref: UserRef,
    pub session_id: SessionId,
    pub sealed: SealedHoneytoken,
}

impl BlockPayload {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.bytes(self.user_ref.as_bytes())
            .bytes(self.session_id.as_bytes())
            .bytes(&self.sealed.to_bytes());
        e.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self, CodecError> {
        let mut d = Decoder::new(raw)?;
        let user_ref = UserRef(d.array()?);
        let session_id = SessionId::from_bytes(d.array()?);
        let sealed = SealedHoneytoken::from_bytes(d.bytes()?)?;
        d.finish()?;
        Ok(Self {
            user_ref,
            session_id,
            sealed,
        })
    }
}
