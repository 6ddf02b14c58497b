use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::block::{Block, BlockPayload, ZERO_HASH};
use super::LedgerError;
use crate::ids::SessionId;
use crate::time::Millis;
use crate::vault::Digest;

const FRAME_HEADER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TamperReason {
    HashMismatch,
    LinkMismatch,
    IndexGap,
    Malformed,
}

impl TamperReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::HashMismatch => "hash-mismatch",
            Self::LinkMismatch => "link-mismatch",
            Self::IndexGap => "index-gap",
            Self::Malformed => "malformed",
        }
    }
}

impl fmt::Display for TamperReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict of a chain check. `valid` holds exactly when no bad index exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TamperReport {
    pub valid: bool,
    pub first_bad_index: Option<u64>,
    pub reason: Option<TamperReason>,
    /// Blocks examined before the verdict.
    pub blocks: usize,
}

impl TamperReport {
    pub fn ok(blocks: usize) -> Self {
        Self {
            valid: true,
            first_bad_index: None,
            reason: None,
            blocks,
        }
    }

    pub fn tampered(index: u64, reason: TamperReason, blocks: usize) -> Self {
        Self {
            valid: false,
            first_bad_index: Some(index),
            reason: Some(reason),
            blocks,
        }
    }
}

impl fmt::Display for TamperReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.first_bad_index, self.reason) {
            (Some(i), Some(r)) => write!(f, "TAMPER at block {i}: {r}"),
            _ => write!(f, "OK, {} blocks", self.blocks),
        }
    }
}

/// Checks one block against its position and predecessor. The link is
/// checked before the hash, so a rewritten `prev_hash` reports as a link
/// mismatch rather than the hash mismatch it also causes.
fn check_block(position: usize, block: &Block, prev: Option<&Block>) -> Option<TamperReason> {
    if block.index != position as u64 {
        return Some(TamperReason::IndexGap);
    }
    let expected_prev = prev.map_or(ZERO_HASH, |p| p.hash);
    if block.prev_hash != expected_prev {
        return Some(TamperReason::LinkMismatch);
    }
    if block.compute_hash() != block.hash {
        return Some(TamperReason::HashMismatch);
    }
    if position == 0 && block.hash != Block::genesis().hash {
        return Some(TamperReason::HashMismatch);
    }
    None
}

/// Walks `blocks` in order; `None` entries are records that failed to decode.
fn first_violation<'a, I>(blocks: I) -> TamperReport
where
    I: IntoIterator<Item = Option<&'a Block>>,
{
    let mut prev: Option<&Block> = None;
    let mut seen = 0;
    for (i, block) in blocks.into_iter().enumerate() {
        seen += 1;
        let Some(block) = block else {
            return TamperReport::tampered(i as u64, TamperReason::Malformed, seen);
        };
        if let Some(reason) = check_block(i, block, prev) {
            return TamperReport::tampered(i as u64, reason, seen);
        }
        prev = Some(block);
    }
    if seen == 0 {
        return TamperReport::tampered(0, TamperReason::Malformed, 0);
    }
    TamperReport::ok(seen)
}

pub(crate) fn frame(record: &[u8]) -> Vec<u8> {
    let len = u32::try_from(record.len()).expect("block record exceeds 4 GiB");
    let mut out = Vec::with_capacity(FRAME_HEADER + record.len());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(record);
    out
}

/// Splits a record file into per-record decode results. A broken frame
/// header or a short final record ends the list with `None`.
fn split_frames(bytes: &[u8]) -> Vec<Option<Block>> {
    let mut out = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let Some(header) = rest.get(..FRAME_HEADER) else {
            out.push(None);
            break;
        };
        let len = u32::from_le_bytes(header.try_into().expect("4 bytes")) as usize;
        let Some(record) = rest.get(FRAME_HEADER..FRAME_HEADER + len) else {
            out.push(None);
            break;
        };
        out.push(Block::from_record(record).ok());
        rest = &rest[FRAME_HEADER + len..];
    }
    out
}

/// Verifies a serialized record file without building a [`Chain`].
pub fn verify_bytes(bytes: &[u8]) -> TamperReport {
    let blocks = split_frames(bytes);
    first_violation(blocks.iter().map(Option::as_ref))
}

pub fn verify_chain(chain: &Chain) -> TamperReport {
    first_violation(chain.blocks.iter().map(Some))
}

/// In-memory view of the ledger.
///
/// Blocks are only ever added. `verified` is the length of the prefix known
/// to satisfy every invariant; blocks added through [`Chain::append`] or
/// decoded through [`Chain::decode`] are verified on arrival.
#[derive(Debug)]
pub struct Chain {
    blocks: Vec<Block>,
    sessions: HashMap<SessionId, usize>,
    verified: AtomicUsize,
}

impl Clone for Chain {
    fn clone(&self) -> Self {
        Self {
            blocks: self.blocks.clone(),
            sessions: self.sessions.clone(),
            verified: AtomicUsize::new(self.verified.load(Ordering::Acquire)),
        }
    }
}

impl PartialEq for Chain {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks
    }
}

impl Eq for Chain {}

impl Default for Chain {
    fn default() -> Self {
        Self::new()
    }
}

impl Chain {
    /// A chain holding only the genesis block.
    pub fn new() -> Self {
        Self {
            blocks: vec![Block::genesis()],
            sessions: HashMap::new(),
            verified: AtomicUsize::new(1),
        }
    }

    /// Wraps arbitrary blocks without checking them. Reads verify lazily;
    /// [`verify_chain`] reports what is wrong.
    pub fn from_blocks_unchecked(blocks: Vec<Block>) -> Self {
        let mut sessions = HashMap::new();
        for (i, b) in blocks.iter().enumerate().skip(1) {
            if let Ok(p) = BlockPayload::from_bytes(&b.payload) {
                sessions.insert(p.session_id, i);
            }
        }
        Self {
            blocks,
            sessions,
            verified: AtomicUsize::new(0),
        }
    }

    /// Parses and fully verifies a record file.
    pub fn decode(bytes: &[u8]) -> Result<Self, LedgerError> {
        let report = verify_bytes(bytes);
        if !report.valid {
            return Err(LedgerError::ChainCorrupt(report));
        }
        let blocks: Vec<Block> = split_frames(bytes).into_iter().flatten().collect();
        let chain = Self::from_blocks_unchecked(blocks);
        chain.verified.store(chain.blocks.len(), Ordering::Release);
        Ok(chain)
    }

    /// The record file representation: `[u32 LE length][record]` per block.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.blocks
            .iter()
            .flat_map(|b| frame(&b.to_record()))
            .collect()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn head(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn head_hash(&self) -> Digest {
        self.head().map_or(ZERO_HASH, |b| b.hash)
    }

    /// Makes sure the first `upto` blocks are verified, checking only the
    /// part not verified before.
    fn ensure_verified(&self, upto: usize) -> Result<(), LedgerError> {
        let done = self.verified.load(Ordering::Acquire);
        if done >= upto {
            return Ok(());
        }
        if self.blocks.is_empty() {
            return Err(LedgerError::ChainCorrupt(TamperReport::tampered(
                0,
                TamperReason::Malformed,
                0,
            )));
        }
        for i in done..upto {
            let prev = i.checked_sub(1).map(|p| &self.blocks[p]);
            if let Some(reason) = check_block(i, &self.blocks[i], prev) {
                return Err(LedgerError::ChainCorrupt(TamperReport::tampered(
                    i as u64,
                    reason,
                    i + 1,
                )));
            }
        }
        self.verified.fetch_max(upto, Ordering::AcqRel);
        Ok(())
    }

    /// Builds the block that would follow the current head.
    pub(crate) fn next_block(
        &self,
        payload: &BlockPayload,
        now: Millis,
    ) -> Result<Block, LedgerError> {
        self.ensure_verified(self.blocks.len())?;
        let head = self.head().expect("verified chain has genesis");
        Ok(Block::sealed_at(
            head.index + 1,
            now,
            payload.to_bytes(),
            head.hash,
        ))
    }

    /// Adds a block produced by [`Chain::next_block`] on this same chain.
    pub(crate) fn push_next(&mut self, block: Block, session_id: SessionId) {
        debug_assert_eq!(block.index as usize, self.blocks.len());
        debug_assert_eq!(block.prev_hash, self.head_hash());
        self.sessions.insert(session_id, self.blocks.len());
        self.blocks.push(block);
        if self.verified.load(Ordering::Acquire) == self.blocks.len() - 1 {
            self.verified.store(self.blocks.len(), Ordering::Release);
        }
    }

    /// Appends a payload block in memory. Refuses to extend a chain that
    /// fails verification.
    pub fn append(&mut self, payload: &BlockPayload, now: Millis) -> Result<Block, LedgerError> {
        let block = self.next_block(payload, now)?;
        self.push_next(block.clone(), payload.session_id);
        Ok(block)
    }

    /// The newest payload for `session_id`, released only once every block
    /// up to and including it verifies.
    pub fn fetch_payload(&self, session_id: &SessionId) -> Result<BlockPayload, LedgerError> {
        let &at = self.sessions.get(session_id).ok_or(LedgerError::NotFound)?;
        self.ensure_verified(at + 1)?;
        BlockPayload::from_bytes(&self.blocks[at].payload).map_err(|_| {
            LedgerError::ChainCorrupt(TamperReport::tampered(
                at as u64,
                TamperReason::Malformed,
                at + 1,
            ))
        })
    }
}
