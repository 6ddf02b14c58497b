//! Append-only private hash chain carrying sealed honeytokens from the
//! issuing side to the validation process.
//!
//! ```text
//! block 0: genesis, prev = 0^32
//! block i: hash_i = SHA-256(0x01 | i | ts | payload | hash_{i-1})
//! ```
//!
//! On disk the chain is a single record file: `[u32 LE length][record]`
//! per block, where the record is the canonical block encoding followed by
//! its hash. One [`Ledger`] is the only writer; readers share the verified
//! in-memory view.

mod block;
mod chain;
mod store;

use std::fs;
use std::io;
use std::path::Path;
use std::sync::{Mutex, RwLock, RwLockReadGuard};

use thiserror::Error;

pub use block::{Block, BlockPayload, GENESIS_PAYLOAD, ZERO_HASH};
pub use chain::{verify_bytes, verify_chain, Chain, TamperReason, TamperReport};
pub use store::{BlockStore, FileStore, MemoryStore, StoreError};

use crate::ids::SessionId;
use crate::time::Millis;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("chain corrupt: {0}")]
    ChainCorrupt(TamperReport),
    #[error("no block for session")]
    NotFound,
    #[error("storage failure: {0}")]
    Storage(#[source] StoreError),
}

impl From<StoreError> for LedgerError {
    fn from(e: StoreError) -> Self {
        LedgerError::Storage(e)
    }
}

/// Error from [`Ledger::append_block_with`]: either the ledger refused, or the
/// caller's pre-commit hook did.
#[derive(Debug, Error)]
pub enum AppendError<E> {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("append aborted before commit")]
    Aborted(E),
}

/// Reads a record file. A missing or empty file is a fresh genesis-only
/// chain; anything else must verify completely.
pub fn load_chain(path: impl AsRef<Path>) -> Result<Chain, LedgerError> {
    match fs::read(path.as_ref()) {
        Ok(bytes) if bytes.is_empty() => Ok(Chain::new()),
        Ok(bytes) => Chain::decode(&bytes),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Chain::new()),
        Err(e) => Err(LedgerError::Storage(e.into())),
    }
}

/// Writes a whole chain as a record file, replacing `path`.
pub fn write_chain(path: impl AsRef<Path>, chain: &Chain) -> io::Result<()> {
    fs::write(path, chain.to_bytes())
}

/// The exclusive appender plus the shared, verified view of the chain.
pub struct Ledger {
    store: Mutex<Box<dyn BlockStore>>,
    chain: RwLock<Chain>,
    /// Set once the backing store is seen to have changed underneath us.
    poisoned: Mutex<Option<TamperReport>>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("len", &self.len())
            .finish_non_exhaustive()
    }
}

impl Ledger {
    /// Opens (creating if needed) a file-backed ledger.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        Self::with_store(Box::new(FileStore::open(path)?))
    }

    pub fn in_memory() -> Self {
        Self::with_store(Box::new(MemoryStore::new())).expect("memory store cannot fail")
    }

    /// Loads and verifies whatever `store` holds, writing the genesis record
    /// if it is empty.
    pub fn with_store(mut store: Box<dyn BlockStore>) -> Result<Self, LedgerError> {
        let bytes = store.read_all()?;
        let chain = if bytes.is_empty() {
            let chain = Chain::new();
            store.append(&chain.to_bytes())?;
            chain
        } else {
            Chain::decode(&bytes)?
        };
        Ok(Self {
            store: Mutex::new(store),
            chain: RwLock::new(chain),
            poisoned: Mutex::new(None),
        })
    }

    pub fn append_block(&self, payload: &BlockPayload, now: Millis) -> Result<Block, LedgerError> {
        self.append_block_with(payload, now, |_| Ok::<(), std::convert::Infallible>(()))
            .map_err(|e| match e {
                AppendError::Ledger(e) => e,
                AppendError::Aborted(never) => match never {},
            })
    }

    /// Appends `payload`, running `before_commit` after the block is built
    /// and before it is written. If the hook fails nothing is written; if the
    /// write fails after the hook succeeded the caller gets
    /// [`AppendError::Ledger`] and must undo whatever the hook did.
    pub fn append_block_with<E>(
        &self,
        payload: &BlockPayload,
        now: Millis,
        before_commit: impl FnOnce(&Block) -> Result<(), E>,
    ) -> Result<Block, AppendError<E>> {
        let mut store = self.store.lock().expect("ledger appender poisoned");
        if let Some(report) = *self.poisoned.lock().expect("ledger poisoned flag") {
            return Err(LedgerError::ChainCorrupt(report).into());
        }
        let block = self.read().next_block(payload, now)?;
        before_commit(&block).map_err(AppendError::Aborted)?;
        match store.append(&chain::frame(&block.to_record())) {
            Ok(()) => {}
            Err(StoreError::Modified) => {
                let report = self.modification_report(store.as_mut());
                *self.poisoned.lock().expect("ledger poisoned flag") = Some(report);
                return Err(LedgerError::ChainCorrupt(report).into());
            }
            Err(e) => return Err(LedgerError::from(e).into()),
        }
        self.chain
            .write()
            .expect("ledger chain poisoned")
            .push_next(block.clone(), payload.session_id);
        Ok(block)
    }

    /// Locates what changed in an externally modified store. If the new bytes
    /// still verify (someone appended well-formed blocks), the first index
    /// past our own view is blamed.
    fn modification_report(&self, store: &mut dyn BlockStore) -> TamperReport {
        let ours = self.read().len();
        match store.read_all() {
            Ok(bytes) => {
                let report = verify_bytes(&bytes);
                if report.valid {
                    TamperReport::tampered(ours as u64, TamperReason::Malformed, report.blocks)
                } else {
                    report
                }
            }
            Err(_) => TamperReport::tampered(0, TamperReason::Malformed, 0),
        }
    }

    pub fn fetch_payload(&self, session_id: &SessionId) -> Result<BlockPayload, LedgerError> {
        self.read().fetch_payload(session_id)
    }

    pub fn verify(&self) -> TamperReport {
        verify_chain(&self.read())
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.read().is_empty()
    }

    /// Shared read access. Appends wait while the guard is held.
    pub fn read(&self) -> RwLockReadGuard<'_, Chain> {
        self.chain.read().expect("ledger chain poisoned")
    }
}
