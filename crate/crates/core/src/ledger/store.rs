//! Where framed block records live.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("record file was modified outside the appender")]
    Modified,
    #[error("record file is locked by another writer")]
    Locked,
}

/// Backing storage for one chain. Implementations must make `append`
/// all-or-nothing: on error no bytes of the record remain.
pub trait BlockStore: Send {
    fn read_all(&mut self) -> Result<Vec<u8>, StoreError>;
    fn append(&mut self, framed: &[u8]) -> Result<(), StoreError>;
}

/// A `chain.dat` file held under an exclusive advisory lock for the life of
/// the store. Every append is synced before it returns.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    file: File,
    len: u64,
    last: Option<(u64, Vec<u8>)>,
}

impl FileStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&path)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(std::fs::TryLockError::WouldBlock) => return Err(StoreError::Locked),
            Err(std::fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let len = file.metadata()?.len();
        Ok(Self {
            path,
            file,
            len,
            last: None,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Cheap guard against edits made behind our back: the length must be
    /// unchanged and the last record we wrote must still be there.
    fn check_unmodified(&mut self) -> Result<(), StoreError> {
        if self.file.metadata()?.len() != self.len {
            return Err(StoreError::Modified);
        }
        if let Some((offset, bytes)) = &self.last {
            let mut on_disk = vec![0u8; bytes.len()];
            self.file.seek(SeekFrom::Start(*offset))?;
            self.file.read_exact(&mut on_disk)?;
            if on_disk != *bytes {
                return Err(StoreError::Modified);
            }
        }
        Ok(())
    }
}

impl BlockStore for FileStore {
    fn read_all(&mut self) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::new();
        self.file.seek(SeekFrom::Start(0))?;
        self.file.read_to_end(&mut out)?;
        self.len = out.len() as u64;
        self.last = None;
        Ok(out)
    }

    fn append(&mut self, framed: &[u8]) -> Result<(), StoreError> {
        self.check_unmodified()?;
        let start = self.len;
        let written = (|| -> io::Result<()> {
            self.file.seek(SeekFrom::Start(start))?;
            self.file.write_all(framed)?;
            self.file.sync_data()
        })();
        if let Err(e) = written {
            // Best effort: do not leave a torn record behind.
            let _ = self.file.set_len(start);
            let _ = self.file.sync_data();
            return Err(e.into());
        }
        self.len = start + framed.len() as u64;
        self.last = Some((start, framed.to_vec()));
        Ok(())
    }
}

/// Volatile store. Clones share the same buffer, so a test can keep a handle
/// on the bytes while a ledger owns the store.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    bytes: Arc<Mutex<Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> Vec<u8> {
        self.bytes.lock().expect("memory store poisoned").clone()
    }
}

impl BlockStore for MemoryStore {
    fn read_all(&mut self) -> Result<Vec<u8>, StoreError> {
        Ok(self.snapshot())
    }

    fn append(&mut self, framed: &[u8]) -> Result<(), StoreError> {
        self.bytes
            .lock()
            .expect("memory store poisoned")
            .extend_from_slice(framed);
        Ok(())
    }
}
