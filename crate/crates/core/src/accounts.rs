//! Account store: a single journal file replayed into memory.
//!
//! Every mutation is appended to the journal and synced before it is applied
//! in memory. A frame is `[u32 LE body length][SHA-256 of body][body]`; a
//! torn final frame (crash mid-write) is discarded on open, damage anywhere
//! else is an error. Before each operation the store picks up frames other
//! processes appended (the admin `unlock` command writes to the same file).
//!
//! Nothing OTP-related is ever written here.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::codec::{CodecError, Decoder, Encoder};
use crate::ids::UserRef;
use crate::otp::HoneytokenPosition;
use crate::time::Millis;
use crate::vault::{ct_eq, digest, CredentialRecord, KdfParams};

const SERVER_SALT_LEN: usize = 32;
const FRAME_HEADER: usize = 4 + 32;

const TAG_SERVER_SALT: u64 = 1;
const TAG_PUT: u64 = 2;
const TAG_SET_LOCKED: u64 = 3;

#[derive(Debug, Error)]
pub enum AccountStoreError {
    #[error("username already registered")]
    UsernameTaken,
    #[error("unknown account")]
    UnknownAccount,
    #[error("account journal corrupt at byte {offset}: {detail}")]
    Corrupt { offset: u64, detail: String },
    #[error("account journal i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountRecord {
    pub username: String,
    pub credentials: CredentialRecord,
    pub honeytoken_position: HoneytokenPosition,
    pub locked: bool,
    pub created_at: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Entry {
    ServerSalt([u8; SERVER_SALT_LEN]),
    Put(AccountRecord),
    SetLocked { username: String, locked: bool },
}

impl Entry {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        match self {
            Entry::ServerSalt(salt) => {
                e.u64(TAG_SERVER_SALT).bytes(salt);
            }
            Entry::Put(r) => {
                let k = &r.credentials.kdf_params;
                e.u64(TAG_PUT)
                    .bytes(r.username.as_bytes())
                    .bytes(&r.credentials.password_digest)
                    .bytes(&r.credentials.salt)
                    .u64(k.memory_kib.into())
                    .u64(k.iterations.into())
                    .u64(k.parallelism.into())
                    .u64(r.honeytoken_position.get() as u64)
                    .u64(r.locked.into())
                    .u64(r.created_at.0);
            }
            Entry::SetLocked { username, locked } => {
                e.u64(TAG_SET_LOCKED)
                    .bytes(username.as_bytes())
                    .u64((*locked).into());
            }
        }
        e.finish()
    }

    fn decode(raw: &[u8]) -> Result<Self, CodecError> {
        let mut d = Decoder::new(raw)?;
        let small = |v: u64| u32::try_from(v).map_err(|_| CodecError::Invalid("kdf parameter"));
        let flag = |v: u64| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(CodecError::Invalid("flag")),
        };
        let entry = match d.u64()? {
            TAG_SERVER_SALT => Entry::ServerSalt(d.array()?),
            TAG_PUT => {
                let username = d.string()?;
                let password_digest = d.bytes()?.to_vec();
                let salt = d.bytes()?.to_vec();
                let kdf_params = KdfParams {
                    memory_kib: small(d.u64()?)?,
                    iterations: small(d.u64()?)?,
                    parallelism: small(d.u64()?)?,
                };
                let position = usize::try_from(d.u64()?)
                    .ok()
                    .and_then(|p| HoneytokenPosition::new(p, p).ok())
                    .ok_or(CodecError::Invalid("position"))?;
                Entry::Put(AccountRecord {
                    username,
                    credentials: CredentialRecord {
                        password_digest,
                        salt,
                        kdf_params,
                    },
                    honeytoken_position: position,
                    locked: flag(d.u64()?)?,
                    created_at: Millis(d.u64()?),
                })
            }
            TAG_SET_LOCKED => Entry::SetLocked {
                username: d.string()?,
                locked: flag(d.u64()?)?,
            },
            _ => return Err(CodecError::Invalid("entry tag")),
        };
        d.finish()?;
        Ok(entry)
    }

    fn framed(&self) -> Vec<u8> {
        let body = self.encode();
        let mut out = Vec::with_capacity(FRAME_HEADER + body.len());
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&Sha256::digest(&body));
        out.extend_from_slice(&body);
        out
    }
}

#[derive(Debug)]
struct Journal {
    path: PathBuf,
    file: File,
    /// Bytes of the journal already applied in memory.
    offset: u64,
}

#[derive(Debug)]
struct Inner {
    accounts: HashMap<String, AccountRecord>,
    refs: HashMap<UserRef, String>,
    server_salt: Option<[u8; SERVER_SALT_LEN]>,
    journal: Option<Journal>,
}

impl Inner {
    fn apply(&mut self, entry: Entry) {
        match entry {
            Entry::ServerSalt(salt) => {
                self.server_salt = Some(salt);
                let refs = self
                    .accounts
                    .keys()
                    .map(|u| (user_ref_of(&salt, u), u.clone()))
                    .collect();
                self.refs = refs;
            }
            Entry::Put(record) => {
                if let Some(salt) = &self.server_salt {
                    self.refs
                        .insert(user_ref_of(salt, &record.username), record.username.clone());
                }
                self.accounts.insert(record.username.clone(), record);
            }
            Entry::SetLocked { username, locked } => {
                if let Some(r) = self.accounts.get_mut(&username) {
                    r.locked = locked;
                }
            }
        }
    }

    fn salt(&self) -> &[u8; SERVER_SALT_LEN] {
        self.server_salt
            .as_ref()
            .expect("server salt initialised on open")
    }

    /// Applies frames appended since `offset`. Returns where a torn tail
    /// begins, if there is one.
    fn replay(&mut self) -> Result<Option<u64>, AccountStoreError> {
        let Some(journal) = self.journal.as_mut() else {
            return Ok(None);
        };
        let mut bytes = Vec::new();
        journal.file.seek(SeekFrom::Start(journal.offset))?;
        journal.file.read_to_end(&mut bytes)?;
        let base = journal.offset;

        let mut pos = 0usize;
        let mut entries = Vec::new();
        let mut torn = None;
        while pos < bytes.len() {
            let at = base + pos as u64;
            let rest = &bytes[pos..];
            let Some(header) = rest.get(..FRAME_HEADER) else {
                torn = Some(at);
                break;
            };
            let len = u32::from_le_bytes(header[..4].try_into().expect("4 bytes")) as usize;
            let Some(body) = rest.get(FRAME_HEADER..FRAME_HEADER + len) else {
                torn = Some(at);
                break;
            };
            let is_last = FRAME_HEADER + len == rest.len();
            if !ct_eq(&Sha256::digest(body), &header[4..]) {
                if is_last {
                    torn = Some(at);
                    break;
                }
                return Err(AccountStoreError::Corrupt {
                    offset: at,
                    detail: "checksum mismatch".into(),
                });
            }
            let entry = Entry::decode(body).map_err(|e| AccountStoreError::Corrupt {
                offset: at,
                detail: e.to_string(),
            })?;
            entries.push(entry);
            pos += FRAME_HEADER + len;
        }

        journal.offset = base + pos as u64;
        for entry in entries {
            self.apply(entry);
        }
        Ok(torn)
    }

    /// Writes and syncs `entry`, then applies it.
    fn commit(&mut self, entry: Entry) -> Result<(), AccountStoreError> {
        if let Some(journal) = self.journal.as_mut() {
            let framed = entry.framed();
            journal.file.seek(SeekFrom::Start(journal.offset))?;
            if let Err(e) = journal
                .file
                .write_all(&framed)
                .and_then(|()| journal.file.sync_data())
            {
                let _ = journal.file.set_len(journal.offset);
                return Err(e.into());
            }
            journal.offset += framed.len() as u64;
        }
        self.apply(entry);
        Ok(())
    }
}

fn user_ref_of(salt: &[u8; SERVER_SALT_LEN], username: &str) -> UserRef {
    let mut buf = Vec::with_capacity(username.len() + SERVER_SALT_LEN);
    buf.extend_from_slice(username.as_bytes());
    buf.extend_from_slice(salt);
    UserRef(digest(&buf))
}

#[derive(Debug)]
pub struct AccountStore {
    inner: Mutex<Inner>,
}

impl AccountStore {
    pub fn in_memory() -> Self {
        let mut salt = [0u8; SERVER_SALT_LEN];
        OsRng.fill_bytes(&mut salt);
        let mut inner = Inner {
            accounts: HashMap::new(),
            refs: HashMap::new(),
            server_salt: None,
            journal: None,
        };
        inner.apply(Entry::ServerSalt(salt));
        Self {
            inner: Mutex::new(inner),
        }
    }

    /// Opens or creates the journal at `path`, discarding a torn tail.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AccountStoreError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&path)?;
        let mut inner = Inner {
            accounts: HashMap::new(),
            refs: HashMap::new(),
            server_salt: None,
            journal: Some(Journal {
                path,
                file,
                offset: 0,
            }),
        };
        {
            let journal = inner.journal.as_ref().expect("just set");
            journal.file.lock()?;
        }
        let result = (|| {
            if let Some(torn) = inner.replay()? {
                let journal = inner.journal.as_mut().expect("file backed");
                journal.file.set_len(torn)?;
                journal.file.sync_data()?;
            }
            if inner.server_salt.is_none() {
                let mut salt = [0u8; SERVER_SALT_LEN];
                OsRng.fill_bytes(&mut salt);
                inner.commit(Entry::ServerSalt(salt))?;
            }
            Ok(())
        })();
        inner.journal.as_ref().expect("file backed").file.unlock()?;
        result.map(|()| Self {
            inner: Mutex::new(inner),
        })
    }

    /// Runs `f` with the journal locked (exclusively when writing) and
    /// caught up with other processes.
    fn with_inner<T>(
        &self,
        write: bool,
        f: impl FnOnce(&mut Inner) -> Result<T, AccountStoreError>,
    ) -> Result<T, AccountStoreError> {
        let mut inner = self.inner.lock().expect("account store poisoned");
        if let Some(j) = inner.journal.as_ref() {
            if write {
                j.file.lock()?;
            } else {
                j.file.lock_shared()?;
            }
        }
        let result = inner.replay().and_then(|_| f(&mut inner));
        if let Some(j) = inner.journal.as_ref() {
            j.file.unlock()?;
        }
        result
    }

    pub fn user_ref(&self, username: &str) -> UserRef {
        let inner = self.inner.lock().expect("account store poisoned");
        user_ref_of(inner.salt(), username)
    }

    pub fn insert(&self, record: AccountRecord) -> Result<UserRef, AccountStoreError> {
        self.with_inner(true, |inner| {
            if inner.accounts.contains_key(&record.username) {
                return Err(AccountStoreError::UsernameTaken);
            }
            let user_ref = user_ref_of(inner.salt(), &record.username);
            inner.commit(Entry::Put(record))?;
            Ok(user_ref)
        })
    }

    pub fn get(&self, username: &str) -> Result<Option<AccountRecord>, AccountStoreError> {
        self.with_inner(false, |inner| Ok(inner.accounts.get(username).cloned()))
    }

    pub fn get_by_ref(
        &self,
        user_ref: &UserRef,
    ) -> Result<Option<AccountRecord>, AccountStoreError> {
        self.with_inner(false, |inner| {
            Ok(inner
                .refs
                .get(user_ref)
                .and_then(|u| inner.accounts.get(u))
                .cloned())
        })
    }

    /// Sets the lock flag. Idempotent: an unchanged flag writes nothing.
    pub fn set_locked(&self, user_ref: &UserRef, locked: bool) -> Result<(), AccountStoreError> {
        self.with_inner(true, |inner| {
            let username = inner
                .refs
                .get(user_ref)
                .cloned()
                .ok_or(AccountStoreError::UnknownAccount)?;
            if inner.accounts[&username].locked == locked {
                return Ok(());
            }
            inner.commit(Entry::SetLocked { username, locked })
        })
    }

    pub fn len(&self) -> Result<usize, AccountStoreError> {
        self.with_inner(false, |inner| Ok(inner.accounts.len()))
    }

    pub fn is_empty(&self) -> Result<bool, AccountStoreError> {
        self.len().map(|n| n == 0)
    }

    /// Rewrites the journal as one entry per account. Run while no other
    /// process has the file open.
    pub fn compact(&self) -> Result<(), AccountStoreError> {
        let mut inner = self.inner.lock().expect("account store poisoned");
        inner.replay()?;
        let Some(journal) = inner.journal.as_ref() else {
            return Ok(());
        };
        let tmp = journal.path.with_extension("compact");
        let mut out = Entry::ServerSalt(*inner.salt()).framed();
        let mut names: Vec<_> = inner.accounts.keys().collect();
        names.sort();
        for name in names {
            out.extend(Entry::Put(inner.accounts[name].clone()).framed());
        }
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&out)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &journal.path)?;
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .open(&journal.path)?;
        let path = journal.path.clone();
        inner.journal = Some(Journal {
            path,
            file,
            offset: out.len() as u64,
        });
        Ok(())
    }
}
