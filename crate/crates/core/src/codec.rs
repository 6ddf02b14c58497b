//! Canonical binary encoding used for every persisted or hashed record.
//!
//! Layout: a leading format byte (`0x01`), then fields in declaration order.
//! Integers are little-endian `u64`; byte strings are a `u64` length followed
//! by the bytes. The encoding is bit-exact: block hashes are computed over it.

use thiserror::Error;

pub const FORMAT_V1: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unsupported format byte {0:#04x}")]
    BadFormat(u8),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("field length {got} where {expected} was required")]
    BadLength { expected: usize, got: u64 },
    #[error("field is not valid utf-8")]
    Utf8,
    #[error("invalid value: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            buf: vec![FORMAT_V1],
        }
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.u64(b.len() as u64);
        self.buf.extend_from_slice(b);
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self, CodecError> {
        match buf.first() {
            None => Err(CodecError::UnexpectedEnd),
            Some(&FORMAT_V1) => Ok(Self { buf, pos: 1 }),
            Some(&other) => Err(CodecError::BadFormat(other)),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::UnexpectedEnd)?;
        let out = self
            .buf
            .get(self.pos..end)
            .ok_or(CodecError::UnexpectedEnd)?;
        self.pos = end;
        Ok(out)
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        let raw = self.take(8)?;
        Ok(u64::from_le_bytes(raw.try_into().expect("8 bytes")))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let len = self.u64()?;
        let len = usize::try_from(len).map_err(|_| CodecError::UnexpectedEnd)?;
        self.take(len)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let len = self.u64()?;
        if len != N as u64 {
            return Err(CodecError::BadLength {
                expected: N,
                got: len,
            });
        }
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn string(&mut self) -> Result<String, CodecError> {
        let raw = self.bytes()?;
        String::from_utf8(raw.to_vec()).map_err(|_| CodecError::Utf8)
    }

    /// Bytes consumed so far, including the format byte.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn finish(self) -> Result<(), CodecError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }
}
