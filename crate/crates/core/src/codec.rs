//! Little-endian fixed-width encoding helpers for the index file.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    /// Length-prefixed `u64` array.
    pub fn u64_array(&mut self, vs: &[u64]) {
        self.u64(vs.len() as u64);
        self.buf.reserve(vs.len() * 8);
        for &v in vs {
            self.u64(v);
        }
    }

    /// Length-prefixed `u16` array.
    pub fn u16_array(&mut self, vs: &[u16]) {
        self.u64(vs.len() as u64);
        self.buf.reserve(vs.len() * 2);
        for &v in vs {
            self.u16(v);
        }
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads an element count and checks that `width`-byte elements fit in
    /// what is left, so corrupt lengths fail as truncation instead of
    /// triggering huge allocations.
    pub fn count(&mut self, width: usize) -> Result<usize> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| Error::Truncated)?;
        if n.checked_mul(width).is_none_or(|b| b > self.buf.len()) {
            return Err(Error::Truncated);
        }
        Ok(n)
    }

    pub fn u64_array(&mut self) -> Result<Vec<u64>> {
        let n = self.count(8)?;
        self.u64_values(n)
    }

    pub fn u64_values(&mut self, n: usize) -> Result<Vec<u64>> {
        let bytes = self.take(n.checked_mul(8).ok_or(Error::Truncated)?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u16_array(&mut self) -> Result<Vec<u16>> {
        let n = self.count(2)?;
        let bytes = self.take(n * 2)?;
        Ok(bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
