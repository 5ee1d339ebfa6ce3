//! Minimal alphabets, histograms and the prefix codes that give the
//! reduced tree shape.
//!
//! A text over arbitrary 16-bit symbols is remapped onto `[0, σ)` keeping
//! symbol order. When σ is not a power of two, the symbols at or above the
//! previous power of two get shorter codes so that every internal node of
//! the tree has two children. Code lengths never increase with the symbol,
//! which keeps terminated codes at the end of every level.

use rayon::prelude::*;

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

/// Original (unmapped) text symbol.
pub type Symbol = u16;

/// Largest power of two strictly below `x`; 1 for `x <= 2`.
#[inline]
pub fn prev_pow_two(x: u64) -> u64 {
    if x <= 2 {
        1
    } else {
        1 << (63 - (x - 1).leading_zeros())
    }
}

/// Bits needed for ids in `[0, sigma)`: `ceil(lg sigma)`.
#[inline]
pub fn bits_for(sigma: u64) -> u32 {
    if sigma <= 1 {
        0
    } else {
        64 - (sigma - 1).leading_zeros()
    }
}

/// Order-preserving bijection between the symbols of a text and `[0, σ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphabetMap {
    symbols: Vec<Symbol>,
    ids: Vec<u32>,
}

const NO_ID: u32 = u32::MAX;

impl AlphabetMap {
    /// Map over the given symbols; duplicates are dropped.
    pub fn from_symbols(symbols: &[Symbol]) -> Result<Self> {
        let mut sorted = symbols.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self::from_sorted(sorted))
    }

    fn from_sorted(symbols: Vec<Symbol>) -> Self {
        let max = *symbols.last().unwrap() as usize;
        let mut ids = vec![NO_ID; max + 1];
        for (id, &s) in symbols.iter().enumerate() {
            ids[s as usize] = id as u32;
        }
        Self { symbols, ids }
    }

    /// Alphabet size σ.
    pub fn sigma(&self) -> u64 {
        self.symbols.len() as u64
    }

    /// Original symbols in ascending order; index = minimal id.
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    #[inline]
    pub fn id(&self, symbol: Symbol) -> Option<u32> {
        match self.ids.get(symbol as usize) {
            Some(&id) if id != NO_ID => Some(id),
            _ => None,
        }
    }

    #[inline]
    pub fn symbol(&self, id: u32) -> Symbol {
        self.symbols[id as usize]
    }

    /// Rewrites `text` in minimal ids.
    pub fn map_text(&self, text: &[Symbol]) -> Result<Vec<u32>> {
        text.par_iter()
            .map(|&s| self.id(s).ok_or(Error::SymbolNotInAlphabet(s)))
            .collect()
    }

    pub(crate) fn write(&self, w: &mut ByteWriter, wide: bool) {
        for &s in &self.symbols {
            if wide {
                w.u16(s);
            } else {
                w.u8(s as u8);
            }
        }
    }

    pub(crate) fn read(r: &mut ByteReader<'_>, sigma: usize, wide: bool) -> Result<Self> {
        let width = if wide { 2 } else { 1 };
        if sigma.checked_mul(width).is_none_or(|b| b > r.remaining()) {
            return Err(Error::Truncated);
        }
        let mut symbols = Vec::with_capacity(sigma);
        for _ in 0..sigma {
            symbols.push(if wide { r.u16()? } else { r.u8()? as u16 });
        }
        if symbols.is_empty() || symbols.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Corrupt("alphabet is not strictly increasing".into()));
        }
        Ok(Self::from_sorted(symbols))
    }
}

/// Remaps `text` onto `[0, σ)`, σ being the number of distinct symbols.
pub fn minimal_alphabet(text: &[Symbol]) -> Result<(Vec<u32>, AlphabetMap)> {
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut present = vec![false; Symbol::MAX as usize + 1];
    for &s in text {
        present[s as usize] = true;
    }
    let symbols: Vec<Symbol> = (0..=Symbol::MAX).filter(|&s| present[s as usize]).collect();
    let map = AlphabetMap::from_sorted(symbols);
    let mapped = map.map_text(text)?;
    Ok((mapped, map))
}

/// A tree path: `len` bits read MSB first from a `total_bits`-wide field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Code {
    pub value: u32,
    pub len: u8,
}

/// Codes of the symbols whose plain binary would leave single-child nodes.
///
/// Only symbols in `[prev_pow_two(σ), σ)` are stored; smaller symbols use
/// their plain binary value with full length. Empty for power-of-two σ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTable {
    sigma: u64,
    total_bits: u32,
    first_coded: u64,
    codes: Vec<Code>,
}

impl CodeTable {
    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    /// Width of every code word: `ceil(lg σ)`, also the number of levels.
    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// First symbol with a stored code (meaningless when empty).
    pub fn first_coded(&self) -> u64 {
        self.first_coded
    }

    /// Stored codes for symbols `first_coded()..σ`.
    pub fn codes(&self) -> &[Code] {
        &self.codes
    }

    /// Code of minimal symbol `c`.
    #[inline]
    pub fn code(&self, c: u32) -> Code {
        let c = c as u64;
        if !self.codes.is_empty() && c >= self.first_coded {
            self.codes[(c - self.first_coded) as usize]
        } else {
            Code {
                value: c as u32,
                len: self.total_bits as u8,
            }
        }
    }

    /// Path bit of `code` at tree level `level` (0 = root).
    #[inline]
    pub fn bit(&self, code: Code, level: u32) -> bool {
        (code.value >> (self.total_bits - 1 - level)) & 1 == 1
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.u32(self.codes.len() as u32);
        for c in &self.codes {
            w.u32(c.value);
            w.u8(c.len);
        }
    }

    /// Reads a table and checks it is the one `create_codes(sigma)` yields.
    pub(crate) fn read(r: &mut ByteReader<'_>, sigma: u64) -> Result<Self> {
        let n = r.u32()? as usize;
        if n.checked_mul(5).is_none_or(|b| b > r.remaining()) {
            return Err(Error::Truncated);
        }
        let mut codes = Vec::with_capacity(n);
        for _ in 0..n {
            codes.push(Code {
                value: r.u32()?,
                len: r.u8()?,
            });
        }
        let expected = create_codes(sigma)?;
        if expected.codes != codes {
            return Err(Error::Corrupt(
                "code table does not match alphabet size".into(),
            ));
        }
        Ok(expected)
    }
}

/// Builds the code table for an alphabet of `sigma` symbols.
///
/// Walks the right spine of the plain-binary tree, stripping complete
/// power-of-two subtrees. What remains past the strip either collapses to
/// a single all-ones code or is re-coded as a block of
/// `ceil(lg remaining)`-bit suffixes under the stripped prefix; the walk
/// repeats on the block until codes of length one are reached.
pub fn create_codes(sigma: u64) -> Result<CodeTable> {
    if sigma == 0 {
        return Err(Error::EmptyAlphabet);
    }
    let total_bits = bits_for(sigma);
    let first_coded = prev_pow_two(sigma);
    if sigma.is_power_of_two() {
        return Ok(CodeTable {
            sigma,
            total_bits,
            first_coded,
            codes: Vec::new(),
        });
    }

    // Entries start as plain binary so the prefix mask below is defined.
    let mut codes: Vec<Code> = (first_coded..sigma)
        .map(|s| Code {
            value: s as u32,
            len: total_bits as u8,
        })
        .collect();
    let slot = |s: u64| (s - first_coded) as usize;

    let mut start_bit = 0u32;
    let mut start_symbol = 0u64;
    let mut code_len = total_bits;
    let mut num_codes = sigma;
    loop {
        for i in (1..code_len).rev() {
            let pow_two = 1u64 << i;
            if num_codes <= pow_two {
                break;
            }
            num_codes -= pow_two;
            start_symbol += pow_two;
            start_bit += 1;
        }

        if num_codes == 1 {
            code_len = 1;
            codes[slot(sigma - 1)] = Code {
                value: ((1u32 << start_bit) - 1) << (total_bits - start_bit),
                len: start_bit as u8,
            };
        } else {
            code_len = bits_for(num_codes);
            let prefix_mask = !((1u32 << (total_bits - start_bit)) - 1);
            for s in (sigma - num_codes)..sigma {
                let local = ((s - start_symbol) as u32) << (total_bits - start_bit - code_len);
                let c = &mut codes[slot(s)];
                c.value = local + (prefix_mask & c.value);
                c.len = (start_bit + code_len) as u8;
            }
        }
        if code_len == 1 {
            break;
        }
    }

    Ok(CodeTable {
        sigma,
        total_bits,
        first_coded,
        codes,
    })
}

/// Symbol counts of a text over `[0, σ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Exclusive prefix sum with σ + 1 entries; the last entry is n.
    pub fn cumulative(&self) -> Vec<u64> {
        let mut cum = Vec::with_capacity(self.counts.len() + 1);
        let mut acc = 0;
        cum.push(0);
        for &c in &self.counts {
            acc += c;
            cum.push(acc);
        }
        cum
    }
}

const ENCODE_CHUNK: usize = 1 << 16;

/// Replaces every symbol by its code word and counts symbol occurrences.
///
/// Chunks are histogrammed independently and merged, so the result does not
/// depend on how the work is split.
pub fn encode_and_histogram(text: &[u32], codes: &CodeTable) -> Result<(Vec<u32>, Histogram)> {
    let sigma = codes.sigma();
    let mut encoded = vec![0u32; text.len()];
    let partials: Vec<Result<Vec<u64>>> = encoded
        .par_chunks_mut(ENCODE_CHUNK)
        .zip(text.par_chunks(ENCODE_CHUNK))
        .map(|(out, input)| {
            let mut local = vec![0u64; sigma as usize];
            for (o, &c) in out.iter_mut().zip(input) {
                if c as u64 >= sigma {
                    return Err(Error::InvalidParams(format!(
                        "minimal symbol {c} outside alphabet of size {sigma}"
                    )));
                }
                local[c as usize] += 1;
                *o = codes.code(c).value;
            }
            Ok(local)
        })
        .collect();
    let mut counts = vec![0u64; sigma as usize];
    for p in partials {
        for (acc, c) in counts.iter_mut().zip(p?) {
            *acc += c;
        }
    }
    Ok((encoded, Histogram { counts }))
}

/// Bits stored at each level: symbols whose code is longer than the level.
pub fn level_sizes(codes: &CodeTable, hist: &Histogram) -> Vec<u64> {
    let levels = codes.total_bits() as usize;
    let mut sizes = vec![0u64; levels];
    for (c, &count) in hist.counts().iter().enumerate() {
        let len = codes.code(c as u32).len as usize;
        for s in &mut sizes[..len] {
            *s += count;
        }
    }
    sizes
}
