//! Word-packed bit storage.
//!
//! Bits are packed into 64-bit words, least significant bit first: bit `j`
//! lives in word `j / 64` at position `j % 64`. A [`BitArray`] holds one or
//! more regions in a single allocation; each region starts on a 1024-bit
//! (128-byte) boundary and every bit past a region's end is kept zero.

use crate::error::{Error, Result};

/// Bits per storage word.
pub const WORD_BITS: u64 = 64;
/// Alignment of every region start, in bits.
pub const ALIGN_BITS: u64 = 1024;

const ALIGN_WORDS: u64 = ALIGN_BITS / WORD_BITS;

/// Keeps the `k` least significant bits of `word`, clearing the rest.
#[inline]
pub fn partial_word(word: u64, k: u32) -> u64 {
    debug_assert!(k <= 64);
    if k >= 64 {
        word
    } else {
        word & ((1u64 << k) - 1)
    }
}

#[inline]
pub(crate) fn words_for(bits: u64) -> u64 {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn aligned_words(bits: u64) -> Option<u64> {
    words_for(bits).checked_next_multiple_of(ALIGN_WORDS)
}

/// A contiguous bit array split into aligned regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitArray {
    words: Vec<u64>,
    region_offsets: Vec<u64>,
    region_lens: Vec<u64>,
}

impl BitArray {
    /// Allocates a zeroed array with one region per entry of `region_bit_lengths`.
    pub fn new(region_bit_lengths: &[u64]) -> Result<Self> {
        let (offsets, total_words) = layout(region_bit_lengths)?;
        let total_words = usize::try_from(total_words).map_err(|_| Error::Overflow)?;
        Ok(Self {
            words: vec![0; total_words],
            region_offsets: offsets,
            region_lens: region_bit_lengths.to_vec(),
        })
    }

    /// Single-region array holding `bits` in order.
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0u64;
        for b in bits {
            if len.is_multiple_of(WORD_BITS) {
                words.push(0);
            }
            if b {
                *words.last_mut().unwrap() |= 1 << (len % WORD_BITS);
            }
            len += 1;
        }
        Self::from_words(words, len).expect("length matches word count")
    }

    /// Single-region array over `words`, keeping the first `len` bits.
    ///
    /// Bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: u64) -> Result<Self> {
        if words_for(len) > words.len() as u64 {
            return Err(Error::InvalidParams(format!(
                "{len} bits do not fit in {} words",
                words.len()
            )));
        }
        let (offsets, total_words) = layout(&[len])?;
        words.resize(total_words as usize, 0);
        let full = (len / WORD_BITS) as usize;
        if !len.is_multiple_of(WORD_BITS) {
            words[full] = partial_word(words[full], (len % WORD_BITS) as u32);
            words[full + 1..].fill(0);
        } else {
            words[full..].fill(0);
        }
        Ok(Self {
            words,
            region_offsets: offsets,
            region_lens: vec![len],
        })
    }

    /// Rebuilds an array from serialized words, checking layout and padding.
    pub(crate) fn from_raw_parts(words: Vec<u64>, region_lens: Vec<u64>) -> Result<Self> {
        let (offsets, total_words) = layout(&region_lens)?;
        if total_words != words.len() as u64 {
            return Err(Error::Corrupt(format!(
                "bit array has {} words, layout needs {total_words}",
                words.len()
            )));
        }
        let ba = Self {
            words,
            region_offsets: offsets,
            region_lens,
        };
        for r in 0..ba.num_regions() {
            let start = (ba.region_offsets[r] / WORD_BITS) as usize;
            let end = ba.region_word_end(r);
            let len = ba.region_lens[r];
            let used = words_for(len) as usize;
            let tail_nonzero = ba.words[start + used..end].iter().any(|&w| w != 0)
                || (!len.is_multiple_of(WORD_BITS)
                    && ba.words[start + used - 1] >> (len % WORD_BITS) != 0);
            if tail_nonzero {
                return Err(Error::Corrupt(format!("padding bits set in region {r}")));
            }
        }
        Ok(ba)
    }

    /// One past the last valid bit position.
    pub fn num_bits(&self) -> u64 {
        match (self.region_offsets.last(), self.region_lens.last()) {
            (Some(off), Some(len)) => off + len,
            _ => 0,
        }
    }

    pub fn num_regions(&self) -> usize {
        self.region_lens.len()
    }

    /// Bit offset of each region start.
    pub fn region_offsets(&self) -> &[u64] {
        &self.region_offsets
    }

    pub fn region_len(&self, region: usize) -> u64 {
        self.region_lens[region]
    }

    pub fn region_lens(&self) -> &[u64] {
        &self.region_lens
    }

    /// All storage words, padding included.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn region_word_end(&self, region: usize) -> usize {
        match self.region_offsets.get(region + 1) {
            Some(next) => (next / WORD_BITS) as usize,
            None => self.words.len(),
        }
    }

    /// Read-only view of one region.
    pub fn region(&self, region: usize) -> BitSlice<'_> {
        let start = (self.region_offsets[region] / WORD_BITS) as usize;
        BitSlice {
            words: &self.words[start..self.region_word_end(region)],
            len: self.region_lens[region],
        }
    }

    /// Mutable words of one region, padding included. Callers must leave
    /// bits past the region length zero.
    pub(crate) fn region_words_mut(&mut self, region: usize) -> &mut [u64] {
        let start = (self.region_offsets[region] / WORD_BITS) as usize;
        let end = self.region_word_end(region);
        &mut self.words[start..end]
    }

    fn check_index(&self, j: u64) -> Result<()> {
        // region whose start is the last one <= j
        let r = self.region_offsets.partition_point(|&off| off <= j);
        let in_range = r > 0 && j < self.region_offsets[r - 1] + self.region_lens[r - 1];
        if in_range {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: j,
                len: self.num_bits(),
            })
        }
    }

    pub fn get_bit(&self, j: u64) -> Result<bool> {
        self.check_index(j)?;
        Ok((self.words[(j / WORD_BITS) as usize] >> (j % WORD_BITS)) & 1 == 1)
    }

    pub fn set_bit(&mut self, j: u64, value: bool) -> Result<()> {
        self.check_index(j)?;
        let w = &mut self.words[(j / WORD_BITS) as usize];
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
        Ok(())
    }

    /// The whole word containing bit `j`.
    pub fn word_at_bit(&self, j: u64) -> Result<u64> {
        self.check_index(j)?;
        Ok(self.words[(j / WORD_BITS) as usize])
    }
}

/// Aligned region offsets and the total word count for a region layout.
fn layout(region_bit_lengths: &[u64]) -> Result<(Vec<u64>, u64)> {
    let mut offsets = Vec::with_capacity(region_bit_lengths.len());
    let mut words = 0u64;
    for &len in region_bit_lengths {
        offsets.push(words.checked_mul(WORD_BITS).ok_or(Error::Overflow)?);
        words = words
            .checked_add(aligned_words(len).ok_or(Error::Overflow)?)
            .ok_or(Error::Overflow)?;
    }
    words.checked_mul(WORD_BITS).ok_or(Error::Overflow)?;
    Ok((offsets, words))
}

/// Borrowed view of one region: its words (padding included) and bit length.
#[derive(Debug, Clone, Copy)]
pub struct BitSlice<'a> {
    words: &'a [u64],
    len: u64,
}

impl<'a> BitSlice<'a> {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    /// Bit `j`; `j` must be below `len`.
    #[inline]
    pub fn get(&self, j: u64) -> bool {
        debug_assert!(j < self.len);
        (self.words[(j / WORD_BITS) as usize] >> (j % WORD_BITS)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + 'a {
        let words = self.words;
        (0..self.len).map(move |j| (words[(j / WORD_BITS) as usize] >> (j % WORD_BITS)) & 1 == 1)
    }
}
