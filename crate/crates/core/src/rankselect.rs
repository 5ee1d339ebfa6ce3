//! Constant-time binary rank and sampled binary select.
//!
//! The bit sequence is cut into L1 blocks of 65536 bits, each holding the
//! absolute number of ones before it as a `u64`. Every L1 block is cut into
//! L2 blocks whose `u16` counters hold the ones from the enclosing L1 start.
//! A rank query is one L1 lookup, one L2 lookup and a short word scan.
//!
//! Select keeps the position of every `sample_rate`-th one and zero. The two
//! samples around the requested ordinal bound the L1 range that is binary
//! searched; the L2 block is then binary searched and the final word is
//! located by scanning and resolved with [`select_in_word`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitvec::{partial_word, words_for, BitArray, BitSlice, WORD_BITS};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::workers;

/// Bits per L1 block. Fixed so that in-block counts fit 16 bits.
pub const L1_BITS: u64 = 65536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSelectParams {
    /// Bits per L2 block.
    pub l2_bits: u32,
    /// Every `sample_rate`-th one and zero has its position stored.
    pub sample_rate: u32,
}

impl RankSelectParams {
    /// Defaults for a standalone bit vector.
    pub const STANDALONE: Self = Self {
        l2_bits: 512,
        sample_rate: 16384,
    };

    /// Defaults for the per-level structures of a wavelet tree.
    pub const WAVELET_TREE: Self = Self {
        l2_bits: 512,
        sample_rate: 4096,
    };

    pub fn validate(&self) -> Result<()> {
        let l2 = self.l2_bits as u64;
        if l2 < WORD_BITS || !l2.is_multiple_of(WORD_BITS) || !L1_BITS.is_multiple_of(l2) {
            return Err(Error::InvalidParams(format!(
                "l2_bits = {l2} must be a multiple of {WORD_BITS} dividing {L1_BITS}"
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidParams("sample_rate must be positive".into()));
        }
        Ok(())
    }

    fn l2_per_l1(&self) -> usize {
        (L1_BITS / self.l2_bits as u64) as usize
    }
}

impl Default for RankSelectParams {
    fn default() -> Self {
        Self::STANDALONE
    }
}

/// Rank/select support for one region of a [`BitArray`].
///
/// The index does not own the bits; every query takes the [`BitSlice`] it
/// was built over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSelectIndex {
    params: RankSelectParams,
    n_bits: u64,
    total_ones: u64,
    l1_counts: Vec<u64>,
    l2_counts: Vec<u16>,
    one_samples: Vec<u64>,
    zero_samples: Vec<u64>,
}

/// Position of the `k`-th set bit (1-based) of `word`, LSB first.
///
/// Halves the word six times, keeping the half whose popcount still covers
/// `k`.
#[inline]
pub fn select_in_word(word: u64, k: u32) -> u32 {
    assert!(
        k >= 1 && k <= word.count_ones(),
        "select_in_word ordinal {k} out of range for popcount {}",
        word.count_ones()
    );
    let mut w = word;
    let mut k = k;
    let mut pos = 0;
    let mut width = 32;
    while width > 0 {
        let low = w & ((1u64 << width) - 1);
        let c = low.count_ones();
        if k > c {
            k -= c;
            w >>= width;
            pos += width;
        } else {
            w = low;
        }
        width >>= 1;
    }
    pos
}

/// Counts of one bit value; lets select share one body for ones and zeros.
trait BitKind {
    fn before_l1(idx: &RankSelectIndex, block: usize) -> u64;
    fn before_l2(idx: &RankSelectIndex, block_first: usize, l2: usize) -> u64;
    fn word(w: u64) -> u64;
    fn samples(idx: &RankSelectIndex) -> &[u64];
}

struct Ones;
struct Zeros;

impl BitKind for Ones {
    #[inline]
    fn before_l1(idx: &RankSelectIndex, block: usize) -> u64 {
        idx.l1_counts[block]
    }
    #[inline]
    fn before_l2(idx: &RankSelectIndex, _block_first: usize, l2: usize) -> u64 {
        idx.l2_counts[l2] as u64
    }
    #[inline]
    fn word(w: u64) -> u64 {
        w
    }
    fn samples(idx: &RankSelectIndex) -> &[u64] {
        &idx.one_samples
    }
}

impl BitKind for Zeros {
    #[inline]
    fn before_l1(idx: &RankSelectIndex, block: usize) -> u64 {
        block as u64 * L1_BITS - idx.l1_counts[block]
    }
    #[inline]
    fn before_l2(idx: &RankSelectIndex, block_first: usize, l2: usize) -> u64 {
        (l2 - block_first) as u64 * idx.params.l2_bits as u64 - idx.l2_counts[l2] as u64
    }
    #[inline]
    fn word(w: u64) -> u64 {
        !w
    }
    fn samples(idx: &RankSelectIndex) -> &[u64] {
        &idx.zero_samples
    }
}

impl RankSelectIndex {
    /// Builds the index over `bits` using up to `workers` threads
    /// (0 = all CPUs). The result does not depend on `workers`.
    pub fn build(bits: BitSlice<'_>, params: RankSelectParams, workers: usize) -> Result<Self> {
        params.validate()?;
        Ok(workers::install(workers, || {
            Self::build_in_pool(bits, params)
        }))
    }

    /// Build body; parallel loops run in whatever rayon pool is current.
    pub(crate) fn build_in_pool(bits: BitSlice<'_>, params: RankSelectParams) -> Self {
        let n = bits.len();
        let words = bits.words();
        let used_words = words_for(n) as usize;
        let l2_bits = params.l2_bits as usize;
        let l2_words = l2_bits / WORD_BITS as usize;
        let per_l1 = params.l2_per_l1();
        let num_l1 = n.div_ceil(L1_BITS) as usize;
        let num_l2 = n.div_ceil(l2_bits as u64) as usize;

        // Local L2 popcounts, in-block exclusive prefix sum, block totals.
        let mut l2_counts = vec![0u16; num_l2];
        let block_totals: Vec<u64> = l2_counts
            .par_chunks_mut(per_l1)
            .enumerate()
            .map(|(b, chunk)| {
                let first_word = b * per_l1 * l2_words;
                let mut acc = 0u64;
                for (j, slot) in chunk.iter_mut().enumerate() {
                    *slot = acc as u16;
                    let lo = (first_word + j * l2_words).min(used_words);
                    let hi = (lo + l2_words).min(used_words);
                    acc += words[lo..hi]
                        .iter()
                        .map(|w| w.count_ones() as u64)
                        .sum::<u64>();
                }
                acc
            })
            .collect();

        // Exclusive prefix sum over the block totals.
        let mut l1_counts = Vec::with_capacity(num_l1);
        let mut total_ones = 0u64;
        for t in block_totals {
            l1_counts.push(total_ones);
            total_ones += t;
        }

        let mut idx = Self {
            params,
            n_bits: n,
            total_ones,
            l1_counts,
            l2_counts,
            one_samples: Vec::new(),
            zero_samples: Vec::new(),
        };

        // Samples are located with the unsampled select path.
        let rate = params.sample_rate as u64;
        let one_samples: Vec<u64> = (1..=idx.total_ones() / rate)
            .into_par_iter()
            .map(|m| idx.select_in_window::<Ones>(words, m * rate, 0..num_l1))
            .collect();
        let zero_samples: Vec<u64> = (1..=idx.total_zeros() / rate)
            .into_par_iter()
            .map(|m| idx.select_in_window::<Zeros>(words, m * rate, 0..num_l1))
            .collect();
        idx.one_samples = one_samples;
        idx.zero_samples = zero_samples;
        idx
    }

    pub fn params(&self) -> RankSelectParams {
        self.params
    }

    /// Length of the indexed region in bits.
    pub fn len(&self) -> u64 {
        self.n_bits
    }

    pub fn is_empty(&self) -> bool {
        self.n_bits == 0
    }

    pub fn total_ones(&self) -> u64 {
        self.total_ones
    }

    pub fn total_zeros(&self) -> u64 {
        self.n_bits - self.total_ones
    }

    pub fn l1_counts(&self) -> &[u64] {
        &self.l1_counts
    }

    pub fn l2_counts(&self) -> &[u16] {
        &self.l2_counts
    }

    pub fn one_samples(&self) -> &[u64] {
        &self.one_samples
    }

    pub fn zero_samples(&self) -> &[u64] {
        &self.zero_samples
    }

    /// Number of ones in `[0, i)`.
    pub fn rank1(&self, bits: BitSlice<'_>, i: u64) -> Result<u64> {
        if i > self.n_bits {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_bits,
            });
        }
        Ok(self.rank1_unchecked(bits.words(), i))
    }

    /// Number of zeros in `[0, i)`.
    pub fn rank0(&self, bits: BitSlice<'_>, i: u64) -> Result<u64> {
        Ok(i - self.rank1(bits, i)?)
    }

    #[inline]
    pub(crate) fn rank1_unchecked(&self, words: &[u64], i: u64) -> u64 {
        debug_assert!(i <= self.n_bits);
        if i == self.n_bits {
            return self.total_ones;
        }
        let l2_bits = self.params.l2_bits as u64;
        let l2_i = (i / l2_bits) as usize;
        let mut result = self.l1_counts[(i / L1_BITS) as usize] + self.l2_counts[l2_i] as u64;
        let start_word = (l2_i as u64 * l2_bits / WORD_BITS) as usize;
        let end_word = (i / WORD_BITS) as usize;
        for w in &words[start_word..end_word] {
            result += w.count_ones() as u64;
        }
        let rem = (i % WORD_BITS) as u32;
        if rem != 0 {
            result += partial_word(words[end_word], rem).count_ones() as u64;
        }
        result
    }

    #[inline]
    pub(crate) fn rank0_unchecked(&self, words: &[u64], i: u64) -> u64 {
        i - self.rank1_unchecked(words, i)
    }

    /// `rank0(i)` together with bit `i`, reading the word once. Needs `i < len`.
    #[inline]
    pub(crate) fn rank0_and_bit(&self, words: &[u64], i: u64) -> (u64, bool) {
        debug_assert!(i < self.n_bits);
        let ones = self.rank1_unchecked(words, i);
        let bit = (words[(i / WORD_BITS) as usize] >> (i % WORD_BITS)) & 1 == 1;
        (i - ones, bit)
    }

    /// Position of the `k`-th one, `k` starting at 1.
    pub fn select1(&self, bits: BitSlice<'_>, k: u64) -> Result<u64> {
        if k == 0 || k > self.total_ones {
            return Err(Error::OrdinalOutOfRange {
                ordinal: k,
                count: self.total_ones,
            });
        }
        Ok(self.select_impl::<Ones>(bits.words(), k))
    }

    /// Position of the `k`-th zero, `k` starting at 1.
    pub fn select0(&self, bits: BitSlice<'_>, k: u64) -> Result<u64> {
        if k == 0 || k > self.total_zeros() {
            return Err(Error::OrdinalOutOfRange {
                ordinal: k,
                count: self.total_zeros(),
            });
        }
        Ok(self.select_impl::<Zeros>(bits.words(), k))
    }

    #[inline]
    pub(crate) fn select1_unchecked(&self, words: &[u64], k: u64) -> u64 {
        self.select_impl::<Ones>(words, k)
    }

    #[inline]
    pub(crate) fn select0_unchecked(&self, words: &[u64], k: u64) -> u64 {
        self.select_impl::<Zeros>(words, k)
    }

    fn select_impl<K: BitKind>(&self, words: &[u64], k: u64) -> u64 {
        debug_assert!(k >= 1);
        let samples = K::samples(self);
        let rate = self.params.sample_rate as u64;
        let num_l1 = self.l1_counts.len();

        // Clamp the L1 window with the samples on either side of k.
        let sample_i = (k / rate) as usize;
        let mut start_l1 = 0;
        if sample_i >= 1 {
            let pos = samples[sample_i - 1];
            if k.is_multiple_of(rate) {
                return pos;
            }
            start_l1 = (pos / L1_BITS) as usize;
        }
        let end_l1 = match samples.get(sample_i) {
            Some(&next) => ((next / L1_BITS) as usize + 1).min(num_l1),
            None => num_l1,
        };
        self.select_in_window::<K>(words, k, start_l1..end_l1)
    }

    /// Select restricted to the L1 blocks in `window`, which must contain
    /// the answer.
    fn select_in_window<K: BitKind>(
        &self,
        words: &[u64],
        k: u64,
        window: std::ops::Range<usize>,
    ) -> u64 {
        // Last L1 block with fewer than k matching bits before it.
        let block =
            window.start + partition_point(window.clone(), |b| K::before_l1(self, b) < k) - 1;
        let mut k = k - K::before_l1(self, block);

        let per_l1 = self.params.l2_per_l1();
        let first_l2 = block * per_l1;
        let end_l2 = (first_l2 + per_l1).min(self.l2_counts.len());
        let l2 = first_l2
            + partition_point(first_l2..end_l2, |j| K::before_l2(self, first_l2, j) < k)
            - 1;
        k -= K::before_l2(self, first_l2, l2);

        let mut word_i = (l2 as u64 * self.params.l2_bits as u64 / WORD_BITS) as usize;
        loop {
            let w = K::word(words[word_i]);
            let c = w.count_ones() as u64;
            if c >= k {
                return word_i as u64 * WORD_BITS + select_in_word(w, k as u32) as u64;
            }
            k -= c;
            word_i += 1;
        }
    }

    /// Bytes of the rank directory (L1 and L2 arrays) as serialized.
    pub fn rank_section_bytes(&self) -> usize {
        let mut w = ByteWriter::new();
        self.write_rank_section(&mut w);
        w.len()
    }

    /// Bytes of the select samples as serialized.
    pub fn select_section_bytes(&self) -> usize {
        let mut w = ByteWriter::new();
        self.write_select_section(&mut w);
        w.len()
    }

    fn write_rank_section(&self, w: &mut ByteWriter) {
        w.u64_array(&self.l1_counts);
        w.u16_array(&self.l2_counts);
    }

    fn write_select_section(&self, w: &mut ByteWriter) {
        w.u64_array(&self.one_samples);
        w.u64_array(&self.zero_samples);
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.u32(self.params.l2_bits);
        w.u32(self.params.sample_rate);
        w.u64(self.n_bits);
        w.u64(self.total_ones);
        self.write_rank_section(w);
        self.write_select_section(w);
    }

    /// Reads an index and checks it against the bits it claims to cover.
    pub(crate) fn read(r: &mut ByteReader<'_>, bits: BitSlice<'_>) -> Result<Self> {
        let params = RankSelectParams {
            l2_bits: r.u32()?,
            sample_rate: r.u32()?,
        };
        let n_bits = r.u64()?;
        let total_ones = r.u64()?;
        let l1_counts = r.u64_array()?;
        let l2_counts = r.u16_array()?;
        let one_samples = r.u64_array()?;
        let zero_samples = r.u64_array()?;
        params
            .validate()
            .map_err(|e| Error::Corrupt(e.to_string()))?;
        let idx = Self {
            params,
            n_bits,
            total_ones,
            l1_counts,
            l2_counts,
            one_samples,
            zero_samples,
        };
        idx.check(bits)?;
        Ok(idx)
    }

    fn check(&self, bits: BitSlice<'_>) -> Result<()> {
        let corrupt = |what: &str| Err(Error::Corrupt(format!("rank/select index: {what}")));
        if self.n_bits != bits.len() {
            return corrupt("length does not match its bit array");
        }
        if self.total_ones != bits.count_ones() {
            return corrupt("total ones does not match its bit array");
        }
        if *self != Self::build_in_pool(bits, self.params) {
            return corrupt("directory or samples do not match its bit array");
        }
        Ok(())
    }
}

/// Number of leading indices of `range` for which `pred` holds; `pred`
/// must be true then false over the range.
#[inline]
fn partition_point(range: std::ops::Range<usize>, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (range.start, range.end);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo - range.start
}

/// A bit vector that owns its bits together with rank/select support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSelectBitVec {
    bits: BitArray,
    index: RankSelectIndex,
}

impl RankSelectBitVec {
    pub fn new(bits: BitArray, params: RankSelectParams, workers: usize) -> Result<Self> {
        if bits.num_regions() != 1 {
            return Err(Error::InvalidParams(
                "a rank/select bit vector needs a single-region bit array".into(),
            ));
        }
        let index = RankSelectIndex::build(bits.region(0), params, workers)?;
        Ok(Self { bits, index })
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(
        bits: I,
        params: RankSelectParams,
    ) -> Result<Self> {
        Self::new(BitArray::from_bits(bits), params, 1)
    }

    pub fn len(&self) -> u64 {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn bits(&self) -> BitSlice<'_> {
        self.bits.region(0)
    }

    pub fn index(&self) -> &RankSelectIndex {
        &self.index
    }

    pub fn get(&self, i: u64) -> Result<bool> {
        self.bits.get_bit(i)
    }

    pub fn rank1(&self, i: u64) -> Result<u64> {
        self.index.rank1(self.bits(), i)
    }

    pub fn rank0(&self, i: u64) -> Result<u64> {
        self.index.rank0(self.bits(), i)
    }

    pub fn select1(&self, k: u64) -> Result<u64> {
        self.index.select1(self.bits(), k)
    }

    pub fn select0(&self, k: u64) -> Result<u64> {
        self.index.select0(self.bits(), k)
    }

    /// Serialized bytes of the bit data (padding included).
    pub fn bit_bytes(&self) -> usize {
        self.bits.words().len() * 8
    }

    /// Rank directory overhead relative to the bit length, from serialized sizes.
    pub fn rank_overhead(&self) -> f64 {
        self.index.rank_section_bytes() as f64 * 8.0 / self.len() as f64
    }

    /// Select sample overhead relative to the bit length, from serialized sizes.
    pub fn select_overhead(&self) -> f64 {
        self.index.select_section_bytes() as f64 * 8.0 / self.len() as f64
    }
}
