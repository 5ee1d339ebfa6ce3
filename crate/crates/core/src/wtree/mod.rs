//! Level-wise wavelet tree.
//!
//! All nodes of a level are concatenated into one bit array region, and the
//! exclusive cumulative histogram of the text gives the start of every node:
//! the node covering symbols `[a, b)` starts at bit `cum_hist[a]` of its
//! level. The number of zeros before each node start is computed once at
//! construction, so every query step costs a single binary rank or select.
//!
//! Alphabets that are not a power of two use the reduced shape from
//! [`create_codes`](crate::alphabet::create_codes): node `[a, b)` splits at
//! `a + prev_pow_two(b - a)` and every internal node has two children.

mod build;
mod io;

use std::collections::HashMap;

use serde::Serialize;

pub use build::{fill_level, stable_sort_by_prefix, BuildOptions};
pub use io::{SizeReport, FORMAT_VERSION, MAGIC};

use crate::alphabet::{prev_pow_two, AlphabetMap, CodeTable, Symbol};
use crate::bitvec::{BitArray, BitSlice};
use crate::error::{Error, Result};
use crate::rankselect::RankSelectIndex;

/// Width of the original symbols, recorded in the index file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolWidth {
    U8,
    U16,
}

impl SymbolWidth {
    pub fn bits(self) -> u32 {
        match self {
            SymbolWidth::U8 => 8,
            SymbolWidth::U16 => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveletTree {
    n: u64,
    sigma: u64,
    num_levels: u32,
    width: SymbolWidth,
    alphabet: AlphabetMap,
    codes: CodeTable,
    level_sizes: Vec<u64>,
    cum_hist: Vec<u64>,
    levels: BitArray,
    rs: Vec<RankSelectIndex>,
    node_rank0: Vec<HashMap<u32, u64>>,
}

impl WaveletTree {
    /// Text length.
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    pub fn num_levels(&self) -> u32 {
        self.num_levels
    }

    pub fn symbol_width(&self) -> SymbolWidth {
        self.width
    }

    pub fn alphabet(&self) -> &AlphabetMap {
        &self.alphabet
    }

    pub fn codes(&self) -> &CodeTable {
        &self.codes
    }

    pub fn level_sizes(&self) -> &[u64] {
        &self.level_sizes
    }

    /// Exclusive cumulative histogram over minimal symbols, σ + 1 entries.
    pub fn cum_hist(&self) -> &[u64] {
        &self.cum_hist
    }

    pub fn levels(&self) -> &BitArray {
        &self.levels
    }

    pub fn level_bits(&self, level: usize) -> BitSlice<'_> {
        self.levels.region(level)
    }

    pub fn level_index(&self, level: usize) -> &RankSelectIndex {
        &self.rs[level]
    }

    /// Total bits stored over all levels.
    pub fn stored_bits(&self) -> u64 {
        self.level_sizes.iter().sum()
    }

    /// Precomputed rank0 at the start of the node beginning at minimal
    /// symbol `start` on `level`, if that node is internal.
    pub fn node_rank0(&self, level: usize, start: u32) -> Option<u64> {
        self.node_rank0.get(level)?.get(&start).copied()
    }

    /// Occurrences of `symbol` in the text.
    pub fn occurrences(&self, symbol: Symbol) -> Result<u64> {
        let c = self.id(symbol)? as usize;
        Ok(self.cum_hist[c + 1] - self.cum_hist[c])
    }

    #[inline]
    fn id(&self, symbol: Symbol) -> Result<u32> {
        self.alphabet
            .id(symbol)
            .ok_or(Error::SymbolNotInAlphabet(symbol))
    }

    #[inline]
    fn start_rank0(&self, level: usize, start: u64) -> u64 {
        self.node_rank0[level][&(start as u32)]
    }

    /// Symbol at position `i`.
    pub fn access(&self, i: u64) -> Result<Symbol> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        Ok(self.alphabet.symbol(self.access_id(i)))
    }

    /// Minimal symbol at position `i < n`. Stops as soon as the node covers
    /// at most two symbols, where one bit read decides.
    pub(crate) fn access_id(&self, i: u64) -> u32 {
        let mut start = 0u64;
        let mut end = self.sigma;
        let mut idx = i;
        for l in 0..self.num_levels as usize {
            let counts = self.cum_hist[start as usize];
            let width = end - start;
            let words = self.levels.region(l).words();
            if width <= 2 {
                let go_right = width > 1 && {
                    let p = counts + idx;
                    (words[(p / 64) as usize] >> (p % 64)) & 1 == 1
                };
                return (start + go_right as u64) as u32;
            }
            let zeros_before_node = self.start_rank0(l, start);
            let (zeros_before_pos, bit) = self.rs[l].rank0_and_bit(words, counts + idx);
            let diff = prev_pow_two(width);
            if bit {
                idx -= zeros_before_pos - zeros_before_node;
                start += diff;
            } else {
                idx = zeros_before_pos - zeros_before_node;
                end = start + diff;
            }
        }
        start as u32
    }

    /// Access that always descends to the leaf and computes every node-start
    /// rank on the fly. Reference for the early-exit path.
    #[cfg(any(test, feature = "testing"))]
    pub fn access_full_depth(&self, i: u64) -> Result<Symbol> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        let (mut start, mut end, mut idx) = (0u64, self.sigma, i);
        let mut l = 0;
        while end - start > 1 {
            let bits = self.levels.region(l);
            let counts = self.cum_hist[start as usize];
            let z_node = self.rs[l].rank0(bits, counts)?;
            let z_pos = self.rs[l].rank0(bits, counts + idx)?;
            let diff = prev_pow_two(end - start);
            if bits.get(counts + idx) {
                idx -= z_pos - z_node;
                start += diff;
            } else {
                idx = z_pos - z_node;
                end = start + diff;
            }
            l += 1;
        }
        Ok(self.alphabet.symbol(start as u32))
    }

    /// Occurrences of `symbol` in `[0, i)`.
    pub fn rank(&self, symbol: Symbol, i: u64) -> Result<u64> {
        let c = self.id(symbol)?;
        if i > self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        Ok(self.rank_id(c, i))
    }

    pub(crate) fn rank_id(&self, c: u32, i: u64) -> u64 {
        let c = c as u64;
        let len = self.codes.code(c as u32).len as usize;
        let (mut start, mut end) = (0u64, self.sigma);
        let mut result = i;
        for l in 0..len {
            let counts = self.cum_hist[start as usize];
            let zeros_before_node = self.start_rank0(l, start);
            let words = self.levels.region(l).words();
            let zeros_before_pos = self.rs[l].rank0_unchecked(words, counts + result);
            let split = start + prev_pow_two(end - start);
            if c < split {
                result = zeros_before_pos - zeros_before_node;
                end = split;
            } else {
                result -= zeros_before_pos - zeros_before_node;
                start = split;
            }
        }
        result
    }

    /// Position of the `k`-th occurrence of `symbol`, `k` starting at 1.
    pub fn select(&self, symbol: Symbol, k: u64) -> Result<u64> {
        let c = self.id(symbol)?;
        let count = self.cum_hist[c as usize + 1] - self.cum_hist[c as usize];
        if k == 0 || k > count {
            return Err(Error::OrdinalOutOfRange { ordinal: k, count });
        }
        Ok(self.select_id(c, k))
    }

    /// Walks from the leaf of `c` up to the root, turning the 1-based
    /// ordinal inside each node into one inside its parent.
    pub(crate) fn select_id(&self, c: u32, k: u64) -> u64 {
        let code = self.codes.code(c);
        let mut result = k;
        for l in (0..code.len as u32).rev() {
            let node = self.node_start(c, l);
            let counts = self.cum_hist[node as usize];
            let zeros_before_node = self.start_rank0(l as usize, node as u64);
            let words = self.levels.region(l as usize).words();
            let rs = &self.rs[l as usize];
            let pos = if self.codes.bit(code, l) {
                let ones_before_node = counts - zeros_before_node;
                rs.select1_unchecked(words, ones_before_node + result)
            } else {
                rs.select0_unchecked(words, zeros_before_node + result)
            };
            result = pos + 1 - counts;
        }
        result - 1
    }

    /// First minimal symbol of the level-`level` node containing `c`.
    ///
    /// Power-of-two alphabets clear the low `num_levels - level` bits of
    /// `c`. Otherwise, nodes on the right spine (path of all ones) are found
    /// by stepping `prev_pow_two` from the left edge; any other node starts
    /// at `c` with its low `code_len - level` bits cleared.
    ///
    /// # Panics
    ///
    /// If `level` exceeds the code length of `c`.
    pub fn node_start(&self, c: u32, level: u32) -> u32 {
        if level == 0 {
            return 0;
        }
        if self.codes.is_empty() {
            assert!(level <= self.num_levels, "level {level} below leaf of {c}");
            let node_len = 1u32 << (self.num_levels - level);
            return c & !(node_len - 1);
        }
        let code = self.codes.code(c);
        assert!(level <= code.len as u32, "level {level} below leaf of {c}");
        let top = code.value >> (self.num_levels - level);
        if top.count_ones() == level {
            let mut start = 0u64;
            for _ in 0..level {
                start += prev_pow_two(self.sigma - start);
            }
            start as u32
        } else {
            c & !((1u32 << (code.len as u32 - level)) - 1)
        }
    }
}
