use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::build::internal_node_starts;
use super::{SymbolWidth, WaveletTree};
use crate::alphabet::{self, bits_for, AlphabetMap, CodeTable, Histogram};
use crate::bitvec::BitArray;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::rankselect::RankSelectIndex;

pub const MAGIC: &[u8; 8] = b"WTIDX001";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_WIDE_SYMBOLS: u32 = 1;

/// Storage breakdown taken from the serialized sections of an index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub n: u64,
    pub sigma: u64,
    pub num_levels: u32,
    /// Bits stored over all levels, padding excluded.
    pub level_bits: u64,
    pub bit_array_bytes: u64,
    pub rank_bytes: u64,
    pub select_bytes: u64,
    pub node_rank_bytes: u64,
    pub total_bytes: u64,
    pub bits_per_symbol: f64,
    /// Rank directory bits over level bits, in percent.
    pub rank_overhead_pct: f64,
    /// Select sample bits over level bits, in percent.
    pub select_overhead_pct: f64,
}

impl WaveletTree {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.write_header(&mut w);
        self.write_body(&mut w);
        w.into_inner()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn write_to(&self, mut sink: impl Write) -> Result<()> {
        sink.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn read_from(mut source: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        source.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    fn wide(&self) -> bool {
        self.width == SymbolWidth::U16
    }

    fn write_header(&self, w: &mut ByteWriter) {
        w.bytes(MAGIC);
        w.u32(FORMAT_VERSION);
        w.u32(if self.wide() { FLAG_WIDE_SYMBOLS } else { 0 });
        w.u64(self.n);
        w.u64(self.sigma);
        w.u32(self.num_levels);
        self.alphabet.write(w, self.wide());
        self.codes.write(w);
        for &s in &self.level_sizes {
            w.u64(s);
        }
        for &c in &self.cum_hist {
            w.u64(c);
        }
    }

    fn write_body(&self, w: &mut ByteWriter) {
        w.u64_array(self.levels.words());
        for rs in &self.rs {
            rs.write(w);
        }
        self.write_node_ranks(w);
    }

    fn write_node_ranks(&self, w: &mut ByteWriter) {
        for level in &self.node_rank0 {
            let mut entries: Vec<(u32, u64)> = level.iter().map(|(&k, &v)| (k, v)).collect();
            entries.sort_unstable();
            w.u32(entries.len() as u32);
            for (start, rank) in entries {
                w.u32(start);
                w.u64(rank);
            }
        }
    }

    /// Parses and validates an index produced by [`WaveletTree::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(MAGIC.len()).map_err(|_| Error::BadMagic)? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let flags = r.u32()?;
        if flags & !FLAG_WIDE_SYMBOLS != 0 {
            return Err(Error::Corrupt(format!("unknown flags {flags:#x}")));
        }
        let width = if flags & FLAG_WIDE_SYMBOLS != 0 {
            SymbolWidth::U16
        } else {
            SymbolWidth::U8
        };
        let n = r.u64()?;
        let sigma = r.u64()?;
        let num_levels = r.u32()?;
        let max_sigma = 1u64 << width.bits();
        if n == 0 || sigma == 0 || sigma > max_sigma {
            return Err(Error::Corrupt(format!("n = {n}, sigma = {sigma}")));
        }
        if num_levels != bits_for(sigma) {
            return Err(Error::Corrupt(format!(
                "{num_levels} levels for alphabet of {sigma}"
            )));
        }
        let alphabet = AlphabetMap::read(&mut r, sigma as usize, width == SymbolWidth::U16)?;
        let codes = CodeTable::read(&mut r, sigma)?;
        let level_sizes = r.u64_values(num_levels as usize)?;
        let cum_hist = r.u64_values(sigma as usize + 1)?;
        if cum_hist[0] != 0
            || cum_hist[sigma as usize] != n
            || cum_hist.windows(2).any(|p| p[0] > p[1])
        {
            return Err(Error::Corrupt("cumulative histogram".into()));
        }
        let hist = Histogram::from_counts(cum_hist.windows(2).map(|p| p[1] - p[0]).collect());
        if alphabet::level_sizes(&codes, &hist) != level_sizes {
            return Err(Error::Corrupt("level sizes do not match histogram".into()));
        }

        let words = r.u64_array()?;
        let levels = BitArray::from_raw_parts(words, level_sizes.clone())?;
        let rs = (0..num_levels as usize)
            .map(|l| RankSelectIndex::read(&mut r, levels.region(l)))
            .collect::<Result<Vec<_>>>()?;
        if rs.windows(2).any(|p| p[0].params() != p[1].params()) {
            return Err(Error::Corrupt(
                "levels use different rank/select parameters".into(),
            ));
        }

        let expected_starts = internal_node_starts(sigma, num_levels);
        let mut node_rank0 = Vec::with_capacity(num_levels as usize);
        for (l, starts) in expected_starts.iter().enumerate() {
            let count = r.u32()? as usize;
            if count != starts.len() {
                return Err(Error::Corrupt(format!("level {l} node count")));
            }
            let words = levels.region(l).words();
            let mut map = HashMap::with_capacity(count);
            for &want in starts {
                let start = r.u32()?;
                let rank = r.u64()?;
                if start != want || rank != rs[l].rank0_unchecked(words, cum_hist[start as usize]) {
                    return Err(Error::Corrupt(format!("node rank at level {l}")));
                }
                map.insert(start, rank);
            }
            node_rank0.push(map);
        }
        if r.remaining() != 0 {
            return Err(Error::Corrupt(format!("{} trailing bytes", r.remaining())));
        }
        check_node_splits(sigma, &cum_hist, &levels, &rs)?;
        Ok(WaveletTree {
            n,
            sigma,
            num_levels,
            width,
            alphabet,
            codes,
            level_sizes,
            cum_hist,
            levels,
            rs,
            node_rank0,
        })
    }

    pub fn size_report(&self) -> SizeReport {
        let mut w = ByteWriter::new();
        w.u64_array(self.levels.words());
        let bit_array_bytes = w.len() as u64;
        let rank_bytes: u64 = self.rs.iter().map(|r| r.rank_section_bytes() as u64).sum();
        let select_bytes: u64 = self
            .rs
            .iter()
            .map(|r| r.select_section_bytes() as u64)
            .sum();
        let mut w = ByteWriter::new();
        self.write_node_ranks(&mut w);
        let node_rank_bytes = w.len() as u64;
        let level_bits = self.stored_bits();
        let total_bytes = self.to_bytes().len() as u64;
        let pct = |bytes: u64| {
            if level_bits == 0 {
                0.0
            } else {
                bytes as f64 * 8.0 / level_bits as f64 * 100.0
            }
        };
        SizeReport {
            n: self.n,
            sigma: self.sigma,
            num_levels: self.num_levels,
            level_bits,
            bit_array_bytes,
            rank_bytes,
            select_bytes,
            node_rank_bytes,
            total_bytes,
            bits_per_symbol: total_bytes as f64 * 8.0 / self.n as f64,
            rank_overhead_pct: pct(rank_bytes),
            select_overhead_pct: pct(select_bytes),
        }
    }
}

/// Every internal node must send exactly the occurrences of its left
/// child's symbols to the left.
fn check_node_splits(
    sigma: u64,
    cum_hist: &[u64],
    levels: &BitArray,
    rs: &[RankSelectIndex],
) -> Result<()> {
    let mut stack = vec![(0u64, sigma, 0usize)];
    while let Some((a, b, level)) = stack.pop() {
        if b - a < 2 {
            continue;
        }
        let split = a + alphabet::prev_pow_two(b - a);
        let words = levels.region(level).words();
        let (lo, hi) = (cum_hist[a as usize], cum_hist[b as usize]);
        let zeros = rs[level].rank0_unchecked(words, hi) - rs[level].rank0_unchecked(words, lo);
        if zeros != cum_hist[split as usize] - lo {
            return Err(Error::Corrupt(format!(
                "node [{a}, {b}) at level {level} does not match the histogram"
            )));
        }
        stack.push((a, split, level + 1));
        stack.push((split, b, level + 1));
    }
    Ok(())
}
