use std::collections::HashMap;

use rayon::prelude::*;

use super::{SymbolWidth, WaveletTree};
use crate::alphabet::{self, AlphabetMap, Symbol};
use crate::bitvec::{BitArray, WORD_BITS};
use crate::error::{Error, Result};
use crate::rankselect::{RankSelectIndex, RankSelectParams};
use crate::workers;

/// Elements per parallel work unit when reordering a level.
const SORT_CHUNK: usize = 1 << 16;

/// Construction settings.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Worker threads; 0 uses every available CPU.
    pub workers: usize,
    pub rank_select: RankSelectParams,
    /// Alphabet to use instead of the symbols occurring in the text.
    pub alphabet: Option<AlphabetMap>,
    /// Symbol width recorded in the index; inferred from the alphabet when unset.
    pub symbol_width: Option<SymbolWidth>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            rank_select: RankSelectParams::WAVELET_TREE,
            alphabet: None,
            symbol_width: None,
        }
    }
}

impl BuildOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

impl WaveletTree {
    /// Builds a tree over `text` with its minimal alphabet.
    pub fn construct(text: &[Symbol], workers: usize) -> Result<Self> {
        Self::build(text, &BuildOptions::with_workers(workers))
    }

    /// Builds a tree over `text` using a caller-supplied alphabet, which
    /// must contain every symbol of the text.
    pub fn construct_with_alphabet(
        text: &[Symbol],
        alphabet: &AlphabetMap,
        workers: usize,
    ) -> Result<Self> {
        Self::build(
            text,
            &BuildOptions {
                alphabet: Some(alphabet.clone()),
                ..BuildOptions::with_workers(workers)
            },
        )
    }

    pub fn build(text: &[Symbol], opts: &BuildOptions) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::EmptyText);
        }
        opts.rank_select.validate()?;
        workers::install(opts.workers, || build_in_pool(text, opts))
    }
}

fn build_in_pool(text: &[Symbol], opts: &BuildOptions) -> Result<WaveletTree> {
    let (mapped, alphabet) = match &opts.alphabet {
        Some(map) => (map.map_text(text)?, map.clone()),
        None => alphabet::minimal_alphabet(text)?,
    };
    let widest = *alphabet.symbols().last().unwrap();
    let width = match opts.symbol_width {
        Some(SymbolWidth::U8) if widest > u8::MAX as u16 => {
            return Err(Error::InvalidParams(format!(
                "symbol {widest} does not fit an 8-bit symbol width"
            )))
        }
        Some(w) => w,
        None if widest > u8::MAX as u16 => SymbolWidth::U16,
        None => SymbolWidth::U8,
    };

    let sigma = alphabet.sigma();
    let codes = alphabet::create_codes(sigma)?;
    let (mut encoded, hist) = alphabet::encode_and_histogram(&mapped, &codes)?;
    drop(mapped);
    let num_levels = codes.total_bits();
    let level_sizes = alphabet::level_sizes(&codes, &hist);
    let cum_hist = hist.cumulative();

    let mut levels = BitArray::new(&level_sizes)?;
    if num_levels > 0 {
        fill_level(&mut levels, &encoded, num_levels, 0);
        let mut scratch = vec![0u32; encoded.len()];
        for l in 1..num_levels {
            stable_sort_by_prefix(&encoded, &mut scratch, num_levels, l);
            std::mem::swap(&mut encoded, &mut scratch);
            fill_level(&mut levels, &encoded, num_levels, l);
        }
    }
    drop(encoded);

    let rs: Vec<RankSelectIndex> = (0..num_levels as usize)
        .into_par_iter()
        .map(|l| RankSelectIndex::build_in_pool(levels.region(l), opts.rank_select))
        .collect();

    let mut tree = WaveletTree {
        n: text.len() as u64,
        sigma,
        num_levels,
        width,
        alphabet,
        codes,
        level_sizes,
        cum_hist,
        levels,
        rs,
        node_rank0: Vec::new(),
    };
    tree.node_rank0 = compute_node_rank0(&tree);
    Ok(tree)
}

/// Writes bit `total_bits - 1 - level` of the first `level_sizes[level]`
/// code words into region `level`.
pub fn fill_level(levels: &mut BitArray, encoded: &[u32], total_bits: u32, level: u32) {
    let count = levels.region_len(level as usize) as usize;
    let shift = total_bits - 1 - level;
    let src = &encoded[..count];
    levels
        .region_words_mut(level as usize)
        .par_iter_mut()
        .zip(src.par_chunks(WORD_BITS as usize))
        .for_each(|(word, syms)| {
            let mut w = 0u64;
            for (j, &s) in syms.iter().enumerate() {
                w |= (((s >> shift) & 1) as u64) << j;
            }
            *word = w;
        });
}

/// A maximal run of equal top-`(level - 1)`-bit prefixes inside one chunk.
struct Run {
    prefix: u32,
    zeros: usize,
    ones: usize,
}

/// Stable sort of `src` by its top `level` bits into `dst`.
///
/// `src` must already be stably sorted by its top `level - 1` bits. Each run
/// of equal prefixes is then stably partitioned on the next bit. Work is
/// split into fixed-size chunks: runs are counted per chunk, destinations
/// assigned in order, then every chunk scatters into its own disjoint
/// pieces of `dst`.
pub fn stable_sort_by_prefix(src: &[u32], dst: &mut [u32], total_bits: u32, level: u32) {
    assert_eq!(src.len(), dst.len());
    assert!(level >= 1 && level < total_bits.max(1));
    let bit_shift = total_bits - level;
    let prefix_shift = bit_shift + 1;
    let prefix = |w: u32| w.checked_shr(prefix_shift).unwrap_or(0);
    let bit = |w: u32| (w >> bit_shift) & 1 == 1;

    let chunk_runs: Vec<Vec<Run>> = src
        .par_chunks(SORT_CHUNK)
        .map(|chunk| {
            let mut runs: Vec<Run> = Vec::new();
            for &w in chunk {
                let p = prefix(w);
                match runs.last_mut() {
                    Some(r) if r.prefix == p => {}
                    _ => runs.push(Run {
                        prefix: p,
                        zeros: 0,
                        ones: 0,
                    }),
                }
                let r = runs.last_mut().unwrap();
                if bit(w) {
                    r.ones += 1;
                } else {
                    r.zeros += 1;
                }
            }
            runs
        })
        .collect();

    // Pieces of dst in address order: per segment, all zero pieces of its
    // runs, then all one pieces. A piece is (chunk, run index, is_one, len).
    let flat: Vec<(usize, usize)> = chunk_runs
        .iter()
        .enumerate()
        .flat_map(|(c, runs)| (0..runs.len()).map(move |r| (c, r)))
        .collect();
    let mut pieces: Vec<(usize, usize, bool, usize)> = Vec::with_capacity(flat.len() * 2);
    let mut seg_start = 0;
    while seg_start < flat.len() {
        let p = chunk_runs[flat[seg_start].0][flat[seg_start].1].prefix;
        let mut seg_end = seg_start;
        while seg_end < flat.len() && chunk_runs[flat[seg_end].0][flat[seg_end].1].prefix == p {
            seg_end += 1;
        }
        for &(c, r) in &flat[seg_start..seg_end] {
            pieces.push((c, r, false, chunk_runs[c][r].zeros));
        }
        for &(c, r) in &flat[seg_start..seg_end] {
            pieces.push((c, r, true, chunk_runs[c][r].ones));
        }
        seg_start = seg_end;
    }

    type Targets<'a> = Vec<(Option<&'a mut [u32]>, Option<&'a mut [u32]>)>;
    let mut targets: Vec<Targets<'_>> = chunk_runs
        .iter()
        .map(|runs| runs.iter().map(|_| (None, None)).collect())
        .collect();
    let mut rest: &mut [u32] = dst;
    for (c, r, is_one, len) in pieces {
        let (piece, tail) = rest.split_at_mut(len);
        rest = tail;
        let slot = &mut targets[c][r];
        if is_one {
            slot.1 = Some(piece);
        } else {
            slot.0 = Some(piece);
        }
    }

    src.par_chunks(SORT_CHUNK)
        .zip(targets.into_par_iter())
        .for_each(|(chunk, mut runs)| {
            let mut r = 0;
            let (mut zi, mut oi) = (0, 0);
            let mut current = chunk.first().map(|&w| prefix(w));
            for &w in chunk {
                let p = prefix(w);
                if Some(p) != current {
                    r += 1;
                    zi = 0;
                    oi = 0;
                    current = Some(p);
                }
                let (zeros, ones) = &mut runs[r];
                if bit(w) {
                    ones.as_deref_mut().unwrap()[oi] = w;
                    oi += 1;
                } else {
                    zeros.as_deref_mut().unwrap()[zi] = w;
                    zi += 1;
                }
            }
        });
}

/// Rank0 at the start of every internal node, keyed by the node's first symbol.
fn compute_node_rank0(tree: &WaveletTree) -> Vec<HashMap<u32, u64>> {
    let mut out: Vec<HashMap<u32, u64>> = vec![HashMap::new(); tree.num_levels as usize];
    let mut stack = vec![(0u64, tree.sigma, 0usize)];
    while let Some((a, b, level)) = stack.pop() {
        if b - a < 2 {
            continue;
        }
        let pos = tree.cum_hist[a as usize];
        let words = tree.levels.region(level).words();
        out[level].insert(a as u32, tree.rs[level].rank0_unchecked(words, pos));
        let split = a + alphabet::prev_pow_two(b - a);
        stack.push((a, split, level + 1));
        stack.push((split, b, level + 1));
    }
    out
}

/// Expected node-start keys per level, for load-time validation.
pub(super) fn internal_node_starts(sigma: u64, num_levels: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); num_levels as usize];
    let mut stack = vec![(0u64, sigma, 0usize)];
    while let Some((a, b, level)) = stack.pop() {
        if b - a < 2 {
            continue;
        }
        out[level].push(a as u32);
        let split = a + alphabet::prev_pow_two(b - a);
        stack.push((a, split, level + 1));
        stack.push((split, b, level + 1));
    }
    for v in &mut out {
        v.sort_unstable();
    }
    out
}
