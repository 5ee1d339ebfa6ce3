//! Batched queries with a bounded two-buffer staging pipeline.
//!
//! A stager thread copies the queries chunk by chunk into one of two
//! preallocated buffers while the caller's thread answers the previously
//! staged chunk across the worker pool. A buffer returns to the stager only
//! once its chunk is processed, so staging is never more than one chunk
//! ahead and at most two chunks are staged at any instant.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::Symbol;
use crate::error::{Error, Result};
use crate::workers;
use crate::wtree::WaveletTree;

pub const DEFAULT_CHUNK_SIZE: usize = 1 << 16;

/// Chunks smaller than this are answered on the calling thread.
const INLINE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RankQuery {
    pub symbol: Symbol,
    /// Prefix length, in `[0, n]`.
    pub pos: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectQuery {
    pub symbol: Symbol,
    /// 1-based ordinal.
    pub k: u64,
}

/// A kind-homogeneous batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryBatch {
    Access(Vec<u64>),
    Rank(Vec<RankQuery>),
    Select(Vec<SelectQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BatchResults {
    Access(Vec<Symbol>),
    Rank(Vec<u64>),
    Select(Vec<u64>),
}

impl QueryBatch {
    pub fn len(&self) -> usize {
        match self {
            QueryBatch::Access(q) => q.len(),
            QueryBatch::Rank(q) => q.len(),
            QueryBatch::Select(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl BatchResults {
    pub fn len(&self) -> usize {
        match self {
            BatchResults::Access(r) => r.len(),
            BatchResults::Rank(r) => r.len(),
            BatchResults::Select(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Results widened to `u64`, access symbols included.
    pub fn to_u64(&self) -> Vec<u64> {
        match self {
            BatchResults::Access(r) => r.iter().map(|&s| s as u64).collect(),
            BatchResults::Rank(r) | BatchResults::Select(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    /// Worker threads for processing; 0 uses every available CPU.
    pub workers: usize,
    /// Queries per pipeline chunk, at least 1.
    pub chunk_size: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            workers: 0,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

impl BatchConfig {
    pub fn new(workers: usize, chunk_size: usize) -> Self {
        Self {
            workers,
            chunk_size,
        }
    }
}

/// Measurements of one pipeline run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub chunks: usize,
    /// Largest number of query records held in staging buffers at once.
    pub peak_staged: usize,
    /// Staging buffer capacity allocated, in query records.
    pub allocated_records: usize,
    /// Time spent copying queries into staging buffers.
    pub stage_time: Duration,
    /// Time spent answering staged chunks.
    pub process_time: Duration,
}

/// Answers one access per position.
pub fn access_batch(
    tree: &WaveletTree,
    positions: &[u64],
    config: BatchConfig,
) -> Result<Vec<Symbol>> {
    run(tree, positions, config, |t, &i| t.access(i)).map(|(r, _)| r)
}

pub fn rank_batch(
    tree: &WaveletTree,
    queries: &[RankQuery],
    config: BatchConfig,
) -> Result<Vec<u64>> {
    run(tree, queries, config, |t, q| t.rank(q.symbol, q.pos)).map(|(r, _)| r)
}

pub fn select_batch(
    tree: &WaveletTree,
    queries: &[SelectQuery],
    config: BatchConfig,
) -> Result<Vec<u64>> {
    run(tree, queries, config, |t, q| t.select(q.symbol, q.k)).map(|(r, _)| r)
}

/// Runs a batch of any kind and reports pipeline measurements.
pub fn execute(
    tree: &WaveletTree,
    batch: &QueryBatch,
    config: BatchConfig,
) -> Result<(BatchResults, PipelineStats)> {
    Ok(match batch {
        QueryBatch::Access(q) => {
            let (r, s) = run(tree, q, config, |t, &i| t.access(i))?;
            (BatchResults::Access(r), s)
        }
        QueryBatch::Rank(q) => {
            let (r, s) = run(tree, q, config, |t, q| t.rank(q.symbol, q.pos))?;
            (BatchResults::Rank(r), s)
        }
        QueryBatch::Select(q) => {
            let (r, s) = run(tree, q, config, |t, q| t.select(q.symbol, q.k))?;
            (BatchResults::Select(r), s)
        }
    })
}

/// Chunked pipeline over `queries`. Fails with the index of the first
/// invalid query; no partial results are returned.
pub fn run<Q, R, F>(
    tree: &WaveletTree,
    queries: &[Q],
    config: BatchConfig,
    answer: F,
) -> Result<(Vec<R>, PipelineStats)>
where
    Q: Copy + Send + Sync,
    R: Copy + Default + Send,
    F: Fn(&WaveletTree, &Q) -> Result<R> + Sync,
{
    if config.chunk_size == 0 {
        return Err(Error::InvalidParams("chunk size must be at least 1".into()));
    }
    let mut stats = PipelineStats::default();
    let mut results = vec![R::default(); queries.len()];
    if queries.is_empty() {
        return Ok((results, stats));
    }
    let chunk = config.chunk_size.min(queries.len());
    let pool = workers::pool(config.workers);
    let staged = AtomicUsize::new(0);
    let peak = AtomicUsize::new(0);
    stats.allocated_records = 2 * chunk;

    let (free_tx, free_rx) = mpsc::sync_channel::<Vec<Q>>(2);
    let (full_tx, full_rx) = mpsc::sync_channel::<(usize, Vec<Q>)>(2);
    for _ in 0..2 {
        free_tx.send(Vec::with_capacity(chunk)).unwrap();
    }

    let outcome = std::thread::scope(|scope| {
        let (staged, peak) = (&staged, &peak);
        let stager = scope.spawn(move || {
            let mut busy = Duration::ZERO;
            for (c, src) in queries.chunks(chunk).enumerate() {
                let Ok(mut buf) = free_rx.recv() else { break };
                let t = Instant::now();
                buf.clear();
                buf.extend_from_slice(src);
                let now = staged.fetch_add(buf.len(), Ordering::SeqCst) + buf.len();
                peak.fetch_max(now, Ordering::SeqCst);
                busy += t.elapsed();
                if full_tx.send((c, buf)).is_err() {
                    break;
                }
            }
            busy
        });

        let mut process_time = Duration::ZERO;
        let mut failure = None;
        for (c, buf) in full_rx.iter() {
            let t = Instant::now();
            let out = &mut results[c * chunk..c * chunk + buf.len()];
            let base = c * chunk;
            let res = if buf.len() < INLINE_CHUNK {
                out.iter_mut()
                    .zip(&buf)
                    .enumerate()
                    .try_for_each(|(j, (slot, q))| {
                        *slot = answer(tree, q).map_err(|e| (base + j, e))?;
                        Ok(())
                    })
            } else {
                pool.install(|| {
                    out.par_iter_mut()
                        .zip(buf.par_iter())
                        .enumerate()
                        .try_for_each(|(j, (slot, q))| {
                            *slot = answer(tree, q).map_err(|e| (base + j, e))?;
                            Ok::<(), (usize, Error)>(())
                        })
                })
            };
            process_time += t.elapsed();
            stats.chunks += 1;
            staged.fetch_sub(buf.len(), Ordering::SeqCst);
            if let Err(e) = res {
                failure = Some(e);
                break;
            }
            let _ = free_tx.send(buf);
        }
        drop(full_rx);
        drop(free_tx);
        let stage_time = stager.join().expect("staging thread panicked");
        (failure, stage_time, process_time)
    });

    let (failure, stage_time, process_time) = outcome;
    stats.stage_time = stage_time;
    stats.process_time = process_time;
    stats.peak_staged = peak.into_inner();
    if let Some(index) = failure.map(|(i, _)| i) {
        // parallel processing may hit a later failure first; rescan for the earliest
        let first = queries[..=index]
            .iter()
            .position(|q| answer(tree, q).is_err())
            .unwrap_or(index);
        let source = answer(tree, &queries[first])
            .err()
            .expect("query failed before");
        return Err(Error::Batch {
            index: first,
            source: Box::new(source),
        });
    }
    Ok((results, stats))
}

/// Stable sort of queries by symbol. Returns the sorted queries and `perm`
/// with `sorted[j] = queries[perm[j]]`.
pub fn sort_queries_by_symbol<Q: Copy>(
    queries: &[Q],
    symbol: impl Fn(&Q) -> Symbol,
) -> (Vec<Q>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..queries.len()).collect();
    perm.sort_by_key(|&j| symbol(&queries[j]));
    (perm.iter().map(|&j| queries[j]).collect(), perm)
}

/// Undoes [`sort_queries_by_symbol`] on the results of the sorted queries.
pub fn restore_order<R: Copy + Default>(sorted_results: &[R], perm: &[usize]) -> Vec<R> {
    assert_eq!(sorted_results.len(), perm.len());
    let mut out = vec![R::default(); perm.len()];
    for (&r, &j) in sorted_results.iter().zip(perm) {
        out[j] = r;
    }
    out
}

/// Maps a failure index in a sorted batch back to the caller's numbering.
pub fn restore_error(err: Error, perm: &[usize]) -> Error {
    match err {
        Error::Batch { index, source } => Error::Batch {
            index: perm[index],
            source,
        },
        other => other,
    }
}
