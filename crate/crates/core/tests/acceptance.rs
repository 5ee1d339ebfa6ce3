//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any hard criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavelet_core::alphabet::{bits_for, create_codes, level_sizes, Histogram};
use wavelet_core::batch::{self, BatchResults};
use wavelet_core::bitvec::BitArray;
use wavelet_core::oracle::{naive_access, naive_paths, naive_rank, naive_select, naive_tree_shape};
use wavelet_core::workers;
use wavelet_core::{
    BatchConfig, Error, QueryBatch, RankQuery, RankSelectBitVec, RankSelectParams, SelectQuery,
    WaveletTree,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Warn(String),
}

type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn outcome(r: Result<String, String>) -> Outcome {
    match r {
        Ok(m) => Outcome::Pass(m),
        Err(m) => Outcome::Fail(m),
    }
}

fn as_text(s: &[u8]) -> Vec<u16> {
    s.iter().map(|&b| b as u16).collect()
}

// 1

fn worked_example() -> Outcome {
    outcome((|| {
        let tree = WaveletTree::construct(&as_text(b"dbdcaacbcd"), 1).map_err(|e| e.to_string())?;
        let c = b'c' as u16;
        ensure(tree.access(6).ok() == Some(c), "access(6)")?;
        ensure(tree.rank(c, 6).ok() == Some(1), "rank('c', 6)")?;
        ensure(tree.select(c, 2).ok() == Some(6), "select('c', 2)")?;
        let cfg = BatchConfig::new(0, 1);
        ensure(
            batch::access_batch(&tree, &[6], cfg).ok() == Some(vec![c]),
            "batch access",
        )?;
        ensure(
            batch::rank_batch(&tree, &[RankQuery { symbol: c, pos: 6 }], cfg).ok() == Some(vec![1]),
            "batch rank",
        )?;
        ensure(
            batch::select_batch(&tree, &[SelectQuery { symbol: c, k: 2 }], cfg).ok()
                == Some(vec![6]),
            "batch select",
        )?;
        Ok("access(6)='c', rank('c',6)=1, select('c',2)=6 single and batched".into())
    })())
}

// 2

/// Answers from one left-to-right scan: prefix ranks and select positions.
fn scan_oracle(bits: &[bool]) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
    let mut ranks = Vec::with_capacity(bits.len() + 1);
    let (mut ones, mut zeros) = (Vec::new(), Vec::new());
    let mut r = 0;
    for (i, &b) in bits.iter().enumerate() {
        ranks.push(r);
        if b {
            r += 1;
            ones.push(i as u64);
        } else {
            zeros.push(i as u64);
        }
    }
    ranks.push(r);
    (ranks, ones, zeros)
}

fn check_bitvector(bits: &[bool], params: RankSelectParams) -> Result<u64, String> {
    let bv =
        RankSelectBitVec::from_bits(bits.iter().copied(), params).map_err(|e| e.to_string())?;
    let (ranks, ones, zeros) = scan_oracle(bits);
    let mut checked = 0u64;
    for (i, &r) in ranks.iter().enumerate() {
        let i = i as u64;
        if bv.rank1(i).ok() != Some(r) || bv.rank0(i).ok() != Some(i - r) {
            return Err(format!("rank at {i} (len {})", bits.len()));
        }
    }
    for (k, &p) in ones.iter().enumerate() {
        if bv.select1(k as u64 + 1).ok() != Some(p) {
            return Err(format!("select1({}) (len {})", k + 1, bits.len()));
        }
    }
    for (k, &p) in zeros.iter().enumerate() {
        if bv.select0(k as u64 + 1).ok() != Some(p) {
            return Err(format!("select0({}) (len {})", k + 1, bits.len()));
        }
    }
    ensure(
        bv.select1(ones.len() as u64 + 1).is_err(),
        "select1 past the end",
    )?;
    ensure(
        bv.select0(zeros.len() as u64 + 1).is_err(),
        "select0 past the end",
    )?;
    checked += 2 * ranks.len() as u64 + ones.len() as u64 + zeros.len() as u64;
    Ok(checked)
}

/// `ones` set bits with 99% of them inside the last `tail_pct` percent.
fn adversarial(rng: &mut ChaCha8Rng, n: usize, ones: usize, tail_pct: usize) -> Vec<bool> {
    let tail = n * tail_pct / 100;
    let head = n - tail;
    let in_tail = (ones * 99 / 100).min(tail);
    let in_head = (ones - in_tail).min(head);
    let mut bits = vec![false; n];
    for p in sample(rng, tail, in_tail) {
        bits[head + p] = true;
    }
    for p in sample(rng, head, in_head) {
        bits[p] = true;
    }
    bits
}

fn rank_select_oracle() -> Outcome {
    outcome((|| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let small = RankSelectParams {
            l2_bits: 64,
            sample_rate: 5,
        };
        let mut checked = 0;
        let mut arrays = 0;
        let lengths = [
            0usize, 1, 2, 63, 64, 65, 127, 511, 512, 513, 1000, 1023, 1024, 1025, 2047, 2048, 3001,
            4095, 4096,
        ];
        for &len in &lengths {
            for fill in [0.0, 0.1, 0.5, 0.9, 1.0] {
                let bits: Vec<bool> = (0..len).map(|_| rng.gen_bool(fill)).collect();
                for params in [
                    RankSelectParams::STANDALONE,
                    RankSelectParams::WAVELET_TREE,
                    small,
                ] {
                    checked += check_bitvector(&bits, params)?;
                    arrays += 1;
                }
            }
        }
        let n = 1_000_000;
        for a in 0..20 {
            let fill = [0.1, 0.5, 0.9][a % 3];
            let bits = if a % 2 == 0 {
                (0..n).map(|_| rng.gen_bool(fill)).collect()
            } else {
                let tail_pct = [1, 5, 10, 25][(a / 2) % 4];
                adversarial(&mut rng, n, (n as f64 * fill) as usize, tail_pct)
            };
            let params = if a % 4 < 2 {
                RankSelectParams::STANDALONE
            } else {
                RankSelectParams::WAVELET_TREE
            };
            checked += check_bitvector(&bits, params)?;
            arrays += 1;
        }
        Ok(format!(
            "{arrays} arrays, {checked} queries equal to scan oracles"
        ))
    })())
}

// 3

fn check_tree_exhaustive(text: &[u16]) -> Result<(), String> {
    let tree = WaveletTree::construct(text, 1).map_err(|e| e.to_string())?;
    let n = text.len();
    for i in 0..n {
        if tree.access(i as u64).ok() != naive_access(text, i).ok() {
            return Err(format!("access({i}) on {text:?}"));
        }
    }
    for &c in tree.alphabet().symbols() {
        for i in 0..=n {
            if tree.rank(c, i as u64).ok() != naive_rank(text, c, i).ok() {
                return Err(format!("rank({c}, {i}) on {text:?}"));
            }
        }
        let occ = naive_rank(text, c, n).unwrap();
        for k in 1..=occ + 1 {
            if tree.select(c, k).ok() != naive_select(text, c, k).ok() {
                return Err(format!("select({c}, {k}) on {text:?}"));
            }
        }
    }
    Ok(())
}

/// Occurrence lists from one scan; independent of the tree.
struct Occurrences {
    lists: std::collections::HashMap<u16, Vec<u64>>,
}

impl Occurrences {
    fn new(text: &[u16]) -> Self {
        let mut lists: std::collections::HashMap<u16, Vec<u64>> = Default::default();
        for (i, &c) in text.iter().enumerate() {
            lists.entry(c).or_default().push(i as u64);
        }
        Self { lists }
    }

    fn rank(&self, c: u16, i: u64) -> u64 {
        self.lists[&c].partition_point(|&p| p < i) as u64
    }

    fn select(&self, c: u16, k: u64) -> u64 {
        self.lists[&c][k as usize - 1]
    }
}

fn tree_oracle() -> Outcome {
    outcome((|| {
        let texts = workers::install(1, || {
            let mut texts = 0u64;
            for n in 1..=10u32 {
                for code in 0..4u64.pow(n) {
                    let text: Vec<u16> = (0..n).map(|j| ((code >> (2 * j)) & 3) as u16).collect();
                    check_tree_exhaustive(&text)?;
                    texts += 1;
                }
            }
            Ok::<u64, String>(texts)
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigmas = [2u16, 3, 5, 6, 7, 11, 25, 243, 256, 4096];
        let mut sampled = 0u64;
        for t in 0..500 {
            let sigma = sigmas[t % sigmas.len()];
            let n = rng.gen_range(1..=100_000usize);
            let text: Vec<u16> = (0..n).map(|_| rng.gen_range(0..sigma)).collect();
            let tree = WaveletTree::construct(&text, 0).map_err(|e| e.to_string())?;
            let occ = Occurrences::new(&text);
            let syms = tree.alphabet().symbols();
            for _ in 0..1000 {
                let i = rng.gen_range(0..n);
                if tree.access(i as u64).ok() != Some(text[i]) {
                    return Err(format!("access({i}), sigma {sigma}, n {n}"));
                }
                let c = syms[rng.gen_range(0..syms.len())];
                let i = rng.gen_range(0..=n as u64);
                if tree.rank(c, i).ok() != Some(occ.rank(c, i)) {
                    return Err(format!("rank({c}, {i}), sigma {sigma}, n {n}"));
                }
                let k = rng.gen_range(1..=occ.lists[&c].len() as u64);
                if tree.select(c, k).ok() != Some(occ.select(c, k)) {
                    return Err(format!("select({c}, {k}), sigma {sigma}, n {n}"));
                }
                sampled += 3;
            }
        }
        Ok(format!(
            "{texts} exhaustive texts; 500 random texts, {sampled} sampled queries"
        ))
    })())
}

// 4

fn overhead_arithmetic() -> Outcome {
    outcome((|| {
        let n = 100_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let words: Vec<u64> = (0..n / 64).map(|_| rng.gen()).collect();
        let bits = BitArray::from_words(words, n).map_err(|e| e.to_string())?;
        let fill = bits.region(0).count_ones() as f64 / n as f64;

        let standalone = RankSelectBitVec::new(bits.clone(), RankSelectParams::STANDALONE, 0)
            .map_err(|e| e.to_string())?;
        let rank = standalone.rank_overhead() * 100.0;
        let combined = rank + standalone.select_overhead() * 100.0;
        let tree_params = RankSelectBitVec::new(bits, RankSelectParams::WAVELET_TREE, 0)
            .map_err(|e| e.to_string())?;
        let maximal = (tree_params.rank_overhead() + tree_params.select_overhead()) * 100.0;

        let summary = format!(
            "fill {:.3}: rank {rank:.4}% (3.22±0.05), rank+select@16384 {combined:.4}% (3.6±0.1), \
             rank+select@4096 {maximal:.4}% (4.8±0.1)",
            fill
        );
        ensure((rank - 3.22).abs() <= 0.05, summary.clone())?;
        ensure((combined - 3.6).abs() <= 0.1, summary.clone())?;
        ensure((maximal - 4.8).abs() <= 0.1, summary.clone())?;
        Ok(summary)
    })())
}

// 5

fn code_tables() -> Outcome {
    outcome((|| {
        let six = create_codes(6).map_err(|e| e.to_string())?;
        ensure(
            naive_tree_shape(6)[1].contains(&(4, 6)),
            "node [4,6) at depth 1",
        )?;
        ensure(
            six.code(4).len == 2 && six.code(5).len == 2,
            "sigma 6 leaf codes of length 2",
        )?;
        for sigma in 2..=4096u64 {
            let table = create_codes(sigma).map_err(|e| e.to_string())?;
            let total = bits_for(sigma);
            let paths: Vec<Vec<bool>> = (0..sigma as u32)
                .map(|c| {
                    let code = table.code(c);
                    (0..code.len as u32).map(|l| table.bit(code, l)).collect()
                })
                .collect();
            let mut sorted = paths.clone();
            sorted.sort();
            ensure(
                sorted.windows(2).all(|w| !w[1].starts_with(&w[0])),
                format!("sigma {sigma}: not prefix-free"),
            )?;
            ensure(
                (1..sigma as u32).all(|c| table.code(c).len <= table.code(c - 1).len),
                format!("sigma {sigma}: lengths increase"),
            )?;
            ensure(
                paths == naive_paths(sigma),
                format!("sigma {sigma}: leaves not reachable"),
            )?;
            ensure(
                paths.iter().all(|p| p.len() as u32 <= total),
                format!("sigma {sigma}: code longer than levels"),
            )?;
            let counts: Vec<u64> = (0..sigma).map(|c| (c * 2654435761) % 17).collect();
            let sizes = level_sizes(&table, &Histogram::from_counts(counts.clone()));
            let weighted: u64 = (0..sigma as usize)
                .map(|c| counts[c] * paths[c].len() as u64)
                .sum();
            ensure(
                sizes.iter().sum::<u64>() == weighted,
                format!("sigma {sigma}: level sizes"),
            )?;
        }
        Ok("sigma 6 reduced shape; sigma 2..=4096 prefix-free, monotone, reachable, sizes".into())
    })())
}

// 6

fn reduced_size() -> Outcome {
    outcome((|| {
        let n = 600_000u64;
        let six: Vec<u16> = (0..n).map(|i| (i % 6) as u16).collect();
        let eight: Vec<u16> = (0..n).map(|i| (i % 8) as u16).collect();
        let t6 = WaveletTree::construct(&six, 0).map_err(|e| e.to_string())?;
        let t8 = WaveletTree::construct(&eight, 0).map_err(|e| e.to_string())?;
        let (s6, s8) = (t6.stored_bits(), t8.stored_bits());
        ensure(
            s6 < n * 3,
            format!("sigma 6 stores {s6} bits, bound {}", n * 3),
        )?;
        ensure(
            s8 == n * 3,
            format!("sigma 8 stores {s8} bits, expected {}", n * 3),
        )?;
        Ok(format!(
            "sigma 6: {s6} < {} bits; sigma 8: {s8} = n*3",
            n * 3
        ))
    })())
}

// 7

fn determinism() -> Outcome {
    outcome((|| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let text: Vec<u16> = (0..1_000_000).map(|_| rng.gen_range(0..243)).collect();
        let reference = WaveletTree::construct(&text, 1).map_err(|e| e.to_string())?;
        let bytes = reference.to_bytes();
        for w in [2, 8] {
            let t = WaveletTree::construct(&text, w).map_err(|e| e.to_string())?;
            ensure(
                t.to_bytes() == bytes,
                format!("index differs with {w} workers"),
            )?;
        }
        let num = 100_000;
        let n = text.len() as u64;
        let syms = reference.alphabet().symbols().to_vec();
        let batches = [
            QueryBatch::Access((0..num).map(|_| rng.gen_range(0..n)).collect()),
            QueryBatch::Rank(
                (0..num)
                    .map(|_| RankQuery {
                        symbol: syms[rng.gen_range(0..syms.len())],
                        pos: rng.gen_range(0..=n),
                    })
                    .collect(),
            ),
            QueryBatch::Select(
                (0..num)
                    .map(|_| {
                        let symbol = syms[rng.gen_range(0..syms.len())];
                        let occ = reference.occurrences(symbol).unwrap();
                        SelectQuery {
                            symbol,
                            k: rng.gen_range(1..=occ),
                        }
                    })
                    .collect(),
            ),
        ];
        let mut runs = 0;
        for b in &batches {
            let mut want: Option<BatchResults> = None;
            for workers in [1, 2, 8] {
                for chunk in [1, 37, 4096, usize::MAX] {
                    let (got, _) = batch::execute(&reference, b, BatchConfig::new(workers, chunk))
                        .map_err(|e| e.to_string())?;
                    match &want {
                        None => want = Some(got),
                        Some(w) => ensure(*w == got, format!("workers {workers} chunk {chunk}"))?,
                    }
                    runs += 1;
                }
            }
        }
        Ok(format!(
            "index identical for 1/2/8 workers; {runs} batch runs identical"
        ))
    })())
}

// 8

fn serialization() -> Outcome {
    outcome((|| {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let text: Vec<u16> = (0..200_000).map(|_| rng.gen_range(0..300)).collect();
        let tree = WaveletTree::construct(&text, 0).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("idx.wt");
        tree.save(&path).map_err(|e| e.to_string())?;
        let loaded = WaveletTree::load(&path).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        ensure(loaded.to_bytes() == bytes, "save/load/save differs")?;

        let mut bad = bytes.clone();
        bad[0] ^= 0xff;
        ensure(
            matches!(WaveletTree::from_bytes(&bad), Err(Error::BadMagic)),
            "bad magic",
        )?;
        let mut bad = bytes.clone();
        bad[8] += 1;
        ensure(
            matches!(
                WaveletTree::from_bytes(&bad),
                Err(Error::UnsupportedVersion(2))
            ),
            "bad version",
        )?;
        for cut in [10, 100, bytes.len() / 2, bytes.len() - 1] {
            ensure(
                matches!(
                    WaveletTree::from_bytes(&bytes[..cut]),
                    Err(Error::Truncated)
                ),
                format!("truncated at {cut}"),
            )?;
        }
        Ok(format!(
            "{} bytes round trip; magic/version/truncation rejected",
            bytes.len()
        ))
    })())
}

// 9

fn throughput_smoke() -> Outcome {
    let run = || -> Result<(f64, f64, usize), String> {
        let n = 10_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let text: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let tree = WaveletTree::construct(&text, 0).map_err(|e| e.to_string())?;
        let queries: Vec<RankQuery> = (0..1_000_000)
            .map(|_| RankQuery {
                symbol: rng.gen_range(0..2),
                pos: rng.gen_range(0..=n),
            })
            .collect();
        let time = |workers| -> Result<f64, String> {
            let mut best = Duration::MAX;
            for _ in 0..5 {
                let t = Instant::now();
                batch::rank_batch(&tree, &queries, BatchConfig::new(workers, 65536))
                    .map_err(|e| e.to_string())?;
                best = best.min(t.elapsed());
            }
            Ok(queries.len() as f64 / best.as_secs_f64())
        };
        Ok((time(1)?, time(0)?, workers::resolve(0)))
    };
    match run() {
        Err(e) => Outcome::Fail(e),
        Ok((single, max, cpus)) => {
            let ratio = max / single;
            let msg = format!(
                "1 worker {single:.0} q/s, {cpus} workers {max:.0} q/s, speedup {ratio:.2}x (target 2x)"
            );
            if ratio >= 2.0 {
                Outcome::Pass(msg)
            } else {
                Outcome::Warn(msg)
            }
        }
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, Check); 9] = [
        ("worked example", Duration::from_secs(1), worked_example),
        (
            "rank/select oracle equivalence",
            Duration::from_secs(60),
            rank_select_oracle,
        ),
        (
            "wavelet tree oracle equivalence",
            Duration::from_secs(300),
            tree_oracle,
        ),
        (
            "overhead arithmetic",
            Duration::from_secs(60),
            overhead_arithmetic,
        ),
        ("code table fidelity", Duration::from_secs(60), code_tables),
        ("reduced tree size", Duration::from_secs(10), reduced_size),
        ("determinism", Duration::from_secs(120), determinism),
        ("serialization", Duration::from_secs(10), serialization),
        ("throughput smoke", Duration::MAX, throughput_smoke),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Outcome::Fail("panicked".into()));
        let elapsed = t.elapsed();
        let result = match result {
            Outcome::Pass(m) if elapsed > limit => {
                Outcome::Fail(format!("{m}; took {elapsed:.1?}, limit {limit:.0?}"))
            }
            other => other,
        };
        let (tag, msg) = match &result {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Warn(m) => ("WARN", m),
            Outcome::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} criterion {id} ({name}) [{elapsed:.2?}]: {msg}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
