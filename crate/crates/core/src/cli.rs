//! `wtidx` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alphabet::{AlphabetMap, Symbol};
use crate::batch::{self, BatchConfig, BatchResults, QueryBatch, RankQuery, SelectQuery};
use crate::error::Error;
use crate::rankselect::{RankSelectParams, L1_BITS};
use crate::wtree::{BuildOptions, SymbolWidth, WaveletTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Timed iterations per benchmark, at least.
pub const MIN_BENCH_ITERATIONS: usize = 10;

#[derive(Debug, Parser)]
#[command(
    name = "wtidx",
    version,
    about = "Build and query level-wise wavelet tree indexes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryKind {
    Access,
    Rank,
    Select,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from a raw symbol file
    Build {
        #[arg(long)]
        input: PathBuf,
        /// Bits per input symbol; 16-bit symbols are little-endian
        #[arg(long, default_value_t = 8, value_parser = parse_width)]
        symbol_width: u32,
        #[arg(long)]
        output: PathBuf,
        /// File listing the alphabet, encoded like the input
        #[arg(long)]
        alphabet: Option<PathBuf>,
        /// Worker threads, 0 for all CPUs
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = RankSelectParams::WAVELET_TREE.l2_bits)]
        l2_bits: u32,
        #[arg(long, default_value_t = RankSelectParams::WAVELET_TREE.sample_rate)]
        sample_rate: u32,
        /// Also write the run report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Answer a file of queries, one result per line
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long = "type", value_enum)]
        kind: QueryKind,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = batch::DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        /// Process rank/select queries grouped by symbol
        #[arg(long)]
        sort_by_symbol: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time random queries and report the median throughput
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long = "type", value_enum)]
        kind: QueryKind,
        #[arg(long)]
        num: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = batch::DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = MIN_BENCH_ITERATIONS)]
        iterations: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print storage statistics of an index
    Stats {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_width(s: &str) -> Result<u32, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err(format!("expected 8 or 16, got {s:?}")),
    }
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Summary of one command, printed as `key=value` lines.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput_qps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits_per_symbol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_overhead_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select_overhead_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combined_overhead_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_formula_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select_formula_pct: Option<f64>,
}

impl RunReport {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    fn add_sizes(&mut self, tree: &WaveletTree) {
        let s = tree.size_report();
        self.n = Some(s.n);
        self.sigma = Some(s.sigma);
        self.levels = Some(s.num_levels);
        self.index_bytes = Some(s.total_bytes);
        self.bits_per_symbol = Some(s.bits_per_symbol);
        self.rank_overhead_pct = Some(s.rank_overhead_pct);
        self.select_overhead_pct = Some(s.select_overhead_pct);
        self.combined_overhead_pct = Some(s.rank_overhead_pct + s.select_overhead_pct);
        if tree.num_levels() > 0 {
            let p = tree.level_index(0).params();
            self.rank_formula_pct = Some((64.0 / L1_BITS as f64 + 16.0 / p.l2_bits as f64) * 100.0);
            self.select_formula_pct = Some(64.0 / p.sample_rate as f64 * 100.0);
        }
    }

    /// `key=value` lines, sorted by key.
    pub fn to_lines(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = String::new();
        for (k, v) in value.as_object().expect("report is an object") {
            match v {
                serde_json::Value::String(s) => out.push_str(&format!("{k}={s}\n")),
                serde_json::Value::Number(x) if x.is_f64() => {
                    out.push_str(&format!("{k}={:.4}\n", x.as_f64().unwrap()))
                }
                other => out.push_str(&format!("{k}={other}\n")),
            }
        }
        out
    }

    fn emit(&self, out: &mut dyn Write, json: Option<&Path>) -> Result<(), CliError> {
        out.write_all(self.to_lines().as_bytes())
            .map_err(|e| CliError::Data(e.to_string()))?;
        if let Some(path) = json {
            let body = serde_json::to_string_pretty(self).expect("report serializes");
            fs::write(path, body + "\n").map_err(io_err(path))?;
        }
        Ok(())
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Build {
            input,
            symbol_width,
            output,
            alphabet,
            workers,
            l2_bits,
            sample_rate,
            report,
        } => {
            let text = read_symbols(&input, symbol_width)?;
            let alphabet = match alphabet {
                Some(path) => Some(AlphabetMap::from_symbols(&read_symbols(
                    &path,
                    symbol_width,
                )?)?),
                None => None,
            };
            let opts = BuildOptions {
                workers,
                rank_select: RankSelectParams {
                    l2_bits,
                    sample_rate,
                },
                alphabet,
                symbol_width: Some(if symbol_width == 16 {
                    SymbolWidth::U16
                } else {
                    SymbolWidth::U8
                }),
            };
            let t = Instant::now();
            let tree = WaveletTree::build(&text, &opts)?;
            let build_time = t.elapsed();
            tree.save(&output)?;
            let mut rep = RunReport::new("build");
            rep.build_ms = Some(ms(build_time));
            rep.add_sizes(&tree);
            rep.emit(out, report.as_deref())
        }
        Command::Query {
            index,
            kind,
            queries,
            output,
            workers,
            chunk_size,
            sort_by_symbol,
            report,
        } => {
            let tree = WaveletTree::load(&index)?;
            let src = fs::read_to_string(&queries).map_err(io_err(&queries))?;
            let parsed = parse_queries(&src, kind, tree.symbol_width())?;
            let config = BatchConfig::new(workers, chunk_size);
            let t = Instant::now();
            let (results, stats) = run_batch(&tree, &parsed.batch, config, sort_by_symbol)
                .map_err(|e| match e {
                    Error::Batch { index, source } => CliError::Data(format!(
                        "{}:{}: {source}",
                        queries.display(),
                        parsed.lines[index]
                    )),
                    other => other.into(),
                })?;
            let elapsed = t.elapsed();
            write_results(&output, &results, tree.symbol_width())?;
            let mut rep = RunReport::new("query");
            rep.queries = Some(parsed.batch.len());
            rep.stage_ms = Some(ms(stats.stage_time));
            rep.process_ms = Some(ms(stats.process_time));
            rep.throughput_qps = Some(throughput(parsed.batch.len(), elapsed));
            rep.emit(out, report.as_deref())
        }
        Command::Bench {
            index,
            kind,
            num,
            seed,
            workers,
            chunk_size,
            iterations,
            report,
        } => {
            if num == 0 {
                return Err(CliError::Usage("--num must be at least 1".into()));
            }
            if iterations < MIN_BENCH_ITERATIONS {
                return Err(CliError::Usage(format!(
                    "--iterations must be at least {MIN_BENCH_ITERATIONS}"
                )));
            }
            let tree = WaveletTree::load(&index)?;
            let queries = random_queries(&tree, kind, num, seed);
            let config = BatchConfig::new(workers, chunk_size);
            let mut times = Vec::with_capacity(iterations);
            let mut stage = Vec::with_capacity(iterations);
            let mut process = Vec::with_capacity(iterations);
            let mut checksum = None;
            for _ in 0..iterations {
                let t = Instant::now();
                let (results, stats) = batch::execute(&tree, &queries, config)?;
                times.push(t.elapsed());
                stage.push(stats.stage_time);
                process.push(stats.process_time);
                let sum = results_checksum(&results);
                if checksum.is_some_and(|c| c != sum) {
                    return Err(CliError::Data("results differ between iterations".into()));
                }
                checksum = Some(sum);
            }
            let mut rep = RunReport::new("bench");
            rep.queries = Some(num);
            rep.iterations = Some(iterations);
            rep.stage_ms = Some(ms(median(&mut stage)));
            rep.process_ms = Some(ms(median(&mut process)));
            rep.throughput_qps = Some(throughput(num, median(&mut times)));
            rep.checksum = checksum.map(|c| format!("{c:016x}"));
            rep.emit(out, report.as_deref())
        }
        Command::Stats { index, report } => {
            let tree = WaveletTree::load(&index)?;
            let mut rep = RunReport::new("stats");
            rep.add_sizes(&tree);
            rep.emit(out, report.as_deref())
        }
    }
}

fn throughput(queries: usize, d: Duration) -> f64 {
    queries as f64 / d.as_secs_f64().max(1e-9)
}

fn median(v: &mut [Duration]) -> Duration {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Reads raw 8-bit or little-endian 16-bit symbols.
pub fn read_symbols(path: &Path, width: u32) -> Result<Vec<Symbol>, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    match width {
        8 => Ok(bytes.iter().map(|&b| b as Symbol).collect()),
        16 => {
            if bytes.len() % 2 != 0 {
                return Err(CliError::Data(format!(
                    "{}: odd byte count {} for 16-bit symbols",
                    path.display(),
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect())
        }
        _ => Err(CliError::Usage(format!("unsupported symbol width {width}"))),
    }
}

/// Parsed query file: the batch and the 1-based source line of each query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQueries {
    pub batch: QueryBatch,
    pub lines: Vec<usize>,
}

/// Parses one query per line. Blank lines and lines starting with `#` are
/// skipped. Access takes a position, rank `symbol,position` and select
/// `symbol,ordinal`.
pub fn parse_queries(
    src: &str,
    kind: QueryKind,
    width: SymbolWidth,
) -> Result<ParsedQueries, CliError> {
    let mut lines = Vec::new();
    let mut positions = Vec::new();
    let mut pairs = Vec::new();
    for (no, raw) in src.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let bad = |what: String| CliError::Data(format!("line {}: {what}", no + 1));
        match kind {
            QueryKind::Access => {
                let pos = line
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| bad(format!("expected a position, got {:?}", line.trim())))?;
                positions.push(pos);
            }
            QueryKind::Rank | QueryKind::Select => {
                let (sym, num) = line
                    .rsplit_once(',')
                    .ok_or_else(|| bad(format!("expected symbol,number, got {line:?}")))?;
                let symbol = parse_symbol(sym, width).map_err(bad)?;
                let num = num
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| bad(format!("expected a number, got {:?}", num.trim())))?;
                pairs.push((symbol, num));
            }
        }
        lines.push(no + 1);
    }
    let batch = match kind {
        QueryKind::Access => QueryBatch::Access(positions),
        QueryKind::Rank => QueryBatch::Rank(
            pairs
                .into_iter()
                .map(|(symbol, pos)| RankQuery { symbol, pos })
                .collect(),
        ),
        QueryKind::Select => QueryBatch::Select(
            pairs
                .into_iter()
                .map(|(symbol, k)| SelectQuery { symbol, k })
                .collect(),
        ),
    };
    Ok(ParsedQueries { batch, lines })
}

/// A decimal symbol value, or a single printable character. Decimal wins,
/// so `7` is symbol 7, not the byte of the character `7`.
pub fn parse_symbol(token: &str, width: SymbolWidth) -> Result<Symbol, String> {
    let trimmed = token.trim();
    let token = if trimmed.is_empty() { token } else { trimmed };
    let max = if width == SymbolWidth::U8 {
        u8::MAX as u32
    } else {
        u16::MAX as u32
    };
    if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
        return match token.parse::<u32>() {
            Ok(v) if v <= max => Ok(v as Symbol),
            _ => Err(format!("symbol {token} exceeds {max}")),
        };
    }
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if !c.is_control() && (c as u32) <= max => Ok(c as u32 as Symbol),
        _ => Err(format!("invalid symbol {token:?}")),
    }
}

/// Renders an access result: printable non-digit bytes as characters,
/// everything else in decimal.
pub fn format_symbol(symbol: Symbol, width: SymbolWidth) -> String {
    match u8::try_from(symbol) {
        Ok(b) if width == SymbolWidth::U8 && b.is_ascii_graphic() && !b.is_ascii_digit() => {
            (b as char).to_string()
        }
        _ => symbol.to_string(),
    }
}

fn run_batch(
    tree: &WaveletTree,
    queries: &QueryBatch,
    config: BatchConfig,
    sort_by_symbol: bool,
) -> crate::Result<(BatchResults, batch::PipelineStats)> {
    if !sort_by_symbol {
        return batch::execute(tree, queries, config);
    }
    match queries {
        QueryBatch::Access(_) => batch::execute(tree, queries, config),
        QueryBatch::Rank(q) => {
            let (sorted, perm) = batch::sort_queries_by_symbol(q, |q| q.symbol);
            let (r, s) = batch::execute(tree, &QueryBatch::Rank(sorted), config)
                .map_err(|e| batch::restore_error(e, &perm))?;
            Ok((
                BatchResults::Rank(batch::restore_order(&r.to_u64(), &perm)),
                s,
            ))
        }
        QueryBatch::Select(q) => {
            let (sorted, perm) = batch::sort_queries_by_symbol(q, |q| q.symbol);
            let (r, s) = batch::execute(tree, &QueryBatch::Select(sorted), config)
                .map_err(|e| batch::restore_error(e, &perm))?;
            Ok((
                BatchResults::Select(batch::restore_order(&r.to_u64(), &perm)),
                s,
            ))
        }
    }
}

fn write_results(path: &Path, results: &BatchResults, width: SymbolWidth) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let res = match results {
        BatchResults::Access(r) => r
            .iter()
            .try_for_each(|&s| writeln!(w, "{}", format_symbol(s, width))),
        BatchResults::Rank(r) | BatchResults::Select(r) => {
            r.iter().try_for_each(|v| writeln!(w, "{v}"))
        }
    };
    res.and_then(|_| w.flush()).map_err(io_err(path))
}

/// Uniform random valid queries of one kind.
pub fn random_queries(tree: &WaveletTree, kind: QueryKind, num: usize, seed: u64) -> QueryBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = tree.len();
    let symbols = tree.alphabet().symbols();
    match kind {
        QueryKind::Access => QueryBatch::Access((0..num).map(|_| rng.gen_range(0..n)).collect()),
        QueryKind::Rank => QueryBatch::Rank(
            (0..num)
                .map(|_| RankQuery {
                    symbol: symbols[rng.gen_range(0..symbols.len())],
                    pos: rng.gen_range(0..=n),
                })
                .collect(),
        ),
        QueryKind::Select => {
            let present: Vec<(Symbol, u64)> = symbols
                .iter()
                .map(|&s| (s, tree.occurrences(s).unwrap()))
                .filter(|&(_, occ)| occ > 0)
                .collect();
            QueryBatch::Select(
                (0..num)
                    .map(|_| {
                        let (symbol, occ) = present[rng.gen_range(0..present.len())];
                        SelectQuery {
                            symbol,
                            k: rng.gen_range(1..=occ),
                        }
                    })
                    .collect(),
            )
        }
    }
}

/// Order-sensitive 64-bit FNV-1a over the results.
pub fn results_checksum(results: &BatchResults) -> u64 {
    results.to_u64().iter().fold(0xcbf2_9ce4_8422_2325, |h, v| {
        v.to_le_bytes().iter().fold(h, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    })
}
