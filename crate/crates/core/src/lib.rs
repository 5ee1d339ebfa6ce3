//! Level-wise wavelet tree over 8- and 16-bit symbols.
//!
//! The tree stores one concatenated bit array per level and answers
//! `access`, `rank` and `select` with one binary rank or select per level,
//! backed by a two-level rank directory with sampled select.
//!
//! ```
//! use wavelet_core::WaveletTree;
//!
//! let text: Vec<u16> = b"dbdcaacbcd".iter().map(|&b| b as u16).collect();
//! let tree = WaveletTree::construct(&text, 1).unwrap();
//! assert_eq!(tree.access(6).unwrap(), b'c' as u16);
//! assert_eq!(tree.rank(b'c' as u16, 6).unwrap(), 1);
//! assert_eq!(tree.select(b'c' as u16, 2).unwrap(), 6);
//! ```

pub mod alphabet;
pub mod batch;
pub mod bitvec;
pub mod cli;
mod codec;
pub mod error;
#[cfg(any(test, feature = "testing"))]
pub mod oracle;
pub mod rankselect;
pub mod workers;
pub mod wtree;

pub use alphabet::{AlphabetMap, Symbol};
pub use batch::{BatchConfig, QueryBatch, RankQuery, SelectQuery};
pub use bitvec::{BitArray, BitSlice};
pub use error::{Error, Result};
pub use rankselect::{RankSelectBitVec, RankSelectIndex, RankSelectParams};
pub use wtree::{BuildOptions, SizeReport, SymbolWidth, WaveletTree};
