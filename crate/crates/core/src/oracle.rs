//! Brute-force reference implementations.
//!
//! Every function here is a linear scan over the definition. Nothing in the
//! library's query or construction paths calls into this module; it exists
//! so tests (ours and downstream) have an independent answer to compare
//! against.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Immutable copy of a text, queried by scanning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveText<T> {
    text: Vec<T>,
}

impl<T: Copy + Eq> NaiveText<T> {
    pub fn new(text: &[T]) -> Self {
        Self {
            text: text.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn access(&self, i: usize) -> Result<T> {
        naive_access(&self.text, i)
    }

    pub fn rank(&self, c: T, i: usize) -> Result<u64> {
        naive_rank(&self.text, c, i)
    }

    pub fn select(&self, c: T, k: u64) -> Result<u64> {
        naive_select(&self.text, c, k)
    }

    pub fn occurrences(&self, c: T) -> u64 {
        self.text.iter().filter(|&&x| x == c).count() as u64
    }
}

pub fn naive_access<T: Copy>(text: &[T], i: usize) -> Result<T> {
    text.get(i).copied().ok_or(Error::IndexOutOfRange {
        index: i as u64,
        len: text.len() as u64,
    })
}

/// Occurrences of `c` in `text[0, i)`.
pub fn naive_rank<T: Copy + Eq>(text: &[T], c: T, i: usize) -> Result<u64> {
    if i > text.len() {
        return Err(Error::IndexOutOfRange {
            index: i as u64,
            len: text.len() as u64,
        });
    }
    Ok(text[..i].iter().filter(|&&x| x == c).count() as u64)
}

/// 0-based position of the `k`-th occurrence of `c`, `k` starting at 1.
pub fn naive_select<T: Copy + Eq>(text: &[T], c: T, k: u64) -> Result<u64> {
    let mut seen = 0;
    if k >= 1 {
        for (pos, &x) in text.iter().enumerate() {
            if x == c {
                seen += 1;
                if seen == k {
                    return Ok(pos as u64);
                }
            }
        }
    }
    let count = text.iter().filter(|&&x| x == c).count() as u64;
    Err(Error::OrdinalOutOfRange { ordinal: k, count })
}

/// Ones in `bits[0, i)`.
pub fn naive_rank_bits(bits: &[bool], i: usize) -> Result<u64> {
    naive_rank(bits, true, i)
}

/// Zeros in `bits[0, i)`.
pub fn naive_rank0_bits(bits: &[bool], i: usize) -> Result<u64> {
    naive_rank(bits, false, i)
}

/// Position of the `k`-th one.
pub fn naive_select_bits(bits: &[bool], k: u64) -> Result<u64> {
    naive_select(bits, true, k)
}

/// Position of the `k`-th zero.
pub fn naive_select0_bits(bits: &[bool], k: u64) -> Result<u64> {
    naive_select(bits, false, k)
}

/// Half-open symbol interval covered by a tree node.
pub type Interval = (u64, u64);

/// Every node interval of the reduced tree over `[0, sigma)`, by level.
///
/// `[a, b)` with `b - a >= 2` splits into `[a, a + p)` and `[a + p, b)`
/// where `p` is the largest power of two strictly below `b - a` (1 when the
/// width is 2). Leaves are included at the level they appear on.
pub fn naive_tree_shape(sigma: u64) -> Vec<Vec<Interval>> {
    fn walk(a: u64, b: u64, level: usize, out: &mut Vec<Vec<Interval>>) {
        if out.len() <= level {
            out.push(Vec::new());
        }
        out[level].push((a, b));
        if b - a >= 2 {
            let w = b - a;
            let p = if w <= 2 {
                1
            } else {
                1 << (63 - (w - 1).leading_zeros())
            };
            walk(a, a + p, level + 1, out);
            walk(a + p, b, level + 1, out);
        }
    }
    let mut out = Vec::new();
    if sigma > 0 {
        walk(0, sigma, 0, &mut out);
    }
    out
}

/// Root-to-leaf paths of the reduced tree: `paths[c]` lists the branch bits
/// (0 = left) taken to reach leaf `c`.
pub fn naive_paths(sigma: u64) -> Vec<Vec<bool>> {
    fn walk(a: u64, b: u64, path: &mut Vec<bool>, out: &mut HashMap<u64, Vec<bool>>) {
        if b - a == 1 {
            out.insert(a, path.clone());
            return;
        }
        let w = b - a;
        let p = if w <= 2 {
            1
        } else {
            1 << (63 - (w - 1).leading_zeros())
        };
        path.push(false);
        walk(a, a + p, path, out);
        path.pop();
        path.push(true);
        walk(a + p, b, path, out);
        path.pop();
    }
    let mut out = HashMap::new();
    if sigma > 0 {
        walk(0, sigma, &mut Vec::new(), &mut out);
    }
    (0..sigma).map(|c| out.remove(&c).unwrap()).collect()
}

/// Start of the level-`level` node that contains `c`, by enumeration.
pub fn naive_node_start(sigma: u64, c: u64, level: usize) -> Option<u64> {
    naive_tree_shape(sigma)
        .get(level)?
        .iter()
        .find(|&&(a, b)| a <= c && c < b)
        .map(|&(a, _)| a)
}

/// Bit arrays of the level-wise tree, built node by node: each level holds
/// the nodes of that level left to right, every node listing one bit per
/// text symbol it covers (1 = goes right), in text order.
pub fn naive_levels(text: &[u32], sigma: u64) -> Vec<Vec<bool>> {
    let shape = naive_tree_shape(sigma);
    shape
        .iter()
        .filter_map(|nodes| {
            let mut bits = Vec::new();
            for &(a, b) in nodes {
                if b - a < 2 {
                    continue;
                }
                let w = b - a;
                let p = if w <= 2 {
                    1
                } else {
                    1 << (63 - (w - 1).leading_zeros())
                };
                bits.extend(
                    text.iter()
                        .map(|&c| c as u64)
                        .filter(|&c| a <= c && c < b)
                        .map(|c| c >= a + p),
                );
            }
            if nodes.iter().any(|&(a, b)| b - a >= 2) {
                Some(bits)
            } else {
                None
            }
        })
        .collect()
}
