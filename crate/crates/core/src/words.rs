//! Deterministic sums over all words of a given length.
//!
//! A [`WordFold`] describes an incremental computation along a word
//! `w_1 w_2 ... w_n`: a root state, a transition per appended symbol, and a
//! value read off each node. [`level_sums`] visits the tree of all words in
//! lexicographic order and returns, for each length, the sum of the node
//! values at that length.
//!
//! The tree is cut at a fixed level into blocks whose number depends only on
//! `d` and `n`. Each block is summed sequentially and the block sums are
//! combined by a fixed pairwise tree, so the result is bit-identical whether
//! the blocks run on one thread or many.

use std::ops::Add;

use crate::error::{Error, Result};

/// Incremental word computation.
pub trait WordFold: Sync {
    type State: Clone + Send;
    type Value: Copy + Default + Send + Add<Output = Self::Value>;

    fn root(&self) -> Self::State;
    /// Appends `symbol` as letter number `level` (1-based) of the word.
    fn step(&self, state: &Self::State, symbol: usize, level: usize) -> Self::State;
    /// Contribution of the node at depth `level`.
    fn value(&self, state: &Self::State, level: usize) -> Self::Value;
}

/// How word sums are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Data-parallel when the `parallel` feature is enabled.
    #[default]
    Auto,
    Sequential,
}

/// Target number of blocks at the cut level.
const TARGET_BLOCKS: usize = 256;

/// Fails when `d^n` exceeds `cap`.
pub fn check_budget(d: usize, n: usize, cap: u64) -> Result<()> {
    let words = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if words > cap as u128 {
        return Err(Error::WordBudget { words, cap });
    }
    Ok(())
}

/// Sets the size of the global worker pool. Only the first call has an effect.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

fn cut_level(d: usize, n: usize) -> usize {
    let mut level = 0;
    let mut blocks = 1usize;
    while level < n && blocks < TARGET_BLOCKS {
        blocks *= d;
        level += 1;
    }
    level
}

fn subtree<F: WordFold>(fold: &F, d: usize, state: &F::State, level: usize, n: usize, all: bool, acc: &mut [F::Value]) {
    if all || level == n {
        acc[level] = acc[level] + fold.value(state, level);
    }
    if level == n {
        return;
    }
    for a in 0..d {
        let next = fold.step(state, a, level + 1);
        subtree(fold, d, &next, level + 1, n, all, acc);
    }
}

fn top<F: WordFold>(fold: &F, d: usize, state: &F::State, level: usize, cut: usize, acc: &mut [F::Value]) {
    if level == cut {
        return;
    }
    acc[level] = acc[level] + fold.value(state, level);
    for a in 0..d {
        let next = fold.step(state, a, level + 1);
        top(fold, d, &next, level + 1, cut, acc);
    }
}

fn block<F: WordFold>(fold: &F, d: usize, n: usize, cut: usize, index: usize, all: bool) -> Vec<F::Value> {
    let mut digits = vec![0usize; cut];
    let mut rest = index;
    for slot in digits.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    let mut state = fold.root();
    for (i, &a) in digits.iter().enumerate() {
        state = fold.step(&state, a, i + 1);
    }
    let mut acc = vec![F::Value::default(); n + 1];
    subtree(fold, d, &state, cut, n, all, &mut acc);
    acc
}

fn tree_reduce<V: Copy + Default + Add<Output = V>>(items: &[V]) -> V {
    match items.len() {
        0 => V::default(),
        1 => items[0],
        len => {
            let mid = len.div_ceil(2);
            tree_reduce(&items[..mid]) + tree_reduce(&items[mid..])
        }
    }
}

/// Sums node values over all words of length `0..=n`.
///
/// Entry `j` of the result is the sum over the `d^j` words of length `j`.
/// With `all_levels` unset only entry `n` is computed; the others are zero.
pub fn level_sums<F: WordFold>(fold: &F, d: usize, n: usize, all_levels: bool, exec: Execution) -> Vec<F::Value> {
    let cut = cut_level(d, n);
    let nblocks = d.pow(cut as u32);
    let blocks: Vec<Vec<F::Value>> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Auto => {
            use rayon::prelude::*;
            (0..nblocks).into_par_iter().map(|b| block(fold, d, n, cut, b, all_levels)).collect()
        }
        _ => (0..nblocks).map(|b| block(fold, d, n, cut, b, all_levels)).collect(),
    };
    let mut out = vec![F::Value::default(); n + 1];
    if all_levels {
        top(fold, d, &fold.root(), 0, cut, &mut out);
    }
    let mut column = Vec::with_capacity(nblocks);
    for (level, slot) in out.iter_mut().enumerate().skip(cut) {
        if !all_levels && level != n {
            continue;
        }
        column.clear();
        column.extend(blocks.iter().map(|b| b[level]));
        *slot = tree_reduce(&column);
    }
    out
}
