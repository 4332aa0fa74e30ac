//! Order statistics in linear time.
//!
//! All routines are built on `select_nth_unstable_by`, which runs in
//! worst-case linear time (introselect with a median-of-medians fallback).
//! Ties between equal values are resolved by ascending index, so "the k
//! smallest items" is always a well-defined set.

use crate::error::{DdidError, Result};

fn keyed(values: &[f64]) -> Vec<(f64, usize)> {
    values.iter().copied().zip(0..).collect()
}

fn key_cmp(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k`-th smallest value (1-based rank).
pub fn kth_smallest(values: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > values.len() {
        return Err(DdidError::InvalidArgument(format!("rank {k} out of range 1..={}", values.len())));
    }
    let mut v = values.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(*kth)
}

/// Indices whose (value, index) rank lies in `lo..hi` (0-based, half-open),
/// returned in ascending index order.
pub fn rank_window(values: &[f64], lo: usize, hi: usize) -> Vec<usize> {
    let n = values.len();
    let hi = hi.min(n);
    if lo >= hi {
        return Vec::new();
    }
    let mut keys = keyed(values);
    if lo > 0 {
        keys.select_nth_unstable_by(lo - 1, key_cmp);
    }
    let rest = &mut keys[lo..];
    if hi - lo < rest.len() {
        rest.select_nth_unstable_by(hi - lo - 1, key_cmp);
    }
    let mut mark = vec![false; n];
    for &(_, i) in &rest[..hi - lo] {
        mark[i] = true;
    }
    (0..n).filter(|&i| mark[i]).collect()
}

/// Indices of the `k` smallest values, ascending by index.
pub fn smallest_k(values: &[f64], k: usize) -> Vec<usize> {
    rank_window(values, 0, k)
}

/// Sum of the `k` smallest values; 0 for `k = 0`.
pub fn sum_smallest(values: &[f64], k: usize) -> f64 {
    let k = k.min(values.len());
    if k == 0 {
        return 0.0;
    }
    let t = kth_smallest(values, k).expect("rank checked above");
    let mut below = 0usize;
    let mut sum = 0.0;
    for &v in values {
        if v < t {
            below += 1;
            sum += v;
        }
    }
    sum + (k - below) as f64 * t
}
