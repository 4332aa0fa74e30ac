#![allow(dead_code)]

use ddid_core::{CuInstance, OuInstance, QueryFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn int_vec(rng: &mut impl Rng, n: usize, lo: i32, hi: i32) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi) as f64).collect()
}

pub fn ou_instance(rng: &mut impl Rng, n: usize) -> OuInstance {
    let gamma = rng.gen_range(0..=n);
    OuInstance::new(int_vec(rng, n, 0, 20), int_vec(rng, n, 0, 20), gamma).unwrap()
}

pub fn cu_instance(rng: &mut impl Rng, n: usize) -> CuInstance {
    let p = rng.gen_range(1..=n);
    let b = rng.gen_range(0..=p);
    let gamma = rng.gen_range(0..=n);
    CuInstance::new(int_vec(rng, n, -5, 20), p, b, gamma).unwrap()
}

pub fn knapsack(rng: &mut impl Rng, n: usize) -> QueryFamily {
    let weights = int_vec(rng, n, 0, 10);
    let total: f64 = weights.iter().sum();
    let capacity = rng.gen_range(0..=total as i32) as f64;
    QueryFamily::Knapsack { weights, capacity }
}

/// Every subset of `0..n`.
pub fn all_sets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
}

pub fn random_set(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}
