use crate::error::{DdidError, Result};

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(DdidError::InvalidInstance(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

/// 1-selection with objective uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct OuInstance {
    c_bar: Vec<f64>,
    c_hat: Vec<f64>,
    gamma: usize,
}

impl OuInstance {
    pub fn new(c_bar: Vec<f64>, c_hat: Vec<f64>, gamma: usize) -> Result<Self> {
        if c_bar.is_empty() {
            return Err(DdidError::InvalidInstance("at least one item is required".into()));
        }
        if c_bar.len() != c_hat.len() {
            return Err(DdidError::InvalidInstance(format!(
                "c_bar has {} entries but c_hat has {}",
                c_bar.len(),
                c_hat.len()
            )));
        }
        check_finite("c_bar", &c_bar)?;
        check_finite("c_hat", &c_hat)?;
        if let Some(i) = c_hat.iter().position(|&d| d < 0.0) {
            return Err(DdidError::InvalidInstance(format!("deviation c_hat[{i}] is negative")));
        }
        Ok(OuInstance { c_bar, c_hat, gamma })
    }

    pub fn n(&self) -> usize {
        self.c_bar.len()
    }

    pub fn c_bar(&self) -> &[f64] {
        &self.c_bar
    }

    pub fn c_hat(&self) -> &[f64] {
        &self.c_hat
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Γ capped at n; a larger budget cannot be spent.
    pub fn effective_gamma(&self) -> usize {
        self.gamma.min(self.n())
    }

    /// Same data with a different budget.
    pub fn with_gamma(&self, gamma: usize) -> Self {
        OuInstance { gamma, ..self.clone() }
    }

    /// `min_j (c̄_j + ĉ_j)`, the value of querying nothing useful.
    pub fn upper_bound(&self) -> f64 {
        self.c_bar.iter().zip(&self.c_hat).map(|(a, b)| a + b).fold(f64::INFINITY, f64::min)
    }

    /// `min_j c̄_j`, the value with no deviations at all.
    pub fn lower_bound(&self) -> f64 {
        self.c_bar.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// p-selection with constraint uncertainty: at most `b` selected items may fail.
#[derive(Debug, Clone, PartialEq)]
pub struct CuInstance {
    c: Vec<f64>,
    p: usize,
    b: usize,
    gamma: usize,
}

impl CuInstance {
    pub fn new(c: Vec<f64>, p: usize, b: usize, gamma: usize) -> Result<Self> {
        check_finite("c", &c)?;
        if p == 0 || p > c.len() {
            return Err(DdidError::InvalidInstance(format!("p = {p} must lie in 1..={}", c.len())));
        }
        Ok(CuInstance { c, p, b, gamma })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn effective_gamma(&self) -> usize {
        self.gamma.min(self.n())
    }

    /// With `p ≤ b` or `Γ ≤ b` no selection can ever exceed the failure allowance.
    pub fn is_trivial(&self) -> bool {
        self.p <= self.b || self.gamma <= self.b
    }
}

/// Sorting permutation: `order[k]` is the original index at rank `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut inverse = vec![usize::MAX; n];
        for (k, &i) in order.iter().enumerate() {
            if i >= n || inverse[i] != usize::MAX {
                return Err(DdidError::InvalidArgument("order is not a permutation".into()));
            }
            inverse[i] = k;
        }
        Ok(Permutation { order, inverse })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `inverse[i]` is the rank of original index `i`.
    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `values` rearranged into rank order.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| values[i]).collect()
    }

    /// Sorts `set` by rank in place.
    pub fn sort_by_rank(&self, set: &mut [usize]) {
        set.sort_by_key(|&i| self.inverse[i]);
    }
}

/// Stable ascending order of `costs`; equal costs keep index order.
pub fn canonicalize(costs: &[f64]) -> Permutation {
    // Sorting (key, index) pairs in place keeps the comparisons in cache;
    // the key orders like f64::total_cmp and the index breaks ties.
    let mut keyed: Vec<(u64, usize)> = costs.iter().enumerate().map(|(i, &c)| (total_order_key(c), i)).collect();
    keyed.sort_unstable();
    let order = keyed.into_iter().map(|(_, i)| i).collect();
    Permutation::from_order(order).expect("sorted indices form a permutation")
}

fn total_order_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// How the deviation budget is divided between queried items and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitBudget {
    pub gamma_i: usize,
    pub gamma_rest: usize,
}

impl SplitBudget {
    pub fn new(gamma_i: usize, gamma: usize) -> Result<Self> {
        if gamma_i > gamma {
            return Err(DdidError::InvalidArgument(format!("split {gamma_i} exceeds budget {gamma}")));
        }
        Ok(SplitBudget { gamma_i, gamma_rest: gamma - gamma_i })
    }

    /// All splits `0..=min(set_len, gamma)`.
    pub fn all(set_len: usize, gamma: usize) -> Vec<SplitBudget> {
        (0..=set_len.min(gamma)).map(|g| SplitBudget { gamma_i: g, gamma_rest: gamma - g }).collect()
    }

    pub(crate) fn check(&self, set_len: usize, gamma: usize) -> Result<()> {
        if self.gamma_i > set_len.min(gamma) || self.gamma_i + self.gamma_rest != gamma {
            return Err(DdidError::InvalidArgument(format!(
                "split ({}, {}) is not admissible for |I| = {set_len}, budget {gamma}",
                self.gamma_i, self.gamma_rest
            )));
        }
        Ok(())
    }
}

/// Validates an index set against `n`, returning it sorted.
pub fn normalize_set(set: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut s = set.to_vec();
    s.sort_unstable();
    for w in s.windows(2) {
        if w[0] == w[1] {
            return Err(DdidError::InvalidArgument(format!("index {} repeated in query set", w[0])));
        }
    }
    if let Some(&i) = s.last() {
        if i >= n {
            return Err(DdidError::InvalidArgument(format!("index {i} out of range for n = {n}")));
        }
    }
    Ok(s)
}

/// Membership mask of `set` over `0..n`.
pub(crate) fn mask(set: &[usize], n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in set {
        m[i] = true;
    }
    m
}
