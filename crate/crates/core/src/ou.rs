//! Objective uncertainty: closed-form Ψ(I) and the polynomial solvers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{DdidError, Result};
use crate::family::QueryFamily;
use crate::instance::{canonicalize, mask, normalize_set, OuInstance, SplitBudget};
use crate::select::{kth_smallest, smallest_k};

/// Which closed form produced a value: |I| below, at, or above Γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    BelowBudget,
    AtBudget,
    AboveBudget,
}

impl Regime {
    pub fn of(set_len: usize, gamma: usize) -> Regime {
        match set_len.cmp(&gamma) {
            Ordering::Less => Regime::BelowBudget,
            Ordering::Equal => Regime::AtBudget,
            Ordering::Greater => Regime::AboveBudget,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuSolution {
    /// Queried items, original 0-based indices in ascending order.
    pub query_set: Vec<usize>,
    pub value: f64,
    pub regime: Regime,
}

/// `set` sorted by (c̄, index), i.e. in canonical order.
fn canonical(inst: &OuInstance, set: &[usize]) -> Vec<usize> {
    let cb = inst.c_bar();
    let mut s = set.to_vec();
    s.sort_by(|&a, &b| cb[a].total_cmp(&cb[b]).then(a.cmp(&b)));
    s
}

/// `min_{j ∉ I} c̄_j`, +∞ when I = [n].
fn min_outside(inst: &OuInstance, set: &[usize]) -> f64 {
    let inside = mask(set, inst.n());
    inst.c_bar().iter().zip(&inside).filter(|(_, &m)| !m).map(|(c, _)| *c).fold(f64::INFINITY, f64::min)
}

fn split_value(inst: &OuInstance, sorted: &[usize], outside: f64, g: usize) -> f64 {
    let unattacked = sorted.get(g).map_or(f64::INFINITY, |&j| inst.c_bar()[j]);
    let mut v = inst.upper_bound().min(unattacked);
    if g == inst.gamma() {
        v = v.min(outside);
    }
    v
}

/// ψ(I, Γ_I): the adversary deviates the Γ_I cheapest queried items and keeps
/// the rest of the budget for whatever unqueried item is picked.
pub fn psi_split(inst: &OuInstance, set: &[usize], split: SplitBudget) -> Result<f64> {
    let set = normalize_set(set, inst.n())?;
    split.check(set.len(), inst.gamma())?;
    let sorted = canonical(inst, &set);
    Ok(split_value(inst, &sorted, min_outside(inst, &set), split.gamma_i))
}

/// Ψ(I) in closed form.
pub fn psi_closed_form(inst: &OuInstance, set: &[usize]) -> Result<f64> {
    let set = normalize_set(set, inst.n())?;
    let (n, gamma) = (inst.n(), inst.gamma());
    let m = set.len();
    let z = inst.upper_bound();
    if m < gamma {
        return Ok(z);
    }
    let sorted = canonical(inst, &set);
    let outside = min_outside(inst, &set);
    if m == n {
        let v = (0..=m.min(gamma)).map(|g| split_value(inst, &sorted, outside, g)).fold(f64::NEG_INFINITY, f64::max);
        return Ok(v);
    }
    let cb = inst.c_bar();
    // c̄ of the k-th cheapest queried item (1-based), -∞ for k = 0.
    let jth = |k: usize| if k == 0 { f64::NEG_INFINITY } else { cb[sorted[k - 1]] };
    let inner = if m == gamma { outside } else { jth(gamma + 1).min(outside) };
    Ok(z.min(inner.max(jth(gamma))))
}

/// Optimal query set among all sets of at most `q` items, in linear time.
pub fn solve_selection(inst: &OuInstance, q: usize) -> Result<OuSolution> {
    let (n, gamma) = (inst.n(), inst.gamma());
    if q > n {
        return Err(DdidError::InvalidArgument(format!("q = {q} exceeds n = {n}")));
    }
    if gamma > q {
        return Ok(OuSolution { query_set: Vec::new(), value: inst.upper_bound(), regime: Regime::BelowBudget });
    }
    let (cb, ch) = (inst.c_bar(), inst.c_hat());
    let first = smallest_k(cb, gamma);
    let attacked = first.iter().map(|&j| cb[j] + ch[j]).fold(f64::INFINITY, f64::min);
    let next = if gamma < n { kth_smallest(cb, gamma + 1)? } else { f64::INFINITY };
    Ok(OuSolution { query_set: smallest_k(cb, q), value: attacked.min(next), regime: Regime::of(q, gamma) })
}

/// Max-heap key: heaviest first, ties to the later canonical position.
#[derive(PartialEq)]
struct Heavy(f64, usize);

impl Eq for Heavy {}

impl PartialOrd for Heavy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Heavy {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Optimal query set under a knapsack constraint, in O(n log n).
///
/// Items are scanned in c̄ order while a max-weight heap keeps the Γ
/// lightest among those seen; the first time they fit, they are optimal.
pub fn solve_knapsack(inst: &OuInstance, weights: &[f64], capacity: f64) -> Result<OuSolution> {
    QueryFamily::Knapsack { weights: weights.to_vec(), capacity }.validated(inst.n())?;
    let (n, gamma) = (inst.n(), inst.gamma());
    let z = inst.upper_bound();
    let fallback = OuSolution { query_set: Vec::new(), value: z, regime: Regime::BelowBudget };
    if gamma >= n {
        return Ok(fallback);
    }
    let order = canonicalize(inst.c_bar()).order().to_vec();
    let cb = inst.c_bar();
    let mut heap = BinaryHeap::with_capacity(gamma + 1);
    let mut load = 0.0;
    for (r, &j) in order.iter().enumerate().take(gamma) {
        heap.push(Heavy(weights[j], r));
        load += weights[j];
    }
    let mut first_evicted = usize::MAX;
    for (k, &j) in order.iter().enumerate().skip(gamma) {
        heap.push(Heavy(weights[j], k));
        load += weights[j];
        let Heavy(a, r) = heap.pop().expect("heap holds at least one item");
        load -= a;
        first_evicted = first_evicted.min(r);
        if load <= capacity {
            let mut ranks: Vec<usize> = heap.iter().map(|h| h.1).collect();
            let last = ranks.iter().copied().max().map_or(f64::NEG_INFINITY, |r| cb[order[r]]);
            // Items after k were never touched; the cheapest unqueried item is
            // the first evicted one or item k + 1.
            let outside_rank = if k + 1 < n { first_evicted.min(k + 1) } else { first_evicted };
            let outside = cb[order[outside_rank]];
            ranks.sort_unstable();
            let mut query_set: Vec<usize> = ranks.iter().map(|&r| order[r]).collect();
            query_set.sort_unstable();
            return Ok(OuSolution { query_set, value: z.min(outside.max(last)), regime: Regime::AtBudget });
        }
    }
    Ok(fallback)
}

/// Best listed set by closed-form evaluation; ties go to the smaller, then
/// lexicographically first, set.
pub fn solve_explicit(inst: &OuInstance, sets: &[Vec<usize>]) -> Result<OuSolution> {
    let QueryFamily::Explicit(mut sets) = QueryFamily::Explicit(sets.to_vec()).validated(inst.n())? else {
        unreachable!("validation preserves the variant")
    };
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut best: Option<(Vec<usize>, f64)> = None;
    for s in sets {
        let v = psi_closed_form(inst, &s)?;
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((s, v));
        }
    }
    let (query_set, value) = best.expect("validated lists are nonempty");
    let regime = Regime::of(query_set.len(), inst.gamma());
    Ok(OuSolution { query_set, value, regime })
}

/// Dispatches to the family-specific solver.
pub fn solve_ou(inst: &OuInstance, family: &QueryFamily) -> Result<OuSolution> {
    match family {
        QueryFamily::Selection { q } => solve_selection(inst, *q),
        QueryFamily::Knapsack { weights, capacity } => solve_knapsack(inst, weights, *capacity),
        QueryFamily::Explicit(sets) => solve_explicit(inst, sets),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou_a() -> OuInstance {
        OuInstance::new(vec![1.0, 2.0, 3.0, 4.0], vec![10.0, 1.0, 1.0, 1.0], 1).unwrap()
    }

    #[test]
    fn splits() {
        let s = |set: &[usize], g| psi_split(&ou_a(), set, SplitBudget::new(g, 1).unwrap()).unwrap();
        assert_eq!(s(&[0], 1), 2.0);
        assert_eq!(s(&[0, 1], 0), 1.0);
        assert_eq!(s(&[0, 1], 1), 2.0);
        assert!(psi_split(&ou_a(), &[], SplitBudget::new(1, 1).unwrap()).is_err());
    }

    #[test]
    fn closed_forms() {
        assert_eq!(psi_closed_form(&ou_a(), &[0]).unwrap(), 2.0);
        assert_eq!(psi_closed_form(&ou_a(), &[0, 1]).unwrap(), 2.0);
        assert_eq!(psi_closed_form(&ou_a().with_gamma(2), &[0]).unwrap(), 3.0);
        assert_eq!(psi_closed_form(&ou_a().with_gamma(0), &[2]).unwrap(), 1.0);
    }

    #[test]
    fn knapsack_heap_ties_evict_later_items() {
        let inst = OuInstance::new(vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0], 1).unwrap();
        let sol = solve_knapsack(&inst, &[2.0, 2.0, 2.0], 2.0).unwrap();
        assert_eq!(sol.query_set, vec![0]);
        assert_eq!(sol.value, 2.0);
    }
}
