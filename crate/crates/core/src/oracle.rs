//! Exhaustive ground truth and the hardness-reduction instance builders.
//!
//! Everything here enumerates; the limits keep accidental calls on large
//! inputs from running forever. Sets are enumerated by cardinality first and
//! lexicographically within a cardinality, and an incumbent is only replaced
//! by a strictly better value, so ties resolve to the smallest, then
//! lexicographically first, set.

use crate::cost::Cost;
use crate::error::{DdidError, Result};
use crate::family::QueryFamily;
use crate::instance::{normalize_set, CuInstance, OuInstance};

/// Caps on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_n: usize,
    pub max_subsets: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_n: 12, max_subsets: 1 << 22 }
    }
}

impl OracleLimits {
    fn check_n(&self, what: &'static str, n: usize) -> Result<()> {
        let limit = self.max_n.min(63);
        if n > limit {
            return Err(DdidError::Capacity { what, size: n, limit });
        }
        Ok(())
    }

    fn check_count(&self, what: &'static str, count: u128) -> Result<()> {
        if count > self.max_subsets as u128 {
            return Err(DdidError::Capacity {
                what,
                size: count.min(usize::MAX as u128) as usize,
                limit: self.max_subsets,
            });
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Subsets of `0..n` with at most `max_k` elements, by cardinality and then
/// lexicographically.
#[derive(Debug, Clone)]
pub struct Subsets {
    n: usize,
    max_k: usize,
    cur: Vec<usize>,
    started: bool,
    done: bool,
}

impl Subsets {
    pub fn new(n: usize, max_k: usize) -> Self {
        Subsets { n, max_k: max_k.min(n), cur: Vec::new(), started: false, done: false }
    }

    /// Number of sets the iterator yields.
    pub fn count_total(n: usize, max_k: usize) -> u128 {
        (0..=max_k.min(n)).map(|k| binomial(n, k)).sum()
    }

    fn advance(&mut self) -> bool {
        let k = self.cur.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.cur[i] < self.n - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                return true;
            }
        }
        if k < self.max_k {
            self.cur = (0..=k).collect();
            return true;
        }
        false
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Vec::new());
        }
        if self.advance() {
            Some(self.cur.clone())
        } else {
            self.done = true;
            None
        }
    }
}

fn to_mask(set: &[usize]) -> u64 {
    set.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

/// Submasks of `within` with at most `max_bits` bits set.
fn submasks(within: u64, max_bits: usize) -> impl Iterator<Item = u64> {
    let mut next = Some(within);
    std::iter::from_fn(move || {
        let s = next?;
        next = if s == 0 { None } else { Some((s - 1) & within) };
        Some(s)
    })
    .filter(move |s| s.count_ones() as usize <= max_bits)
}

/// Sets of `family` in tie-breaking order.
fn family_members(family: &QueryFamily, n: usize, limits: &OracleLimits) -> Result<Vec<Vec<usize>>> {
    match family {
        QueryFamily::Explicit(sets) => {
            let mut sets = sets.clone();
            sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            Ok(sets)
        }
        QueryFamily::Selection { q } => {
            limits.check_n("item count", n)?;
            limits.check_count("query family", Subsets::count_total(n, *q))?;
            Ok(Subsets::new(n, *q).collect())
        }
        QueryFamily::Knapsack { .. } => {
            limits.check_n("item count", n)?;
            limits.check_count("query family", Subsets::count_total(n, n))?;
            Ok(Subsets::new(n, n).filter(|s| family.contains(s)).collect())
        }
    }
}

/// Ψ(I) by enumerating every attack on the queried items. The response to
/// an unqueried item is evaluated analytically: it deviates whenever budget
/// is left.
pub fn psi_bruteforce(inst: &OuInstance, set: &[usize], limits: &OracleLimits) -> Result<f64> {
    let set = normalize_set(set, inst.n())?;
    limits.check_n("query set", set.len())?;
    let n = inst.n();
    let in_set = to_mask(&set);
    let (cb, ch) = (inst.c_bar(), inst.c_hat());
    let mut best = f64::NEG_INFINITY;
    for gm in submasks(in_set, inst.gamma()) {
        let rest = inst.gamma() - gm.count_ones() as usize;
        let mut val = f64::INFINITY;
        for j in 0..n {
            let bit = 1u64 << j;
            let cost = if in_set & bit != 0 {
                if gm & bit != 0 {
                    cb[j] + ch[j]
                } else {
                    cb[j]
                }
            } else if rest >= 1 {
                cb[j] + ch[j]
            } else {
                cb[j]
            };
            val = val.min(cost);
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Ψ(I) by enumerating the full deviation vector as well as its observed
/// part, with no analytic shortcut. Exponential in n.
pub fn psi_bruteforce_exhaustive(inst: &OuInstance, set: &[usize], limits: &OracleLimits) -> Result<f64> {
    let set = normalize_set(set, inst.n())?;
    let n = inst.n();
    limits.check_n("item count", n)?;
    let in_set = to_mask(&set);
    let (cb, ch) = (inst.c_bar(), inst.c_hat());
    // worst[γ][j]: adversary's best completion of observation γ against item j.
    let mut worst: std::collections::HashMap<u64, Vec<f64>> = std::collections::HashMap::new();
    for delta in 0u64..(1u64 << n) {
        if delta.count_ones() as usize > inst.gamma() {
            continue;
        }
        let row = worst.entry(delta & in_set).or_insert_with(|| vec![f64::NEG_INFINITY; n]);
        for j in 0..n {
            let c = if delta & (1 << j) != 0 { cb[j] + ch[j] } else { cb[j] };
            row[j] = row[j].max(c);
        }
    }
    Ok(worst.values().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max))
}

/// Minimizes Ψ over the family by enumeration.
pub fn ou_bruteforce(inst: &OuInstance, family: &QueryFamily, limits: &OracleLimits) -> Result<(Vec<usize>, f64)> {
    let family = family.validated(inst.n())?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for s in family_members(&family, inst.n(), limits)? {
        let v = psi_bruteforce(inst, &s, limits)?;
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((s, v));
        }
    }
    Ok(best.expect("validated families are nonempty"))
}

/// All p-subsets of the items as bitmasks with their cost, cheapest first.
struct Selections {
    xs: Vec<(u64, f64)>,
}

impl Selections {
    fn new(inst: &CuInstance, limits: &OracleLimits) -> Result<Self> {
        let n = inst.n();
        limits.check_n("item count", n)?;
        limits.check_count("selection set", binomial(n, inst.p()))?;
        let c = inst.c();
        let mut xs: Vec<(u64, f64)> = Vec::with_capacity(binomial(n, inst.p()) as usize);
        let mut cur: Vec<usize> = (0..inst.p()).collect();
        loop {
            xs.push((to_mask(&cur), cur.iter().map(|&i| c[i]).sum()));
            let k = cur.len();
            let mut i = k;
            let mut moved = false;
            while i > 0 {
                i -= 1;
                if cur[i] < n - k + i {
                    cur[i] += 1;
                    for j in i + 1..k {
                        cur[j] = cur[j - 1] + 1;
                    }
                    moved = true;
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        xs.sort_by(|a, b| a.1.total_cmp(&b.1));
        Ok(Selections { xs })
    }

    /// Cheapest selection surviving the observed attack `gm`.
    fn inner(&self, inst: &CuInstance, set_mask: u64, gm: u64) -> Cost {
        let outside = !set_mask & ((1u64 << inst.n()) - 1);
        let rest = inst.gamma() - gm.count_ones() as usize;
        self.xs
            .iter()
            .find(|(x, _)| (x & gm).count_ones() as usize + rest.min((x & outside).count_ones() as usize) <= inst.b())
            .map_or(Cost::Infinite, |&(_, v)| Cost::Finite(v))
    }

    /// Φ(I), or any value ≥ `cutoff` as soon as one is certain.
    fn phi(&self, inst: &CuInstance, set_mask: u64, cutoff: Cost) -> Cost {
        let mut best = Cost::Finite(f64::NEG_INFINITY);
        for gm in submasks(set_mask, inst.gamma()) {
            best = best.max(self.inner(inst, set_mask, gm));
            if best >= cutoff {
                break;
            }
        }
        best
    }
}

/// Φ(I) by enumerating every observed attack and every p-selection.
pub fn phi_bruteforce(inst: &CuInstance, set: &[usize], limits: &OracleLimits) -> Result<Cost> {
    let set = normalize_set(set, inst.n())?;
    let sel = Selections::new(inst, limits)?;
    Ok(sel.phi(inst, to_mask(&set), Cost::Infinite))
}

/// φ(I, Γ_I) by enumerating every attack of exactly `gamma_i` queried items,
/// not only the cheapest ones.
pub fn phi_bruteforce_split(inst: &CuInstance, set: &[usize], gamma_i: usize, limits: &OracleLimits) -> Result<Cost> {
    let set = normalize_set(set, inst.n())?;
    crate::instance::SplitBudget::new(gamma_i, inst.gamma())?.check(set.len(), inst.gamma())?;
    let sel = Selections::new(inst, limits)?;
    let m = to_mask(&set);
    Ok(submasks(m, gamma_i)
        .filter(|g| g.count_ones() as usize == gamma_i)
        .map(|g| sel.inner(inst, m, g))
        .fold(Cost::Finite(f64::NEG_INFINITY), Cost::max))
}

/// Minimizes Φ over the family by enumeration; `None` when every member
/// evaluates to +∞.
pub fn cu_bruteforce(
    inst: &CuInstance,
    family: &QueryFamily,
    limits: &OracleLimits,
) -> Result<Option<(Vec<usize>, f64)>> {
    let family = family.validated(inst.n())?;
    let sel = Selections::new(inst, limits)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for s in family_members(&family, inst.n(), limits)? {
        let cutoff = best.as_ref().map_or(Cost::Infinite, |(_, v)| Cost::Finite(*v));
        if let Cost::Finite(v) = sel.phi(inst, to_mask(&s), cutoff) {
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((s, v));
            }
        }
    }
    Ok(best)
}

/// Simple undirected graph on vertices `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(m: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if m > 63 {
            return Err(DdidError::Capacity { what: "graph", size: m, limit: 63 });
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= m || v >= m {
                return Err(DdidError::InvalidArgument(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(DdidError::InvalidArgument(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(DdidError::InvalidArgument(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Graph { m, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn is_independent(&self, mask: u64) -> bool {
        self.edges.iter().all(|&(u, v)| mask & (1 << u) == 0 || mask & (1 << v) == 0)
    }

    /// Every independent set, including the empty one.
    pub fn independent_sets(&self) -> Vec<Vec<usize>> {
        Subsets::new(self.m, self.m).filter(|s| self.is_independent(to_mask(s))).collect()
    }

    /// Size of a maximum independent set, by enumeration.
    pub fn independence_number(&self) -> usize {
        (0u64..(1u64 << self.m)).filter(|&s| self.is_independent(s)).map(|s| s.count_ones() as usize).max().unwrap_or(0)
    }
}

/// OU instance whose optimum is 0 iff `g` has an independent set of size `k`,
/// and 1 otherwise.
pub fn reduce_independent_set(g: &Graph, k: usize) -> Result<(OuInstance, QueryFamily)> {
    if k == 0 || k > g.vertex_count() {
        return Err(DdidError::InvalidArgument(format!("K = {k} must lie in 1..={}", g.vertex_count())));
    }
    let m = g.vertex_count();
    let inst = OuInstance::new(vec![0.0; m], vec![1.0; m], k)?;
    Ok((inst, QueryFamily::Explicit(g.independent_sets())))
}

/// CU instance whose optimum is `-K` iff `k` splits into two halves of equal
/// size and equal sum `K`.
pub fn reduce_partition(k: &[i64]) -> Result<(CuInstance, QueryFamily)> {
    let m = k.len();
    if m == 0 || !m.is_multiple_of(2) {
        return Err(DdidError::InvalidArgument(format!("partition needs an even, nonzero count, got {m}")));
    }
    if k.iter().any(|&x| x <= 0) {
        return Err(DdidError::InvalidArgument("partition entries must be positive".into()));
    }
    let total: i64 = k.iter().sum();
    if total % 2 != 0 {
        return Err(DdidError::InvalidArgument(format!("entries sum to {total}, which is odd")));
    }
    let half = total / 2;
    let mut weights: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let mut costs: Vec<f64> = k.iter().map(|&x| -(x as f64)).collect();
    weights.push((half + 1) as f64);
    costs.push(-((half + 1) as f64));
    let inst = CuInstance::new(costs, m / 2, 0, 1)?;
    Ok((inst, QueryFamily::Knapsack { weights, capacity: half as f64 }))
}

/// Whether `k` has a subset of exactly half the entries summing to half the total.
pub fn has_equal_partition(k: &[i64]) -> bool {
    let m = k.len();
    let total: i64 = k.iter().sum();
    if !m.is_multiple_of(2) || total % 2 != 0 {
        return false;
    }
    (0u64..(1u64 << m)).any(|s| {
        s.count_ones() as usize == m / 2
            && (0..m).filter(|&i| s & (1 << i) != 0).map(|i| k[i]).sum::<i64>() * 2 == total
    })
}
