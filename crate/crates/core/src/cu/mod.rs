//! Constraint uncertainty: feasibility, evaluators of Φ(I) and solvers.

mod model;

pub use model::{build_cu_milp, build_phi_lp, solve_cu, Backend};

use crate::cost::Cost;
use crate::error::Result;
use crate::family::QueryFamily;
use crate::instance::{canonicalize, mask, normalize_set, CuInstance, SplitBudget};
use crate::oracle::{cu_bruteforce, OracleLimits};
use crate::select::{rank_window, sum_smallest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuStatus {
    Optimal,
    Infeasible,
    /// The closed-form theory does not cover the instance and it was too
    /// large to enumerate; the reported set is the best candidate found.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuSolution {
    /// Queried items, original 0-based indices in ascending order.
    pub query_set: Vec<usize>,
    pub value: Cost,
    pub status: CuStatus,
    /// φ(I*, Γ_I) for Γ_I = 0, 1, ... when it was computed.
    pub per_split: Option<Vec<Cost>>,
}

impl CuSolution {
    fn infeasible() -> Self {
        CuSolution { query_set: Vec::new(), value: Cost::Infinite, status: CuStatus::Infeasible, per_split: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
    /// `n ≥ p + Q`, `p > b` and `Γ > b` do not all hold.
    NotCovered,
}

/// Feasibility of the full problem from its dimensions alone, where `q` is
/// the largest admissible query set size.
pub fn check_feasibility(n: usize, p: usize, b: usize, gamma: usize, q: usize) -> Feasibility {
    if n < p + q || p <= b || gamma <= b {
        return Feasibility::NotCovered;
    }
    if gamma <= b + q && p + gamma <= 2 * b + q + 1 {
        Feasibility::Feasible
    } else {
        Feasibility::Infeasible
    }
}

/// Choose exactly `p` items, at most `cap` of them from `marked`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSelectionProblem {
    pub costs: Vec<f64>,
    pub marked: Vec<usize>,
    pub p: usize,
    pub cap: usize,
}

/// Minimum over `k` of (k cheapest marked) + (p - k cheapest unmarked), given
/// both groups in ascending order.
fn split_pick(marked: &[f64], rest: &[f64], p: usize, cap: usize) -> Cost {
    let lo = p.saturating_sub(rest.len());
    let hi = cap.min(marked.len()).min(p);
    if lo > hi {
        return Cost::Infinite;
    }
    let mut in_m: f64 = marked[..lo].iter().sum();
    let mut in_r: f64 = rest[..p - lo].iter().sum();
    let mut best = in_m + in_r;
    for k in lo + 1..=hi {
        in_m += marked[k - 1];
        in_r -= rest[p - k];
        best = best.min(in_m + in_r);
    }
    Cost::Finite(best)
}

/// Positions chosen by [`split_pick`]'s optimum: `(k marked, p - k rest)`.
fn split_pick_count(marked: &[f64], rest: &[f64], p: usize, cap: usize) -> Option<usize> {
    let lo = p.saturating_sub(rest.len());
    let hi = cap.min(marked.len()).min(p);
    if lo > hi {
        return None;
    }
    let mut in_m: f64 = marked[..lo].iter().sum();
    let mut in_r: f64 = rest[..p - lo].iter().sum();
    let (mut best, mut arg) = (in_m + in_r, lo);
    for k in lo + 1..=hi {
        in_m += marked[k - 1];
        in_r -= rest[p - k];
        if in_m + in_r < best {
            best = in_m + in_r;
            arg = k;
        }
    }
    Some(arg)
}

/// Optimal choice for a restricted selection over costs already in rank
/// order, as ranks; `None` when infeasible.
pub(crate) fn pick_ranks(costs: &[f64], marked: &[bool], p: usize, cap: usize) -> Option<Vec<usize>> {
    let (mut m, mut r) = (Vec::new(), Vec::new());
    for (k, &on) in marked.iter().enumerate() {
        if on {
            m.push(k)
        } else {
            r.push(k)
        }
    }
    let mc: Vec<f64> = m.iter().map(|&k| costs[k]).collect();
    let rc: Vec<f64> = r.iter().map(|&k| costs[k]).collect();
    let k = split_pick_count(&mc, &rc, p, cap)?;
    let mut out: Vec<usize> = m[..k].iter().chain(&r[..p - k]).copied().collect();
    out.sort_unstable();
    Some(out)
}

/// Exact optimum of a restricted selection; +∞ when no choice exists.
pub fn restricted_selection(prob: &RestrictedSelectionProblem) -> Result<Cost> {
    let n = prob.costs.len();
    let marked = mask(&normalize_set(&prob.marked, n)?, n);
    let order = canonicalize(&prob.costs);
    let (mut m, mut r) = (Vec::new(), Vec::new());
    for &i in order.order() {
        if marked[i] {
            m.push(prob.costs[i])
        } else {
            r.push(prob.costs[i])
        }
    }
    Ok(split_pick(&m, &r, prob.p, prob.cap))
}

/// Items of an instance in canonical cost order, with I's membership and
/// each member's position inside I.
struct Ranked {
    costs: Vec<f64>,
    pos_in_set: Vec<Option<usize>>,
    set_len: usize,
}

impl Ranked {
    fn new(inst: &CuInstance, set: &[usize]) -> Self {
        let order = canonicalize(inst.c());
        let inside = mask(set, inst.n());
        let mut k = 0;
        let mut costs = Vec::with_capacity(inst.n());
        let mut pos_in_set = Vec::with_capacity(inst.n());
        for &i in order.order() {
            costs.push(inst.c()[i]);
            pos_in_set.push(if inside[i] {
                k += 1;
                Some(k - 1)
            } else {
                None
            });
        }
        Ranked { costs, pos_in_set, set_len: set.len() }
    }

    /// φ(I, g). A is the first `g` members of I.
    fn phi(&self, inst: &CuInstance, g: usize) -> Cost {
        let in_a = |r: usize| self.pos_in_set[r].is_some_and(|k| k < g);
        let outside = |r: usize| self.pos_in_set[r].is_none();
        let (p, b) = (inst.p(), inst.b());
        let (mut m, mut rest) = (Vec::new(), Vec::new());
        // Branch (i): at most b picks from A and the unqueried items together.
        for (r, &c) in self.costs.iter().enumerate() {
            if in_a(r) || outside(r) {
                m.push(c)
            } else {
                rest.push(c)
            }
        }
        let first = split_pick(&m, &rest, p, b);
        // Branch (ii): the whole remaining budget fits, so only A is limited.
        let cap = (b + g) as i64 - inst.effective_gamma() as i64;
        let second = if cap < 0 {
            Cost::Infinite
        } else {
            m.clear();
            rest.clear();
            for (r, &c) in self.costs.iter().enumerate() {
                if in_a(r) {
                    m.push(c)
                } else {
                    rest.push(c)
                }
            }
            split_pick(&m, &rest, p, cap as usize)
        };
        first.min(second)
    }

    fn splits(&self, inst: &CuInstance) -> Vec<Cost> {
        (0..=self.set_len.min(inst.effective_gamma())).map(|g| self.phi(inst, g)).collect()
    }
}

/// φ(I, Γ_I): Φ with the adversary committed to spending Γ_I on queried items.
pub fn phi_split(inst: &CuInstance, set: &[usize], split: SplitBudget) -> Result<Cost> {
    let set = normalize_set(set, inst.n())?;
    split.check(set.len(), inst.gamma())?;
    Ok(Ranked::new(inst, &set).phi(inst, split.gamma_i))
}

/// φ(I, Γ_I) for every admissible Γ_I, in increasing order of Γ_I.
pub fn phi_splits(inst: &CuInstance, set: &[usize]) -> Result<Vec<Cost>> {
    let set = normalize_set(set, inst.n())?;
    Ok(Ranked::new(inst, &set).splits(inst))
}

/// Φ(I): the adversary's best split.
pub fn phi_eval(inst: &CuInstance, set: &[usize]) -> Result<Cost> {
    Ok(phi_splits(inst, set)?.into_iter().fold(Cost::Finite(f64::NEG_INFINITY), Cost::max))
}

/// Optimal query set among sets of at most `q` items, using the default
/// enumeration limits when the theory does not apply.
pub fn solve_selection_cu(inst: &CuInstance, q: usize) -> Result<CuSolution> {
    solve_selection_cu_with(inst, q, &OracleLimits::default())
}

pub fn solve_selection_cu_with(inst: &CuInstance, q: usize, limits: &OracleLimits) -> Result<CuSolution> {
    QueryFamily::Selection { q }.validated(inst.n())?;
    let (n, p, b, gamma) = (inst.n(), inst.p(), inst.b(), inst.gamma());
    if inst.is_trivial() {
        let value = Cost::Finite(sum_smallest(inst.c(), p));
        return Ok(CuSolution { query_set: Vec::new(), value, status: CuStatus::Optimal, per_split: None });
    }
    match check_feasibility(n, p, b, gamma, q) {
        Feasibility::Infeasible => Ok(CuSolution::infeasible()),
        Feasibility::Feasible => {
            let c = inst.c();
            let value = sum_smallest(c, b) + sum_smallest(c, p - b + gamma) - sum_smallest(c, gamma);
            Ok(CuSolution {
                query_set: rank_window(c, b, b + q),
                value: Cost::Finite(value),
                status: CuStatus::Optimal,
                per_split: None,
            })
        }
        Feasibility::NotCovered if n <= limits.max_n => {
            match cu_bruteforce(inst, &QueryFamily::Selection { q }, limits)? {
                None => Ok(CuSolution::infeasible()),
                Some((set, v)) => Ok(CuSolution {
                    per_split: Some(phi_splits(inst, &set)?),
                    query_set: set,
                    value: Cost::Finite(v),
                    status: CuStatus::Optimal,
                }),
            }
        }
        Feasibility::NotCovered => {
            // Rank windows starting at or before b, the shape the theory
            // prescribes when it applies.
            let mut best: Option<(Vec<usize>, Cost)> = None;
            for s in 0..=b.min(n - q) {
                let set = rank_window(inst.c(), s, s + q);
                let v = phi_eval(inst, &set)?;
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    best = Some((set, v));
                }
            }
            let (set, value) = best.expect("at least one window");
            Ok(CuSolution {
                per_split: Some(phi_splits(inst, &set)?),
                query_set: set,
                value,
                status: CuStatus::Undetermined,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cu_a() -> CuInstance {
        CuInstance::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 1, 2).unwrap()
    }

    #[test]
    fn restricted_examples() {
        let rs = |c: Vec<f64>, m: Vec<usize>, p, cap| {
            restricted_selection(&RestrictedSelectionProblem { costs: c, marked: m, p, cap }).unwrap()
        };
        assert_eq!(rs(vec![1.0, 2.0, 3.0, 4.0], vec![0, 1], 2, 1), Cost::Finite(4.0));
        assert_eq!(rs(vec![1.0, 2.0, 3.0], vec![], 2, 0), Cost::Finite(3.0));
        assert_eq!(rs(vec![1.0, 2.0], vec![0, 1], 2, 1), Cost::Infinite);
    }

    #[test]
    fn split_examples() {
        let s = |g| phi_split(&cu_a(), &[1, 2], SplitBudget::new(g, 2).unwrap()).unwrap();
        assert_eq!(s(0), Cost::Finite(6.0));
        assert_eq!(s(1), Cost::Finite(8.0));
        assert_eq!(s(2), Cost::Finite(7.0));
        assert_eq!(phi_eval(&cu_a(), &[1, 2]).unwrap(), Cost::Finite(8.0));
        // γ = {0} leaves one deviation for the unqueried pick, forcing {1, 2, 3}.
        assert_eq!(phi_eval(&cu_a(), &[0, 1]).unwrap(), Cost::Finite(9.0));
        assert_eq!(phi_eval(&cu_a(), &[]).unwrap(), Cost::Infinite);
        let lim = crate::oracle::OracleLimits::default();
        for set in [vec![], vec![0, 1], vec![1, 2], vec![0, 5]] {
            assert_eq!(phi_eval(&cu_a(), &set).unwrap(), crate::oracle::phi_bruteforce(&cu_a(), &set, &lim).unwrap());
        }
    }

    #[test]
    fn feasibility_examples() {
        assert_eq!(check_feasibility(6, 3, 1, 2, 2), Feasibility::Feasible);
        assert_eq!(check_feasibility(6, 3, 1, 4, 2), Feasibility::Infeasible);
        assert_eq!(check_feasibility(10, 5, 1, 3, 2), Feasibility::Infeasible);
        assert_eq!(check_feasibility(4, 3, 1, 2, 2), Feasibility::NotCovered);
    }

    #[test]
    fn theorem_anchor() {
        let sol = solve_selection_cu(&cu_a(), 2).unwrap();
        assert_eq!(sol.query_set, vec![1, 2]);
        assert_eq!(sol.value, Cost::Finite(8.0));
        assert_eq!(solve_selection_cu(&cu_a(), 0).unwrap().status, CuStatus::Infeasible);
    }
}
