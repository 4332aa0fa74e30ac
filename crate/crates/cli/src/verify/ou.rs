use ddid_core::oracle::{
    ou_bruteforce, psi_bruteforce, psi_bruteforce_exhaustive, reduce_independent_set, Graph, OracleLimits,
};
use ddid_core::{
    canonicalize, psi_closed_form, psi_split, solve_knapsack, solve_selection, OuInstance, QueryFamily, SplitBudget,
};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::subsequence;

use super::{Ctx, Injection, SuiteResult};

const M: &str = "ou";
const LIM: OracleLimits = OracleLimits { max_n: 12, max_subsets: 1 << 22 };

#[derive(Debug, Clone)]
struct Case {
    c_bar: Vec<i32>,
    c_hat: Vec<i32>,
    gamma: usize,
    set: Vec<bool>,
    q: usize,
    weights: Vec<i32>,
    capacity_pct: u32,
}

impl Case {
    fn inst(&self) -> OuInstance {
        let f = |v: &[i32]| v.iter().map(|&x| x as f64).collect();
        OuInstance::new(f(&self.c_bar), f(&self.c_hat), self.gamma).expect("generated instances are valid")
    }

    fn set(&self) -> Vec<usize> {
        (0..self.set.len()).filter(|&i| self.set[i]).collect()
    }

    fn knapsack(&self) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self.weights.iter().map(|&x| x as f64).collect();
        let total: i32 = self.weights.iter().sum();
        (w, (total as u32 * self.capacity_pct / 100) as f64)
    }
}

fn case(min_n: usize, max_n: usize) -> impl Strategy<Value = Case> {
    (min_n..=max_n)
        .prop_flat_map(|n| {
            (vec(0i32..=20, n), vec(0i32..=20, n), 0..=n, vec(any::<bool>(), n), 0..=n, vec(0i32..=10, n), 0u32..=100)
        })
        .prop_map(|(c_bar, c_hat, gamma, set, q, weights, capacity_pct)| Case {
            c_bar,
            c_hat,
            gamma,
            set,
            q,
            weights,
            capacity_pct,
        })
}

/// Γ-subsets of ranks on an instance with 1 ≤ Γ < n.
#[derive(Debug, Clone)]
struct RankCase {
    c_bar: Vec<i32>,
    c_hat: Vec<i32>,
    gamma: usize,
    first: Vec<usize>,
    second: Vec<usize>,
    extend: Vec<bool>,
}

impl RankCase {
    fn inst(&self) -> OuInstance {
        let f = |v: &[i32]| v.iter().map(|&x| x as f64).collect();
        OuInstance::new(f(&self.c_bar), f(&self.c_hat), self.gamma).expect("generated instances are valid")
    }
}

fn rank_case(max_n: usize) -> impl Strategy<Value = RankCase> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, gamma)| {
            let ranks: Vec<usize> = (0..n).collect();
            (
                vec(0i32..=20, n),
                vec(0i32..=20, n),
                Just(gamma),
                subsequence(ranks.clone(), gamma),
                subsequence(ranks, gamma),
                vec(any::<bool>(), n),
            )
        })
        .prop_map(|(c_bar, c_hat, gamma, first, second, extend)| RankCase {
            c_bar,
            c_hat,
            gamma,
            first,
            second,
            extend,
        })
}

fn closed(ctx: &Ctx, inst: &OuInstance, set: &[usize]) -> f64 {
    let v = match ctx.inject() {
        Some(Injection::PsiOffByOne) => psi_closed_form(&inst.with_gamma(inst.gamma().saturating_sub(1)), set),
        None => psi_closed_form(inst, set),
    };
    v.expect("valid set")
}

fn all_sets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
}

fn err(e: ddid_core::DdidError) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

pub(super) fn suites(ctx: &Ctx) -> Vec<SuiteResult> {
    let n = ctx.max_n();
    vec![
        ctx.check(M, "optimum-between-bounds", case(1, n), |c| {
            let inst = c.inst();
            let (_, v) = ou_bruteforce(&inst, &QueryFamily::Selection { q: c.q }, &LIM).map_err(err)?;
            prop_assert!(inst.lower_bound() <= v && v <= inst.upper_bound(), "value {v}");
            Ok(())
        }),
        ctx.check(M, "analytic-inner-response", case(1, n.min(6)), |c| {
            let inst = c.inst();
            let a = psi_bruteforce(&inst, &c.set(), &LIM).map_err(err)?;
            let b = psi_bruteforce_exhaustive(&inst, &c.set(), &LIM).map_err(err)?;
            prop_assert_eq!(a, b);
            Ok(())
        }),
        ctx.check(M, "closed-form-vs-enumeration", case(1, n), |c| {
            let inst = c.inst();
            for set in all_sets(inst.n()) {
                let bf = psi_bruteforce(&inst, &set, &LIM).map_err(err)?;
                prop_assert_eq!(closed(ctx, &inst, &set), bf, "I = {:?}", set);
            }
            Ok(())
        }),
        ctx.check(M, "closed-form-vs-split-max", case(1, n), |c| {
            let inst = c.inst();
            let set = c.set();
            let mut best = f64::NEG_INFINITY;
            for split in SplitBudget::all(set.len(), inst.gamma()) {
                best = best.max(psi_split(&inst, &set, split).map_err(err)?);
            }
            prop_assert_eq!(closed(ctx, &inst, &set), best);
            Ok(())
        }),
        ctx.check(M, "dominance", rank_case(n), |c| {
            let inst = c.inst();
            let order = canonicalize(inst.c_bar()).order().to_vec();
            let items = |r: &[usize]| r.iter().map(|&k| order[k]).collect::<Vec<_>>();
            let (a, b) = (items(&c.first), items(&c.second));
            if c.second.last() > c.first.last() {
                let (va, vb) = (closed(ctx, &inst, &a), closed(ctx, &inst, &b));
                prop_assert!(va <= vb, "Ψ({:?}) = {} > Ψ({:?}) = {}", a, va, b, vb);
            }
            Ok(())
        }),
        ctx.check(M, "extension", rank_case(n), |c| {
            let inst = c.inst();
            let n = inst.n();
            let order = canonicalize(inst.c_bar()).order().to_vec();
            let last = *c.first.last().expect("Γ ≥ 1");
            let room = n - 1 - c.gamma;
            let mut ext: Vec<usize> = c.first.iter().map(|&k| order[k]).collect();
            let base = ext.clone();
            ext.extend((last + 1..n).filter(|&k| c.extend[k]).take(room).map(|k| order[k]));
            let (vb, ve) = (closed(ctx, &inst, &base), closed(ctx, &inst, &ext));
            prop_assert_eq!(vb, ve, "I = {:?}, I' = {:?}", base, ext);
            Ok(())
        }),
        ctx.check(M, "selection-solver", case(1, n), |c| {
            let inst = c.inst();
            let s = solve_selection(&inst, c.q).map_err(err)?;
            let (_, v) = ou_bruteforce(&inst, &QueryFamily::Selection { q: c.q }, &LIM).map_err(err)?;
            prop_assert_eq!(s.value, v);
            prop_assert!(s.query_set.len() <= c.q);
            prop_assert_eq!(closed(ctx, &inst, &s.query_set), v);
            Ok(())
        }),
        ctx.check(M, "knapsack-solver", case(1, n), |c| {
            let inst = c.inst();
            let (weights, capacity) = c.knapsack();
            let s = solve_knapsack(&inst, &weights, capacity).map_err(err)?;
            let fam = QueryFamily::Knapsack { weights: weights.clone(), capacity };
            let (_, v) = ou_bruteforce(&inst, &fam, &LIM).map_err(err)?;
            prop_assert_eq!(s.value, v);
            prop_assert!(fam.contains(&s.query_set));
            Ok(())
        }),
        ctx.check(M, "independent-set-reduction", graph(n.min(7)), |(m, edges, k)| {
            let g = Graph::new(m, edges).map_err(err)?;
            let (inst, fam) = reduce_independent_set(&g, k).map_err(err)?;
            let (_, v) = ou_bruteforce(&inst, &fam, &LIM).map_err(err)?;
            if k < m {
                prop_assert!(v == 0.0 || v == 1.0, "value {v}");
                prop_assert_eq!(v == 0.0, g.independence_number() >= k, "value {}", v);
            } else {
                prop_assert_eq!(v, 1.0);
            }
            Ok(())
        }),
    ]
}

/// (m, edges, K) with 1 ≤ K ≤ m.
fn graph(max_m: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>, usize)> {
    (1..=max_m).prop_flat_map(|m| {
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        let npairs = pairs.len();
        (Just(m), subsequence(pairs, 0..=npairs), 1..=m)
    })
}
