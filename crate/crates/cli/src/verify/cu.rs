use ddid_core::milp::{simplex_solve, LpStatus, MilpModel, Sense};
use ddid_core::oracle::{
    cu_bruteforce, has_equal_partition, phi_bruteforce, phi_bruteforce_split, reduce_partition, OracleLimits,
};
use ddid_core::{
    build_phi_lp, check_feasibility, phi_eval, phi_split, phi_splits, solve_cu, solve_selection_cu, sum_smallest,
    Backend, Cost, CuInstance, DdidError, Feasibility, QueryFamily, SplitBudget,
};
use proptest::collection::vec;
use proptest::prelude::*;

use super::{Ctx, SuiteResult};

const M: &str = "cu";
const LIM: OracleLimits = OracleLimits { max_n: 12, max_subsets: 1 << 22 };

#[derive(Debug, Clone)]
struct Case {
    c: Vec<i32>,
    p: usize,
    b: usize,
    gamma: usize,
    set: Vec<bool>,
    q: usize,
    weights: Vec<i32>,
    capacity_pct: u32,
}

impl Case {
    fn inst(&self) -> CuInstance {
        CuInstance::new(self.c.iter().map(|&x| x as f64).collect(), self.p, self.b, self.gamma)
            .expect("generated instances are valid")
    }

    fn set(&self) -> Vec<usize> {
        (0..self.set.len()).filter(|&i| self.set[i]).collect()
    }

    fn knapsack(&self) -> QueryFamily {
        let total: i32 = self.weights.iter().sum();
        QueryFamily::Knapsack {
            weights: self.weights.iter().map(|&x| x as f64).collect(),
            capacity: (total as u32 * self.capacity_pct / 100) as f64,
        }
    }
}

fn case(max_n: usize) -> impl Strategy<Value = Case> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (vec(-5i32..=20, n), 1..=n, 0..=n, 0..=n, vec(any::<bool>(), n), 0..=n, vec(0i32..=10, n), 0u32..=100)
        })
        .prop_map(|(c, p, b, gamma, set, q, weights, capacity_pct)| Case {
            b: b.min(p),
            c,
            p,
            gamma,
            set,
            q,
            weights,
            capacity_pct,
        })
}

/// Instances with n > p, p > b and Γ > b, and a selection size q ≤ n − p.
fn covered(max_n: usize) -> impl Strategy<Value = Case> {
    (3..=max_n)
        .prop_flat_map(|n| (Just(n), 0..n - 1))
        .prop_flat_map(|(n, b)| (Just(n), Just(b), b + 1..n, b + 1..=n))
        .prop_flat_map(|(n, b, p, gamma)| (vec(-5i32..=20, n), Just(p), Just(b), Just(gamma), 0..=n - p))
        .prop_map(|(c, p, b, gamma, q)| Case {
            set: vec![false; c.len()],
            weights: vec![0; c.len()],
            c,
            p,
            b,
            gamma,
            q,
            capacity_pct: 0,
        })
}

fn all_sets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
}

fn err(e: DdidError) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn lp_value(m: &MilpModel) -> Result<Cost, TestCaseError> {
    let sol = simplex_solve(m);
    match sol.status {
        LpStatus::Optimal => Ok(Cost::Finite(sol.objective)),
        LpStatus::Infeasible => Ok(Cost::Infinite),
        s => Err(TestCaseError::fail(format!("LP ended with {s:?}"))),
    }
}

fn close(a: Cost, b: Cost) -> bool {
    match (a, b) {
        (Cost::Finite(x), Cost::Finite(y)) => (x - y).abs() <= 1e-6,
        (Cost::Infinite, Cost::Infinite) => true,
        _ => false,
    }
}

fn milp_matches(inst: &CuInstance, fam: &QueryFamily) -> Result<(), TestCaseError> {
    let sol = solve_cu(inst, fam, &Backend::default()).map_err(err)?;
    let bf = cu_bruteforce(inst, fam, &LIM).map_err(err)?;
    prop_assert_eq!(sol.value.finite(), bf.map(|s| s.1));
    if sol.value.is_finite() {
        prop_assert!(fam.contains(&sol.query_set));
        prop_assert_eq!(phi_eval(inst, &sol.query_set).map_err(err)?, sol.value);
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct InnerLp {
    marked: Vec<bool>,
    p: usize,
    cap: usize,
    cost: Vec<f64>,
}

fn inner_lp() -> impl Strategy<Value = InnerLp> {
    (1usize..=30).prop_flat_map(|n| (vec(any::<bool>(), n), 0..=n, 0..=n, vec(-10.0f64..10.0, n))).prop_map(
        |(marked, p, cap, cost)| {
            let k = marked.iter().filter(|&&x| x).count();
            InnerLp { cap: cap.min(k.max(1)), marked, p, cost }
        },
    )
}

pub(super) fn suites(ctx: &Ctx) -> Vec<SuiteResult> {
    let n = ctx.max_n();
    let milp_n = n.min(10);
    vec![
        ctx.check(M, "prefix-attack", case(n), |c| {
            let inst = c.inst();
            for set in all_sets(inst.n()) {
                for split in SplitBudget::all(set.len(), inst.gamma()) {
                    let a = phi_split(&inst, &set, split).map_err(err)?;
                    let b = phi_bruteforce_split(&inst, &set, split.gamma_i, &LIM).map_err(err)?;
                    prop_assert_eq!(a, b, "I = {:?}, Γ_I = {}", set, split.gamma_i);
                }
            }
            Ok(())
        }),
        ctx.check(M, "evaluators-agree", case(n), |c| {
            let inst = c.inst();
            for set in all_sets(inst.n()) {
                let bf = phi_bruteforce(&inst, &set, &LIM).map_err(err)?;
                prop_assert_eq!(phi_eval(&inst, &set).map_err(err)?, bf, "I = {:?}", set);
            }
            let set = c.set();
            let lp = lp_value(&build_phi_lp(&inst, &set).map_err(err)?)?;
            let bf = phi_bruteforce(&inst, &set, &LIM).map_err(err)?;
            prop_assert!(close(lp, bf), "LP {:?}, enumeration {:?}, I = {:?}", lp, bf, set);
            Ok(())
        }),
        ctx.check(M, "inner-polytope-integral", inner_lp(), |c| {
            let n = c.cost.len();
            let mut m = MilpModel::new();
            let xs: Vec<_> = (0..n).map(|i| m.add_continuous(format!("x{i}"), 0.0, 1.0)).collect();
            m.add_constraint("card", xs.iter().map(|&x| (x, 1.0)).collect(), Sense::Ge, c.p as f64);
            let row = xs.iter().zip(&c.marked).filter(|(_, &on)| on).map(|(&x, _)| (x, 1.0)).collect();
            m.add_constraint("cap", row, Sense::Le, c.cap as f64);
            m.set_objective(xs.iter().zip(&c.cost).map(|(&x, &w)| (x, w)).collect());
            let sol = simplex_solve(&m);
            let marked = c.marked.iter().filter(|&&x| x).count();
            if sol.status == LpStatus::Optimal {
                prop_assert!(sol.values.iter().all(|v| v.abs() < 1e-9 || (v - 1.0).abs() < 1e-9), "{:?}", sol.values);
            } else {
                prop_assert_eq!(sol.status, LpStatus::Infeasible);
                prop_assert!(c.p > n - marked + c.cap);
            }
            Ok(())
        }),
        ctx.check(M, "feasibility-characterization", covered(n), |c| {
            let inst = c.inst();
            let f = check_feasibility(inst.n(), c.p, c.b, c.gamma, c.q);
            let bf = cu_bruteforce(&inst, &QueryFamily::Selection { q: c.q }, &LIM).map_err(err)?;
            prop_assert_eq!(f == Feasibility::Feasible, bf.is_some());
            Ok(())
        }),
        ctx.check(
            M,
            "selection-theorem",
            covered(n).prop_filter("feasible", |c| {
                check_feasibility(c.c.len(), c.p, c.b, c.gamma, c.q) == Feasibility::Feasible
            }),
            |c| {
                let inst = c.inst();
                let sol = solve_selection_cu(&inst, c.q).map_err(err)?;
                let bf = cu_bruteforce(&inst, &QueryFamily::Selection { q: c.q }, &LIM).map_err(err)?;
                let Some((_, v)) = bf else { return Err(TestCaseError::fail("enumeration found no finite set")) };
                let (cs, b, p, g) = (inst.c(), c.b, c.p, c.gamma);
                let formula = sum_smallest(cs, b) + sum_smallest(cs, p - b + g) - sum_smallest(cs, g);
                prop_assert_eq!(sol.value, Cost::Finite(v));
                prop_assert_eq!(formula, v);
                prop_assert_eq!(phi_eval(&inst, &sol.query_set).map_err(err)?, Cost::Finite(v));
                let splits = phi_splits(&inst, &sol.query_set).map_err(err)?;
                if g - b < splits.len() {
                    let best = splits.iter().copied().fold(Cost::Finite(f64::NEG_INFINITY), Cost::max);
                    prop_assert_eq!(splits[g - b], best, "splits {:?}", splits);
                }
                Ok(())
            },
        ),
        ctx.check(M, "milp-selection", case(milp_n), |c| milp_matches(&c.inst(), &QueryFamily::Selection { q: c.q })),
        ctx.check(M, "milp-knapsack", case(milp_n), |c| milp_matches(&c.inst(), &c.knapsack())),
        ctx.check(M, "partition-reduction", partition((n - 1).min(8)), |k| {
            let half = k.iter().sum::<i64>() as f64 / 2.0;
            let (inst, fam) = reduce_partition(&k).map_err(err)?;
            let v = cu_bruteforce(&inst, &fam, &LIM).map_err(err)?.map(|s| s.1);
            prop_assert_eq!(v == Some(-half), has_equal_partition(&k), "value {:?}", v);
            Ok(())
        }),
    ]
}

/// Even-length positive vectors with an even sum.
fn partition(max_m: usize) -> impl Strategy<Value = Vec<i64>> {
    (1..=(max_m / 2).max(1)).prop_flat_map(|h| vec(1i64..=6, 2 * h)).prop_map(|mut k| {
        if k.iter().sum::<i64>() % 2 != 0 {
            k[0] += 1;
        }
        k
    })
}
