use std::time::Duration;

use ddid_milp::{
    bnb_solve, bnb_solve_with, simplex_solve, BnbParams, BranchingRule, LpStatus, MilpModel, NodeHook, NodeReport,
    Sense,
};
use proptest::prelude::*;

#[test]
fn single_pick_knapsack() {
    let mut m = MilpModel::new();
    let x1 = m.add_binary("x1");
    let x2 = m.add_binary("x2");
    m.add_constraint("c", vec![(x1, 1.0), (x2, 1.0)], Sense::Le, 1.0);
    m.set_objective(vec![(x1, -1.0), (x2, -1.0)]);
    let s = bnb_solve(&m, &BnbParams::default());
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 1.0).abs() < 1e-9);
    assert!((s.values[0] + s.values[1] - 1.0).abs() < 1e-9);
}

#[test]
fn fractional_root_requires_branching() {
    // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
    let mut m = MilpModel::new();
    let a = m.add_integer("a", 0.0, 5.0);
    let b = m.add_integer("b", 0.0, 5.0);
    let c = m.add_integer("c", 0.0, 5.0);
    m.add_constraint("r1", vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 5.0);
    m.add_constraint("r2", vec![(a, 4.0), (b, 1.0), (c, 2.0)], Sense::Le, 11.0);
    m.add_constraint("r3", vec![(a, 3.0), (b, 4.0), (c, 2.0)], Sense::Le, 8.0);
    m.set_objective(vec![(a, -5.0), (b, -4.0), (c, -3.0)]);
    let s = bnb_solve(&m, &BnbParams::default());
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 13.0).abs() < 1e-9, "{}", s.objective);
}

#[test]
fn integer_infeasible_but_lp_feasible() {
    // 2x = 1 has no integer solution.
    let mut m = MilpModel::new();
    let x = m.add_integer("x", 0.0, 3.0);
    m.add_constraint("c", vec![(x, 2.0)], Sense::Eq, 1.0);
    m.set_objective(vec![(x, 1.0)]);
    assert_eq!(simplex_solve(&m).status, LpStatus::Optimal);
    assert_eq!(bnb_solve(&m, &BnbParams::default()).status, LpStatus::Infeasible);
}

#[test]
fn node_limit_is_reported() {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..14).map(|i| m.add_binary(format!("x{i}"))).collect();
    // Odd-capacity parity knapsack, notoriously bad for LP bounds.
    m.add_constraint("c", xs.iter().map(|&x| (x, 2.0)).collect(), Sense::Le, 13.0);
    m.set_objective(xs.iter().map(|&x| (x, -1.0)).collect());
    let params = BnbParams { node_limit: 3, ..BnbParams::default() };
    let s = bnb_solve(&m, &params);
    assert_eq!(s.status, LpStatus::NodeLimit);
    assert!(s.bound <= -6.0 + 1e-9);
}

/// Offers a fixed point everywhere and settles nodes whose bounds fix
/// every variable to it.
struct Offer(Vec<f64>);

impl NodeHook for Offer {
    fn inspect(&self, _: &[f64], lower: &[f64], upper: &[f64]) -> NodeReport {
        let pinned = lower.iter().zip(upper).zip(&self.0).all(|((l, u), x)| l == u && l == x);
        NodeReport { candidate: Some(self.0.clone()), settled: pinned, ..NodeReport::default() }
    }
}

fn parity_knapsack() -> MilpModel {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..14).map(|i| m.add_binary(format!("x{i}"))).collect();
    m.add_constraint("c", xs.iter().map(|&x| (x, 2.0)).collect(), Sense::Le, 13.0);
    m.set_objective(xs.iter().map(|&x| (x, -1.0)).collect());
    m
}

#[test]
fn hook_candidate_becomes_incumbent() {
    let m = parity_knapsack();
    let best: Vec<f64> = (0..14).map(|i| if i < 6 { 1.0 } else { 0.0 }).collect();
    let s = bnb_solve_with(&m, &BnbParams::default(), &Offer(best));
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 6.0).abs() < 1e-9);
}

#[test]
fn hook_rejects_infeasible_candidates() {
    let m = parity_knapsack();
    let s = bnb_solve_with(&m, &BnbParams::default(), &Offer(vec![1.0; 14]));
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 6.0).abs() < 1e-9);
}

/// Offers the optimum together with a matching subtree bound.
struct Certified(Vec<f64>, f64);

impl NodeHook for Certified {
    fn inspect(&self, _: &[f64], _: &[f64], _: &[f64]) -> NodeReport {
        NodeReport { candidate: Some(self.0.clone()), bound: Some(self.1), ..NodeReport::default() }
    }
}

#[test]
fn hook_bound_closes_the_root() {
    let m = parity_knapsack();
    let best: Vec<f64> = (0..14).map(|i| if i >= 8 { 1.0 } else { 0.0 }).collect();
    let plain = bnb_solve(&m, &BnbParams::default());
    let s = bnb_solve_with(&m, &BnbParams::default(), &Certified(best.clone(), -6.0));
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(s.values, best);
    assert_eq!(s.nodes, 1);
    assert!(plain.nodes > 1);
}

#[test]
fn zero_time_limit_is_reported() {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..10).map(|i| m.add_binary(format!("x{i}"))).collect();
    m.add_constraint("c", xs.iter().map(|&x| (x, 2.0)).collect(), Sense::Le, 9.0);
    m.set_objective(xs.iter().map(|&x| (x, -1.0)).collect());
    let params = BnbParams { time_limit: Some(Duration::ZERO), ..BnbParams::default() };
    assert_eq!(bnb_solve(&m, &params).status, LpStatus::TimeLimit);
}

#[derive(Debug)]
struct SmallMilp {
    bins: usize,
    gens: usize,
    rows: Vec<(Vec<i32>, Sense, i32)>,
    cost: Vec<i32>,
}

const GEN_LO: i32 = -2;
const GEN_HI: i32 = 2;

impl SmallMilp {
    fn model(&self) -> MilpModel {
        let mut m = MilpModel::new();
        let mut vars = Vec::new();
        for i in 0..self.bins {
            vars.push(m.add_binary(format!("b{i}")));
        }
        for i in 0..self.gens {
            vars.push(m.add_integer(format!("g{i}"), GEN_LO as f64, GEN_HI as f64));
        }
        for (k, (a, s, r)) in self.rows.iter().enumerate() {
            m.add_constraint(
                format!("r{k}"),
                vars.iter().zip(a).map(|(&v, &c)| (v, c as f64)).collect(),
                *s,
                *r as f64,
            );
        }
        m.set_objective(vars.iter().zip(&self.cost).map(|(&v, &c)| (v, c as f64)).collect());
        m
    }

    fn exhaustive(&self) -> Option<i64> {
        let span = (GEN_HI - GEN_LO + 1) as usize;
        let total = (1usize << self.bins) * span.pow(self.gens as u32);
        let mut best: Option<i64> = None;
        let mut x = vec![0i32; self.bins + self.gens];
        for code in 0..total {
            let mut rest = code;
            for (i, xi) in x.iter_mut().enumerate().take(self.bins) {
                *xi = ((code >> i) & 1) as i32;
            }
            rest >>= self.bins;
            for xi in x.iter_mut().skip(self.bins) {
                *xi = GEN_LO + (rest % span) as i32;
                rest /= span;
            }
            let ok = self.rows.iter().all(|(a, s, r)| {
                let act: i32 = a.iter().zip(&x).map(|(c, v)| c * v).sum();
                match s {
                    Sense::Le => act <= *r,
                    Sense::Ge => act >= *r,
                    Sense::Eq => act == *r,
                }
            });
            if ok {
                let obj: i64 = self.cost.iter().zip(&x).map(|(c, v)| (*c as i64) * (*v as i64)).sum();
                best = Some(best.map_or(obj, |b| b.min(obj)));
            }
        }
        best
    }
}

fn small_milp() -> impl Strategy<Value = SmallMilp> {
    (1usize..=10, 0usize..=2, 1usize..=4).prop_flat_map(|(bins, gens, m)| {
        let n = bins + gens;
        (
            prop::collection::vec((prop::collection::vec(-3i32..=3, n), 0u8..5, -4i32..=6), m),
            prop::collection::vec(-6i32..=6, n),
        )
            .prop_map(move |(rows, cost)| SmallMilp {
                bins,
                gens,
                rows: rows
                    .into_iter()
                    .map(|(a, s, r)| {
                        (
                            a,
                            if s == 4 {
                                Sense::Eq
                            } else if s % 2 == 0 {
                                Sense::Le
                            } else {
                                Sense::Ge
                            },
                            r,
                        )
                    })
                    .collect(),
                cost,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn matches_exhaustive_enumeration(p in small_milp(), first in any::<bool>()) {
        let model = p.model();
        let branching = if first { BranchingRule::FirstFractional } else { BranchingRule::MostFractional };
        let s = bnb_solve(&model, &BnbParams { branching, ..BnbParams::default() });
        match p.exhaustive() {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - best as f64).abs() < 1e-6, "bnb {} exhaustive {}", s.objective, best);
                prop_assert!(model.max_scaled_violation(&s.values) <= 1e-7);
            }
        }
    }

    #[test]
    fn hook_branching_on_integral_values_stays_exact(p in small_milp()) {
        struct Last;
        impl NodeHook for Last {
            fn inspect(&self, _: &[f64], lower: &[f64], upper: &[f64]) -> NodeReport {
                NodeReport { branch: (0..lower.len()).rev().find(|&j| lower[j] < upper[j]), ..NodeReport::default() }
            }
        }
        let model = p.model();
        let s = bnb_solve_with(&model, &BnbParams::default(), &Last);
        match p.exhaustive() {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - best as f64).abs() < 1e-6, "bnb {} exhaustive {}", s.objective, best);
            }
        }
    }

    #[test]
    fn incumbent_never_beats_root_bound(p in small_milp()) {
        let model = p.model();
        let root = simplex_solve(&model);
        let s = bnb_solve(&model, &BnbParams::default());
        if s.status == LpStatus::Optimal {
            prop_assert_eq!(root.status, LpStatus::Optimal);
            prop_assert!(s.objective >= root.objective - 1e-7);
        }
    }
}
