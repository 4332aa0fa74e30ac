use ddid_core::milp::{bnb_solve, read_lp, simplex_solve, write_lp, BnbParams, LpStatus, MilpModel, Sense};
use proptest::collection::vec;
use proptest::prelude::*;

use super::{Ctx, SuiteResult};

const M: &str = "milp";

fn sense(code: u8) -> Sense {
    match code % 3 {
        0 => Sense::Le,
        1 => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Dense Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot_row = a[col].clone();
        for r in 0..n {
            if r != col {
                let f = a[r][col] / pivot_row[col];
                if f != 0.0 {
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// A box-bounded LP built around a known feasible point `x0`.
#[derive(Debug, Clone)]
struct BoxLp {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
    cost: Vec<f64>,
    x0: Vec<f64>,
}

impl BoxLp {
    fn model(&self) -> MilpModel {
        let mut m = MilpModel::new();
        let vars: Vec<_> =
            (0..self.cost.len()).map(|j| m.add_continuous(format!("x{j}"), self.lower[j], self.upper[j])).collect();
        for (k, (a, s, rhs)) in self.rows.iter().enumerate() {
            m.add_constraint(format!("r{k}"), vars.iter().zip(a).map(|(&v, &c)| (v, c)).collect(), *s, *rhs);
        }
        m.set_objective(vars.iter().zip(&self.cost).map(|(&v, &c)| (v, c)).collect());
        m
    }

    fn feasible(&self, x: &[f64]) -> bool {
        let tol = 1e-7;
        x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| *v >= l - tol && *v <= u + tol)
            && self.rows.iter().all(|(a, s, rhs)| {
                let act: f64 = a.iter().zip(x).map(|(c, v)| c * v).sum();
                match s {
                    Sense::Le => act <= rhs + tol,
                    Sense::Ge => act >= rhs - tol,
                    Sense::Eq => (act - rhs).abs() <= tol,
                }
            })
    }

    /// Minimum over all basic feasible points.
    fn vertex_minimum(&self) -> Option<f64> {
        let n = self.cost.len();
        let mut planes: Vec<(Vec<f64>, f64)> = self.rows.iter().map(|(a, _, r)| (a.clone(), *r)).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e.clone(), self.lower[j]));
            planes.push((e, self.upper[j]));
        }
        let total = planes.len();
        let mut best: Option<f64> = None;
        let mut pick: Vec<usize> = (0..n).collect();
        loop {
            let a = pick.iter().map(|&k| planes[k].0.clone()).collect();
            let b = pick.iter().map(|&k| planes[k].1).collect();
            if let Some(x) = solve_dense(a, b) {
                if self.feasible(&x) {
                    let obj: f64 = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if pick[i] < total - n + i {
                    pick[i] += 1;
                    for k in i + 1..n {
                        pick[k] = pick[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

fn box_lp() -> impl Strategy<Value = BoxLp> {
    (2usize..=6, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            vec((-3i32..=0, 1i32..=4), n),
            vec((vec(-4i32..=4, n), 0u8..3, 0i32..=3), m),
            vec(-5i32..=5, n),
            vec(0.0f64..1.0, n),
        )
            .prop_map(|(bounds, rows, cost, t)| {
                let lower: Vec<f64> = bounds.iter().map(|b| b.0 as f64).collect();
                let upper: Vec<f64> = bounds.iter().map(|b| b.1 as f64).collect();
                let x0: Vec<f64> = (0..lower.len()).map(|j| lower[j] + t[j] * (upper[j] - lower[j])).collect();
                let rows = rows
                    .into_iter()
                    .map(|(a, s, slack)| {
                        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
                        let act: f64 = a.iter().zip(&x0).map(|(c, v)| c * v).sum();
                        match sense(s) {
                            Sense::Le => (a, Sense::Le, (act + slack as f64).ceil()),
                            Sense::Ge => (a, Sense::Ge, (act - slack as f64).floor()),
                            Sense::Eq => (a, Sense::Eq, act),
                        }
                    })
                    .collect();
                BoxLp { lower, upper, rows, cost: cost.into_iter().map(f64::from).collect(), x0 }
            })
    })
}

const GEN_LO: i32 = -2;
const GEN_HI: i32 = 2;

/// Binaries followed by small general integers.
#[derive(Debug, Clone)]
struct SmallMilp {
    bins: usize,
    gens: usize,
    rows: Vec<(Vec<i32>, Sense, i32)>,
    cost: Vec<i32>,
}

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
            for (i, xi) in x.iter_mut().enumerate().take(self.bins) {
                *xi = ((code >> i) & 1) as i32;
            }
            let mut rest = code >> self.bins;
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

fn small_milp(max_bins: usize) -> impl Strategy<Value = SmallMilp> {
    (1usize..=max_bins, 0usize..=2, 1usize..=4).prop_flat_map(|(bins, gens, m)| {
        let n = bins + gens;
        (vec((vec(-3i32..=3, n), 0u8..5, -4i32..=6), m), vec(-6i32..=6, n)).prop_map(move |(rows, cost)| SmallMilp {
            bins,
            gens,
            rows: rows
                .into_iter()
                // Equalities are rarer; they make most random systems infeasible.
                .map(|(a, s, r)| (a, if s == 4 { Sense::Eq } else { sense(s % 2) }, r))
                .collect(),
            cost,
        })
    })
}

pub(super) fn suites(ctx: &Ctx) -> Vec<SuiteResult> {
    let bins = (ctx.max_n() + 2).min(12);
    vec![
        ctx.check(M, "simplex-vs-vertices", box_lp(), |lp| {
            let model = lp.model();
            let s = simplex_solve(&model);
            prop_assert_eq!(s.status, LpStatus::Optimal);
            prop_assert!(model.max_scaled_violation(&s.values) <= 1e-7);
            let x0_obj: f64 = lp.cost.iter().zip(&lp.x0).map(|(c, v)| c * v).sum();
            prop_assert!(s.objective <= x0_obj + 1e-7, "optimum {} above a feasible point's {}", s.objective, x0_obj);
            let vmin = lp.vertex_minimum().ok_or_else(|| TestCaseError::fail("no vertex found"))?;
            prop_assert!(
                (s.objective - vmin).abs() <= 1e-7 * (1.0 + vmin.abs()),
                "simplex {} vertices {}",
                s.objective,
                vmin
            );
            Ok(())
        }),
        ctx.check(M, "bnb-vs-enumeration", small_milp(bins), |p| {
            let sol = bnb_solve(&p.model(), &BnbParams::default());
            match p.exhaustive() {
                None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
                Some(best) => {
                    prop_assert_eq!(sol.status, LpStatus::Optimal);
                    prop_assert!(
                        (sol.objective - best as f64).abs() < 1e-6,
                        "bnb {} enumeration {}",
                        sol.objective,
                        best
                    );
                }
            }
            Ok(())
        }),
        ctx.check(M, "incumbent-above-root-bound", small_milp(bins), |p| {
            let model = p.model();
            let sol = bnb_solve(&model, &BnbParams::default());
            if sol.status == LpStatus::Optimal {
                let root = simplex_solve(&model);
                prop_assert_eq!(root.status, LpStatus::Optimal);
                prop_assert!(
                    sol.objective >= root.objective - 1e-7,
                    "incumbent {} root {}",
                    sol.objective,
                    root.objective
                );
            }
            Ok(())
        }),
        ctx.check(M, "lp-file-round-trip", (small_milp(6), box_lp()), |(p, lp)| {
            for model in [p.model(), lp.model()] {
                let text = write_lp(&model);
                let back = read_lp(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
                prop_assert_eq!(&back, &model);
                prop_assert_eq!(write_lp(&back), text);
            }
            Ok(())
        }),
    ]
}
