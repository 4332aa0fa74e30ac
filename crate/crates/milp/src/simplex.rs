//! Dense bounded-variable primal simplex.
//!
//! Every row `a·x {<=,=,>=} rhs` is rewritten as `a·x - r = 0` with a row
//! activity variable `r` carrying the row bounds, so all right-hand sides are
//! zero and the tableau stores `x_B + T x_N = 0`. Rows whose activity at the
//! starting point is out of range get an artificial column; phase one drives
//! the artificials to zero. Pricing is Dantzig's rule, switching to Bland's
//! rule after a long run of degenerate pivots, and the ratio test is the
//! two-pass Harris test.

use std::time::Instant;

use crate::model::MilpModel;
use crate::revised::{Outcome, Revised};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Branch-and-bound stopped at its node limit.
    NodeLimit,
    TimeLimit,
    /// The final point failed verification against the original rows.
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    Free,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective of `values`; `+inf` when no point is available.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Status of each structural variable at termination (empty for
    /// branch-and-bound results).
    pub basis: Vec<BasisStatus>,
    pub iterations: usize,
    /// Proven lower bound on the optimum. Equals `objective` for a solved LP.
    pub bound: f64,
    pub nodes: usize,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            objective: f64::INFINITY,
            values: Vec::new(),
            basis: Vec::new(),
            iterations,
            bound: if status == LpStatus::Unbounded { f64::NEG_INFINITY } else { f64::INFINITY },
            nodes: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexParams {
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Residual tolerance of the final verification, scaled by `1 + |rhs|`.
    pub verify_tol: f64,
    pub deadline: Option<Instant>,
}

impl Default for SimplexParams {
    fn default() -> Self {
        SimplexParams {
            max_iterations: 500_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            verify_tol: 1e-7,
            deadline: None,
        }
    }
}

/// Solves the LP relaxation of `model` (integrality is ignored).
pub fn simplex_solve(model: &MilpModel) -> LpSolution {
    let lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    simplex_solve_with_bounds(model, &lower, &upper, &SimplexParams::default())
}

/// Solves the LP relaxation of `model` with the variable bounds replaced by
/// `lower`/`upper`.
pub fn simplex_solve_with_bounds(
    model: &MilpModel,
    lower: &[f64],
    upper: &[f64],
    params: &SimplexParams,
) -> LpSolution {
    assert_eq!(lower.len(), model.num_vars());
    assert_eq!(upper.len(), model.num_vars());
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return LpSolution::without_point(LpStatus::Infeasible, 0);
    }
    solve_fresh(model, lower, upper, params).0
}

/// LP state reused across solves of one model whose variable bounds change
/// between calls. After an optimal solve the basis stays dual feasible under
/// any new bounds, so the next solve runs the dual simplex from it instead
/// of starting over.
pub(crate) struct WarmLp {
    params: SimplexParams,
    engine: Option<Revised>,
    warm_solves: usize,
}

/// Warm solves between fresh starts, to bound accumulated drift.
const REFRESH_EVERY: usize = 2000;

impl WarmLp {
    pub(crate) fn new(params: SimplexParams) -> Self {
        WarmLp { params, engine: None, warm_solves: 0 }
    }

    pub(crate) fn solve(&mut self, model: &MilpModel, lower: &[f64], upper: &[f64]) -> LpSolution {
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return LpSolution::without_point(LpStatus::Infeasible, 0);
        }
        if self.warm_solves < REFRESH_EVERY {
            if let Some(engine) = self.engine.as_mut() {
                self.warm_solves += 1;
                let before = engine.iterations;
                let outcome = engine.resolve(lower, upper);
                let spent = engine.iterations - before;
                match outcome {
                    Outcome::Done(LpStatus::Optimal) => {
                        let mut sol = engine.solution(model);
                        sol.iterations = spent;
                        if sol.status == LpStatus::Optimal {
                            return sol;
                        }
                    }
                    Outcome::Done(status @ (LpStatus::Infeasible | LpStatus::TimeLimit)) => {
                        return LpSolution::without_point(status, spent);
                    }
                    _ => {}
                }
            }
        }
        self.warm_solves = 0;
        self.engine = None;
        let (sol, engine) = solve_fresh(model, lower, upper, &self.params);
        self.engine = engine;
        sol
    }
}

/// Revised simplex from the slack basis, falling back to the dense tableau.
/// Also returns the revised engine when it finished optimal.
fn solve_fresh(
    model: &MilpModel,
    lower: &[f64],
    upper: &[f64],
    params: &SimplexParams,
) -> (LpSolution, Option<Revised>) {
    if let Some(mut engine) = Revised::new(model, lower, upper, params) {
        match engine.run() {
            Outcome::Done(LpStatus::Optimal) => {
                let sol = engine.solution(model);
                if sol.status == LpStatus::Optimal {
                    return (sol, Some(engine));
                }
            }
            Outcome::Done(status @ (LpStatus::Infeasible | LpStatus::TimeLimit | LpStatus::Unbounded)) => {
                return (LpSolution::without_point(status, engine.iterations), None);
            }
            _ => {}
        }
    }
    let mut tab = Tableau::new(model, lower, upper, params);
    let status = tab.run();
    (tab.finish(model, status), None)
}

const NONBASIC: usize = usize::MAX;
const DROP_TOL: f64 = 1e-12;

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

struct Tableau {
    params: SimplexParams,
    rows: usize,
    cols: usize,
    structural: usize,
    first_artificial: usize,
    // Row-major `rows x cols`.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    structural_cost: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn new(model: &MilpModel, lower: &[f64], upper: &[f64], params: &SimplexParams) -> Self {
        let nv = model.num_vars();
        let m = model.num_constraints();

        let mut x0: Vec<f64> = (0..nv)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    0.0
                }
            })
            .collect();

        // Decide which rows need an artificial column.
        let mut row_bounds = Vec::with_capacity(m);
        let mut artificial_sign = vec![0.0; m];
        let mut activity = vec![0.0; m];
        for (i, c) in model.constraints().iter().enumerate() {
            let (lo, hi) = match c.sense {
                crate::Sense::Le => (f64::NEG_INFINITY, c.rhs),
                crate::Sense::Ge => (c.rhs, f64::INFINITY),
                crate::Sense::Eq => (c.rhs, c.rhs),
            };
            row_bounds.push((lo, hi));
            let act = c.activity(&x0);
            activity[i] = act;
            if act < lo - params.feasibility_tol {
                artificial_sign[i] = 1.0;
            } else if act > hi + params.feasibility_tol {
                artificial_sign[i] = -1.0;
            }
        }
        let n_art = artificial_sign.iter().filter(|s| **s != 0.0).count();
        let cols = nv + m + n_art;
        let first_artificial = nv + m;

        let mut t = vec![0.0; m * cols];
        let mut lo_all = Vec::with_capacity(cols);
        let mut up_all = Vec::with_capacity(cols);
        lo_all.extend_from_slice(lower);
        up_all.extend_from_slice(upper);
        for &(lo, hi) in &row_bounds {
            lo_all.push(lo);
            up_all.push(hi);
        }
        lo_all.resize(cols, 0.0);
        up_all.resize(cols, f64::INFINITY);

        x0.resize(cols, 0.0);
        let mut basis = vec![0; m];
        let mut row_of = vec![NONBASIC; cols];
        let mut next_art = first_artificial;
        for (i, c) in model.constraints().iter().enumerate() {
            let row = &mut t[i * cols..(i + 1) * cols];
            let r = nv + i;
            let sign = artificial_sign[i];
            if sign == 0.0 {
                // r - a·x = 0 with r basic.
                for &(v, a) in &c.coeffs {
                    row[v.0] -= a;
                }
                row[r] = 1.0;
                basis[i] = r;
                row_of[r] = i;
                x0[r] = activity[i];
            } else {
                // art + sign·(a·x - r) = 0 with r parked at the violated bound.
                let (lo, hi) = row_bounds[i];
                let bound = if sign > 0.0 { lo } else { hi };
                for &(v, a) in &c.coeffs {
                    row[v.0] += sign * a;
                }
                row[r] = -sign;
                row[next_art] = 1.0;
                basis[i] = next_art;
                row_of[next_art] = i;
                x0[r] = bound;
                x0[next_art] = sign * (bound - activity[i]);
                next_art += 1;
            }
        }

        Tableau {
            params: params.clone(),
            rows: m,
            cols,
            structural: nv,
            first_artificial,
            t,
            lower: lo_all,
            upper: up_all,
            x: x0,
            cost: vec![0.0; cols],
            structural_cost: model.dense_objective(),
            reduced: vec![0.0; cols],
            basis,
            row_of,
            iterations: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn run(&mut self) -> LpStatus {
        if self.first_artificial < self.cols {
            for j in self.first_artificial..self.cols {
                self.cost[j] = 1.0;
            }
            match self.phase() {
                PhaseEnd::Optimal => {}
                PhaseEnd::IterationLimit => return LpStatus::IterationLimit,
                PhaseEnd::TimeLimit => return LpStatus::TimeLimit,
                // Phase one is bounded below by zero.
                PhaseEnd::Unbounded => return LpStatus::NumericalFailure,
            }
            let infeasibility: f64 = (self.first_artificial..self.cols).map(|j| self.x[j]).sum();
            let scale = 1.0 + self.x.iter().take(self.structural).fold(0.0f64, |a, v| a.max(v.abs()));
            if infeasibility > 1e-7 * scale {
                return LpStatus::Infeasible;
            }
            for j in self.first_artificial..self.cols {
                self.cost[j] = 0.0;
                self.upper[j] = 0.0;
                if self.row_of[j] == NONBASIC {
                    self.x[j] = 0.0;
                }
            }
        }
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..self.structural].copy_from_slice(&self.structural_cost);
        match self.phase() {
            PhaseEnd::Optimal => LpStatus::Optimal,
            PhaseEnd::Unbounded => LpStatus::Unbounded,
            PhaseEnd::IterationLimit => LpStatus::IterationLimit,
            PhaseEnd::TimeLimit => LpStatus::TimeLimit,
        }
    }

    fn recompute_reduced_costs(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            for (d, &a) in self.reduced.iter_mut().zip(row) {
                if a != 0.0 {
                    *d -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    /// Recomputes the basic values from the nonbasic ones.
    fn recompute_basic_values(&mut self) {
        for i in 0..self.rows {
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            let mut v = 0.0;
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 && self.row_of[j] == NONBASIC {
                    v -= a * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    /// Direction in which nonbasic `j` would improve the objective, if any.
    fn improving_direction(&self, j: usize) -> Option<f64> {
        let d = self.reduced[j];
        let tol = self.params.optimality_tol;
        let (lo, up) = (self.lower[j], self.upper[j]);
        if lo == up {
            return None;
        }
        let at_lower = lo.is_finite() && self.x[j] <= lo;
        let at_upper = up.is_finite() && self.x[j] >= up;
        if d < -tol && !at_upper {
            Some(1.0)
        } else if d > tol && !at_lower {
            Some(-1.0)
        } else {
            None
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            if self.row_of[j] != NONBASIC {
                continue;
            }
            if let Some(dir) = self.improving_direction(j) {
                if bland {
                    return Some((j, dir));
                }
                let score = self.reduced[j].abs();
                if score > best_score {
                    best_score = score;
                    best = Some((j, dir));
                }
            }
        }
        best
    }

    /// Harris ratio test. Returns `(step, leaving row)`; `None` row means the
    /// entering variable flips to its opposite bound.
    fn ratio_test(&self, q: usize, dir: f64, bland: bool) -> Option<(f64, Option<usize>)> {
        let ptol = self.params.pivot_tol;
        let ftol = self.params.feasibility_tol;
        let mut relaxed = f64::INFINITY;
        for i in 0..self.rows {
            let rate = -dir * self.at(i, q);
            if rate.abs() <= ptol {
                continue;
            }
            let b = self.basis[i];
            let xb = self.x[b];
            let lim = if rate < 0.0 {
                if self.lower[b].is_finite() {
                    (xb - self.lower[b] + ftol) / -rate
                } else {
                    continue;
                }
            } else if self.upper[b].is_finite() {
                (self.upper[b] - xb + ftol) / rate
            } else {
                continue;
            };
            relaxed = relaxed.min(lim);
        }
        let range = self.upper[q] - self.lower[q];
        if !relaxed.is_finite() {
            return if range.is_finite() { Some((range, None)) } else { None };
        }
        let mut chosen: Option<(usize, f64, f64)> = None;
        for i in 0..self.rows {
            let rate = -dir * self.at(i, q);
            if rate.abs() <= ptol {
                continue;
            }
            let b = self.basis[i];
            let xb = self.x[b];
            let exact = if rate < 0.0 {
                if !self.lower[b].is_finite() {
                    continue;
                }
                (xb - self.lower[b]) / -rate
            } else {
                if !self.upper[b].is_finite() {
                    continue;
                }
                (self.upper[b] - xb) / rate
            };
            if exact > relaxed {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((ci, _, cmag)) => {
                    if bland {
                        b < self.basis[ci]
                    } else {
                        rate.abs() > cmag
                    }
                }
            };
            if better {
                chosen = Some((i, exact.max(0.0), rate.abs()));
            }
        }
        let (row, step, _) = chosen.expect("a row attains the relaxed ratio");
        if range.is_finite() && range <= step {
            Some((range, None))
        } else {
            Some((step, Some(row)))
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        let mut pivot_row: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= piv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        pivot_row.push((k, *v));
                    }
                }
            }
            row[q] = 1.0;
        }
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let base = i * cols;
            let f = self.t[base + q];
            if f == 0.0 {
                continue;
            }
            for &(k, v) in &pivot_row {
                let e = &mut self.t[base + k];
                *e -= f * v;
                if e.abs() < DROP_TOL {
                    *e = 0.0;
                }
            }
            self.t[base + q] = 0.0;
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for &(k, v) in &pivot_row {
                self.reduced[k] -= f * v;
            }
        }
        self.reduced[q] = 0.0;
        let leaving = self.basis[r];
        self.row_of[leaving] = NONBASIC;
        self.basis[r] = q;
        self.row_of[q] = r;
    }

    fn phase(&mut self) -> PhaseEnd {
        self.recompute_reduced_costs();
        let stall_limit = 3 * (self.rows + self.cols);
        let mut stalled = 0usize;
        let mut bland = false;
        let mut verified_once = false;
        loop {
            if self.iterations >= self.params.max_iterations {
                return PhaseEnd::IterationLimit;
            }
            if self.iterations.is_multiple_of(64) {
                if let Some(deadline) = self.params.deadline {
                    if Instant::now() >= deadline {
                        return PhaseEnd::TimeLimit;
                    }
                }
            }
            if self.iterations % 512 == 511 {
                self.recompute_basic_values();
            }
            let Some((q, dir)) = self.choose_entering(bland) else {
                // Confirm with fresh reduced costs before declaring optimality.
                if verified_once {
                    return PhaseEnd::Optimal;
                }
                self.recompute_basic_values();
                self.recompute_reduced_costs();
                verified_once = true;
                continue;
            };
            verified_once = false;
            self.iterations += 1;
            let Some((step, leave)) = self.ratio_test(q, dir, bland) else {
                return PhaseEnd::Unbounded;
            };
            let dq = self.reduced[q].abs();
            if step * dq <= 1e-12 {
                stalled += 1;
                if stalled > stall_limit {
                    bland = true;
                }
            } else {
                stalled = 0;
                bland = false;
            }
            // Move along the edge.
            if step != 0.0 {
                self.x[q] += dir * step;
                for i in 0..self.rows {
                    let a = self.at(i, q);
                    if a != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * step * a;
                    }
                }
            }
            match leave {
                None => {
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some(r) => {
                    let b = self.basis[r];
                    let rate = -dir * self.at(r, q);
                    self.x[b] = if rate < 0.0 { self.lower[b] } else { self.upper[b] };
                    self.pivot(r, q);
                }
            }
        }
    }

    fn finish(mut self, model: &MilpModel, status: LpStatus) -> LpSolution {
        let nv = self.structural;
        if status != LpStatus::Optimal {
            return LpSolution::without_point(status, self.iterations);
        }
        self.recompute_basic_values();
        let mut values = self.x[..nv].to_vec();
        // Snap values within tolerance of a bound onto it.
        for (j, v) in values.iter_mut().enumerate() {
            let (lo, up) = (self.lower[j], self.upper[j]);
            if *v < lo && lo - *v <= 1e-9 {
                *v = lo;
            }
            if *v > up && *v - up <= 1e-9 {
                *v = up;
            }
        }
        let basis = (0..nv)
            .map(|j| {
                if self.row_of[j] != NONBASIC {
                    BasisStatus::Basic
                } else if self.lower[j].is_finite() && values[j] <= self.lower[j] {
                    BasisStatus::AtLower
                } else if self.upper[j].is_finite() && values[j] >= self.upper[j] {
                    BasisStatus::AtUpper
                } else {
                    BasisStatus::Free
                }
            })
            .collect();
        let objective = model.objective_value(&values);
        let bounds_ok = (0..nv).all(|j| {
            values[j] >= self.lower[j] - self.params.verify_tol && values[j] <= self.upper[j] + self.params.verify_tol
        });
        let rows_ok =
            model.constraints().iter().all(|c| c.violation(&values) <= self.params.verify_tol * (1.0 + c.rhs.abs()));
        let status = if bounds_ok && rows_ok { LpStatus::Optimal } else { LpStatus::NumericalFailure };
        LpSolution {
            status,
            objective: if status == LpStatus::Optimal { objective } else { f64::INFINITY },
            bound: if status == LpStatus::Optimal { objective } else { f64::NEG_INFINITY },
            values,
            basis,
            iterations: self.iterations,
            nodes: 0,
        }
    }
}
