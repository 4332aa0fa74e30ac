//! Sparse revised bounded simplex over the same `a·x - r = 0` row form as
//! the dense tableau. The basis inverse is held in product form and rebuilt
//! every few dozen updates. A cold solve starts from the slack basis with
//! every structural at the bound its cost prefers, runs the dual simplex to
//! primal feasibility and cleans up with the primal simplex; a warm solve
//! does the same from the previous basis after the bounds change.
//!
//! Anything this engine cannot settle is reported as [`Outcome::Failed`]
//! and the caller falls back to the dense tableau.

use std::time::Instant;

use crate::model::{MilpModel, Sense};
use crate::simplex::{BasisStatus, LpSolution, LpStatus, SimplexParams};

const NONBASIC: usize = usize::MAX;
const REFACTOR_EVERY: usize = 128;
const DROP_TOL: f64 = 1e-13;
/// Half-width of the temporary box for variables whose preferred bound is
/// infinite.
const BOX: f64 = 1e7;

pub(crate) enum Outcome {
    Done(LpStatus),
    Failed,
}

enum End {
    Done,
    Infeasible,
    Unbounded,
    TimeLimit,
    Stuck,
}

struct Eta {
    r: usize,
    piv: f64,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct Revised {
    params: SimplexParams,
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    // Bounds the algorithms work with; they differ from the true ones only
    // on boxed variables.
    lower: Vec<f64>,
    upper: Vec<f64>,
    true_lower: Vec<f64>,
    true_upper: Vec<f64>,
    boxed: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    etas: Vec<Eta>,
    updates: usize,
    pub(crate) iterations: usize,
    // Scratch.
    work: Vec<f64>,
    alpha: Vec<f64>,
}

impl Revised {
    pub(crate) fn new(model: &MilpModel, lower: &[f64], upper: &[f64], params: &SimplexParams) -> Option<Self> {
        let n = model.num_vars();
        let m = model.num_constraints();
        let total = n + m;
        let mut cols = vec![Vec::new(); n];
        let mut rows = vec![Vec::new(); m];
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.coeffs {
                if a != 0.0 {
                    cols[v.0].push((i, a));
                    rows[i].push((v.0, a));
                }
            }
            let (l, u) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lo.push(l);
            up.push(u);
        }
        let mut cost = model.dense_objective();
        cost.resize(total, 0.0);
        let mut s = Revised {
            params: params.clone(),
            m,
            n,
            cols,
            rows,
            cost,
            true_lower: lo.clone(),
            true_upper: up.clone(),
            lower: lo,
            upper: up,
            boxed: Vec::new(),
            x: vec![0.0; total],
            d: vec![0.0; total],
            basis: (n..total).collect(),
            pos: (0..total).map(|j| if j < n { NONBASIC } else { j - n }).collect(),
            etas: Vec::new(),
            updates: 0,
            iterations: 0,
            work: vec![0.0; m],
            alpha: vec![0.0; total],
        };
        s.d[..n].copy_from_slice(&s.cost[..n]);
        s.place_nonbasic();
        if !s.refactor() {
            return None;
        }
        Some(s)
    }

    /// Cold or warm solve from the current basis.
    pub(crate) fn run(&mut self) -> Outcome {
        match self.dual() {
            End::Done => {}
            End::Infeasible => return Outcome::Done(LpStatus::Infeasible),
            End::TimeLimit => return Outcome::Done(LpStatus::TimeLimit),
            _ => return Outcome::Failed,
        }
        for j in std::mem::take(&mut self.boxed) {
            self.lower[j] = self.true_lower[j];
            self.upper[j] = self.true_upper[j];
        }
        match self.primal() {
            End::Done => Outcome::Done(LpStatus::Optimal),
            End::Unbounded => Outcome::Done(LpStatus::Unbounded),
            End::TimeLimit => Outcome::Done(LpStatus::TimeLimit),
            _ => Outcome::Failed,
        }
    }

    /// Replaces the structural bounds and re-optimizes.
    pub(crate) fn resolve(&mut self, lower: &[f64], upper: &[f64]) -> Outcome {
        self.true_lower[..self.n].copy_from_slice(lower);
        self.true_upper[..self.n].copy_from_slice(upper);
        self.lower[..self.n].copy_from_slice(lower);
        self.upper[..self.n].copy_from_slice(upper);
        self.boxed.clear();
        self.place_nonbasic();
        self.recompute_primal();
        self.run()
    }

    /// Puts every nonbasic variable at the bound its reduced cost prefers,
    /// boxing it when that bound is infinite.
    fn place_nonbasic(&mut self) {
        let tol = self.params.optimality_tol;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC {
                continue;
            }
            let (lo, up) = (self.lower[j], self.upper[j]);
            let d = self.d[j];
            self.x[j] = if lo == up {
                lo
            } else if d > tol {
                if !lo.is_finite() {
                    self.lower[j] = if up.is_finite() { up.min(0.0) - BOX } else { -BOX };
                    self.boxed.push(j);
                }
                self.lower[j]
            } else if d < -tol {
                if !up.is_finite() {
                    self.upper[j] = if lo.is_finite() { lo.max(0.0) + BOX } else { BOX };
                    self.boxed.push(j);
                }
                self.upper[j]
            } else if self.x[j] >= lo && self.x[j] <= up {
                self.x[j]
            } else if lo.is_finite() {
                lo
            } else if up.is_finite() {
                up
            } else {
                0.0
            };
        }
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        v.iter_mut().for_each(|x| *x = -*x);
        for e in &self.etas {
            let xr = v[e.r] / e.piv;
            v[e.r] = xr;
            if xr != 0.0 {
                for &(i, a) in &e.entries {
                    v[i] -= a * xr;
                }
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = v[e.r];
            for &(i, a) in &e.entries {
                s -= a * v[i];
            }
            v[e.r] = s / e.piv;
        }
        v.iter_mut().for_each(|x| *x = -*x);
    }

    fn push_eta(&mut self, r: usize, col: &[f64]) {
        let entries =
            col.iter().enumerate().filter(|&(i, a)| i != r && a.abs() > DROP_TOL).map(|(i, &a)| (i, a)).collect();
        self.etas.push(Eta { r, piv: col[r], entries });
    }

    /// `alpha[j] = rho · a_j` for every column.
    fn row_alpha(&mut self, rho: &[f64]) {
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        for (i, &p) in rho.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(j, a) in &self.rows[i] {
                self.alpha[j] += p * a;
            }
            self.alpha[self.n + i] = -p;
        }
    }

    /// Rebuilds the product-form inverse of the current basis. Rows with a
    /// single pending column are pivoted first, which keeps the triangular
    /// part of the basis free of fill; the remaining columns go sparsest
    /// first onto the largest admissible entry. Returns false when the
    /// basis is numerically singular.
    fn refactor(&mut self) -> bool {
        let (n, m) = (self.n, self.m);
        self.etas.clear();
        self.updates = 0;
        let mut available = vec![true; m];
        let mut new_basis = vec![NONBASIC; m];
        let mut pending = vec![false; n];
        let mut left = 0usize;
        for &j in &self.basis {
            if j >= n {
                available[j - n] = false;
                new_basis[j - n] = j;
            } else {
                pending[j] = true;
                left += 1;
            }
        }
        let mut row_count = vec![0usize; m];
        let mut col_count = vec![0usize; n];
        for j in (0..n).filter(|&j| pending[j]) {
            for &(i, _) in &self.cols[j] {
                if available[i] {
                    row_count[i] += 1;
                    col_count[j] += 1;
                }
            }
        }
        let mut singles: Vec<usize> = (0..m).filter(|&i| available[i] && row_count[i] == 1).collect();
        let mut col = vec![0.0; m];
        while left > 0 {
            // A row singleton, if one is still valid.
            let mut pick: Option<(usize, usize)> = None;
            while let Some(i) = singles.pop() {
                if available[i] && row_count[i] == 1 {
                    if let Some(&(j, _)) = self.rows[i].iter().find(|&&(j, _)| pending[j]) {
                        pick = Some((j, i));
                        break;
                    }
                }
            }
            // A singleton column with no entry on an earlier pivot row is its
            // own eta.
            if let Some((j, i)) =
                pick.filter(|&(j, _)| self.cols[j].iter().all(|e| new_basis[e.0] == NONBASIC || new_basis[e.0] >= n))
            {
                let a = self.cols[j].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
                let big = self.cols[j].iter().filter(|e| available[e.0]).fold(0.0f64, |b, e| b.max(e.1.abs()));
                if a.abs() > 1e-9 && a.abs() >= 0.01 * big {
                    let entries = self.cols[j].iter().filter(|e| e.0 != i).map(|&(k, v)| (k, -v)).collect();
                    self.etas.push(Eta { r: i, piv: -a, entries });
                    self.settle(
                        j,
                        i,
                        &mut pending,
                        &mut left,
                        &mut new_basis,
                        &mut row_count,
                        &mut col_count,
                        &mut available,
                        &mut singles,
                    );
                    continue;
                }
            }
            let j = match pick {
                Some((j, _)) => j,
                None => (0..n).filter(|&j| pending[j]).min_by_key(|&j| col_count[j]).expect("columns remain"),
            };
            self.column_into(j, &mut col);
            self.ftran(&mut col);
            let big = (0..m).filter(|&i| available[i]).fold(0.0f64, |a, i| a.max(col[i].abs()));
            if big <= 1e-9 {
                return false;
            }
            let mut best: Option<usize> = None;
            for i in 0..m {
                if !available[i] || col[i].abs() < 0.1 * big {
                    continue;
                }
                let better = best.is_none_or(|b| {
                    row_count[i] < row_count[b] || (row_count[i] == row_count[b] && col[i].abs() > col[b].abs())
                });
                if better {
                    best = Some(i);
                }
            }
            let r = best.expect("the largest entry qualifies");
            self.push_eta(r, &col);
            self.settle(
                j,
                r,
                &mut pending,
                &mut left,
                &mut new_basis,
                &mut row_count,
                &mut col_count,
                &mut available,
                &mut singles,
            );
        }
        for (i, &j) in new_basis.iter().enumerate() {
            self.pos[j] = i;
        }
        self.basis = new_basis;
        self.recompute_primal();
        self.recompute_duals();
        true
    }

    /// Bookkeeping after column `j` is pivoted on row `r` during refactoring.
    #[allow(clippy::too_many_arguments)]
    fn settle(
        &self,
        j: usize,
        r: usize,
        pending: &mut [bool],
        left: &mut usize,
        new_basis: &mut [usize],
        row_count: &mut [usize],
        col_count: &mut [usize],
        available: &mut [bool],
        singles: &mut Vec<usize>,
    ) {
        pending[j] = false;
        *left -= 1;
        new_basis[r] = j;
        for &(i, _) in &self.cols[j] {
            if available[i] {
                row_count[i] -= 1;
                if row_count[i] == 1 {
                    singles.push(i);
                }
            }
        }
        available[r] = false;
        for &(c, _) in &self.rows[r] {
            if pending[c] {
                col_count[c] -= 1;
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn recompute_primal(&mut self) {
        let mut rhs = std::mem::take(&mut self.work);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * self.x[j];
                }
            }
        }
        for i in 0..self.m {
            if self.pos[self.n + i] == NONBASIC {
                rhs[i] += self.x[self.n + i];
            }
        }
        self.ftran(&mut rhs);
        for (i, &b) in self.basis.iter().enumerate() {
            self.x[b] = rhs[i];
        }
        self.work = rhs;
    }

    #[allow(clippy::needless_range_loop)]
    fn recompute_duals(&mut self) {
        let mut y: Vec<f64> = self.basis.iter().map(|&b| self.cost[b]).collect();
        self.btran(&mut y);
        for j in 0..self.n {
            self.d[j] = if self.pos[j] != NONBASIC {
                0.0
            } else {
                self.cost[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
            };
        }
        for i in 0..self.m {
            let j = self.n + i;
            self.d[j] = if self.pos[j] != NONBASIC { 0.0 } else { y[i] };
        }
    }

    fn out_of_time(&self) -> bool {
        self.iterations.is_multiple_of(32) && self.params.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Moves nonbasic `q` by `step` in direction `dir` along column `col`.
    fn shift(&mut self, q: usize, dir: f64, step: f64, col: &[f64]) {
        if step == 0.0 {
            return;
        }
        self.x[q] += dir * step;
        for (i, &a) in col.iter().enumerate() {
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= dir * step * a;
            }
        }
    }

    /// Basis exchange at row `r`, entering `q`; `self.alpha` holds row `r`
    /// of `B^-1 N` and `col` the entering column.
    fn exchange(&mut self, r: usize, q: usize, col: &[f64]) {
        let piv = col[r];
        let theta = self.d[q] / piv;
        if theta != 0.0 {
            for j in 0..self.n + self.m {
                if self.pos[j] == NONBASIC && self.alpha[j] != 0.0 {
                    self.d[j] -= theta * self.alpha[j];
                }
            }
        }
        let b = self.basis[r];
        self.d[b] = -theta;
        self.d[q] = 0.0;
        self.push_eta(r, col);
        self.pos[b] = NONBASIC;
        self.pos[q] = r;
        self.basis[r] = q;
        self.updates += 1;
        self.iterations += 1;
    }

    fn dual(&mut self) -> End {
        let ftol = self.params.feasibility_tol;
        let ptol = self.params.pivot_tol.max(1e-7);
        let otol = self.params.optimality_tol;
        let cap = self.iterations + 20 * (self.m + self.n) + 1000;
        let total = self.n + self.m;
        let mut col = vec![0.0; self.m];
        let mut rho = vec![0.0; self.m];
        let mut retried = false;
        loop {
            if self.iterations >= cap.min(self.params.max_iterations) {
                return End::Stuck;
            }
            if self.out_of_time() {
                return End::TimeLimit;
            }
            if self.updates >= REFACTOR_EVERY && !self.refactor() {
                return End::Stuck;
            }
            let mut leave: Option<(usize, f64)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let xb = self.x[b];
                let viol = if xb < self.lower[b] - ftol {
                    self.lower[b] - xb
                } else if xb > self.upper[b] + ftol {
                    xb - self.upper[b]
                } else {
                    continue;
                };
                if leave.is_none_or(|(_, v)| viol > v) {
                    leave = Some((i, viol));
                }
            }
            let Some((r, _)) = leave else {
                return End::Done;
            };
            let b = self.basis[r];
            let increase = self.x[b] < self.lower[b];
            let target = if increase { self.lower[b] } else { self.upper[b] };
            rho.iter_mut().for_each(|v| *v = 0.0);
            rho[r] = 1.0;
            self.btran(&mut rho);
            self.row_alpha(&rho);

            let eligible = |s: &Self, j: usize| -> Option<(f64, f64)> {
                let a = s.alpha[j];
                if s.pos[j] != NONBASIC || a.abs() <= ptol || s.lower[j] == s.upper[j] {
                    return None;
                }
                let dir = if increase == (a < 0.0) { 1.0 } else { -1.0 };
                if dir > 0.0 && s.x[j] >= s.upper[j] {
                    return None;
                }
                if dir < 0.0 && s.x[j] <= s.lower[j] {
                    return None;
                }
                Some((dir, s.d[j] * dir))
            };
            let mut relaxed = f64::INFINITY;
            for j in 0..total {
                if let Some((_, dd)) = eligible(self, j) {
                    relaxed = relaxed.min((dd.max(0.0) + otol) / self.alpha[j].abs());
                }
            }
            if !relaxed.is_finite() {
                if !retried && self.updates > 0 {
                    retried = true;
                    if !self.refactor() {
                        return End::Stuck;
                    }
                    continue;
                }
                // The row proves infeasibility unless a boxed column could
                // still move past its temporary bound.
                let escapes = self.boxed.iter().any(|&j| {
                    let a = self.alpha[j];
                    self.pos[j] == NONBASIC && a.abs() > ptol && {
                        let dir = if increase == (a < 0.0) { 1.0 } else { -1.0 };
                        if dir > 0.0 {
                            self.true_upper[j] > self.x[j]
                        } else {
                            self.true_lower[j] < self.x[j]
                        }
                    }
                });
                return if escapes { End::Stuck } else { End::Infeasible };
            }
            let mut chosen: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                if let Some((dir, dd)) = eligible(self, j) {
                    let a = self.alpha[j].abs();
                    if dd.max(0.0) / a <= relaxed && chosen.is_none_or(|(_, _, m)| a > m) {
                        chosen = Some((j, dir, a));
                    }
                }
            }
            let (q, dir, _) = chosen.expect("a column attains the relaxed ratio");
            self.column_into(q, &mut col);
            self.ftran(&mut col);
            if (col[r] - self.alpha[q]).abs() > 1e-7 * (1.0 + col[r].abs()) {
                if retried || !self.refactor() {
                    return End::Stuck;
                }
                retried = true;
                continue;
            }
            retried = false;
            let step = (target - self.x[b]) / (-col[r] * dir);
            self.shift(q, dir, step, &col);
            self.x[b] = target;
            self.exchange(r, q, &col);
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn primal(&mut self) -> End {
        let ftol = self.params.feasibility_tol;
        let otol = self.params.optimality_tol;
        let ptol = self.params.pivot_tol.max(1e-9);
        let cap = self.iterations + 20 * (self.m + self.n) + 1000;
        let total = self.n + self.m;
        let mut col = vec![0.0; self.m];
        let mut rho = vec![0.0; self.m];
        let mut confirmed = false;
        loop {
            if self.iterations >= cap.min(self.params.max_iterations) {
                return End::Stuck;
            }
            if self.out_of_time() {
                return End::TimeLimit;
            }
            if self.updates >= REFACTOR_EVERY && !self.refactor() {
                return End::Stuck;
            }
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..total {
                if self.pos[j] != NONBASIC || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.d[j];
                let dir = if d < -otol && self.x[j] < self.upper[j] {
                    1.0
                } else if d > otol && self.x[j] > self.lower[j] {
                    -1.0
                } else {
                    continue;
                };
                if d.abs() > best {
                    best = d.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                if confirmed || self.updates == 0 {
                    return End::Done;
                }
                // Confirm with values recomputed from the factorization.
                self.recompute_primal();
                self.recompute_duals();
                confirmed = true;
                continue;
            };
            confirmed = false;
            self.column_into(q, &mut col);
            self.ftran(&mut col);

            // Two-pass Harris ratio test.
            let limit = |s: &Self, i: usize, slack: f64| -> Option<f64> {
                let rate = -dir * col[i];
                if rate.abs() <= ptol {
                    return None;
                }
                let b = s.basis[i];
                if rate < 0.0 {
                    s.lower[b].is_finite().then(|| (s.x[b] - s.lower[b] + slack) / -rate)
                } else {
                    s.upper[b].is_finite().then(|| (s.upper[b] - s.x[b] + slack) / rate)
                }
            };
            let relaxed = (0..self.m).filter_map(|i| limit(self, i, ftol)).fold(f64::INFINITY, f64::min);
            let range = self.upper[q] - self.lower[q];
            if !relaxed.is_finite() && !range.is_finite() {
                return End::Unbounded;
            }
            let mut leave: Option<(usize, f64, f64)> = None;
            if relaxed.is_finite() {
                for i in 0..self.m {
                    if let Some(exact) = limit(self, i, 0.0) {
                        let mag = col[i].abs();
                        if exact <= relaxed && leave.is_none_or(|(_, _, m)| mag > m) {
                            leave = Some((i, exact.max(0.0), mag));
                        }
                    }
                }
            }
            match leave {
                Some((r, step, _)) if step < range => {
                    let b = self.basis[r];
                    let target = if -dir * col[r] < 0.0 { self.lower[b] } else { self.upper[b] };
                    self.shift(q, dir, step, &col);
                    self.x[b] = target;
                    rho.iter_mut().for_each(|v| *v = 0.0);
                    rho[r] = 1.0;
                    self.btran(&mut rho);
                    self.row_alpha(&rho);
                    self.exchange(r, q, &col);
                }
                _ => {
                    self.shift(q, dir, range, &col);
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                    self.iterations += 1;
                }
            }
        }
    }

    /// The current point, verified against the model rows.
    pub(crate) fn solution(&mut self, model: &MilpModel) -> LpSolution {
        self.recompute_primal();
        let n = self.n;
        let mut values = self.x[..n].to_vec();
        for (j, v) in values.iter_mut().enumerate() {
            let (lo, up) = (self.true_lower[j], self.true_upper[j]);
            if *v < lo && lo - *v <= 1e-9 {
                *v = lo;
            }
            if *v > up && *v - up <= 1e-9 {
                *v = up;
            }
        }
        let tol = self.params.verify_tol;
        let bounds_ok = (0..n).all(|j| values[j] >= self.true_lower[j] - tol && values[j] <= self.true_upper[j] + tol);
        let rows_ok = model.constraints().iter().all(|c| c.violation(&values) <= tol * (1.0 + c.rhs.abs()));
        if !(bounds_ok && rows_ok) {
            return LpSolution::without_point(LpStatus::NumericalFailure, self.iterations);
        }
        let basis = (0..n)
            .map(|j| {
                if self.pos[j] != NONBASIC {
                    BasisStatus::Basic
                } else if self.true_lower[j].is_finite() && values[j] <= self.true_lower[j] {
                    BasisStatus::AtLower
                } else if self.true_upper[j].is_finite() && values[j] >= self.true_upper[j] {
                    BasisStatus::AtUpper
                } else {
                    BasisStatus::Free
                }
            })
            .collect();
        let objective = model.objective_value(&values);
        LpSolution {
            status: LpStatus::Optimal,
            objective,
            values,
            basis,
            iterations: self.iterations,
            bound: objective,
            nodes: 0,
        }
    }
}
