//! LP for Φ(I), the MILP for the full problem, and MILP-based solving.

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::PathBuf;

use ddid_milp::{
    bnb_solve_with, read_solution, write_lp, BnbParams, LpStatus, MilpModel, NodeHook, NodeReport, Sense, VarId,
};

use super::{phi_eval, phi_splits, pick_ranks, CuSolution, CuStatus};
use crate::cost::Cost;
use crate::error::{DdidError, Result};
use crate::family::QueryFamily;
use crate::instance::{canonicalize, mask, normalize_set, CuInstance};
use crate::select::{rank_window, sum_smallest};

/// Absolute tolerance between a MILP objective and the evaluated Φ(I*).
const CROSS_CHECK_TOL: f64 = 1e-6;

/// The per-split selection variables of one block. Index 0/1 is the branch.
struct Block {
    e: [VarId; 2],
    f: [Vec<VarId>; 2],
    g: [Vec<VarId>; 2],
    h: [Vec<VarId>; 2],
}

fn add_block(m: &mut MilpModel, k: usize, items: &[usize], ub: impl Fn(char, usize) -> f64) -> Block {
    let e = [
        m.add_continuous(format!("e0_{k}"), 0.0, f64::INFINITY),
        m.add_continuous(format!("e1_{k}"), 0.0, f64::INFINITY),
    ];
    let mut fam = |tag: char| -> [Vec<VarId>; 2] {
        [0, 1].map(|br| {
            items.iter().map(|&i| m.add_continuous(format!("{tag}{br}_{k}_{}", i + 1), 0.0, ub(tag, i))).collect()
        })
    };
    let f = fam('f');
    let g = fam('g');
    let h = fam('h');
    Block { e, f, g, h }
}

impl Block {
    fn all(&self, br: usize) -> impl Iterator<Item = VarId> + '_ {
        self.f[br].iter().chain(&self.g[br]).chain(&self.h[br]).copied()
    }

    /// Objective linkage, convexity, cardinality and failure rows shared by
    /// the LP and the MILP.
    #[allow(clippy::too_many_arguments)]
    fn add_common_rows(&self, m: &mut MilpModel, k: usize, eta: VarId, costs: &[f64], p: usize, b: usize, cap1: f64) {
        let mut obj = vec![(eta, 1.0)];
        for br in 0..2 {
            for fam in [&self.f[br], &self.g[br], &self.h[br]] {
                obj.extend(fam.iter().zip(costs).map(|(&v, &c)| (v, -c)));
            }
        }
        m.add_constraint(format!("obj_{k}"), obj, Sense::Ge, 0.0);
        m.add_constraint(format!("conv_{k}"), vec![(self.e[0], 1.0), (self.e[1], 1.0)], Sense::Eq, 1.0);
        for br in 0..2 {
            let mut row: Vec<(VarId, f64)> = vec![(self.e[br], -(p as f64))];
            row.extend(self.all(br).map(|v| (v, 1.0)));
            m.add_constraint(format!("card{br}_{k}"), row, Sense::Eq, 0.0);
        }
        let mut fail0 = vec![(self.e[0], b as f64)];
        fail0.extend(self.f[0].iter().chain(&self.h[0]).map(|&v| (v, -1.0)));
        m.add_constraint(format!("fail0_{k}"), fail0, Sense::Ge, 0.0);
        let mut fail1 = vec![(self.e[1], cap1)];
        fail1.extend(self.f[1].iter().map(|&v| (v, -1.0)));
        m.add_constraint(format!("fail1_{k}"), fail1, Sense::Ge, 0.0);
    }
}

/// LP whose optimum is Φ(I), and which is infeasible when Φ(I) = +∞.
///
/// One block per admissible split Γ_I; within a block the two branches of
/// the inner minimum are combined as a convex combination weighted by e⁰, e¹.
pub fn build_phi_lp(inst: &CuInstance, set: &[usize]) -> Result<MilpModel> {
    let set = normalize_set(set, inst.n())?;
    let n = inst.n();
    let gamma = inst.effective_gamma();
    let order = canonicalize(inst.c());
    let inside = mask(&set, n);
    // Position of each member of I in canonical order.
    let mut pos = vec![usize::MAX; n];
    let mut k = 0;
    for &i in order.order() {
        if inside[i] {
            pos[i] = k;
            k += 1;
        }
    }
    let items: Vec<usize> = (0..n).collect();
    let mut m = MilpModel::new();
    let eta = m.add_continuous("eta", f64::NEG_INFINITY, f64::INFINITY);
    m.set_objective(vec![(eta, 1.0)]);
    for g in 0..=set.len().min(gamma) {
        let applies = |tag: char, i: usize| match tag {
            'f' => inside[i] && pos[i] < g,
            'g' => inside[i] && pos[i] >= g,
            _ => !inside[i],
        };
        let block = add_block(&mut m, g, &items, |tag, i| if applies(tag, i) { f64::INFINITY } else { 0.0 });
        let cap1 = (inst.b() + g) as f64 - gamma as f64;
        block.add_common_rows(&mut m, g, eta, inst.c(), inst.p(), inst.b(), cap1);
        for br in 0..2 {
            for (tag, fam) in [('f', &block.f[br]), ('g', &block.g[br]), ('h', &block.h[br])] {
                for (i, &v) in fam.iter().enumerate() {
                    if applies(tag, i) {
                        m.add_constraint(
                            format!("{tag}{br}ub_{g}_{}", i + 1),
                            vec![(block.e[br], 1.0), (v, -1.0)],
                            Sense::Ge,
                            0.0,
                        );
                    }
                }
            }
        }
    }
    Ok(m)
}

/// MILP over the query indicators `w` for Selection and Knapsack families.
///
/// Items are emitted in canonical cost order so that the prefix rows on `u`
/// pick the cheapest queried items; the order is stored in the model
/// metadata and variable names carry 1-based original indices.
pub fn build_cu_milp(inst: &CuInstance, family: &QueryFamily) -> Result<MilpModel> {
    let family = family.validated(inst.n())?;
    if let QueryFamily::Explicit(_) = family {
        return Err(DdidError::UnsupportedFamily("explicit families have no compact description".into()));
    }
    let n = inst.n();
    let gamma = inst.effective_gamma();
    let order = canonicalize(inst.c()).order().to_vec();
    let costs: Vec<f64> = order.iter().map(|&i| inst.c()[i]).collect();
    let big_m = n as f64;

    let mut m = MilpModel::new();
    m.metadata.permutation = Some(order.clone());
    let eta = m.add_continuous("eta", f64::NEG_INFINITY, f64::INFINITY);
    m.set_objective(vec![(eta, 1.0)]);
    let w: Vec<VarId> = order.iter().map(|&i| m.add_binary(format!("w_{}", i + 1))).collect();
    let sum_w = || w.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>();

    for k in 0..=gamma {
        let z = m.add_binary(format!("z_{k}"));
        let u: Vec<VarId> = order.iter().map(|&i| m.add_binary(format!("u_{}_{k}", i + 1))).collect();
        let block = add_block(&mut m, k, &order, |_, _| f64::INFINITY);
        let cap1 = (inst.b() + k) as f64 - gamma as f64;
        block.add_common_rows(&mut m, k, eta, &costs, inst.p(), inst.b(), cap1);

        for r in 0..n {
            let name = order[r] + 1;
            for br in 0..2 {
                let e = block.e[br];
                let (f, g, h) = (block.f[br][r], block.g[br][r], block.h[br][r]);
                m.add_constraint(
                    format!("f{br}ub_{k}_{name}"),
                    vec![(e, 1.0), (f, -1.0), (u[r], -1.0)],
                    Sense::Ge,
                    -1.0,
                );
                m.add_constraint(
                    format!("g{br}ub_{k}_{name}"),
                    vec![(e, 1.0), (g, -1.0), (w[r], -1.0), (u[r], 1.0)],
                    Sense::Ge,
                    -1.0,
                );
                m.add_constraint(format!("h{br}ub_{k}_{name}"), vec![(e, 1.0), (h, -1.0), (w[r], 1.0)], Sense::Ge, 0.0);
                m.add_constraint(format!("f{br}sup_{k}_{name}"), vec![(f, 1.0), (u[r], -1.0)], Sense::Le, 0.0);
                m.add_constraint(
                    format!("g{br}sup_{k}_{name}"),
                    vec![(g, 1.0), (w[r], -1.0), (u[r], 1.0)],
                    Sense::Le,
                    0.0,
                );
                m.add_constraint(format!("h{br}sup_{k}_{name}"), vec![(h, 1.0), (w[r], 1.0)], Sense::Le, 1.0);
            }
            m.add_constraint(format!("uw_{k}_{name}"), vec![(u[r], 1.0), (w[r], -1.0)], Sense::Le, 0.0);
            for s in r + 1..n {
                m.add_constraint(
                    format!("pre_{k}_{name}_{}", order[s] + 1),
                    vec![(u[r], 1.0), (u[s], -1.0), (w[r], -1.0)],
                    Sense::Ge,
                    -1.0,
                );
            }
        }

        let kf = k as f64;
        let sum_u = || u.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>();
        let with = |mut a: Vec<(VarId, f64)>, scale: f64, extra: Vec<(VarId, f64)>| {
            a.iter_mut().for_each(|t| t.1 *= scale);
            a.extend(extra);
            a
        };
        m.add_constraint(format!("zlo_{k}"), with(sum_w(), -1.0, vec![(z, big_m)]), Sense::Ge, -kf);
        m.add_constraint(format!("zhi_{k}"), with(sum_w(), -1.0, vec![(z, big_m)]), Sense::Le, big_m - kf);
        m.add_constraint(format!("ucap_{k}"), with(sum_u(), 1.0, vec![(z, -big_m)]), Sense::Ge, kf - big_m);
        m.add_constraint(
            format!("uall_{k}"),
            with(sum_u(), 1.0, with(sum_w(), -1.0, vec![(z, big_m)])),
            Sense::Ge,
            0.0,
        );
        m.add_constraint(format!("ule_{k}"), sum_u(), Sense::Le, kf);
        m.add_constraint(format!("ulew_{k}"), with(sum_u(), 1.0, with(sum_w(), -1.0, vec![])), Sense::Le, 0.0);
    }

    match &family {
        QueryFamily::Selection { q } => {
            m.add_constraint("family", sum_w(), Sense::Le, *q as f64);
        }
        QueryFamily::Knapsack { weights, capacity } => {
            let row = w.iter().zip(&order).map(|(&v, &i)| (v, weights[i])).collect();
            m.add_constraint("family", row, Sense::Le, *capacity);
        }
        QueryFamily::Explicit(_) => unreachable!(),
    }
    Ok(m)
}

/// A cheap admissible query set with finite Φ, if one is found: rank
/// windows of the cheapest items, greedily packed for knapsack families.
fn heuristic_set(inst: &CuInstance, family: &QueryFamily) -> Result<Option<Vec<usize>>> {
    let n = inst.n();
    let order = canonicalize(inst.c()).order().to_vec();
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new()];
    match family {
        QueryFamily::Selection { q } => {
            for s in 0..=n - q {
                candidates.push(rank_window(inst.c(), s, s + q));
            }
        }
        QueryFamily::Knapsack { weights, capacity } => {
            for s in 0..n {
                let mut load = 0.0;
                let mut set = Vec::new();
                for &i in &order[s..] {
                    if load + weights[i] <= *capacity {
                        load += weights[i];
                        set.push(i);
                    }
                }
                set.sort_unstable();
                candidates.push(set);
            }
        }
        QueryFamily::Explicit(_) => {}
    }
    let mut best: Option<(Vec<usize>, Cost)> = None;
    for set in candidates {
        let v = phi_eval(inst, &set)?;
        if v.is_finite() && best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((set, v));
        }
    }
    Ok(best.map(|(s, _)| s))
}

/// The MILP point encoding query set `set`, or `None` if Φ(set) = +∞.
fn milp_point(inst: &CuInstance, model: &MilpModel, set: &[usize]) -> Option<Vec<f64>> {
    let n = inst.n();
    let gamma = inst.effective_gamma();
    let order = canonicalize(inst.c()).order().to_vec();
    let costs: Vec<f64> = order.iter().map(|&i| inst.c()[i]).collect();
    let inside = mask(set, n);
    let in_rank: Vec<bool> = order.iter().map(|&i| inside[i]).collect();
    let mut x = vec![0.0; model.num_vars()];
    let mut put = |name: String, v: f64| {
        let id = model.var_by_name(&name).expect("variable exists");
        x[id.0] = v;
    };
    for &i in set {
        put(format!("w_{}", i + 1), 1.0);
    }
    let mut eta = f64::NEG_INFINITY;
    for k in 0..=gamma {
        put(format!("z_{k}"), if set.len() >= k { 1.0 } else { 0.0 });
        // A: the first k queried items in rank order.
        let mut in_a = vec![false; n];
        let mut taken = 0;
        for r in 0..n {
            if in_rank[r] && taken < k {
                in_a[r] = true;
                taken += 1;
                put(format!("u_{}_{k}", order[r] + 1), 1.0);
            }
        }
        let first: Vec<bool> = (0..n).map(|r| in_a[r] || !in_rank[r]).collect();
        let pick0 = pick_ranks(&costs, &first, inst.p(), inst.b());
        let cap1 = (inst.b() + k) as i64 - gamma as i64;
        let pick1 = if cap1 < 0 { None } else { pick_ranks(&costs, &in_a, inst.p(), cap1 as usize) };
        let value = |p: &Option<Vec<usize>>| p.as_ref().map(|r| r.iter().map(|&k| costs[k]).sum::<f64>());
        let (br, picks, v) = match (value(&pick0), value(&pick1)) {
            (Some(a), Some(b)) if b < a => (1, pick1.unwrap(), b),
            (Some(a), _) => (0, pick0.unwrap(), a),
            (None, Some(b)) => (1, pick1.unwrap(), b),
            (None, None) => return None,
        };
        eta = eta.max(v);
        put(format!("e{br}_{k}"), 1.0);
        for r in picks {
            let tag = if in_a[r] {
                'f'
            } else if in_rank[r] {
                'g'
            } else {
                'h'
            };
            put(format!("{tag}{br}_{k}_{}", order[r] + 1), 1.0);
        }
    }
    put("eta".into(), eta);
    Some(x)
}

/// Branch on w first: fixing w determines everything else.
fn priorities(model: &MilpModel) -> Vec<i32> {
    model
        .variables()
        .iter()
        .map(|v| match v.name.as_bytes().first() {
            Some(b'w') => 2,
            Some(b'z') => 1,
            _ => 0,
        })
        .collect()
}

/// Problem knowledge for branch-and-bound. Φ never increases when items
/// are added to the query set, so Φ of every item still allowed into the
/// set bounds a node from below; when Φ of the items already forced in
/// meets that bound the node is settled. Relaxed query variables are also
/// rounded to candidate sets.
struct QueryHook<'a> {
    inst: &'a CuInstance,
    model: &'a MilpModel,
    family: &'a QueryFamily,
    /// Items with their query variable, cheapest first.
    w: Vec<(usize, VarId)>,
    phi: RefCell<HashMap<Vec<usize>, f64>>,
    points: RefCell<HashMap<Vec<usize>, Option<Vec<f64>>>>,
}

impl<'a> QueryHook<'a> {
    fn new(inst: &'a CuInstance, model: &'a MilpModel, family: &'a QueryFamily) -> Self {
        let w = canonicalize(inst.c())
            .order()
            .iter()
            .map(|&i| (i, model.var_by_name(&format!("w_{}", i + 1)).expect("w variable exists")))
            .collect();
        QueryHook { inst, model, family, w, phi: RefCell::new(HashMap::new()), points: RefCell::new(HashMap::new()) }
    }

    fn set_where(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut set: Vec<usize> = self.w.iter().filter(|&&(_, id)| keep(id.0)).map(|&(i, _)| i).collect();
        set.sort_unstable();
        set
    }

    fn phi(&self, set: &[usize]) -> f64 {
        *self
            .phi
            .borrow_mut()
            .entry(set.to_vec())
            .or_insert_with(|| phi_eval(self.inst, set).map_or(f64::INFINITY, |c| c.finite().unwrap_or(f64::INFINITY)))
    }

    fn point(&self, set: Vec<usize>) -> Option<Vec<f64>> {
        self.points
            .borrow_mut()
            .entry(set)
            .or_insert_with_key(|set| {
                if crate::family::family_contains(self.family, set) {
                    milp_point(self.inst, self.model, set)
                } else {
                    None
                }
            })
            .clone()
    }
}

impl NodeHook for QueryHook<'_> {
    fn inspect(&self, relaxation: &[f64], lower: &[f64], upper: &[f64]) -> NodeReport {
        let forced = self.set_where(|j| lower[j] > 0.5);
        let allowed = self.set_where(|j| upper[j] > 0.5);
        let bound = self.phi(&allowed);
        if bound == f64::INFINITY {
            return NodeReport { candidate: None, settled: true, bound: Some(bound), branch: None };
        }
        if self.phi(&forced) <= bound && crate::family::family_contains(self.family, &forced) {
            return NodeReport { candidate: self.point(forced), settled: true, bound: Some(bound), branch: None };
        }
        let free = || self.w.iter().map(|&(_, id)| id.0).filter(|&j| lower[j] < upper[j]);
        // Most fractional free query variable, else the cheapest free item.
        let branch = free()
            .min_by(|&a, &b| (relaxation[a] - 0.5).abs().total_cmp(&(relaxation[b] - 0.5).abs()))
            .filter(|&j| (relaxation[j] - 0.5).abs() < 0.5 - 1e-6)
            .or_else(|| free().next());
        let settled = branch.is_none();
        let candidate = self.point(self.set_where(|j| relaxation[j] > 0.5));
        NodeReport { candidate, settled, bound: Some(bound), branch }
    }
}

/// Where the MILP is solved.
#[derive(Debug, Clone)]
pub enum Backend {
    Builtin(BnbParams),
    /// Write the model to `path`; read the solution from `path` + `.sol`
    /// when that file exists.
    LpFile(PathBuf),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Builtin(BnbParams::default())
    }
}

fn sol_path(path: &std::path::Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sol");
    PathBuf::from(s)
}

/// Solves the full problem through the MILP and checks the answer against
/// the combinatorial evaluator.
pub fn solve_cu(inst: &CuInstance, family: &QueryFamily, backend: &Backend) -> Result<CuSolution> {
    let family = family.validated(inst.n())?;
    if inst.is_trivial() {
        if let QueryFamily::Explicit(_) = family {
            return Err(DdidError::UnsupportedFamily("explicit families have no compact description".into()));
        }
        let value = Cost::Finite(sum_smallest(inst.c(), inst.p()));
        return Ok(CuSolution { query_set: Vec::new(), value, status: CuStatus::Optimal, per_split: None });
    }
    let model = build_cu_milp(inst, &family)?;
    let (objective, values) = match backend {
        Backend::Builtin(params) => {
            let mut params = params.clone();
            if params.priority.is_empty() {
                params.priority = priorities(&model);
            }
            if params.initial.is_none() {
                params.initial = heuristic_set(inst, &family)?.and_then(|s| milp_point(inst, &model, &s));
            }
            let sol = bnb_solve_with(&model, &params, &QueryHook::new(inst, &model, &family));
            match sol.status {
                LpStatus::Optimal => (sol.objective, sol.values),
                LpStatus::Infeasible => return Ok(CuSolution::infeasible()),
                LpStatus::TimeLimit => return Err(DdidError::TimeLimit),
                other => return Err(DdidError::Backend(format!("branch-and-bound ended with {other:?}"))),
            }
        }
        Backend::LpFile(path) => {
            std::fs::write(path, write_lp(&model))
                .map_err(|e| DdidError::Backend(format!("writing {}: {e}", path.display())))?;
            let sp = sol_path(path);
            let text = match std::fs::read_to_string(&sp) {
                Ok(t) => t,
                Err(_) => {
                    return Err(DdidError::Backend(format!(
                        "model written to {}; no solution file at {}",
                        path.display(),
                        sp.display()
                    )))
                }
            };
            let map = read_solution(&text, &model).map_err(|e| DdidError::Backend(e.to_string()))?;
            let mut values = vec![0.0; model.num_vars()];
            for (name, v) in map {
                let id = model.var_by_name(&name).expect("read_solution checks names");
                values[id.0] = v;
            }
            (model.objective_value(&values), values)
        }
    };
    let mut query_set: Vec<usize> = (0..inst.n())
        .filter(|i| {
            let id = model.var_by_name(&format!("w_{}", i + 1)).expect("w variable exists");
            values[id.0] > 0.5
        })
        .collect();
    query_set.sort_unstable();
    let eval = phi_eval(inst, &query_set)?;
    match eval {
        Cost::Finite(v) if (v - objective).abs() <= CROSS_CHECK_TOL => Ok(CuSolution {
            per_split: Some(phi_splits(inst, &query_set)?),
            query_set,
            value: eval,
            status: CuStatus::Optimal,
        }),
        _ => Err(DdidError::Consistency { milp: objective, eval: eval.finite().unwrap_or(f64::INFINITY) }),
    }
}
