//! Best-first branch-and-bound over the simplex relaxation. After each
//! branching the search plunges into the better child, so consecutive LP
//! solves differ in one bound and warm starts stay cheap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::model::MilpModel;
use crate::simplex::{LpSolution, LpStatus, SimplexParams, WarmLp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchingRule {
    /// Fractional part closest to 1/2; ties go to the lowest variable index.
    MostFractional,
    /// Lowest-index fractional variable.
    FirstFractional,
}

#[derive(Debug, Clone)]
pub struct BnbParams {
    pub integrality_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    pub branching: BranchingRule,
    /// Nodes whose bound is within this absolute gap of the incumbent are pruned.
    pub prune_tol: f64,
    /// Per-variable branching priority; fractional variables of the highest
    /// priority are branched on first. Empty means all equal.
    pub priority: Vec<i32>,
    /// Known integer-feasible point used as the starting incumbent. Ignored
    /// if it violates integrality, bounds or constraints.
    pub initial: Option<Vec<f64>>,
}

impl Default for BnbParams {
    fn default() -> Self {
        BnbParams {
            integrality_tol: 1e-6,
            node_limit: 1_000_000,
            time_limit: None,
            branching: BranchingRule::MostFractional,
            prune_tol: 1e-9,
            priority: Vec::new(),
            initial: None,
        }
    }
}

/// What a [`NodeHook`] learned about an open node.
#[derive(Debug, Clone, Default)]
pub struct NodeReport {
    /// Integer-feasible point offered as incumbent; ignored if it violates
    /// integrality, bounds or constraints.
    pub candidate: Option<Vec<f64>>,
    /// Nothing in the node's subtree beats the best point offered so far,
    /// so the node is closed without branching.
    pub settled: bool,
    /// Valid lower bound on every point in the node's subtree.
    pub bound: Option<f64>,
    /// Integer variable to branch on instead of the default choice. It may
    /// be integral in the relaxation as long as its bounds are not fixed.
    pub branch: Option<usize>,
}

/// Problem-specific inspection of nodes before they are branched on.
pub trait NodeHook {
    fn inspect(&self, relaxation: &[f64], lower: &[f64], upper: &[f64]) -> NodeReport;
}

struct NoHook;

impl NodeHook for NoHook {
    fn inspect(&self, _: &[f64], _: &[f64], _: &[f64]) -> NodeReport {
        NodeReport::default()
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    relaxation: LpSolution,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one with the
    // smallest bound, then the deepest, then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.seq.cmp(&self.seq))
    }
}

fn branching_variable(model: &MilpModel, values: &[f64], params: &BnbParams) -> Option<(usize, f64)> {
    let prio = |j: usize| params.priority.get(j).copied().unwrap_or(0);
    let mut best: Option<(usize, f64, i32, f64)> = None;
    for (j, var) in model.variables().iter().enumerate() {
        if !var.integer {
            continue;
        }
        let v = values[j];
        let frac = v - v.floor();
        if frac <= params.integrality_tol || frac >= 1.0 - params.integrality_tol {
            continue;
        }
        let score = match params.branching {
            BranchingRule::FirstFractional => 0.0,
            BranchingRule::MostFractional => (frac - 0.5).abs(),
        };
        let better = best.is_none_or(|(_, _, p, s)| prio(j) > p || (prio(j) == p && score < s));
        if better {
            best = Some((j, v, prio(j), score));
        }
    }
    best.map(|(j, v, _, _)| (j, v))
}

fn accept_point(model: &MilpModel, params: &BnbParams, x: Option<&Vec<f64>>) -> Option<(f64, Vec<f64>)> {
    let x = x?;
    if x.len() != model.num_vars() {
        return None;
    }
    let integral =
        model.variables().iter().zip(x).all(|(v, &xi)| !v.integer || (xi - xi.round()).abs() <= params.integrality_tol);
    if !integral || model.max_scaled_violation(x) > 1e-7 {
        return None;
    }
    Some((model.objective_value(x), x.clone()))
}

/// Solves `model` to proven optimality unless a limit is hit, in which case
/// the status reports the limit and the result carries the incumbent (if
/// any) and the best remaining bound.
pub fn bnb_solve(model: &MilpModel, params: &BnbParams) -> LpSolution {
    bnb_solve_with(model, params, &NoHook)
}

/// [`bnb_solve`] with a hook that may supply incumbents and close nodes.
pub fn bnb_solve_with(model: &MilpModel, params: &BnbParams, hook: &dyn NodeHook) -> LpSolution {
    let start = Instant::now();
    let deadline = params.time_limit.map(|d| start + d);
    let lp_params = SimplexParams { deadline, ..SimplexParams::default() };

    let lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    let mut iterations = 0usize;

    let mut lp = WarmLp::new(lp_params);
    let root = lp.solve(model, &lower, &upper);
    iterations += root.iterations;
    match root.status {
        LpStatus::Optimal => {}
        status => {
            let mut out = LpSolution::without_point(status, iterations);
            out.nodes = 1;
            return out;
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node { bound: root.objective, depth: 0, seq, lower, upper, relaxation: root });
    let mut nodes = 1usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = accept_point(model, params, params.initial.as_ref());
    let mut limit_status: Option<LpStatus> = None;
    let mut numerical_trouble = false;

    let mut plunge: Option<Node> = None;
    while let Some(node) = plunge.take().or_else(|| heap.pop()) {
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(obj, _)| *obj);
        if node.bound >= cutoff - params.prune_tol {
            continue;
        }
        let report = hook.inspect(&node.relaxation.values, &node.lower, &node.upper);
        if let Some((obj, x)) = accept_point(model, params, report.candidate.as_ref()) {
            if obj < cutoff {
                incumbent = Some((obj, x));
            }
        }
        if report.settled {
            continue;
        }
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(obj, _)| *obj);
        let node_bound = node.bound.max(report.bound.unwrap_or(f64::NEG_INFINITY));
        if node_bound >= cutoff - params.prune_tol {
            continue;
        }
        let suggested =
            report.branch.filter(|&j| model.variables()[j].integer && node.lower[j] < node.upper[j]).map(|j| {
                let v = node.relaxation.values[j];
                let frac = v - v.floor();
                // Split an integral value next to the bound it sits on.
                let split = if frac > params.integrality_tol && frac < 1.0 - params.integrality_tol {
                    v
                } else if v.round() > node.lower[j] {
                    v.round() - 0.5
                } else {
                    v.round() + 0.5
                };
                (j, split)
            });
        let Some((j, v)) = suggested.or_else(|| branching_variable(model, &node.relaxation.values, params)) else {
            let mut values = node.relaxation.values;
            for (x, var) in values.iter_mut().zip(model.variables()) {
                if var.integer {
                    *x = x.round();
                }
            }
            if node.relaxation.objective < cutoff {
                incumbent = Some((node.relaxation.objective, values));
            }
            continue;
        };
        if nodes >= params.node_limit {
            heap.push(node);
            limit_status = Some(LpStatus::NodeLimit);
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            limit_status = Some(LpStatus::TimeLimit);
            break;
        }

        let children = [
            (node.lower.clone(), {
                let mut u = node.upper.clone();
                u[j] = v.floor();
                u
            }),
            (
                {
                    let mut l = node.lower.clone();
                    l[j] = v.ceil();
                    l
                },
                node.upper.clone(),
            ),
        ];
        let mut timed_out = false;
        let mut open: Vec<Node> = Vec::with_capacity(2);
        for (lo, up) in children {
            nodes += 1;
            let relaxation = lp.solve(model, &lo, &up);
            iterations += relaxation.iterations;
            match relaxation.status {
                LpStatus::Optimal => {
                    seq += 1;
                    open.push(Node {
                        bound: relaxation.objective.max(node_bound),
                        depth: node.depth + 1,
                        seq,
                        lower: lo,
                        upper: up,
                        relaxation,
                    });
                }
                LpStatus::Infeasible => {}
                LpStatus::TimeLimit => timed_out = true,
                // A bounded root cannot have an unbounded child; anything
                // else means that subtree could not be evaluated.
                _ => numerical_trouble = true,
            }
        }
        open.sort_by(|a, b| a.bound.total_cmp(&b.bound));
        let mut open = open.into_iter();
        plunge = open.next();
        heap.extend(open);
        if timed_out {
            heap.extend(plunge.take());
            // The parent bound still covers the unevaluated child.
            seq += 1;
            heap.push(Node { seq, ..node });
            limit_status = Some(LpStatus::TimeLimit);
            break;
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let status = match (limit_status, &incumbent) {
        (Some(s), _) => s,
        (None, _) if numerical_trouble => LpStatus::NumericalFailure,
        (None, Some(_)) => LpStatus::Optimal,
        (None, None) => LpStatus::Infeasible,
    };
    match incumbent {
        Some((objective, values)) => LpSolution {
            status,
            objective,
            values,
            basis: Vec::new(),
            iterations,
            bound: if status == LpStatus::Optimal { objective } else { open_bound.min(objective) },
            nodes,
        },
        None => {
            let mut out = LpSolution::without_point(status, iterations);
            out.nodes = nodes;
            out.bound = open_bound;
            out
        }
    }
}
