//! Running one solver on one loaded instance.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use ddid_core::milp::BnbParams;
use ddid_core::oracle::{cu_bruteforce, ou_bruteforce, OracleLimits};
use ddid_core::{
    family_contains, phi_eval, psi_closed_form, solve_cu, solve_knapsack, solve_ou, solve_selection_cu, Backend, Cost,
    CuStatus, DdidError, QueryFamily,
};
use serde::Serialize;

use crate::instance_file::{Loaded, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    /// OU closed forms (selection and explicit families).
    Closed,
    /// OU knapsack heap algorithm.
    Alg1,
    /// CU selection-family theorem.
    Theorem,
    /// CU mixed-integer reformulation.
    Milp,
    /// Exhaustive enumeration (small n only).
    Bruteforce,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Closed => "closed",
            Algo::Alg1 => "alg1",
            Algo::Theorem => "theorem",
            Algo::Milp => "milp",
            Algo::Bruteforce => "bruteforce",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendArg {
    Builtin,
    LpFile(PathBuf),
}

impl std::str::FromStr for BackendArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "builtin" {
            return Ok(BackendArg::Builtin);
        }
        match s.strip_prefix("lpfile:") {
            Some(p) if !p.is_empty() => Ok(BackendArg::LpFile(PathBuf::from(p))),
            _ => Err(format!("unknown backend `{s}`; expected `builtin` or `lpfile:<path>`")),
        }
    }
}

impl BackendArg {
    pub fn tag(&self) -> String {
        match self {
            BackendArg::Builtin => "builtin".into(),
            BackendArg::LpFile(p) => format!("lpfile:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Undetermined,
    Timeout,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Optimal => 0,
            Status::Infeasible => 2,
            Status::Undetermined | Status::Timeout => 3,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub value: Option<f64>,
    /// 0-based, ascending.
    pub query_set: Vec<usize>,
    pub status: Status,
    pub time_s: f64,
    pub message: Option<String>,
}

/// What `solve` prints.
#[derive(Debug, Clone, Serialize)]
pub struct ResultJson {
    pub value: Option<f64>,
    /// 1-based.
    pub query_set: Vec<usize>,
    pub status: Status,
    pub time_s: f64,
}

impl From<&Outcome> for ResultJson {
    fn from(o: &Outcome) -> Self {
        ResultJson {
            value: o.value,
            query_set: o.query_set.iter().map(|i| i + 1).collect(),
            status: o.status,
            time_s: o.time_s,
        }
    }
}

/// The usual method for a variant and family.
pub fn default_algo(loaded: &Loaded) -> Algo {
    match (&loaded.problem, &loaded.family) {
        (Problem::Ou(_), QueryFamily::Knapsack { .. }) => Algo::Alg1,
        (Problem::Ou(_), _) => Algo::Closed,
        (Problem::Cu(_), QueryFamily::Selection { .. }) => Algo::Theorem,
        (Problem::Cu(_), QueryFamily::Knapsack { .. }) => Algo::Milp,
        (Problem::Cu(_), QueryFamily::Explicit(_)) => Algo::Bruteforce,
    }
}

/// Rejects algorithm choices that do not apply to the instance.
pub fn check_compatible(loaded: &Loaded, algo: Algo) -> Result<()> {
    let ok = matches!(
        (&loaded.problem, &loaded.family, algo),
        (_, _, Algo::Bruteforce)
            | (Problem::Ou(_), QueryFamily::Knapsack { .. }, Algo::Alg1)
            | (Problem::Ou(_), QueryFamily::Selection { .. } | QueryFamily::Explicit(_), Algo::Closed)
            | (Problem::Cu(_), QueryFamily::Selection { .. }, Algo::Theorem)
            | (Problem::Cu(_), QueryFamily::Selection { .. } | QueryFamily::Knapsack { .. }, Algo::Milp)
    );
    if !ok {
        let variant = if matches!(loaded.problem, Problem::Ou(_)) { "OU" } else { "CU" };
        bail!("--algo {} does not apply to {variant} instances with a {} family", algo.name(), loaded.family.kind());
    }
    Ok(())
}

fn outcome(value: Cost, query_set: Vec<usize>, status: Status) -> Outcome {
    Outcome { value: value.finite(), query_set, status, time_s: 0.0, message: None }
}

fn failed(status: Status, message: String) -> Outcome {
    Outcome { value: None, query_set: Vec::new(), status, time_s: 0.0, message: Some(message) }
}

fn run(
    loaded: &Loaded,
    algo: Algo,
    backend: &BackendArg,
    time_limit: Duration,
) -> std::result::Result<Outcome, DdidError> {
    let limits = OracleLimits::default();
    let fam = &loaded.family;
    Ok(match (&loaded.problem, algo) {
        (Problem::Ou(inst), Algo::Bruteforce) => {
            let (set, v) = ou_bruteforce(inst, fam, &limits)?;
            outcome(Cost::Finite(v), set, Status::Optimal)
        }
        (Problem::Ou(inst), Algo::Alg1) => {
            let QueryFamily::Knapsack { weights, capacity } = fam else { unreachable!("checked by check_compatible") };
            let s = solve_knapsack(inst, weights, *capacity)?;
            outcome(Cost::Finite(s.value), s.query_set, Status::Optimal)
        }
        (Problem::Ou(inst), _) => {
            let s = solve_ou(inst, fam)?;
            outcome(Cost::Finite(s.value), s.query_set, Status::Optimal)
        }
        (Problem::Cu(inst), Algo::Bruteforce) => match cu_bruteforce(inst, fam, &limits)? {
            Some((set, v)) => outcome(Cost::Finite(v), set, Status::Optimal),
            None => outcome(Cost::Infinite, Vec::new(), Status::Infeasible),
        },
        (Problem::Cu(inst), Algo::Theorem) => {
            let QueryFamily::Selection { q } = fam else { unreachable!("checked by check_compatible") };
            cu_outcome(solve_selection_cu(inst, *q)?)
        }
        (Problem::Cu(inst), _) => {
            let backend = match backend {
                BackendArg::Builtin => {
                    Backend::Builtin(BnbParams { time_limit: Some(time_limit), ..BnbParams::default() })
                }
                BackendArg::LpFile(p) => Backend::LpFile(p.clone()),
            };
            cu_outcome(solve_cu(inst, fam, &backend)?)
        }
    })
}

fn cu_outcome(s: ddid_core::CuSolution) -> Outcome {
    let status = match s.status {
        CuStatus::Optimal => Status::Optimal,
        CuStatus::Infeasible => Status::Infeasible,
        CuStatus::Undetermined => Status::Undetermined,
    };
    outcome(s.value, s.query_set, status)
}

/// Solves and times one instance. Never panics on solver errors; they come
/// back as `Status::Error` with a message.
pub fn solve(loaded: &Loaded, algo: Algo, backend: &BackendArg, time_limit: Duration) -> Outcome {
    let start = Instant::now();
    let mut out = match run(loaded, algo, backend, time_limit) {
        Ok(o) => o,
        Err(DdidError::TimeLimit) => failed(Status::Timeout, "time limit reached".into()),
        Err(e) => failed(Status::Error, e.to_string()),
    };
    out.time_s = start.elapsed().as_secs_f64();
    if out.status == Status::Timeout || out.time_s > time_limit.as_secs_f64() {
        out.status = Status::Timeout;
        out.value = None;
        out.query_set.clear();
        out.time_s = time_limit.as_secs_f64();
    }
    out
}

/// Re-evaluates an optimal answer with the combinatorial evaluator and
/// checks that the query set is admissible.
pub fn cross_check(loaded: &Loaded, out: &Outcome) -> Result<()> {
    if out.status != Status::Optimal {
        return Ok(());
    }
    let Some(value) = out.value else { bail!("optimal result without a value") };
    if !family_contains(&loaded.family, &out.query_set) {
        bail!("query set {:?} is not in the family", out.query_set);
    }
    let eval = match &loaded.problem {
        Problem::Ou(inst) => Cost::Finite(psi_closed_form(inst, &out.query_set)?),
        Problem::Cu(inst) => phi_eval(inst, &out.query_set)?,
    };
    match eval {
        Cost::Finite(v) if (v - value).abs() <= 1e-6 => Ok(()),
        _ => bail!("reported value {value} but the query set evaluates to {eval:?}"),
    }
}
