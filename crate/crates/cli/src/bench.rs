//! Batch runs over generated instances, summarized per (n, p, Γ) cell.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::Result;
use serde::Serialize;

use crate::generate::Cell;
use crate::instance_file::InstanceFile;
use crate::solve::{check_compatible, cross_check, default_algo, solve, Algo, BackendArg, Status};

pub const CSV_HEADER: [&str; 7] = ["n", "p", "gamma", "avg_time_s", "n_solved", "n_timeout", "n_infeasible"];

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub algo: Option<Algo>,
    pub backend: BackendArg,
    pub time_limit: Duration,
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { algo: None, backend: BackendArg::Builtin, time_limit: Duration::from_secs(3600), jobs: 1 }
    }
}

/// One solved (or failed) instance.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub id: String,
    pub n: usize,
    pub p: Option<usize>,
    pub gamma: usize,
    pub b: Option<usize>,
    pub c_digest: String,
    pub value: Option<f64>,
    pub status: Status,
    pub time_s: f64,
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub cell: Cell,
    /// Mean over solved and timed-out instances, timeouts counted at the
    /// limit. `None` when the cell has neither.
    pub avg_time_s: Option<f64>,
    pub n_solved: usize,
    pub n_timeout: usize,
    pub n_infeasible: usize,
}

fn backend_for(opts: &BenchOptions, file: &InstanceFile, j: usize) -> BackendArg {
    match &opts.backend {
        BackendArg::Builtin => BackendArg::Builtin,
        // One model file per instance inside the given directory.
        BackendArg::LpFile(dir) => {
            let name = file.id.clone().unwrap_or_else(|| format!("instance_{j:04}"));
            BackendArg::LpFile(dir.join(format!("{name}.lp")))
        }
    }
}

fn run_one(file: &InstanceFile, j: usize, opts: &BenchOptions) -> RunRecord {
    let backend = backend_for(opts, file, j);
    let mut rec = RunRecord {
        id: file.id.clone().unwrap_or_else(|| format!("instance_{j:04}")),
        n: file.n,
        p: file.p,
        gamma: file.gamma,
        b: file.b,
        c_digest: file.cost_digest(),
        value: None,
        status: Status::Error,
        time_s: 0.0,
        backend: backend.tag(),
        message: None,
    };
    let loaded = match file.load() {
        Ok(l) => l,
        Err(e) => {
            rec.message = Some(format!("{e:#}"));
            return rec;
        }
    };
    let algo = opts.algo.unwrap_or_else(|| default_algo(&loaded));
    if let Err(e) = check_compatible(&loaded, algo) {
        rec.message = Some(e.to_string());
        return rec;
    }
    let out = solve(&loaded, algo, &backend, opts.time_limit);
    rec.value = out.value;
    rec.status = out.status;
    rec.time_s = out.time_s;
    rec.message = out.message.clone();
    if let Err(e) = cross_check(&loaded, &out) {
        rec.status = Status::Error;
        rec.message = Some(format!("cross-check failed: {e}"));
    }
    rec
}

/// Solves every instance, `opts.jobs` at a time. Records come back in input
/// order.
pub fn run_all(files: &[InstanceFile], opts: &BenchOptions) -> Vec<RunRecord> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; files.len()]);
    std::thread::scope(|s| {
        for _ in 0..opts.jobs.clamp(1, files.len().max(1)) {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= files.len() {
                    break;
                }
                let rec = run_one(&files[j], j, opts);
                slots.lock().expect("no worker panics while holding the lock")[j] = Some(rec);
            });
        }
    });
    slots.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every slot is filled")).collect()
}

/// Groups records by cell in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<CellRow> {
    let mut rows: Vec<(CellRow, f64)> = Vec::new();
    for r in records {
        let cell = Cell { n: r.n, p: r.p, gamma: r.gamma };
        let k = match rows.iter().position(|(row, _)| row.cell == cell) {
            Some(k) => k,
            None => {
                rows.push((CellRow { cell, avg_time_s: None, n_solved: 0, n_timeout: 0, n_infeasible: 0 }, 0.0));
                rows.len() - 1
            }
        };
        let (row, total) = &mut rows[k];
        match r.status {
            Status::Optimal => {
                row.n_solved += 1;
                *total += r.time_s;
            }
            Status::Timeout => {
                row.n_timeout += 1;
                *total += r.time_s;
            }
            Status::Infeasible => row.n_infeasible += 1,
            Status::Undetermined | Status::Error => {}
        }
    }
    rows.into_iter()
        .map(|(mut row, total)| {
            let timed = row.n_solved + row.n_timeout;
            row.avg_time_s = (timed > 0).then(|| total / timed as f64);
            row
        })
        .collect()
}

pub fn write_csv(rows: &[CellRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.cell.n.to_string(),
            r.cell.p.map(|p| p.to_string()).unwrap_or_default(),
            r.cell.gamma.to_string(),
            r.avg_time_s.map(|t| format!("{t:.6}")).unwrap_or_default(),
            r.n_solved.to_string(),
            r.n_timeout.to_string(),
            r.n_infeasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_records(records: &[RunRecord], mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
