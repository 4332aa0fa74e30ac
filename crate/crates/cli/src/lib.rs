//! Command-line front end: instance generation, single solves, batch
//! benchmarks and the randomized verification suites.

pub mod bench;
pub mod generate;
pub mod instance_file;
pub mod solve;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::bench::BenchOptions;
use crate::generate::{FamilyKind, GenSpec};
use crate::instance_file::{InstanceFile, Variant};
use crate::solve::{Algo, BackendArg, ResultJson};
use crate::verify::{Injection, VerifyOptions};

/// Exit code for bad invocations.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "ddid", version, about = "Robust selection with decision-dependent information discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write random benchmark instances as JSON files.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance file and print the result as JSON.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve a batch of instances and print per-cell timings as CSV.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        /// Read instances from this directory instead of generating them.
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[command(flatten)]
        run: RunArgs,
        /// Parallel workers.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write one JSON run record per line to this file.
        #[arg(long)]
        records: Option<PathBuf>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized solver-versus-oracle suites.
    Verify {
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        #[arg(long, default_value_t = 200)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        inject: Option<Injection>,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Item counts.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [20, 40, 60, 80, 100])]
    ns: Vec<usize>,
    /// p = n / d for each listed d.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 5])]
    p_div: Vec<usize>,
    /// Γ = n / d for each listed d.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 5])]
    gamma_div: Vec<usize>,
    /// Instances per (n, p, Γ) cell.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_enum, default_value = "cu")]
    variant: Variant,
    #[arg(long, value_enum, default_value = "knapsack")]
    family: FamilyKind,
    /// q = n / d for selection families.
    #[arg(long, default_value_t = 5)]
    q_div: usize,
}

impl GenArgs {
    fn spec(&self) -> GenSpec {
        GenSpec {
            seed: self.seed,
            ns: self.ns.clone(),
            p_divs: self.p_div.clone(),
            gamma_divs: self.gamma_div.clone(),
            count: self.count,
            variant: self.variant,
            family: self.family,
            q_div: self.q_div,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `builtin` or `lpfile:<path>`.
    #[arg(long, default_value = "builtin")]
    backend: BackendArg,
    /// Seconds per instance.
    #[arg(long, env = "DDID_TIME_LIMIT", default_value_t = 3600.0)]
    time_limit: f64,
}

impl RunArgs {
    fn limit(&self) -> Result<Duration> {
        Duration::try_from_secs_f64(self.time_limit).context("--time-limit must be a nonnegative number of seconds")
    }
}

/// A failure that should exit with [`EXIT_USAGE`].
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn instance_dir(dir: &Path) -> Result<Vec<InstanceFile>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .json files in {}", dir.display());
    }
    paths.iter().map(|p| InstanceFile::read(p)).collect()
}

fn cmd_solve(file: &Path, algo: Option<Algo>, run: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let limit = run.limit().map_err(|e| Usage(e.to_string()))?;
    let loaded = InstanceFile::read(file)?.load()?;
    let algo = algo.unwrap_or_else(|| solve::default_algo(&loaded));
    solve::check_compatible(&loaded, algo).map_err(|e| Usage(e.to_string()))?;
    let o = solve::solve(&loaded, algo, &run.backend, limit);
    if let Some(m) = &o.message {
        eprintln!("ddid: {m}");
    }
    serde_json::to_writer(&mut *out, &ResultJson::from(&o))?;
    writeln!(out)?;
    Ok(o.status.exit_code())
}

/// Runs the CLI on `args` (including the program name), writing normal
/// output to `out`. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ddid: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                1
            }
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Generate { gen, out: dir } => {
            let spec = gen.spec();
            spec.validate().map_err(|e| Usage(e.to_string()))?;
            let files = generate::generate(&spec)?;
            for p in generate::write_all(&files, &dir)? {
                writeln!(out, "{}", p.display())?;
            }
            Ok(0)
        }
        Command::Solve { file, algo, run } => cmd_solve(&file, algo, &run, out),
        Command::Bench { gen, instances, algo, run, jobs, records, out: csv_out } => {
            let limit = run.limit().map_err(|e| Usage(e.to_string()))?;
            let files = match instances {
                Some(dir) => instance_dir(&dir)?,
                None => {
                    let spec = gen.spec();
                    spec.validate().map_err(|e| Usage(e.to_string()))?;
                    generate::generate(&spec)?
                }
            };
            if let BackendArg::LpFile(dir) = &run.backend {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let opts = BenchOptions { algo, backend: run.backend.clone(), time_limit: limit, jobs };
            let recs = bench::run_all(&files, &opts);
            for r in recs.iter().filter(|r| r.status == solve::Status::Error) {
                eprintln!("ddid: {}: {}", r.id, r.message.as_deref().unwrap_or("error"));
            }
            if let Some(path) = records {
                let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                bench::write_records(&recs, std::io::BufWriter::new(f))?;
            }
            let rows = bench::summarize(&recs);
            match csv_out {
                Some(path) => {
                    let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    bench::write_csv(&rows, f)?;
                }
                None => bench::write_csv(&rows, &mut *out)?,
            }
            Ok(0)
        }
        Command::Verify { max_n, trials, seed, inject } => {
            let opts = VerifyOptions { max_n, trials, seed, inject };
            let results = verify::run_verify(&opts).map_err(|e| Usage(e.to_string()))?;
            write!(out, "{}", verify::render(&opts, &results))?;
            Ok(if results.iter().any(|r| r.failure.is_some()) { 1 } else { 0 })
        }
    }
}
