//! Randomized equivalence suites: every solver against its enumeration
//! oracle, plus the structural lemmas. Failures are shrunk to a minimal
//! counterexample.

mod cu;
mod lp;
mod ou;

use std::fmt::{Debug, Write as _};

use anyhow::{bail, Result};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};
use sha2::{Digest, Sha256};

/// Deliberate bugs for checking that the suites catch them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Injection {
    /// Evaluate the OU closed form with the budget one too small.
    PsiOffByOne,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub max_n: usize,
    pub trials: u32,
    pub seed: u64,
    pub inject: Option<Injection>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { max_n: 8, trials: 200, seed: 0, inject: None }
    }
}

pub const MAX_N_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub module: &'static str,
    pub name: &'static str,
    pub cases: u32,
    /// Failure reason and the shrunk input.
    pub failure: Option<(String, String)>,
}

pub(crate) struct Ctx {
    opts: VerifyOptions,
}

impl Ctx {
    pub(crate) fn max_n(&self) -> usize {
        self.opts.max_n
    }

    pub(crate) fn inject(&self) -> Option<Injection> {
        self.opts.inject
    }

    fn runner(&self, module: &str, name: &str) -> TestRunner {
        let mut h = Sha256::new();
        h.update(self.opts.seed.to_le_bytes());
        h.update(module.as_bytes());
        h.update(b"/");
        h.update(name.as_bytes());
        let seed: [u8; 32] = h.finalize().into();
        let config = Config {
            cases: self.opts.trials,
            failure_persistence: None,
            max_shrink_iters: 2048,
            max_global_rejects: 50 * self.opts.trials.max(20),
            ..Config::default()
        };
        TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &seed))
    }

    pub(crate) fn check<S>(
        &self,
        module: &'static str,
        name: &'static str,
        strategy: S,
        test: impl Fn(S::Value) -> Result<(), TestCaseError>,
    ) -> SuiteResult
    where
        S: Strategy,
        S::Value: Debug,
    {
        let mut runner = self.runner(module, name);
        let failure = match runner.run(&strategy, test) {
            Ok(()) => None,
            Err(TestError::Fail(reason, value)) => Some((reason.to_string(), format!("{value:?}"))),
            Err(TestError::Abort(reason)) => Some((format!("aborted: {reason}"), String::new())),
        };
        SuiteResult { module, name, cases: self.opts.trials, failure }
    }
}

pub fn run_verify(opts: &VerifyOptions) -> Result<Vec<SuiteResult>> {
    if opts.max_n < 3 || opts.max_n > MAX_N_CAP {
        bail!("--max-n must lie in 3..={MAX_N_CAP}");
    }
    if opts.trials == 0 {
        bail!("--trials must be positive");
    }
    let ctx = Ctx { opts: opts.clone() };
    let mut out = ou::suites(&ctx);
    out.extend(cu::suites(&ctx));
    out.extend(lp::suites(&ctx));
    Ok(out)
}

pub fn render(opts: &VerifyOptions, results: &[SuiteResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "verify: max_n={} trials={} seed={}", opts.max_n, opts.trials, opts.seed);
    for r in results {
        match &r.failure {
            None => {
                let _ = writeln!(s, "PASS {}/{} ({} cases)", r.module, r.name, r.cases);
            }
            Some((reason, example)) => {
                let _ = writeln!(s, "FAIL {}/{}: {reason}", r.module, r.name);
                if !example.is_empty() {
                    let _ = writeln!(s, "  minimal counterexample:");
                    for line in example.lines() {
                        let _ = writeln!(s, "    {line}");
                    }
                }
            }
        }
    }
    let failed = results.iter().filter(|r| r.failure.is_some()).count();
    let _ = writeln!(s, "{} suites, {failed} failed", results.len());
    s
}
