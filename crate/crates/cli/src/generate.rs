//! Random instances in the style of the benchmark: for every `n`, every `p`
//! rule and every Γ rule, `count` instances with b ~ U{1..n}, a, c ~
//! U{0..50} and C ~ U{1..Σa}.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::instance_file::{FamilySpec, InstanceFile, Meta, Variant};

pub const RNG_NAME: &str = "ChaCha20";
pub const COST_MAX: i64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FamilyKind {
    Selection,
    Knapsack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub ns: Vec<usize>,
    /// `p = n / d` for each divisor `d`. Ignored for OU.
    pub p_divs: Vec<usize>,
    pub gamma_divs: Vec<usize>,
    pub count: usize,
    pub variant: Variant,
    pub family: FamilyKind,
    /// `q = n / q_div` for selection families.
    pub q_div: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 0,
            ns: vec![20, 40, 60, 80, 100],
            p_divs: vec![10, 5],
            gamma_divs: vec![10, 5],
            count: 10,
            variant: Variant::Cu,
            family: FamilyKind::Knapsack,
            q_div: 5,
        }
    }
}

/// One (n, p, Γ) combination. `p` is `None` for OU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub n: usize,
    pub p: Option<usize>,
    pub gamma: usize,
}

impl Cell {
    fn id(&self, k: usize) -> String {
        match self.p {
            Some(p) => format!("n{}_p{p}_g{}_{k:02}", self.n, self.gamma),
            None => format!("n{}_g{}_{k:02}", self.n, self.gamma),
        }
    }
}

fn divide(n: usize, d: usize, what: &str) -> Result<usize> {
    if d == 0 {
        bail!("{what} divisor must be positive");
    }
    if !n.is_multiple_of(d) {
        bail!("n = {n} is not divisible by the {what} divisor {d}");
    }
    Ok(n / d)
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            bail!("count must be at least 1");
        }
        if self.ns.is_empty() || self.gamma_divs.is_empty() {
            bail!("at least one n and one gamma divisor are required");
        }
        if self.variant == Variant::Cu && self.p_divs.is_empty() {
            bail!("at least one p divisor is required");
        }
        self.cells().map(|_| ())
    }

    /// Cells in generation order: n, then p, then Γ.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for &n in &self.ns {
            if n == 0 {
                bail!("n must be positive");
            }
            if self.family == FamilyKind::Selection {
                divide(n, self.q_div, "q")?;
            }
            let ps: Vec<Option<usize>> = match self.variant {
                Variant::Ou => vec![None],
                Variant::Cu => self.p_divs.iter().map(|&d| divide(n, d, "p").map(Some)).collect::<Result<_>>()?,
            };
            for p in ps {
                for &d in &self.gamma_divs {
                    out.push(Cell { n, p, gamma: divide(n, d, "gamma")? });
                }
            }
        }
        Ok(out)
    }
}

fn ints(rng: &mut ChaCha20Rng, n: usize, lo: i64, hi: i64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi) as f64).collect()
}

fn instance(spec: &GenSpec, cell: Cell, k: usize, stream: u64) -> InstanceFile {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let n = cell.n;
    let mut file = InstanceFile {
        id: Some(cell.id(k)),
        variant: spec.variant,
        n,
        c_bar: None,
        c_hat: None,
        c: None,
        p: cell.p,
        b: None,
        gamma: cell.gamma,
        family: FamilySpec::Selection { q: n / spec.q_div.max(1) },
        meta: Some(Meta { rng: RNG_NAME.into(), seed: spec.seed, stream }),
    };
    match spec.variant {
        Variant::Cu => {
            file.b = Some(rng.gen_range(1..=n));
            let a = ints(&mut rng, n, 0, COST_MAX);
            file.c = Some(ints(&mut rng, n, 0, COST_MAX));
            if spec.family == FamilyKind::Knapsack {
                let total = a.iter().sum::<f64>() as i64;
                let capacity = rng.gen_range(1..=total.max(1)) as f64;
                file.family = FamilySpec::Knapsack { a, capacity };
            }
        }
        Variant::Ou => {
            let a = ints(&mut rng, n, 0, COST_MAX);
            file.c_bar = Some(ints(&mut rng, n, 0, COST_MAX));
            file.c_hat = Some(ints(&mut rng, n, 0, COST_MAX));
            if spec.family == FamilyKind::Knapsack {
                let total = a.iter().sum::<f64>() as i64;
                let capacity = rng.gen_range(1..=total.max(1)) as f64;
                file.family = FamilySpec::Knapsack { a, capacity };
            }
        }
    }
    file
}

/// All instances of the spec, in cell order. Instance `j` draws from stream
/// `j` of the seeded generator, so each one can be rebuilt on its own.
pub fn generate(spec: &GenSpec) -> Result<Vec<InstanceFile>> {
    spec.validate()?;
    let mut out = Vec::new();
    for cell in spec.cells()? {
        for k in 0..spec.count {
            let stream = out.len() as u64;
            out.push(instance(spec, cell, k, stream));
        }
    }
    Ok(out)
}

/// Writes `<id>.json` for each instance into `dir`.
pub fn write_all(files: &[InstanceFile], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut paths = Vec::with_capacity(files.len());
    for (j, f) in files.iter().enumerate() {
        let name = f.id.clone().unwrap_or_else(|| format!("instance_{j:04}"));
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, f.to_json()).with_context(|| format!("writing {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}
