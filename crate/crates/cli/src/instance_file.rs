//! The JSON instance format.
//!
//! ```json
//! {
//!   "id": "n20_p2_g2_00",
//!   "variant": "CU",
//!   "n": 3,
//!   "c": [4.0, 1.0, 7.0],
//!   "p": 2,
//!   "b": 1,
//!   "gamma": 2,
//!   "family": { "kind": "knapsack", "a": [3.0, 0.0, 5.0], "C": 4.0 },
//!   "meta": { "rng": "ChaCha20", "seed": 7, "stream": 0 }
//! }
//! ```
//!
//! OU instances carry `c_bar` and `c_hat` instead of `c`, `p` and `b`.
//! Families are `{"kind": "selection", "q": 2}`,
//! `{"kind": "knapsack", "a": [...], "C": 4}` or
//! `{"kind": "explicit", "sets": [[1, 2], [3]]}`. Item indices in files are
//! 1-based.

use anyhow::{anyhow, bail, Context, Result};
use ddid_core::{CuInstance, OuInstance, QueryFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Variant {
    #[serde(rename = "OU")]
    #[value(name = "ou")]
    Ou,
    #[serde(rename = "CU")]
    #[value(name = "cu")]
    Cu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Selection {
        q: usize,
    },
    Knapsack {
        a: Vec<f64>,
        #[serde(rename = "C")]
        capacity: f64,
    },
    Explicit {
        sets: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub rng: String,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub variant: Variant,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bar: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    pub gamma: usize,
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Ou(OuInstance),
    Cu(CuInstance),
}

/// A parsed and validated instance, 0-based.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub problem: Problem,
    pub family: QueryFamily,
}

impl Loaded {
    pub fn n(&self) -> usize {
        match &self.problem {
            Problem::Ou(i) => i.n(),
            Problem::Cu(i) => i.n(),
        }
    }
}

fn exact_len(name: &str, v: &Option<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    let v = v.as_ref().ok_or_else(|| anyhow!("missing field `{name}`"))?;
    if v.len() != n {
        bail!("`{name}` has {} entries, expected n = {n}", v.len());
    }
    Ok(v.clone())
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("malformed instance JSON")
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance files always serialize");
        s.push('\n');
        s
    }

    pub fn load(&self) -> Result<Loaded> {
        let n = self.n;
        let family = match &self.family {
            FamilySpec::Selection { q } => QueryFamily::Selection { q: *q },
            FamilySpec::Knapsack { a, capacity } => {
                if a.len() != n {
                    bail!("knapsack weights `a` have {} entries, expected n = {n}", a.len());
                }
                QueryFamily::Knapsack { weights: a.clone(), capacity: *capacity }
            }
            FamilySpec::Explicit { sets } => {
                let mut out = Vec::with_capacity(sets.len());
                for s in sets {
                    let mut zero = Vec::with_capacity(s.len());
                    for &i in s {
                        if i == 0 || i > n {
                            bail!("explicit set member {i} outside 1..={n}");
                        }
                        zero.push(i - 1);
                    }
                    out.push(zero);
                }
                QueryFamily::Explicit(out)
            }
        };
        let family = family.validated(n)?;
        let problem = match self.variant {
            Variant::Ou => {
                if self.c.is_some() || self.p.is_some() || self.b.is_some() {
                    bail!("OU instances take `c_bar` and `c_hat`, not `c`, `p` or `b`");
                }
                let c_bar = exact_len("c_bar", &self.c_bar, n)?;
                let c_hat = exact_len("c_hat", &self.c_hat, n)?;
                Problem::Ou(OuInstance::new(c_bar, c_hat, self.gamma)?)
            }
            Variant::Cu => {
                if self.c_bar.is_some() || self.c_hat.is_some() {
                    bail!("CU instances take `c`, not `c_bar` or `c_hat`");
                }
                let c = exact_len("c", &self.c, n)?;
                let p = self.p.ok_or_else(|| anyhow!("missing field `p`"))?;
                let b = self.b.ok_or_else(|| anyhow!("missing field `b`"))?;
                Problem::Cu(CuInstance::new(c, p, b, self.gamma)?)
            }
        };
        Ok(Loaded { problem, family })
    }

    /// Short hex digest of the cost data, used to tell instances apart in
    /// run records.
    pub fn cost_digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [&self.c, &self.c_bar, &self.c_hat].into_iter().flatten() {
            for x in v {
                h.update(x.to_le_bytes());
            }
            h.update(b";");
        }
        hex::encode(&h.finalize()[..8])
    }
}
