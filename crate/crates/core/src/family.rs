use crate::error::{DdidError, Result};
use crate::instance::normalize_set;

/// The collection of index sets that may be queried together.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryFamily {
    /// Any set of at most `q` items.
    Selection { q: usize },
    /// Any set whose total weight stays within `capacity`.
    Knapsack { weights: Vec<f64>, capacity: f64 },
    /// Exactly the listed sets. The empty set is admissible only if listed.
    Explicit(Vec<Vec<usize>>),
}

impl QueryFamily {
    /// Checks the family against an item count and returns a copy with
    /// explicit members sorted.
    pub fn validated(&self, n: usize) -> Result<QueryFamily> {
        match self {
            QueryFamily::Selection { q } => {
                if *q > n {
                    return Err(DdidError::InvalidArgument(format!("q = {q} exceeds n = {n}")));
                }
                Ok(self.clone())
            }
            QueryFamily::Knapsack { weights, capacity } => {
                if weights.len() != n {
                    return Err(DdidError::InvalidArgument(format!(
                        "{} knapsack weights for {n} items",
                        weights.len()
                    )));
                }
                if weights.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(DdidError::InvalidArgument("knapsack weights must be finite and nonnegative".into()));
                }
                if !capacity.is_finite() || *capacity < 0.0 {
                    return Err(DdidError::InvalidArgument("knapsack capacity must be finite and nonnegative".into()));
                }
                Ok(self.clone())
            }
            QueryFamily::Explicit(sets) => {
                if sets.is_empty() {
                    return Err(DdidError::InvalidArgument("explicit family must list at least one set".into()));
                }
                let sets = sets.iter().map(|s| normalize_set(s, n)).collect::<Result<Vec<_>>>()?;
                Ok(QueryFamily::Explicit(sets))
            }
        }
    }

    /// Largest admissible query set size (Q).
    pub fn max_cardinality(&self) -> usize {
        match self {
            QueryFamily::Selection { q } => *q,
            QueryFamily::Knapsack { weights, capacity } => {
                let mut w = weights.clone();
                w.sort_by(f64::total_cmp);
                let mut used = 0.0;
                let mut count = 0;
                for a in w {
                    if used + a > *capacity {
                        break;
                    }
                    used += a;
                    count += 1;
                }
                count
            }
            QueryFamily::Explicit(sets) => sets.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    /// Membership test; `set` is assumed to contain distinct indices.
    pub fn contains(&self, set: &[usize]) -> bool {
        match self {
            QueryFamily::Selection { q } => set.len() <= *q,
            QueryFamily::Knapsack { weights, capacity } => set.iter().map(|&i| weights[i]).sum::<f64>() <= *capacity,
            QueryFamily::Explicit(sets) => {
                let mut s = set.to_vec();
                s.sort_unstable();
                sets.iter().any(|m| {
                    let mut m = m.clone();
                    m.sort_unstable();
                    m == s
                })
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QueryFamily::Selection { .. } => "selection",
            QueryFamily::Knapsack { .. } => "knapsack",
            QueryFamily::Explicit(_) => "explicit",
        }
    }
}

/// Free-function form of [`QueryFamily::max_cardinality`].
pub fn family_max_cardinality(family: &QueryFamily) -> usize {
    family.max_cardinality()
}

/// Free-function form of [`QueryFamily::contains`].
pub fn family_contains(family: &QueryFamily, set: &[usize]) -> bool {
    family.contains(set)
}
