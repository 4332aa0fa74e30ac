use std::collections::HashMap;

use crate::error::MilpError;

/// Index of a variable inside its [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Row activity at `values`.
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Free-form provenance carried along with a model.
///
/// `permutation[k]` is the original item index placed at position `k` when
/// the model was emitted over re-ordered items.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelMetadata {
    pub permutation: Option<Vec<usize>>,
    pub digest: Option<String>,
}

/// A minimization model over bounded continuous and integer variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, f64)>,
    pub metadata: ModelMetadata,
    index: HashMap<String, VarId>,
}

fn normalize(coeffs: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(coeffs.len());
    let mut pos: HashMap<VarId, usize> = HashMap::with_capacity(coeffs.len());
    for (v, a) in coeffs {
        match pos.get(&v) {
            Some(&k) => out[k].1 += a,
            None => {
                pos.insert(v, out.len());
                out.push((v, a));
            }
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable. Names must be unique; a repeated name panics since
    /// it is always a bug in the model builder.
    pub fn add_variable(&mut self, var: Variable) -> VarId {
        let id = VarId(self.variables.len());
        let previous = self.index.insert(var.name.clone(), id);
        assert!(previous.is_none(), "duplicate variable name {:?}", var.name);
        self.variables.push(var);
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_variable(Variable { name: name.into(), lower, upper, integer: false })
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_variable(Variable { name: name.into(), lower, upper, integer: true })
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_integer(name, 0.0, 1.0)
    }

    /// Adds `sum coeffs {sense} rhs`. Repeated variables are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs: normalize(coeffs), sense, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, coeffs: Vec<(VarId, f64)>) {
        self.objective = normalize(coeffs);
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn variable_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.variables[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.integer).count()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Dense objective vector indexed by variable.
    pub fn dense_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars()];
        for &(v, a) in &self.objective {
            c[v.0] += a;
        }
        c
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), MilpError> {
        for v in &self.variables {
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return Err(MilpError::InvertedBounds(v.name.clone()));
            }
            if v.integer && !(v.lower.is_finite() && v.upper.is_finite()) {
                return Err(MilpError::UnboundedInteger(v.name.clone()));
            }
        }
        let n = self.variables.len();
        for c in &self.constraints {
            if let Some(&(v, _)) = c.coeffs.iter().find(|(v, _)| v.0 >= n) {
                return Err(MilpError::UnknownVariable { constraint: c.name.clone(), var: v.0 });
            }
        }
        if let Some(&(v, _)) = self.objective.iter().find(|(v, _)| v.0 >= n) {
            return Err(MilpError::UnknownVariable { constraint: "objective".into(), var: v.0 });
        }
        Ok(())
    }

    /// Largest bound or row violation of `values`, scaled per row by `1 + |rhs|`.
    pub fn max_scaled_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values) / (1.0 + c.rhs.abs()));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_repeated_terms_and_drops_zeros() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0);
        let y = m.add_continuous("y", 0.0, 1.0);
        m.add_constraint("c", vec![(x, 1.0), (y, 2.0), (x, -1.0)], Sense::Le, 3.0);
        assert_eq!(m.constraints()[0].coeffs, vec![(y, 2.0)]);
    }

    #[test]
    fn validate_rejects_unbounded_integer() {
        let mut m = MilpModel::new();
        m.add_integer("k", 0.0, f64::INFINITY);
        assert_eq!(m.validate(), Err(MilpError::UnboundedInteger("k".into())));
    }

    #[test]
    fn validate_rejects_dangling_reference() {
        let mut m = MilpModel::new();
        m.add_continuous("x", 0.0, 1.0);
        m.add_constraint("bad", vec![(VarId(7), 1.0)], Sense::Eq, 0.0);
        assert!(matches!(m.validate(), Err(MilpError::UnknownVariable { var: 7, .. })));
    }
}
