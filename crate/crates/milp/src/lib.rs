//! Self-contained linear optimization infrastructure.
//!
//! The crate provides a small solver-agnostic model representation
//! ([`MilpModel`]), a dense bounded-variable primal simplex for the LP
//! relaxation ([`simplex_solve`]), a best-first branch-and-bound for models
//! with integer variables ([`bnb_solve`]) and import/export in the textual
//! LP-file format so models can be handed to external solvers.
//!
//! ```
//! use ddid_milp::{MilpModel, Sense, simplex_solve, LpStatus};
//!
//! let mut model = MilpModel::new();
//! let x = model.add_continuous("x", 0.0, 10.0);
//! model.add_constraint("lb", vec![(x, 1.0)], Sense::Ge, 3.0);
//! model.set_objective(vec![(x, 1.0)]);
//! let sol = simplex_solve(&model);
//! assert_eq!(sol.status, LpStatus::Optimal);
//! assert!((sol.objective - 3.0).abs() < 1e-9);
//! ```

mod bnb;
mod error;
mod lpfile;
mod model;
mod revised;
mod simplex;

pub use bnb::{bnb_solve, bnb_solve_with, BnbParams, BranchingRule, NodeHook, NodeReport};
pub use error::MilpError;
pub use lpfile::{read_lp, read_solution, write_lp};
pub use model::{Constraint, MilpModel, ModelMetadata, Sense, VarId, Variable};
pub use simplex::{simplex_solve, simplex_solve_with_bounds, BasisStatus, LpSolution, LpStatus, SimplexParams};
