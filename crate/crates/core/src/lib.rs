//! Robust selection with decision-dependent information discovery.
//!
//! Two uncertainty models are supported. Under objective uncertainty
//! ([`OuInstance`]) costs lie in a budgeted interval set and querying an item
//! reveals its true cost before the decision. Under constraint uncertainty
//! ([`CuInstance`]) the adversary may block items, and querying reveals
//! whether an item is blocked.
//!
//! ```
//! use ddid_core::{OuInstance, solve_selection};
//!
//! let inst = OuInstance::new(vec![1.0, 2.0, 3.0, 4.0], vec![10.0, 1.0, 1.0, 1.0], 1).unwrap();
//! let sol = solve_selection(&inst, 1).unwrap();
//! assert_eq!(sol.query_set, vec![0]);
//! assert_eq!(sol.value, 2.0);
//! ```

mod cost;
pub mod cu;
mod error;
mod family;
mod instance;
pub mod oracle;
pub mod ou;
mod select;

pub use cost::Cost;
pub use cu::{
    build_cu_milp, build_phi_lp, check_feasibility, phi_eval, phi_split, phi_splits, restricted_selection, solve_cu,
    solve_selection_cu, solve_selection_cu_with, Backend, CuSolution, CuStatus, Feasibility,
    RestrictedSelectionProblem,
};
pub use error::{DdidError, Result};
pub use family::{family_contains, family_max_cardinality, QueryFamily};
pub use instance::{canonicalize, normalize_set, CuInstance, OuInstance, Permutation, SplitBudget};
pub use oracle::OracleLimits;
pub use ou::{
    psi_closed_form, psi_split, solve_explicit, solve_knapsack, solve_ou, solve_selection, OuSolution, Regime,
};
pub use select::{kth_smallest, rank_window, smallest_k, sum_smallest};

pub use ddid_milp as milp;
