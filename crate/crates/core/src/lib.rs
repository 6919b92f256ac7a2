//! Scenario reduction for two-stage robust optimization over discrete
//! scenario sets: instance generation, deterministic-equivalent MILPs,
//! regret evaluation, lookahead selection and baseline selectors.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod eval;
pub mod instance;
pub mod milp;
pub mod prise;
pub mod problem;
pub mod rng;
pub mod supervision;

pub use error::{Error, Result};
pub use instance::{Instance, ProblemClass};
pub use milp::{SolveSettings, Solver};
pub use prise::{prise_select, PriseConfig, PriseTrace};
pub use problem::{DecisionTable, TwoStageProblem};
