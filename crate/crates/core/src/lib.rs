//! Branch-and-bound tree search with parameterised variable-selection rules.
//!
//! The crate covers a bounded-variable simplex ([`lp`]), binary MILP
//! instances ([`milp`]), scoring rules ([`scoring`]), the search engine
//! ([`bnb`]), exact sweeps over the mixing weight ([`erm`]), instance
//! generators ([`generators`]), generalisation bounds ([`bounds`]) and a
//! constraint-satisfaction counterpart ([`csp`]).

pub mod bnb;
pub mod bounds;
pub mod csp;
pub mod erm;
pub mod error;
pub mod generators;
pub mod lp;
pub mod milp;
pub mod scoring;

pub use bnb::{cost_tree_size, node_select, run, BnbConfig, ChildEval, FathomMode, NodeSelection, SearchNode, SearchTree};
pub use erm::{enumerate_behaviors, erm_minimize, grid_sweep, run_with_ledger, IntervalLedger, Piece, PiecewiseCost};
pub use error::{Error, Result};
pub use lp::{Constraint, LinearProgram, LpSolution, LpStatus, Sense};
pub use milp::{MilpInstance, PartialAssignment};
pub use scoring::{Rule, ScoreContext, ScoringSpec};
