//! Ranking constraint satisfaction over small-arity constraints, with exact
//! references and a polynomial-time approximation pipeline.
//!
//! A constraint system places one constraint on every k-subset of n
//! vertices (k between 2 and [`MAX_ARITY`]); the cost of a ranking is the
//! number of violated constraints. The crate provides:
//!
//! - exact-rational vertex orderings, position grids and rounding
//!   ([`order`]),
//! - the stock constraint families and cost/move-cost/fragility machinery
//!   ([`csp`]),
//! - Kendall tau and crossing diagnostics ([`distance`]),
//! - derivation of weighted feedback-arc-set instances around an ordering,
//!   weight cancellation, and exact/local/pivot solvers ([`fas`]),
//! - exact branch-and-bound and enumeration references ([`oracle`]),
//! - seeded planted/uniform instance generation and a canonical JSON format
//!   ([`instances`]),
//! - the staged approximation pipeline ([`pipeline`]).
//!
//! Costs are exact: every weight and position is a rational, and the only
//! floating-point computation anywhere is the sample-size formula.

pub mod combin;
pub mod csp;
pub mod distance;
pub mod error;
pub mod fas;
pub mod instances;
pub mod oracle;
pub mod order;
pub mod pipeline;

/// Largest supported constraint arity.
pub const MAX_ARITY: usize = 4;

pub use csp::{ConstraintSystem, CostStats, Family, FragilityMode};
pub use distance::{
    crossing_stats, kendall_tau, kendall_tau_mod_reversal, kendall_tau_rankings, CrossingStats,
};
pub use error::{Error, Result};
pub use fas::{derive_fas, FasInstance, LocalSearchOutcome};
pub use instances::{gen_planted, gen_uniform, InstanceFile, PlantedInstance, FORMAT_TAG};
pub use oracle::{enumerate_opt, exact_opt, OracleOutcome};
pub use order::{
    parse_ratio, pos_int, position_grid, round_ordering, Pos, Ranking, Vertex, VertexOrdering,
};
pub use pipeline::{
    add_approx, greedy_sigma1, guess_orderings, insert_ambiguous, run_ptas, sample_estimate,
    sample_plan, sample_size, solve_core, theta_threshold, unambiguous, AdditiveBackend,
    AdditiveOutcome, Big, Candidate, Caps, ConstantsMode, CoreOutcome, FastStrategy, GuessMode,
    PtasConfig, PtasResult, SamplePlan, StageRecord,
};
