//! Envy-free allocation of indivisible items with money.
//!
//! A divider who may pay bounded monetary subsidies can always eliminate envy
//! between agents. This crate implements the full pipeline in exact
//! arithmetic:
//!
//! * [`model`] — instances, valuations (additive or full value tables),
//!   allocations, subsidy vectors, and item/instance classification;
//! * [`fairness`] — EF1/EFk checkers and envy-freeness with payments;
//! * [`ef1`] — EF1 allocation construction (envy cycles, double round robin,
//!   exhaustive search);
//! * [`subsidy`] — envy-freeable rearrangement via maximum-weight matching,
//!   minimum subsidy vectors from envy-graph longest paths, and rank-bound
//!   certificates;
//! * [`monotone`] — the modification procedure for monotone valuations with
//!   three or more agents that lowers the worst-case subsidy below the
//!   general bound;
//! * [`oracle`] — brute-force ground truth for everything above, at small
//!   scale.
//!
//! The solvers are generic over [`Scalar`] and are normally instantiated at
//! [`Rat`], an arbitrary-precision rational. No floating point is used
//! anywhere: every comparison and bound is decided exactly.

pub mod ef1;
mod error;
pub mod fairness;
pub mod matching;
pub mod model;
pub mod monotone;
pub mod oracle;
pub mod scalar;
pub mod subsidy;

pub use error::{Error, Result};
pub use scalar::{frac, int, Scalar};

pub use ef1::{double_round_robin, envy_cycles, exhaustive_ef1, find_ef1, Ef1Method};
pub use fairness::{
    ef1_witness, envy_violations, is_ef1, is_efk, is_envy_free_with_subsidy,
    max_envy_violation, SubsidyViolation,
};
pub use matching::Permutation;
pub use model::{
    Allocation, Instance, InstanceClass, ItemClass, SubsidyVector, Valuation, MAX_TABLE_ITEMS,
};
pub use monotone::{
    build_a_double_prime, improved_solve, improved_solve_from, relabel_along_longest_path,
    select_estar, welfare_max_ef1_rearrange, Branch, ImprovementTrace, Relabeled,
};
pub use oracle::{
    brute_is_ef1_exists, brute_max_weight_perm, brute_min_subsidy, brute_min_total_subsidy,
    OracleBudget,
};
pub use subsidy::{
    beta_bounds, diagnostic_view, efk_bound_check, envy_graph, is_envy_freeable,
    max_weight_permutation, min_subsidy, solve_given_allocation, weight_matrix, BetaBounds,
    DiagnosticView, EnvyGraph, SubsidizedAllocation, WeightMatrix,
};

/// Default exact scalar: arbitrary-precision rational.
pub type Rat = num_rational::BigRational;

/// Arbitrary-precision integer backing [`Rat`].
pub type Int = num_bigint::BigInt;

/// Machine-word rational, usable for small hand-built inputs.
pub type Rat64 = num_rational::Rational64;
