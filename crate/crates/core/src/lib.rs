//! Finite-scale stability analysis for two-variable formula tables.
//!
//! A [`FormulaTable`] records the values `φ(a, b) ∈ [0, 1]` of a formula on
//! finitely many parameters. The crate detects the order property through
//! margin ladders and iterated double limits, enumerates the realized types
//! of a table, and builds defining predicates for types either as convex
//! combinations of rows or as Boolean majority rules.
//!
//! Truth values use the conventional encoding `true = 1`, `false = 0`.

pub mod cli;
pub mod define;
pub mod error;
pub mod kernel;
pub mod lp;
pub mod order;
pub mod report;
pub mod table;
pub mod types;

pub use define::{
    definability_report, greedy_define, lp_define, majority_define, uniform_majority_bound,
    verify_definition, ConvexDefinition, Definition, MajorityDefinition, TargetSpec,
};
pub use error::{Error, Result};
pub use kernel::{parse as parse_kernel, KernelExpr, PointSet};
pub use order::{
    double_limit, find_ladder, ladder_index, ladder_lower_bound, ladder_to_gap, verify_ladder,
    Direction, DoubleLimitReport, Ladder,
};
pub use table::{FormulaTable, GroupFunction};
pub use types::{
    density_character, extract_convergent_subsequence, realized_types, sup_dist, TypePoint,
};
