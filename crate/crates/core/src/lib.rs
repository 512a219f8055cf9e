//! Applicant selection under two-rank diversity reservations.
//!
//! A school with capacity `q_c` ranks its applicants by priority and reserves
//! seats for overlapping diversity types at two ranks (minimum and maximum
//! quotas). This crate provides
//!
//! * [`model`]: instances and their validation,
//! * [`engine`]: ranked reservation graphs and rank-maximal matchings with a
//!   cardinality cap and forced students,
//! * [`algorithms`]: the A-S, EHYY, SY1, SY2, POG and POS selection rules,
//! * [`oracle`]: brute-force references for small instances,
//! * [`datagen`]: seeded SAT-like applicant pools,
//! * [`metrics`]: P1/P2/P3 and suite-relative performance ratios,
//! * [`experiment`]: sweeps, result files and plot tables,
//! * [`io`]: instance and outcome file formats.

pub mod algorithms;
pub mod datagen;
pub mod engine;
pub mod experiment;
mod flow;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;

pub use algorithms::{Algorithm, Outcome};
pub use engine::{
    build_graph, is_compatible, rank_maximal_matching, Matching, RankSignature, ReservationGraph,
    Seat,
};
pub use model::{Instance, QuotaTable, Rank, StudentId, TypeId};
