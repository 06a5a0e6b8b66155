//! Additive representation functions `R_A(n)`, the randomized block and
//! Bernoulli set constructions, and finite diagnostics for Erdős–Fuchs-type
//! error terms.

pub mod analytic;
pub mod bounds;
pub mod construct;
pub mod error;
pub mod experiment;
pub mod numeric;
pub mod repfn;
pub mod rng;
pub mod search;
pub mod setio;
pub mod transform;
pub mod weights;

pub use analytic::{condition4_ratio, identity_check_eq7, radial_eval, Eq7Check, RadialDiagnostics};
pub use bounds::{
    chernoff_tail, error_series, error_series_against, hoeffding_tail, violation_scan, ErrorSeries, TargetProfile,
    ViolationReport, Which,
};
pub use construct::{
    block_diagonal_counts, sample_bernoulli_set, sample_block_set, BlockSamplerParams, DiagonalCounts,
};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport};
pub use repfn::{
    cumulative_rep, repfn_auto, repfn_fast, repfn_naive, CumulativeProfile, Engine, IntegerSet, RepProfile,
};
pub use rng::{sub_seed, StreamRng};
pub use search::{exhaustive_min_error, greedy_min_error, Objective, SearchOutcome, SearchProblem};
pub use setio::{read_set, write_set, SetFormat};
pub use weights::{WeightKind, WeightSequence};
