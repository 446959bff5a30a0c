//! Shortened universal words for multi-dimensional permutations.
//!
//! A u-word for d-dimensional permutations of length n is a matrix with d−1
//! rows in which every window of n consecutive columns, read in reduced form
//! with equal entries treated as incomparable, covers each permutation
//! exactly once. This crate builds such words by clustering the graph of
//! overlapping permutations, merging twin-induced parallel edges along their
//! cycles to shorten the eventual word by n−1 columns per step, extracting a
//! deterministic Eulerian path, and folding it into an integer matrix. An
//! independent verifier checks exact coverage of arbitrary candidates, and
//! the counting module evaluates cycle counts, the removal bound with its
//! admissible lengths, and Eulerian-circuit counts via arborescences.

pub mod compress;
pub mod count;
pub mod error;
pub mod graph;
pub mod perm;
pub mod uword;
pub mod verify;

pub use compress::{
    apply_removals, max_plan_steps, plan_removals, plan_with_quotas, post_removal_diagnosis,
    removal_capacity, RemovalDiagnosis, RemovalPlan, RemovalStep,
};
pub use count::{
    admissible_lengths, best_eulerian_count, brute_force_eulerian_count, count_arborescences,
    cycle_count, max_removals, uword_lower_bound, BigCount, MultiDigraph,
};
pub use error::{Error, Result};
pub use graph::{
    build_cluster_graph, build_cluster_graph_with_budget, classify_type, parallel_cycles,
    signature_of, target_signature_of, twin_classes, ClusterGraph, Edge, EdgeWord,
    EulerianDiagnosis, Mono, Signature, TwinClass, TwinCycle, TypeIndex, DEFAULT_EDGE_BUDGET,
};
pub use perm::{
    adjoin_relative, enumerate_dperms, expand_window, order_isomorphic, parse_matrix,
    reduce_matrix, reduce_word, render_matrix, DPermutation, Row, Side, Value, WindowExpansion,
};
pub use uword::{
    build_uword, eulerian_path, eulerian_path_seeded, extend_matrix, generate, generate_detailed,
    generate_from_plan, GenerateOutcome, UWordMatrix,
};
pub use verify::{
    oracle_cover_multiset, parse_matrix_input, verify_ucycle, verify_uword, verify_with_options,
    CoverageReport, Duplicate, MatrixInput, DEFAULT_REPORT_CAP,
};
