//! Task-based audit staff scheduling: candidate-edge enumeration with
//! pruning, a network-flow binary program, an exact branch-and-bound solver
//! with pluggable external backends, and the supporting I/O, generation and
//! reporting tools.

pub mod candidates;
pub mod cost;
pub mod dense;
pub mod diff;
pub mod docs;
pub mod domain;
pub mod flow;
pub mod gantt;
pub mod generator;
pub mod greedy;
pub mod milp;
pub mod scaled;
pub mod solver;
pub mod testutil;

pub use candidates::{enumerate_edges, enumerate_edges_sequential, CandidateSet};
pub use domain::{validate_instance, Instance};
pub use flow::{build_flow_model, extract_schedule, schedule_metrics, Schedule};
pub use solver::{brute_force_oracle, solve_exact, solve_with_backend, BackendConfig};
