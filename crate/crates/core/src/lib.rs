//! Online min-max optimization over convex-concave payoff sequences.
//!
//! Modules:
//! - [`geometry`]: domains, Euclidean and weighted projections, convex minimization.
//! - [`linalg`]: rank-one inverse updates and block operations.
//! - [`functions`]: payoff families, schedules and class membership checks.
//! - [`learners`]: OGDA, OMMNS, AGDA and online VI players.
//! - [`meta`]: the MMFLH meta-learner over geometric covers.
//! - [`metrics`]: saddle points, dual gaps and regret ledgers.
//! - [`harness`]: configs, runs, sweeps, invariant suites and CSV output.
//!
//! Runnable examples, one per capability:
//!
//! ```text
//! cargo run --release --example ogda_quadratic
//! cargo run --release --example ommns_portfolio
//! cargo run --release --example agda_piecewise
//! cargo run --release --example online_vi
//! cargo run --release --example mmflh_tracking
//! cargo run --release --example dyne_counterexample
//! cargo run --release --example impossibility
//! cargo run --release --example rank_one_updates
//! cargo run --release --example weighted_projection
//! cargo run --release --example class_membership
//! cargo run --release --example variation_measures
//! cargo run --release --example config_run
//! cargo run --release --example verify_suites
//! ```

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod functions;
pub mod harness;
pub mod geometry;
pub mod learners;
pub mod linalg;
pub mod meta;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
