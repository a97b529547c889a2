//! Collision-avoidance verification for multi-agent systems with learned
//! control policies.
//!
//! Each agent follows discrete-time linear dynamics closed with a ReLU
//! network controller. For a pair of agents the library computes a convex
//! over-approximation of the *relative backprojection set* of their collision
//! set — the relative positions that can transition into collision in one
//! step — by solving one mixed-integer linear program per facet direction.
//! If that over-approximation is contained in the collision set, the pair can
//! never move from a non-colliding relative position into a colliding one.
//!
//! The crate is organized as:
//!
//! - [`lingeo`]: half-spaces, polytopes, membership and containment queries
//! - [`network`]: ReLU networks, evaluation, interval bound propagation
//! - [`dynamics`]: agent models and pairwise closed-loop stepping
//! - [`opt`]: the model IR, a bounded-variable simplex, and branch-and-bound
//! - [`encoder`]: translation of a pair system + facet into a MILP
//! - [`rebar`]: backprojection computation, safety checks, multi-agent driver
//! - [`oracle`]: sampling and enumeration ground truth used by tests
//! - [`scenario`]: scenario file loading and pair assembly

// Index-based loops are clearer than iterator chains for the dense matrix
// and tableau arithmetic in this crate.
#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod encoder;
mod error;
pub mod lingeo;
pub mod linalg;
pub mod logging;
pub mod network;
pub mod opt;
pub mod oracle;
pub mod rebar;
pub mod scenario;

pub use error::{Error, Result};

/// Feasibility tolerance: how far a point may violate a half-space or a
/// constraint row and still count as satisfying it. One value everywhere so
/// verdicts cannot flip between modules.
pub const EPS_FEAS: f64 = 1e-7;

/// Integrality tolerance for binary variables in MILP solutions.
pub const EPS_INT: f64 = 1e-6;

/// Absolute optimality gap for branch-and-bound pruning.
pub const DELTA_GAP: f64 = 1e-6;

/// Default branch-and-bound node budget per MILP.
pub const DEFAULT_NODE_LIMIT: u64 = 1_000_000;
