//! Simulation toolkit for bipartite nonlocal correlations.
//!
//! The crate is organised around [`boxmodel::BehaviorTable`], the
//! conditional probability table `p(a,b|x,y)` of a two-input/two-output
//! box. Everything else either produces such tables (local programs, the
//! PR box, quantum boxes, the retrocausal box) or consumes them:
//!
//! - [`boxmodel`]: exact boxes, correlators, CHSH, no-signalling checks.
//! - [`qlin`]: qubit-scale complex linear algebra, Bell/GHZ states,
//!   partial traces, quantum boxes and CHSH angle optimisation.
//! - [`signaling`]: Monte Carlo of the block protocol in which Alice's
//!   consistent setting choice over `N` PR pairs leaks into the joint
//!   statistics of Bob's macroscopic averages.
//! - [`retrobox`]: the PR box realised by outcomes drawn at a common
//!   source point after both settings have arrived there.
//! - [`abl`]: pre- and post-selected intermediate-measurement
//!   probabilities in forward and time-symmetric form.
//! - [`jamming`]: a third party's measurement on a GHZ qubit deciding
//!   whether the remaining pairs are in product or Bell-state branches.
//!
//! Monte Carlo code draws from [`rng::stream_rng`], a counter-based split
//! of a master seed, so results do not depend on thread scheduling.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod abl;
pub mod boxmodel;
pub mod error;
pub mod jamming;
pub mod qlin;
pub mod retrobox;
pub mod rng;
pub mod signaling;
pub mod stats;

pub use error::{Error, Result};

/// Tolerance used whenever a probability table is validated.
pub const PROB_TOL: f64 = 1e-9;

/// Tolerance for state normalisation, unitarity and hermiticity checks.
pub const LINALG_TOL: f64 = 1e-12;
