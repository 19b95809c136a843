//! Trajectory optimization for a planar thrust craft from an inaccurate
//! model plus a handful of real rollouts.
//!
//! The pieces, bottom up:
//!
//! - [`dynamics`]: craft equations, RK4 stepping, derivatives, and the
//!   time-indexed bias that makes an approximate model replay an observed
//!   trajectory exactly.
//! - [`task`]: reference trajectories, deck geometry, the tracking cost.
//! - [`ddp`]: differential dynamic programming and a Riccati oracle.
//! - [`sddp`]: value backups under additive Brownian noise.
//! - [`learner`]: the real-rollout / bias-correct / re-optimize loop.
//! - [`metrics`]: trajectory quality criteria and pairwise comparison.

pub mod ddp;
pub mod dynamics;
pub mod error;
pub mod learner;
pub mod metrics;
pub mod sddp;
pub mod task;

pub use error::{Error, Result};
