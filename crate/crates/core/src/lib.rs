//! Adaptive group testing for sampling minimal defective hyperedges.
//!
//! Two samplers are provided over a common defectiveness oracle:
//!
//! * [`sight`]: deterministic binary splitting over a randomly ordered sample.
//! * [`rc`]: Random Chemistry, stochastic subset reduction along a fixed
//!   size schedule.
//!
//! [`oracle`] generates planted test problems and charges every query to a
//! positive/negative [`oracle::TestLedger`]. [`bounds`] evaluates the
//! worst-case test counts of both samplers, and [`harness`] runs paired
//! experiments and aggregates per-find costs.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod rc;
pub mod rng;
pub mod run;
pub mod sight;
mod subsets;

pub use error::{Error, Result};
pub use oracle::{KSet, NodeId, Oracle, PlantedFamily, TestLedger};
pub use run::{Algorithm, Outcome, RunResult};
