//! Sampling districting plans with a reversible single-flip Markov chain and
//! measuring how much of an outlier a seed plan is on its own trajectory.
//!
//! The main pieces:
//!
//! * [`graph`]: the dual graph of wards and its CSV tables.
//! * [`plan`]: district assignments with incremental caches.
//! * [`constraints`]: validity predicates for flips.
//! * [`chain`]: proposals, steps and trajectory runs.
//! * [`election`]: efficiency-gap labels.
//! * [`outlier`]: epsilon accumulation and `p = min(1, sqrt(2 epsilon))`.
//! * [`ingest`]: polygon maps to graph tables.
//! * [`gridkit`]: synthetic grids and brute-force oracles.

pub mod chain;
pub mod constraints;
pub mod election;
pub mod error;
pub mod graph;
pub mod gridkit;
pub mod histogram;
pub mod ingest;
pub mod outlier;
pub mod plan;

pub use chain::{run_trajectory, ChainConfig, Sinks, StepOutcome, TrajectoryOutcome, TrajectoryRecord};
pub use constraints::{is_valid_flip, CompactnessMode, Flip, ValidityConfig};
pub use election::{efficiency_gap, ElectionResult};
pub use error::{Error, Result};
pub use graph::{DualGraph, EdgeRecord, WardNode};
pub use gridkit::GridSpec;
pub use outlier::{p_value, EpsilonAccumulator, EpsilonReport};
pub use plan::{DistrictStats, FlipDelta, Plan};
