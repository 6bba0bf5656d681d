//! Capacity planning for CI/CD runner fleets.
//!
//! The crate is split into layers that build on each other:
//!
//! - [`analytic`]: closed-form and approximate queueing results (M/M/c,
//!   M/G/c, G/G/c, M/G/1, fork-join, Little's law, bottlenecks).
//! - [`forecast`]: streaming arrival-rate estimators and sample statistics.
//! - [`cost`]: weighted runner/waiting cost and SLA-constrained runner sizing.
//! - [`sim`]: a seeded discrete-event simulator for multi-stage pipelines with
//!   scheduling disciplines, dispatch policies, fork-join stages and
//!   autoscaling.
//! - [`scenario`], [`trace`], [`report`]: the file formats and report
//!   assembly used by the `fleetq` command-line tool.
//!
//! Rates are jobs per minute and times are minutes everywhere inside the
//! library. Scenario files use jobs per hour and are converted on load.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cost;
mod error;
pub mod forecast;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use analytic::{HeterogeneousFleet, QueueParams, RunnerPool, StageLoad};
pub use cost::{CostModel, SlaConstraint};
pub use error::{Error, Result};
pub use forecast::{RateSeries, SmootherState};
pub use scenario::Scenario;
pub use sim::{
    ArrivalProcess, Discipline, DispatchPolicy, Job, MetricsReport, PriorityClass, ScalingPolicy, ServiceDistribution,
    SimConfig, StageConfig,
};
