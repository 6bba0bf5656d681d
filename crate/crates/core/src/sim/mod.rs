//! Seeded discrete-event simulation of multi-stage CI pipelines.
//!
//! Jobs pass through the configured stages in order. At each stage every
//! task (the whole job, or each fork-join subtask) is dispatched to a runner
//! pool and waits in that pool's queue under the stage's discipline. Service
//! is non-preemptive. A pool with per-runner rate `μᵢ` processes demand at
//! speed `μᵢ · E[S]`, so its service times have mean `1/μᵢ` and the shape of
//! the stage's service distribution.
//!
//! Events at equal times run completions first, then runner boots, scaling
//! reviews and arrivals, then by job id. A run is a pure function of its
//! configuration and seed.

mod discipline;
mod dispatch;
mod dist;
mod engine;
mod job;
mod metrics;
mod scaling;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use discipline::{select_next, single_runner_schedule, BatchOutcome, Discipline, QueuedTask};
pub use dispatch::{dispatch, DispatchPolicy, PoolView, SizeHistory};
pub use dist::{ArrivalProcess, BatchSize, ServiceDistribution};
pub use job::{DeadlineRule, Job, JobMix, PriorityClass, SizeEstimation, TaskWork};
pub use metrics::{ClassStats, MetricsReport, StageMetrics};
pub use scaling::{desired_runners, predictive_autoscale, threshold_autoscale, ForecasterSpec, ScalingPolicy};

use crate::analytic::HeterogeneousFleet;
use crate::error::{Error, Result};
use engine::{JobSource, Simulator};

/// Fan-out of a stage into `k` parallel subtasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkJoin {
    pub k: u32,
    pub service: ServiceDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub name: String,
    pub discipline: Discipline,
    pub pools: HeterogeneousFleet,
    pub dispatch: DispatchPolicy,
    pub service: ServiceDistribution,
    pub fork_join: Option<ForkJoin>,
    /// Minutes before a runner added by scaling can take work.
    pub boot_delay: f64,
    pub scaling: ScalingPolicy,
}

impl StageConfig {
    /// FCFS stage with JSQ dispatch, no fork-join and no scaling.
    pub fn new(name: impl Into<String>, pools: HeterogeneousFleet, service: ServiceDistribution) -> Self {
        Self {
            name: name.into(),
            discipline: Discipline::Fcfs,
            pools,
            dispatch: DispatchPolicy::Jsq,
            service,
            fork_join: None,
            boot_delay: 0.0,
            scaling: ScalingPolicy::None,
        }
    }

    pub fn with_discipline(mut self, discipline: Discipline) -> Self {
        self.discipline = discipline;
        self
    }

    pub fn with_dispatch(mut self, dispatch: DispatchPolicy) -> Self {
        self.dispatch = dispatch;
        self
    }

    pub fn with_fork_join(mut self, fork_join: ForkJoin) -> Self {
        self.fork_join = Some(fork_join);
        self
    }

    pub fn with_scaling(mut self, scaling: ScalingPolicy, boot_delay: f64) -> Self {
        self.scaling = scaling;
        self.boot_delay = boot_delay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| Error::validation(format!("stage '{}': {}", self.name, strip(&e)));
        HeterogeneousFleet::new(self.pools.pools().to_vec()).map_err(ctx)?;
        self.service.validate().map_err(ctx)?;
        if let Some(fj) = &self.fork_join {
            if fj.k < 2 {
                return Err(ctx(Error::validation(format!("fork-join fan-out must be >= 2, got {}", fj.k))));
            }
            fj.service.validate().map_err(ctx)?;
        }
        if !(self.boot_delay >= 0.0 && self.boot_delay.is_finite()) {
            return Err(ctx(Error::validation(format!("boot_delay must be >= 0, got {}", self.boot_delay))));
        }
        self.scaling.validate().map_err(ctx)
    }

    /// Mean demand of one task at this stage.
    pub fn task_mean(&self) -> f64 {
        match &self.fork_join {
            Some(fj) => fj.service.mean(),
            None => self.service.mean(),
        }
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Validation(m) | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub stages: Vec<StageConfig>,
    pub arrivals: ArrivalProcess,
    pub jobs: JobMix,
    /// Simulated minutes.
    pub horizon: f64,
    /// Minutes discarded before statistics start; 1% of the horizon if unset.
    pub warmup: Option<f64>,
    /// Number of equal windows for the `L_q` trajectory.
    pub lq_windows: usize,
}

impl SimConfig {
    pub const DEFAULT_LQ_WINDOWS: usize = 10;

    pub fn new(stages: Vec<StageConfig>, arrivals: ArrivalProcess, horizon: f64) -> Self {
        Self { stages, arrivals, jobs: JobMix::default(), horizon, warmup: None, lq_windows: Self::DEFAULT_LQ_WINDOWS }
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = Some(warmup);
        self
    }

    pub fn with_jobs(mut self, jobs: JobMix) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn effective_warmup(&self) -> f64 {
        self.warmup.unwrap_or(0.01 * self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::validation("at least one stage is required"));
        }
        for s in &self.stages {
            s.validate()?;
        }
        self.arrivals.validate()?;
        self.jobs.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation(format!("horizon must be finite and > 0, got {}", self.horizon)));
        }
        let warmup = self.effective_warmup();
        if !(warmup >= 0.0 && warmup < self.horizon) {
            return Err(Error::validation(format!(
                "warmup ({warmup}) must satisfy 0 <= warmup < horizon ({})",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Runs one replication. Configuration errors are reported before any event
/// is processed.
pub fn run_simulation(cfg: &SimConfig, seed: u64) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut sim = Simulator::new(cfg, seed, JobSource::Generated(dist::ArrivalStream::new(cfg.arrivals.clone())))?;
    sim.run();
    Ok(sim.report())
}

/// Runs a single fork-join job on otherwise idle pools and returns the time
/// its slowest subtask finishes. `job.stages[0]` holds the `k` subtask
/// demands; the job starts at `now`.
pub fn execute_fork_join(
    job: &Job,
    fork: &ForkJoin,
    pools: &HeterogeneousFleet,
    dispatch: DispatchPolicy,
    now: f64,
) -> Result<f64> {
    let tasks = job.stages.first().ok_or_else(|| Error::validation("fork-join job has no work"))?;
    if tasks.len() != fork.k as usize {
        return Err(Error::validation(format!(
            "fork-join job carries {} subtasks, fan-out is {}",
            tasks.len(),
            fork.k
        )));
    }
    let stage = StageConfig::new("fork-join", pools.clone(), fork.service.clone())
        .with_dispatch(dispatch)
        .with_fork_join(fork.clone());
    stage.validate()?;
    let mut single = job.clone();
    single.arrival_time = now;
    single.stages.truncate(1);
    single.validate()?;
    let cfg = SimConfig {
        stages: vec![stage],
        arrivals: ArrivalProcess::Trace { timestamps: vec![now] },
        jobs: JobMix::default(),
        horizon: f64::INFINITY,
        warmup: Some(0.0),
        lq_windows: 0,
    };
    let mut sim = Simulator::new(&cfg, 0, JobSource::Injected(VecDeque::from([single])))?;
    sim.run();
    Ok(sim.finished().first().expect("injected job completes").1)
}
