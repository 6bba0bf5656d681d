use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityClass {
    Critical,
    Normal,
}

impl PriorityClass {
    /// Lower ranks are served first under priority scheduling.
    pub fn rank(self) -> u8 {
        match self {
            PriorityClass::Critical => 0,
            PriorityClass::Normal => 1,
        }
    }
}

/// One unit of work on a runner: a whole job, or one fork-join subtask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskWork {
    /// Minutes at nominal runner speed.
    pub demand: f64,
    /// What the scheduler believes the demand to be.
    pub size_estimate: f64,
}

/// A CI job with its work drawn up front for every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: u64,
    pub arrival_time: f64,
    pub priority_class: PriorityClass,
    pub deadline: Option<f64>,
    /// Work per stage; fork-join stages carry one entry per subtask.
    pub stages: Vec<Vec<TaskWork>>,
}

impl Job {
    /// Single-stage job whose size estimate equals its demand.
    pub fn single(id: u64, arrival_time: f64, demand: f64) -> Self {
        Self {
            id,
            arrival_time,
            priority_class: PriorityClass::Normal,
            deadline: None,
            stages: vec![vec![TaskWork { demand, size_estimate: demand }]],
        }
    }

    pub fn with_deadline(mut self, deadline: f64) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn with_class(mut self, class: PriorityClass) -> Self {
        self.priority_class = class;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_time >= 0.0 && self.arrival_time.is_finite()) {
            return Err(Error::validation(format!("job {}: arrival time must be >= 0", self.id)));
        }
        if let Some(d) = self.deadline {
            if !(d >= self.arrival_time) {
                return Err(Error::validation(format!("job {}: deadline precedes arrival", self.id)));
            }
        }
        for tasks in &self.stages {
            if tasks.iter().any(|t| !(t.demand > 0.0 && t.demand.is_finite())) {
                return Err(Error::validation(format!("job {}: service demand must be > 0", self.id)));
            }
        }
        Ok(())
    }

    /// Total estimated work across all stages and subtasks.
    pub fn estimated_work(&self) -> f64 {
        self.stages.iter().flatten().map(|t| t.size_estimate).sum()
    }
}

/// How the scheduler's size estimate relates to the true demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeEstimation {
    Exact,
    /// True demand times a mean-one lognormal error with this squared
    /// coefficient of variation.
    Noisy {
        cv2: f64,
    },
}

impl Default for SizeEstimation {
    fn default() -> Self {
        SizeEstimation::Noisy { cv2: 0.25 }
    }
}

/// `deadline = arrival + offset + per_work · estimated work`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeadlineRule {
    pub offset: f64,
    pub per_work: f64,
}

/// Attributes assigned to generated jobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobMix {
    pub critical_fraction: f64,
    pub deadline: Option<DeadlineRule>,
    pub size_estimation: SizeEstimation,
}

impl Default for JobMix {
    fn default() -> Self {
        Self { critical_fraction: 0.0, deadline: None, size_estimation: SizeEstimation::default() }
    }
}

impl JobMix {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.critical_fraction) {
            return Err(Error::validation(format!(
                "critical_fraction must lie in [0, 1], got {}",
                self.critical_fraction
            )));
        }
        if let Some(d) = self.deadline {
            if !(d.offset >= 0.0 && d.per_work >= 0.0) {
                return Err(Error::validation("deadline offset and per_work must be >= 0"));
            }
        }
        if let SizeEstimation::Noisy { cv2 } = self.size_estimation {
            if !(cv2 >= 0.0 && cv2.is_finite()) {
                return Err(Error::validation(format!("size estimate cv2 must be >= 0, got {cv2}")));
            }
        }
        Ok(())
    }
}
