use serde::{Deserialize, Serialize};

use super::job::PriorityClass;

/// Steady-state statistics of one stage, measured after warmup.
///
/// `l` and `lq` are time averages; `w` and `wq` average over jobs that left
/// the stage inside the measurement window. For fork-join stages a job is
/// queued until its last subtask starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub name: String,
    pub l: f64,
    pub lq: f64,
    pub w: f64,
    pub wq: f64,
    /// Busy runner-time over available runner-time.
    pub rho: f64,
    /// Departures per minute.
    pub throughput: f64,
    /// Arrivals per minute.
    pub arrival_rate: f64,
    pub departures: u64,
    /// Time-averaged provisioned runners, booting ones included.
    pub mean_runners: f64,
    /// Time-averaged `L_q` over equal consecutive windows.
    pub lq_windows: Vec<f64>,
    /// Jobs that entered the stage over the whole run.
    pub arrived_total: u64,
    pub completed_total: u64,
    pub in_system_at_end: u64,
}

impl StageMetrics {
    /// `|L − X·W| / L`, with `X` the measured throughput.
    pub fn littles_law_gap(&self) -> f64 {
        if self.l == 0.0 {
            return 0.0;
        }
        (self.l - self.throughput * self.w).abs() / self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: PriorityClass,
    pub jobs: u64,
    /// Mean queueing delay summed over all stages.
    pub wq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub horizon: f64,
    pub warmup: f64,
    pub stages: Vec<StageMetrics>,
    /// Jobs that left the last stage during the measurement window.
    pub jobs_completed: u64,
    /// Mean end-to-end time in the pipeline.
    pub mean_response: f64,
    pub max_lateness: Option<f64>,
    pub classes: Vec<ClassStats>,
    /// Stage with the highest measured utilization.
    pub bottleneck: usize,
}

impl MetricsReport {
    pub fn measured_time(&self) -> f64 {
        self.horizon - self.warmup
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }
}
