//! Queue disciplines and the ordering they induce.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::job::{Job, PriorityClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    Fcfs,
    /// Shortest size estimate first.
    Spt,
    /// Earliest deadline first; jobs without deadlines go last.
    Edf,
    /// Critical class first, FCFS within a class.
    PriorityFcfs,
}

impl Discipline {
    pub const ALL: [Discipline; 4] = [Discipline::Fcfs, Discipline::Spt, Discipline::Edf, Discipline::PriorityFcfs];

    pub fn label(self) -> &'static str {
        match self {
            Discipline::Fcfs => "fcfs",
            Discipline::Spt => "spt",
            Discipline::Edf => "edf",
            Discipline::PriorityFcfs => "priority_fcfs",
        }
    }
}

/// A task waiting for a runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedTask {
    pub job_id: u64,
    pub task: u32,
    /// When the task joined this queue.
    pub enqueued_at: f64,
    pub demand: f64,
    pub size_estimate: f64,
    pub priority_class: PriorityClass,
    pub deadline: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct SchedKey {
    primary: f64,
    enqueued_at: f64,
    job_id: u64,
    task: u32,
}

impl SchedKey {
    fn of(t: &QueuedTask, discipline: Discipline) -> Self {
        let primary = match discipline {
            Discipline::Fcfs => 0.0,
            Discipline::Spt => t.size_estimate,
            Discipline::Edf => t.deadline.unwrap_or(f64::INFINITY),
            Discipline::PriorityFcfs => f64::from(t.priority_class.rank()),
        };
        Self { primary, enqueued_at: t.enqueued_at, job_id: t.job_id, task: t.task }
    }
}

impl Ord for SchedKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.enqueued_at.total_cmp(&other.enqueued_at))
            .then(self.job_id.cmp(&other.job_id))
            .then(self.task.cmp(&other.task))
    }
}

impl PartialOrd for SchedKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for SchedKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SchedKey {}

/// Index of the task the discipline serves next. Ties fall back to the
/// earlier arrival, then the lower job id.
pub fn select_next(queue: &[QueuedTask], discipline: Discipline) -> Option<usize> {
    queue.iter().enumerate().min_by_key(|(_, t)| SchedKey::of(t, discipline)).map(|(i, _)| i)
}

struct Entry {
    key: SchedKey,
    task: QueuedTask,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other.key.cmp(&self.key)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Entry {}

/// Priority queue that pops tasks in the same order as [`select_next`].
pub(crate) struct ReadyQueue {
    discipline: Discipline,
    heap: BinaryHeap<Entry>,
}

impl ReadyQueue {
    pub(crate) fn new(discipline: Discipline) -> Self {
        Self { discipline, heap: BinaryHeap::new() }
    }

    pub(crate) fn push(&mut self, task: QueuedTask) {
        self.heap.push(Entry { key: SchedKey::of(&task, self.discipline), task });
    }

    pub(crate) fn pop(&mut self) -> Option<QueuedTask> {
        self.heap.pop().map(|e| e.task)
    }

    pub(crate) fn len(&self) -> usize {
        self.heap.len()
    }
}

/// Result of serving a batch of jobs on one runner.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub order: Vec<u64>,
    pub total_wait: f64,
    pub mean_wait: f64,
    /// `max(completion − deadline)` over jobs with deadlines.
    pub max_lateness: Option<f64>,
}

/// Serves jobs that are all present at time zero on a single runner, in the
/// order the discipline picks. Uses each job's first-stage, first-task work.
pub fn single_runner_schedule(jobs: &[Job], discipline: Discipline) -> BatchOutcome {
    let mut queue = ReadyQueue::new(discipline);
    for job in jobs {
        let work = job.stages[0][0];
        queue.push(QueuedTask {
            job_id: job.id,
            task: 0,
            enqueued_at: 0.0,
            demand: work.demand,
            size_estimate: work.size_estimate,
            priority_class: job.priority_class,
            deadline: job.deadline,
        });
    }
    let mut clock = 0.0;
    let mut order = Vec::with_capacity(jobs.len());
    let mut total_wait = 0.0;
    let mut max_lateness: Option<f64> = None;
    while let Some(t) = queue.pop() {
        total_wait += clock;
        clock += t.demand;
        if let Some(d) = t.deadline {
            let late = clock - d;
            max_lateness = Some(max_lateness.map_or(late, |m| m.max(late)));
        }
        order.push(t.job_id);
    }
    let mean_wait = if jobs.is_empty() { 0.0 } else { total_wait / jobs.len() as f64 };
    BatchOutcome { order, total_wait, mean_wait, max_lateness }
}
