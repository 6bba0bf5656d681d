use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use super::discipline::{QueuedTask, ReadyQueue};
use super::dispatch::{dispatch, DispatchPolicy, PoolView, SizeHistory};
use super::dist::{lognormal_with_mean, ArrivalStream};
use super::job::{Job, PriorityClass, SizeEstimation, TaskWork};
use super::metrics::{ClassStats, MetricsReport, StageMetrics};
use super::scaling::{desired_runners, threshold_autoscale, ScalingPolicy};
use super::SimConfig;
use crate::analytic::argmax_first;
use crate::error::Result;
use crate::forecast::RateForecaster;

// Independent random streams, so that changing one policy does not shift the
// draws of another concern.
const STREAM_ARRIVALS: u64 = 0;
const STREAM_SERVICE: u64 = 1;
const STREAM_ESTIMATES: u64 = 2;
const STREAM_DISPATCH: u64 = 3;
const STREAM_ATTRIBUTES: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Completion { stage: usize, pool: usize },
    RunnerReady { stage: usize, pool: usize },
    ScalingReview { stage: usize },
    Arrival { count: u32 },
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::Completion { .. } => 0,
            EventKind::RunnerReady { .. } => 1,
            EventKind::ScalingReview { .. } => 2,
            EventKind::Arrival { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    job_id: u64,
    seq: u64,
}

impl Event {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.job_id.cmp(&other.job_id))
            .then(self.seq.cmp(&other.seq))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

struct PoolState {
    mu: f64,
    /// Demand minutes processed per wall-clock minute.
    speed: f64,
    queue: ReadyQueue,
    idle: u32,
    busy: u32,
    booting: u32,
    /// Booting runners that will be discarded when ready.
    cancelled_boots: u32,
    /// Busy runners that leave when their current task ends.
    retiring: u32,
}

impl PoolState {
    fn provisioned(&self) -> u32 {
        self.idle + self.busy + self.booting - self.cancelled_boots - self.retiring
    }

    fn view(&self) -> PoolView {
        PoolView { mu: self.mu, idle: self.idle, queued: self.queue.len(), in_service: self.busy }
    }
}

struct Progress {
    entered_at: f64,
    unstarted: u32,
    unfinished: u32,
    wait: f64,
}

#[derive(Default)]
struct StageAccumulator {
    area_l: f64,
    area_lq: f64,
    area_busy: f64,
    area_capacity: f64,
    area_provisioned: f64,
    lq_windows: Vec<f64>,
    departures: u64,
    sum_w: f64,
    sum_wq: f64,
    arrivals_in_window: u64,
    arrived_total: u64,
    completed_total: u64,
}

struct StageState {
    pools: Vec<PoolState>,
    sizes: SizeHistory,
    in_stage: u64,
    waiting: u64,
    progress: HashMap<u64, Progress>,
    arrivals_since_review: u64,
    forecaster: Option<Box<dyn RateForecaster>>,
    acc: StageAccumulator,
}

struct ActiveJob {
    job: Job,
    total_wait: f64,
}

#[derive(Default)]
struct GlobalAccumulator {
    completed: u64,
    sum_response: f64,
    max_lateness: Option<f64>,
    class_wait: [f64; 2],
    class_jobs: [u64; 2],
}

pub(crate) enum JobSource {
    Generated(ArrivalStream),
    Injected(VecDeque<Job>),
}

pub(crate) struct Simulator<'a> {
    cfg: &'a SimConfig,
    stages: Vec<StageState>,
    events: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    last: f64,
    warmup: f64,
    horizon: f64,
    window_len: f64,
    rng_arrivals: ChaCha8Rng,
    rng_service: ChaCha8Rng,
    rng_estimates: ChaCha8Rng,
    rng_dispatch: ChaCha8Rng,
    rng_attributes: ChaCha8Rng,
    source: JobSource,
    next_job_id: u64,
    active: HashMap<u64, ActiveJob>,
    global: GlobalAccumulator,
    finished: Vec<(u64, f64)>,
}

impl<'a> Simulator<'a> {
    /// `cfg` must already be validated.
    pub(crate) fn new(cfg: &'a SimConfig, seed: u64, source: JobSource) -> Result<Self> {
        let warmup = cfg.effective_warmup();
        let horizon = cfg.horizon;
        let windows = if horizon.is_finite() { cfg.lq_windows } else { 0 };
        let stages = cfg
            .stages
            .iter()
            .map(|sc| {
                let mean_demand = match &sc.fork_join {
                    Some(fj) => fj.service.mean(),
                    None => sc.service.mean(),
                };
                let pools = sc
                    .pools
                    .pools()
                    .iter()
                    .map(|p| PoolState {
                        mu: p.mu,
                        speed: p.mu * mean_demand,
                        queue: ReadyQueue::new(sc.discipline),
                        idle: p.count,
                        busy: 0,
                        booting: 0,
                        cancelled_boots: 0,
                        retiring: 0,
                    })
                    .collect();
                let forecaster = match &sc.scaling {
                    ScalingPolicy::Predictive { forecaster, .. } => Some(forecaster.build()?),
                    _ => None,
                };
                Ok(StageState {
                    pools,
                    sizes: SizeHistory::new(SizeHistory::DEFAULT_CAPACITY),
                    in_stage: 0,
                    waiting: 0,
                    progress: HashMap::new(),
                    arrivals_since_review: 0,
                    forecaster,
                    acc: StageAccumulator { lq_windows: vec![0.0; windows], ..Default::default() },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sim = Self {
            cfg,
            stages,
            events: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            last: 0.0,
            warmup,
            horizon,
            window_len: if windows > 0 { (horizon - warmup) / windows as f64 } else { 0.0 },
            rng_arrivals: stream(seed, STREAM_ARRIVALS),
            rng_service: stream(seed, STREAM_SERVICE),
            rng_estimates: stream(seed, STREAM_ESTIMATES),
            rng_dispatch: stream(seed, STREAM_DISPATCH),
            rng_attributes: stream(seed, STREAM_ATTRIBUTES),
            source,
            next_job_id: 0,
            active: HashMap::new(),
            global: GlobalAccumulator::default(),
            finished: Vec::new(),
        };
        sim.schedule_next_arrival();
        for (s, sc) in cfg.stages.iter().enumerate() {
            if let Some(period) = sc.scaling.review_period() {
                sim.push(period, EventKind::ScalingReview { stage: s }, 0);
            }
        }
        Ok(sim)
    }

    fn push(&mut self, time: f64, kind: EventKind, job_id: u64) {
        self.seq += 1;
        self.events.push(Event { time, kind, job_id, seq: self.seq });
    }

    fn in_window(&self, t: f64) -> bool {
        t >= self.warmup && t <= self.horizon
    }

    pub(crate) fn run(&mut self) {
        while let Some(ev) = self.events.pop() {
            if ev.time > self.horizon {
                break;
            }
            self.advance(ev.time);
            self.now = ev.time;
            match ev.kind {
                EventKind::Arrival { count } => self.on_arrival(count),
                EventKind::Completion { stage, pool } => self.on_completion(stage, pool, ev.job_id),
                EventKind::RunnerReady { stage, pool } => self.on_runner_ready(stage, pool),
                EventKind::ScalingReview { stage } => self.on_review(stage),
            }
        }
        if self.horizon.is_finite() {
            self.advance(self.horizon);
        }
    }

    /// Integrates time-weighted counters up to `t`, clipped to the
    /// measurement window.
    fn advance(&mut self, t: f64) {
        let from = self.last.max(self.warmup);
        let to = t.min(self.horizon);
        self.last = self.last.max(t);
        if !(to > from) {
            return;
        }
        let dt = to - from;
        let (warmup, window_len) = (self.warmup, self.window_len);
        for st in &mut self.stages {
            let (busy, present, provisioned) = st.pools.iter().fold((0u64, 0u64, 0u64), |acc, p| {
                (acc.0 + u64::from(p.busy), acc.1 + u64::from(p.idle + p.busy), acc.2 + u64::from(p.provisioned()))
            });
            let acc = &mut st.acc;
            acc.area_l += st.in_stage as f64 * dt;
            acc.area_lq += st.waiting as f64 * dt;
            acc.area_busy += busy as f64 * dt;
            acc.area_capacity += present as f64 * dt;
            acc.area_provisioned += provisioned as f64 * dt;
            let n = acc.lq_windows.len();
            if n > 0 && st.waiting > 0 {
                let mut a = from;
                while a < to {
                    let w = (((a - warmup) / window_len) as usize).min(n - 1);
                    let mut end = if w == n - 1 { to } else { (warmup + (w + 1) as f64 * window_len).min(to) };
                    if end <= a {
                        end = to;
                    }
                    acc.lq_windows[w] += st.waiting as f64 * (end - a);
                    a = end;
                }
            }
        }
    }

    fn schedule_next_arrival(&mut self) {
        let next = match &mut self.source {
            JobSource::Generated(stream) => stream.next(&mut self.rng_arrivals),
            JobSource::Injected(queue) => queue.front().map(|j| {
                let t = j.arrival_time;
                (t, queue.iter().take_while(|j| j.arrival_time == t).count() as u32)
            }),
        };
        if let Some((t, count)) = next {
            self.push(t, EventKind::Arrival { count }, 0);
        }
    }

    fn generate_job(&mut self) -> Job {
        let id = self.next_job_id;
        self.next_job_id += 1;
        let cfg: &'a SimConfig = self.cfg;
        let mix = &cfg.jobs;
        let u: f64 = self.rng_attributes.random();
        let priority_class = if u < mix.critical_fraction { PriorityClass::Critical } else { PriorityClass::Normal };
        let noise = match mix.size_estimation {
            SizeEstimation::Noisy { cv2 } if cv2 > 0.0 => Some(lognormal_with_mean(1.0, cv2)),
            _ => None,
        };
        let stages = cfg
            .stages
            .iter()
            .map(|sc| {
                let (k, dist) = match &sc.fork_join {
                    Some(fj) => (fj.k, &fj.service),
                    None => (1, &sc.service),
                };
                (0..k)
                    .map(|_| {
                        let demand = dist.sample(&mut self.rng_service);
                        let size_estimate = match &noise {
                            Some(n) => demand * n.sample(&mut self.rng_estimates),
                            None => demand,
                        };
                        TaskWork { demand, size_estimate }
                    })
                    .collect()
            })
            .collect();
        let mut job = Job { id, arrival_time: self.now, priority_class, deadline: None, stages };
        if let Some(rule) = mix.deadline {
            job.deadline = Some(self.now + rule.offset + rule.per_work * job.estimated_work());
        }
        job
    }

    fn on_arrival(&mut self, count: u32) {
        for _ in 0..count {
            let job = match &mut self.source {
                JobSource::Generated(_) => self.generate_job(),
                JobSource::Injected(queue) => queue.pop_front().expect("arrival event matches injected job"),
            };
            let id = job.id;
            self.active.insert(id, ActiveJob { job, total_wait: 0.0 });
            self.enter_stage(id, 0);
        }
        self.schedule_next_arrival();
    }

    fn enter_stage(&mut self, job_id: u64, s: usize) {
        let now = self.now;
        let in_window = self.in_window(now);
        let active = &self.active[&job_id];
        let tasks = active.job.stages[s].clone();
        let (class, deadline) = (active.job.priority_class, active.job.deadline);
        let policy = self.cfg.stages[s].dispatch;

        let st = &mut self.stages[s];
        st.in_stage += 1;
        st.waiting += 1;
        st.arrivals_since_review += 1;
        st.acc.arrived_total += 1;
        if in_window {
            st.acc.arrivals_in_window += 1;
        }
        st.progress.insert(
            job_id,
            Progress { entered_at: now, unstarted: tasks.len() as u32, unfinished: tasks.len() as u32, wait: 0.0 },
        );

        for (i, t) in tasks.iter().enumerate() {
            let st = &mut self.stages[s];
            let pool = if st.pools.len() == 1 {
                0
            } else {
                let views: Vec<PoolView> = st.pools.iter().map(PoolState::view).collect();
                let median = (policy == DispatchPolicy::SizeBased).then(|| st.sizes.median()).flatten();
                dispatch(t.size_estimate, &views, policy, median, &mut self.rng_dispatch)
            };
            if policy == DispatchPolicy::SizeBased {
                st.sizes.record(t.size_estimate);
            }
            st.pools[pool].queue.push(QueuedTask {
                job_id,
                task: i as u32,
                enqueued_at: now,
                demand: t.demand,
                size_estimate: t.size_estimate,
                priority_class: class,
                deadline,
            });
            self.try_start(s, pool);
        }
    }

    fn try_start(&mut self, s: usize, p: usize) {
        let now = self.now;
        loop {
            let st = &mut self.stages[s];
            let pool = &mut st.pools[p];
            if pool.idle == 0 {
                return;
            }
            let Some(task) = pool.queue.pop() else { return };
            pool.idle -= 1;
            pool.busy += 1;
            let finish = now + task.demand / pool.speed;
            let prog = st.progress.get_mut(&task.job_id).expect("queued task has progress");
            prog.unstarted -= 1;
            if prog.unstarted == 0 {
                prog.wait = now - prog.entered_at;
                st.waiting -= 1;
            }
            self.push(finish, EventKind::Completion { stage: s, pool: p }, task.job_id);
        }
    }

    fn on_completion(&mut self, s: usize, p: usize, job_id: u64) {
        let st = &mut self.stages[s];
        let pool = &mut st.pools[p];
        pool.busy -= 1;
        if pool.retiring > 0 {
            pool.retiring -= 1;
        } else {
            pool.idle += 1;
        }
        let prog = st.progress.get_mut(&job_id).expect("completing job has progress");
        prog.unfinished -= 1;
        let done = (prog.unfinished == 0).then(|| st.progress.remove(&job_id).expect("present"));
        self.try_start(s, p);
        if let Some(prog) = done {
            self.leave_stage(job_id, s, prog);
        }
    }

    fn leave_stage(&mut self, job_id: u64, s: usize, prog: Progress) {
        let now = self.now;
        let in_window = self.in_window(now);
        let st = &mut self.stages[s];
        st.in_stage -= 1;
        st.acc.completed_total += 1;
        if in_window {
            st.acc.departures += 1;
            st.acc.sum_w += now - prog.entered_at;
            st.acc.sum_wq += prog.wait;
        }
        let active = self.active.get_mut(&job_id).expect("job is active");
        active.total_wait += prog.wait;
        if s + 1 < self.stages.len() {
            self.enter_stage(job_id, s + 1);
            return;
        }
        let done = self.active.remove(&job_id).expect("job is active");
        self.finished.push((job_id, now));
        if in_window {
            let g = &mut self.global;
            g.completed += 1;
            g.sum_response += now - done.job.arrival_time;
            let c = usize::from(done.job.priority_class.rank());
            g.class_wait[c] += done.total_wait;
            g.class_jobs[c] += 1;
            if let Some(d) = done.job.deadline {
                let late = now - d;
                g.max_lateness = Some(g.max_lateness.map_or(late, |m: f64| m.max(late)));
            }
        }
    }

    fn on_runner_ready(&mut self, s: usize, p: usize) {
        let pool = &mut self.stages[s].pools[p];
        pool.booting -= 1;
        if pool.cancelled_boots > 0 {
            pool.cancelled_boots -= 1;
        } else {
            pool.idle += 1;
            self.try_start(s, p);
        }
    }

    fn on_review(&mut self, s: usize) {
        let policy = self.cfg.stages[s].scaling;
        let st = &mut self.stages[s];
        let current = st.pools[0].provisioned();
        let target = match policy {
            ScalingPolicy::None => return,
            ScalingPolicy::Threshold { l_high, l_low, step, max_runners, .. } => {
                let delta = threshold_autoscale(current, st.in_stage as f64, l_high, l_low, step);
                (i64::from(current) + delta).clamp(1, i64::from(max_runners.max(1))) as u32
            }
            ScalingPolicy::Predictive { target_rho, review_period, max_runners, .. } => {
                let observed = st.arrivals_since_review as f64 / review_period;
                let forecaster = st.forecaster.as_mut().expect("predictive stage has a forecaster");
                forecaster.observe(observed).expect("arrival counts are finite and non-negative");
                match forecaster.forecast() {
                    Some(rate) => {
                        let fixed: f64 = st.pools[1..].iter().map(|p| f64::from(p.provisioned()) * p.mu).sum();
                        let residual = (rate - fixed * target_rho).max(0.0);
                        desired_runners(residual, st.pools[0].mu, target_rho).min(max_runners)
                    }
                    None => current,
                }
            }
        };
        st.arrivals_since_review = 0;
        self.resize_pool(s, 0, target);
        if let Some(period) = policy.review_period() {
            self.push(self.now + period, EventKind::ScalingReview { stage: s }, 0);
        }
    }

    fn resize_pool(&mut self, s: usize, p: usize, target: u32) {
        let boot_delay = self.cfg.stages[s].boot_delay;
        let pool = &mut self.stages[s].pools[p];
        let current = pool.provisioned();
        if target > current {
            let mut add = target - current;
            let revived = add.min(pool.cancelled_boots);
            pool.cancelled_boots -= revived;
            add -= revived;
            let kept = add.min(pool.retiring);
            pool.retiring -= kept;
            add -= kept;
            if add == 0 {
                return;
            }
            if boot_delay == 0.0 {
                pool.idle += add;
                self.try_start(s, p);
            } else {
                pool.booting += add;
                let ready = self.now + boot_delay;
                for _ in 0..add {
                    self.push(ready, EventKind::RunnerReady { stage: s, pool: p }, 0);
                }
            }
        } else if target < current {
            let mut remove = current - target;
            let cancel = remove.min(pool.booting - pool.cancelled_boots);
            pool.cancelled_boots += cancel;
            remove -= cancel;
            let idle = remove.min(pool.idle);
            pool.idle -= idle;
            remove -= idle;
            pool.retiring += remove.min(pool.busy - pool.retiring);
        }
    }

    pub(crate) fn finished(&self) -> &[(u64, f64)] {
        &self.finished
    }

    pub(crate) fn report(&self) -> MetricsReport {
        let measured = self.horizon - self.warmup;
        let per_job = |sum: f64, n: u64| if n == 0 { 0.0 } else { sum / n as f64 };
        let stages: Vec<StageMetrics> = self
            .stages
            .iter()
            .zip(&self.cfg.stages)
            .map(|(st, sc)| {
                let a = &st.acc;
                StageMetrics {
                    name: sc.name.clone(),
                    l: a.area_l / measured,
                    lq: a.area_lq / measured,
                    w: per_job(a.sum_w, a.departures),
                    wq: per_job(a.sum_wq, a.departures),
                    rho: if a.area_capacity > 0.0 { a.area_busy / a.area_capacity } else { 0.0 },
                    throughput: a.departures as f64 / measured,
                    arrival_rate: a.arrivals_in_window as f64 / measured,
                    departures: a.departures,
                    mean_runners: a.area_provisioned / measured,
                    lq_windows: a.lq_windows.iter().map(|x| x / self.window_len).collect(),
                    arrived_total: a.arrived_total,
                    completed_total: a.completed_total,
                    in_system_at_end: st.in_stage,
                }
            })
            .collect();
        let g = &self.global;
        let classes = [PriorityClass::Critical, PriorityClass::Normal]
            .into_iter()
            .map(|class| {
                let c = usize::from(class.rank());
                ClassStats { class, jobs: g.class_jobs[c], wq: per_job(g.class_wait[c], g.class_jobs[c]) }
            })
            .collect();
        MetricsReport {
            horizon: self.horizon,
            warmup: self.warmup,
            bottleneck: argmax_first(stages.iter().map(|s| s.rho)),
            stages,
            jobs_completed: g.completed,
            mean_response: per_job(g.sum_response, g.completed),
            max_lateness: g.max_lateness,
            classes,
        }
    }
}
