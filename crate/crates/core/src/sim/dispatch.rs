//! Routing jobs to runner pools within a stage.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchPolicy {
    /// Uniform over pools with an idle runner, or over all pools if none is idle.
    Random,
    /// Fewest queued plus in-service tasks.
    Jsq,
    /// Above-median jobs to the fastest pool, the rest by JSQ over the others.
    SizeBased,
}

/// What dispatch sees of one pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolView {
    pub mu: f64,
    pub idle: u32,
    pub queued: usize,
    pub in_service: u32,
}

impl PoolView {
    fn load(&self) -> usize {
        self.queued + self.in_service as usize
    }
}

/// Rolling window of recent size estimates for the size-based median.
#[derive(Debug, Clone)]
pub struct SizeHistory {
    capacity: usize,
    recent: VecDeque<f64>,
}

impl SizeHistory {
    pub const DEFAULT_CAPACITY: usize = 101;

    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), recent: VecDeque::with_capacity(capacity) }
    }

    pub fn record(&mut self, size: f64) {
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(size);
    }

    pub fn median(&self) -> Option<f64> {
        if self.recent.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = self.recent.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
    }
}

fn shortest_queue(pools: &[PoolView], candidates: impl Iterator<Item = usize>) -> usize {
    candidates.min_by_key(|&i| (pools[i].load(), i)).unwrap_or(0)
}

fn fastest(pools: &[PoolView]) -> usize {
    let mut best = 0;
    for (i, p) in pools.iter().enumerate() {
        if p.mu > pools[best].mu {
            best = i;
        }
    }
    best
}

/// Picks the pool for a task of the given estimated size.
pub fn dispatch<R: Rng + ?Sized>(
    size_estimate: f64,
    pools: &[PoolView],
    policy: DispatchPolicy,
    median: Option<f64>,
    rng: &mut R,
) -> usize {
    if pools.len() <= 1 {
        return 0;
    }
    match policy {
        DispatchPolicy::Random => {
            let idle: Vec<usize> = (0..pools.len()).filter(|&i| pools[i].idle > 0).collect();
            if idle.is_empty() {
                rng.random_range(0..pools.len())
            } else {
                idle[rng.random_range(0..idle.len())]
            }
        }
        DispatchPolicy::Jsq => shortest_queue(pools, 0..pools.len()),
        DispatchPolicy::SizeBased => {
            let fast = fastest(pools);
            match median {
                Some(m) if size_estimate > m => fast,
                Some(_) => shortest_queue(pools, (0..pools.len()).filter(|&i| i != fast)),
                None => shortest_queue(pools, 0..pools.len()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view(mu: f64, idle: u32, queued: usize, in_service: u32) -> PoolView {
        PoolView { mu, idle, queued, in_service }
    }

    #[test]
    fn dispatch_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pools = [view(1.0, 0, 2, 1), view(1.0, 0, 0, 1), view(1.0, 0, 1, 1)];
        assert_eq!(dispatch(1.0, &pools, DispatchPolicy::Jsq, None, &mut rng), 1);
        for policy in [DispatchPolicy::Random, DispatchPolicy::Jsq, DispatchPolicy::SizeBased] {
            assert_eq!(dispatch(1.0, &[view(1.0, 0, 9, 1)], policy, Some(0.5), &mut rng), 0);
        }
        let het = [view(0.1, 1, 0, 0), view(0.5, 1, 0, 0)];
        assert_eq!(dispatch(10.0, &het, DispatchPolicy::SizeBased, Some(3.0), &mut rng), 1);
        assert_eq!(dispatch(1.0, &het, DispatchPolicy::SizeBased, Some(3.0), &mut rng), 0);
    }

    #[test]
    fn jsq_tie_goes_to_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pools = [view(1.0, 0, 1, 1), view(1.0, 0, 0, 2), view(1.0, 0, 0, 3)];
        assert_eq!(dispatch(1.0, &pools, DispatchPolicy::Jsq, None, &mut rng), 0);
    }

    #[test]
    fn random_prefers_idle_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pools = [view(1.0, 0, 3, 1), view(1.0, 2, 0, 0), view(1.0, 0, 0, 1), view(1.0, 1, 0, 0)];
        let mut hits = [0; 4];
        for _ in 0..2000 {
            hits[dispatch(1.0, &pools, DispatchPolicy::Random, None, &mut rng)] += 1;
        }
        assert_eq!(hits[0] + hits[2], 0);
        assert!(hits[1] > 800 && hits[3] > 800);
        let busy = [view(1.0, 0, 3, 1), view(1.0, 0, 0, 1)];
        let mut seen = [false; 2];
        for _ in 0..100 {
            seen[dispatch(1.0, &busy, DispatchPolicy::Random, None, &mut rng)] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn size_history_median() {
        let mut h = SizeHistory::new(3);
        assert_eq!(h.median(), None);
        h.record(5.0);
        h.record(1.0);
        assert_eq!(h.median(), Some(3.0));
        h.record(9.0);
        h.record(2.0);
        assert_eq!(h.median(), Some(2.0));
    }
}
