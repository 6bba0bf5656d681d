use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::sample_stats;

/// External job arrival process. Rates are jobs (or batches) per minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalProcess {
    Poisson {
        rate: f64,
    },
    /// Batches arrive as a Poisson process; every job in a batch shares the
    /// batch's arrival time.
    BatchPoisson {
        rate: f64,
        batch: BatchSize,
    },
    /// Replayed arrival times in minutes, non-decreasing.
    Trace {
        timestamps: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSize {
    Fixed {
        size: u32,
    },
    /// Geometric on `{1, 2, …}` with the given mean.
    Geometric {
        mean: f64,
    },
}

impl BatchSize {
    pub fn mean(&self) -> f64 {
        match *self {
            BatchSize::Fixed { size } => f64::from(size),
            BatchSize::Geometric { mean } => mean,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            BatchSize::Fixed { size } => size,
            BatchSize::Geometric { mean } => {
                let p_more = 1.0 - 1.0 / mean;
                let mut n = 1;
                while rng.random::<f64>() < p_more {
                    n += 1;
                }
                n
            }
        }
    }
}

impl ArrivalProcess {
    pub fn validate(&self) -> Result<()> {
        match self {
            ArrivalProcess::Poisson { rate } => check_positive("arrival rate", *rate),
            ArrivalProcess::BatchPoisson { rate, batch } => {
                check_positive("batch arrival rate", *rate)?;
                match *batch {
                    BatchSize::Fixed { size: 0 } => Err(Error::validation("batch size must be >= 1")),
                    BatchSize::Geometric { mean } if !(mean >= 1.0 && mean.is_finite()) => {
                        Err(Error::validation(format!("geometric batch mean must be >= 1, got {mean}")))
                    }
                    _ => Ok(()),
                }
            }
            ArrivalProcess::Trace { timestamps } => {
                if timestamps.is_empty() {
                    return Err(Error::validation("arrival trace is empty"));
                }
                if timestamps.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(Error::validation("trace timestamps must be finite and >= 0"));
                }
                if timestamps.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::validation("trace timestamps must be non-decreasing"));
                }
                Ok(())
            }
        }
    }

    /// Long-run job arrival rate, jobs/minute.
    pub fn mean_rate(&self) -> f64 {
        match self {
            ArrivalProcess::Poisson { rate } => *rate,
            ArrivalProcess::BatchPoisson { rate, batch } => rate * batch.mean(),
            ArrivalProcess::Trace { timestamps } => match timestamps.as_slice() {
                [first, .., last] if last > first => (timestamps.len() - 1) as f64 / (last - first),
                _ => 0.0,
            },
        }
    }

    /// Squared coefficient of variation of the gaps between consecutive jobs.
    /// Batch arrivals contribute zero-length gaps, giving `2·E[B] − 1`.
    pub fn ca2(&self) -> Option<f64> {
        match self {
            ArrivalProcess::Poisson { .. } => Some(1.0),
            ArrivalProcess::BatchPoisson { batch, .. } => Some(2.0 * batch.mean() - 1.0),
            ArrivalProcess::Trace { timestamps } => {
                let gaps: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
                sample_stats(&gaps).ok().map(|s| s.cv2)
            }
        }
    }
}

/// Draws successive arrival epochs with their batch sizes.
#[derive(Debug, Clone)]
pub(crate) struct ArrivalStream {
    process: ArrivalProcess,
    clock: f64,
    trace_pos: usize,
}

impl ArrivalStream {
    pub(crate) fn new(process: ArrivalProcess) -> Self {
        Self { process, clock: 0.0, trace_pos: 0 }
    }

    /// Next `(time, jobs)` pair, `None` once a trace is exhausted.
    pub(crate) fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(f64, u32)> {
        match &self.process {
            ArrivalProcess::Poisson { rate } => {
                self.clock += Exp::new(*rate).expect("validated rate").sample(rng);
                Some((self.clock, 1))
            }
            ArrivalProcess::BatchPoisson { rate, batch } => {
                self.clock += Exp::new(*rate).expect("validated rate").sample(rng);
                Some((self.clock, batch.sample(rng)))
            }
            ArrivalProcess::Trace { timestamps } => {
                let t = *timestamps.get(self.trace_pos)?;
                let mut n = 0;
                while self.trace_pos < timestamps.len() && timestamps[self.trace_pos] == t {
                    self.trace_pos += 1;
                    n += 1;
                }
                Some((t, n))
            }
        }
    }
}

/// Service demand distribution in minutes at nominal runner speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceDistribution {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Lognormal { mean: f64, cv2: f64 },
    Empirical { samples: Vec<f64> },
}

impl ServiceDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            ServiceDistribution::Exponential { rate } => check_positive("exponential rate", *rate),
            ServiceDistribution::Deterministic { value } => check_positive("deterministic service time", *value),
            ServiceDistribution::Lognormal { mean, cv2 } => {
                check_positive("lognormal mean", *mean)?;
                if !(*cv2 >= 0.0 && cv2.is_finite()) {
                    return Err(Error::validation(format!("lognormal cv2 must be >= 0, got {cv2}")));
                }
                Ok(())
            }
            ServiceDistribution::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::validation("empirical distribution has no samples"));
                }
                if samples.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::validation("empirical samples must all be > 0"));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ServiceDistribution::Exponential { rate } => 1.0 / rate,
            ServiceDistribution::Deterministic { value } => *value,
            ServiceDistribution::Lognormal { mean, .. } => *mean,
            ServiceDistribution::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Squared coefficient of variation. Empirical samples are resampled
    /// uniformly, so their population variance applies.
    pub fn cv2(&self) -> f64 {
        match self {
            ServiceDistribution::Exponential { .. } => 1.0,
            ServiceDistribution::Deterministic { .. } => 0.0,
            ServiceDistribution::Lognormal { cv2, .. } => *cv2,
            ServiceDistribution::Empirical { samples } => {
                let m = self.mean();
                let var = samples.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / samples.len() as f64;
                var / (m * m)
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        (1.0 + self.cv2()) * m * m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceDistribution::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            ServiceDistribution::Deterministic { value } => *value,
            ServiceDistribution::Lognormal { mean, cv2 } => lognormal_with_mean(*mean, *cv2).sample(rng),
            ServiceDistribution::Empirical { samples } => samples[rng.random_range(0..samples.len())],
        }
    }
}

pub(crate) fn lognormal_with_mean(mean: f64, cv2: f64) -> LogNormal<f64> {
    let sigma2 = (1.0 + cv2).ln();
    LogNormal::new(mean.ln() - sigma2 / 2.0, sigma2.sqrt()).expect("finite lognormal parameters")
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} must be finite and > 0, got {v}")))
    }
}
