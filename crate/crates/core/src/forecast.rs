//! Arrival-rate forecasting and sample statistics.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-minute arrival-rate observations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    samples: Vec<(i64, f64)>,
}

impl RateSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a series with minute indices `0, 1, 2, …`.
    pub fn from_rates(rates: &[f64]) -> Result<Self> {
        let mut s = Self::new();
        for (i, &r) in rates.iter().enumerate() {
            s.push(i as i64, r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, minute: i64, rate: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if minute <= last {
                return Err(Error::domain(format!(
                    "minute indices must be strictly increasing ({minute} after {last})"
                )));
            }
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::domain(format!("observed rate must be finite and >= 0, got {rate}")));
        }
        self.samples.push((minute, rate));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(i64, f64)] {
        &self.samples
    }
}

/// Mean of the last `window` observations. Gaps in the minute index are not
/// imputed.
pub fn sma_forecast(series: &RateSeries, window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::domain("window must be >= 1"));
    }
    if series.len() < window {
        return Err(Error::InsufficientData(format!(
            "moving average over {window} samples needs at least {window}, have {}",
            series.len()
        )));
    }
    let tail = &series.samples[series.len() - window..];
    Ok(tail.iter().map(|&(_, r)| r).sum::<f64>() / window as f64)
}

/// Exponential smoothing state. The estimate is empty until the first
/// observation, which initializes it directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherState {
    pub alpha: f64,
    pub estimate: Option<f64>,
}

impl SmootherState {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, estimate: None })
    }

    pub fn with_estimate(alpha: f64, estimate: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, estimate: Some(estimate) })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("smoothing parameter must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `λ̂ₜ = α·λₜ + (1−α)·λ̂ₜ₋₁`.
pub fn exp_smoothing_step(state: SmootherState, observed: f64) -> Result<SmootherState> {
    check_alpha(state.alpha)?;
    if !(observed >= 0.0 && observed.is_finite()) {
        return Err(Error::domain(format!("observed rate must be finite and >= 0, got {observed}")));
    }
    let estimate = match state.estimate {
        None => observed,
        Some(prev) => state.alpha * observed + (1.0 - state.alpha) * prev,
    };
    Ok(SmootherState { alpha: state.alpha, estimate: Some(estimate) })
}

/// A streaming rate estimator that predictive scaling can be driven by.
pub trait RateForecaster: std::fmt::Debug + Send {
    fn observe(&mut self, rate: f64) -> Result<()>;

    /// Current forecast, `None` until enough data has been observed.
    fn forecast(&self) -> Option<f64>;
}

impl RateForecaster for SmootherState {
    fn observe(&mut self, rate: f64) -> Result<()> {
        *self = exp_smoothing_step(*self, rate)?;
        Ok(())
    }

    fn forecast(&self) -> Option<f64> {
        self.estimate
    }
}

/// Streaming simple moving average.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    recent: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::domain("window must be >= 1"));
        }
        Ok(Self { window, recent: VecDeque::with_capacity(window) })
    }
}

impl RateForecaster for MovingAverage {
    fn observe(&mut self, rate: f64) -> Result<()> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::domain(format!("observed rate must be finite and >= 0, got {rate}")));
        }
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(rate);
        Ok(())
    }

    fn forecast(&self) -> Option<f64> {
        (self.recent.len() == self.window).then(|| self.recent.iter().sum::<f64>() / self.window as f64)
    }
}

/// Sample mean and squared coefficient of variation (unbiased variance over
/// the squared mean).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub cv2: f64,
}

pub fn sample_stats(values: &[f64]) -> Result<SampleStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("variance needs at least 2 samples, have {n}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(Error::DegenerateData("sample mean is zero".into()));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1) as f64;
    Ok(SampleStats { count: n, mean, cv2: var / (mean * mean) })
}

/// Arrival rate and inter-arrival `Cₐ²` from event timestamps (minutes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalStats {
    /// Jobs per minute, the reciprocal of the mean gap.
    pub rate: f64,
    pub mean_gap: f64,
    pub ca2: f64,
}

pub fn arrival_stats(timestamps: &[f64]) -> Result<ArrivalStats> {
    if timestamps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("timestamps must be non-decreasing"));
    }
    let gaps: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    let stats = sample_stats(&gaps).map_err(|e| match e {
        Error::InsufficientData(_) => Error::InsufficientData(format!(
            "Cₐ² needs at least 2 inter-arrival gaps (3 timestamps), have {}",
            timestamps.len()
        )),
        Error::DegenerateData(_) => Error::DegenerateData("all arrivals share one timestamp".into()),
        other => other,
    })?;
    Ok(ArrivalStats { rate: 1.0 / stats.mean, mean_gap: stats.mean, ca2: stats.cv2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sma_examples() {
        assert_eq!(sma_forecast(&RateSeries::from_rates(&[10.0, 20.0, 30.0]).unwrap(), 3).unwrap(), 20.0);
        assert_eq!(sma_forecast(&RateSeries::from_rates(&[7.5; 9]).unwrap(), 4).unwrap(), 7.5);
        assert_eq!(sma_forecast(&RateSeries::from_rates(&[0.0, 0.0, 60.0]).unwrap(), 2).unwrap(), 30.0);
        assert!(matches!(sma_forecast(&RateSeries::from_rates(&[1.0]).unwrap(), 2), Err(Error::InsufficientData(_))));
        assert!(sma_forecast(&RateSeries::from_rates(&[1.0]).unwrap(), 0).is_err());
    }

    #[test]
    fn series_rejects_bad_samples() {
        let mut s = RateSeries::new();
        s.push(3, 1.0).unwrap();
        assert!(s.push(3, 1.0).is_err());
        assert!(s.push(2, 1.0).is_err());
        assert!(s.push(5, -1.0).is_err());
        // a gap in minutes is accepted and not filled in
        s.push(9, 2.0).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn smoothing_examples() {
        let s = exp_smoothing_step(SmootherState::with_estimate(0.5, 20.0).unwrap(), 10.0).unwrap();
        assert_eq!(s.estimate, Some(15.0));
        let s = exp_smoothing_step(SmootherState::with_estimate(0.3, 4.0).unwrap(), 4.0).unwrap();
        assert_eq!(s.estimate, Some(4.0));
        let s = exp_smoothing_step(SmootherState::with_estimate(0.2, 10.0).unwrap(), 0.0).unwrap();
        assert_eq!(s.estimate, Some(8.0));
        let s = exp_smoothing_step(SmootherState::new(0.2).unwrap(), 6.0).unwrap();
        assert_eq!(s.estimate, Some(6.0));
        for alpha in [0.0, 1.0, -0.1, 1.5] {
            assert!(SmootherState::new(alpha).is_err());
            let raw = SmootherState { alpha, estimate: Some(1.0) };
            assert!(exp_smoothing_step(raw, 1.0).is_err());
        }
    }

    #[test]
    fn moving_average_forecaster_matches_sma() {
        let rates = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut ma = MovingAverage::new(3).unwrap();
        for (i, &r) in rates.iter().enumerate() {
            ma.observe(r).unwrap();
            let series = RateSeries::from_rates(&rates[..=i]).unwrap();
            assert_eq!(ma.forecast(), sma_forecast(&series, 3).ok());
        }
    }

    #[test]
    fn sample_stats_examples() {
        let ts: Vec<f64> = (0..50).map(|i| 3.0 * f64::from(i)).collect();
        let a = arrival_stats(&ts).unwrap();
        assert!((a.rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.ca2, 0.0);

        let s = sample_stats(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.cv2, 0.5);

        assert!(matches!(sample_stats(&[1.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(sample_stats(&[0.0, 0.0]), Err(Error::DegenerateData(_))));
        assert!(matches!(arrival_stats(&[0.0, 5.0]), Err(Error::InsufficientData(_))));
        assert!(arrival_stats(&[0.0, 5.0, 4.0]).is_err());
    }

    #[test]
    fn exponential_gaps_have_unit_cv2() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Exp};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let exp = Exp::new(1.0).unwrap();
        let gaps: Vec<f64> = (0..100_000).map(|_| exp.sample(&mut rng)).collect();
        let s = sample_stats(&gaps).unwrap();
        assert!((s.cv2 - 1.0).abs() < 0.05, "cv2 = {}", s.cv2);
        assert!((s.mean - 1.0).abs() < 0.02);
    }

    #[test]
    fn smoothing_converges_geometrically() {
        for alpha in [0.1, 0.5, 0.9] {
            let v = 12.0;
            let start = 100.0;
            let mut s = SmootherState::with_estimate(alpha, start).unwrap();
            for t in 1..=200 {
                s = exp_smoothing_step(s, v).unwrap();
                let bound = (1.0 - alpha).powi(t) * (start - v).abs();
                let rounding = 4.0 * f64::from(t) * f64::EPSILON * start;
                assert!((s.estimate.unwrap() - v).abs() <= bound + rounding);
            }
        }
    }

    proptest! {
        #[test]
        fn sma_within_window_bounds(rates in prop::collection::vec(0.0f64..1000.0, 1..60), w in 1usize..20) {
            prop_assume!(w <= rates.len());
            let series = RateSeries::from_rates(&rates).unwrap();
            let f = sma_forecast(&series, w).unwrap();
            let tail = &rates[rates.len() - w..];
            let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(f >= lo - 1e-9 * hi.abs() && f <= hi + 1e-9 * hi.abs());
        }

        #[test]
        fn smoothing_stays_in_envelope(rates in prop::collection::vec(0.0f64..1000.0, 1..60), alpha in 0.01f64..0.99) {
            let mut s = SmootherState::new(alpha).unwrap();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &r in &rates {
                s = exp_smoothing_step(s, r).unwrap();
                lo = lo.min(r);
                hi = hi.max(r);
                let e = s.estimate.unwrap();
                prop_assert!(e >= lo * (1.0 - 1e-12) && e <= hi * (1.0 + 1e-12));
            }
        }

        #[test]
        fn stats_scale_consistent(gaps in prop::collection::vec(0.01f64..100.0, 2..50), scale in 0.001f64..1000.0) {
            let a = sample_stats(&gaps).unwrap();
            let scaled: Vec<f64> = gaps.iter().map(|g| g * scale).collect();
            let b = sample_stats(&scaled).unwrap();
            prop_assert!((b.mean - a.mean * scale).abs() <= 1e-9 * b.mean);
            prop_assert!((b.cv2 - a.cv2).abs() <= 1e-9 * (1.0 + a.cv2));
        }
    }
}
