//! Autoscaling controllers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{exp_smoothing_step, MovingAverage, RateForecaster, SmootherState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForecasterSpec {
    ExpSmoothing { alpha: f64 },
    MovingAverage { window: usize },
}

impl ForecasterSpec {
    pub(crate) fn build(&self) -> Result<Box<dyn RateForecaster>> {
        Ok(match *self {
            ForecasterSpec::ExpSmoothing { alpha } => Box::new(SmootherState::new(alpha)?),
            ForecasterSpec::MovingAverage { window } => Box::new(MovingAverage::new(window)?),
        })
    }
}

/// Runner-count controller for a stage. Reviews happen every
/// `review_period` minutes and add or remove runners in the stage's first
/// pool; other pools stay fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalingPolicy {
    #[default]
    None,
    /// Hysteresis on the number of jobs at the stage.
    Threshold { l_high: f64, l_low: f64, step: u32, review_period: f64, max_runners: u32 },
    /// Sizes the fleet for a target utilization at the forecast arrival rate.
    Predictive { target_rho: f64, forecaster: ForecasterSpec, review_period: f64, max_runners: u32 },
}

impl ScalingPolicy {
    pub fn review_period(&self) -> Option<f64> {
        match *self {
            ScalingPolicy::None => None,
            ScalingPolicy::Threshold { review_period, .. } | ScalingPolicy::Predictive { review_period, .. } => {
                Some(review_period)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_period = |p: f64| {
            if p > 0.0 && p.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(format!("review_period must be > 0, got {p}")))
            }
        };
        match *self {
            ScalingPolicy::None => Ok(()),
            ScalingPolicy::Threshold { l_high, l_low, step, review_period, max_runners } => {
                if !(l_low >= 0.0) {
                    return Err(Error::validation(format!("l_low must be >= 0, got {l_low}")));
                }
                if !(l_high > l_low) {
                    return Err(Error::validation(format!("l_high ({l_high}) must be greater than l_low ({l_low})")));
                }
                if step == 0 {
                    return Err(Error::validation("scaling step must be >= 1"));
                }
                if max_runners == 0 {
                    return Err(Error::validation("max_runners must be >= 1"));
                }
                check_period(review_period)
            }
            ScalingPolicy::Predictive { target_rho, forecaster, review_period, max_runners } => {
                if !(target_rho > 0.0 && target_rho < 1.0) {
                    return Err(Error::validation(format!("target_rho must lie in (0, 1), got {target_rho}")));
                }
                if max_runners == 0 {
                    return Err(Error::validation("max_runners must be >= 1"));
                }
                forecaster.build().map_err(|e| Error::validation(e.to_string()))?;
                check_period(review_period)
            }
        }
    }
}

/// Runner delta for the hysteresis policy: `+step` above `l_high`, `−step`
/// below `l_low`, never taking the fleet below one runner.
pub fn threshold_autoscale(current_runners: u32, jobs: f64, l_high: f64, l_low: f64, step: u32) -> i64 {
    if jobs > l_high {
        i64::from(step)
    } else if jobs < l_low {
        -i64::from(step.min(current_runners.saturating_sub(1)))
    } else {
        0
    }
}

/// `⌈λ̂ / (ρ_target · μ)⌉`, at least one.
pub fn desired_runners(forecast_rate: f64, mu: f64, target_rho: f64) -> u32 {
    let raw = (forecast_rate / (target_rho * mu)).ceil();
    if raw.is_finite() && raw >= 1.0 {
        raw.min(f64::from(u32::MAX)) as u32
    } else {
        1
    }
}

/// Updates the smoother with the latest observed rate and returns the runner
/// count that meets the utilization target at the new forecast.
pub fn predictive_autoscale(
    state: SmootherState,
    observed_rate: f64,
    mu: f64,
    target_rho: f64,
) -> Result<(SmootherState, u32)> {
    if !(target_rho > 0.0 && target_rho < 1.0) {
        return Err(Error::domain(format!("target_rho must lie in (0, 1), got {target_rho}")));
    }
    let next = exp_smoothing_step(state, observed_rate)?;
    let forecast = next.estimate.expect("smoothing step always sets an estimate");
    Ok((next, desired_runners(forecast, mu, target_rho)))
}
