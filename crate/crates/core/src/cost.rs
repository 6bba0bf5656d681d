//! Weighted runner/waiting cost and SLA-constrained runner sizing.

use serde::{Deserialize, Serialize};

use crate::analytic::mmc_wq;
use crate::error::{Error, Result};

/// How many consecutive cost increases end the upward scan.
const RISING_STEPS_TO_STOP: u32 = 3;
/// Hard bound on the scan length above the starting runner count.
pub const MAX_SCAN: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Currency per runner-minute.
    pub runner_rate: f64,
    /// Currency per minute a job spends waiting.
    pub wait_rate: f64,
    /// Weight on the runner term.
    pub w1: f64,
    /// Weight on the waiting term.
    pub w2: f64,
    /// Accounting period in minutes.
    pub horizon: f64,
}

impl CostModel {
    pub fn new(runner_rate: f64, wait_rate: f64, w1: f64, w2: f64, horizon: f64) -> Result<Self> {
        let m = Self { runner_rate, wait_rate, w1, w2, horizon };
        m.validate()?;
        Ok(m)
    }

    /// Unit weights over a one-hour horizon.
    pub fn hourly(runner_rate: f64, wait_rate: f64) -> Result<Self> {
        Self::new(runner_rate, wait_rate, 1.0, 1.0, 60.0)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(format!("cost.{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("runner_rate", self.runner_rate)?;
        nonneg("wait_rate", self.wait_rate)?;
        nonneg("w1", self.w1)?;
        nonneg("w2", self.w2)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation(format!("cost.horizon must be > 0, got {}", self.horizon)));
        }
        Ok(())
    }

    /// Cost over the horizon for an average of `runners` provisioned runners
    /// and a mean queueing delay `wq` at arrival rate `lambda`.
    pub fn breakdown(&self, runners: f64, lambda: f64, wq: f64) -> CostBreakdown {
        let runner = self.w1 * runners * self.horizon * self.runner_rate;
        let waiting = self.w2 * lambda * self.horizon * wq * self.wait_rate;
        CostBreakdown { runner, waiting, total: runner + waiting, wq }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub runner: f64,
    pub waiting: f64,
    pub total: f64,
    /// Queueing delay the waiting term was computed from.
    pub wq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaConstraint {
    /// Upper bound on mean queueing delay, minutes.
    pub w_max: f64,
}

impl SlaConstraint {
    pub fn new(w_max: f64) -> Result<Self> {
        if !(w_max > 0.0) {
            return Err(Error::validation(format!("sla.w_max must be > 0, got {w_max}")));
        }
        Ok(Self { w_max })
    }
}

/// `w₁·c·horizon·runner_rate + w₂·λ·horizon·W_q·wait_rate` with the
/// M/M/c queueing delay.
pub fn total_cost(c: u32, lambda: f64, mu: f64, model: &CostModel) -> Result<CostBreakdown> {
    let wq = mmc_wq(lambda, mu, c)?;
    Ok(model.breakdown(f64::from(c), lambda, wq))
}

/// Same cost expression with an externally supplied queueing delay.
pub fn total_cost_with_wq(c: u32, lambda: f64, wq: f64, model: &CostModel) -> CostBreakdown {
    model.breakdown(f64::from(c), lambda, wq)
}

/// Smallest runner count that keeps the queue stable.
pub fn stability_floor(lambda: f64, mu: f64) -> Result<u32> {
    if !(lambda >= 0.0 && lambda.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("need lambda >= 0 and mu > 0, got ({lambda}, {mu})")));
    }
    let floor = (lambda / mu).floor() + 1.0;
    if floor > f64::from(u32::MAX) {
        return Err(Error::domain("stability floor exceeds the supported runner count"));
    }
    Ok(floor as u32)
}

/// Least `c ≥ ⌊λ/μ⌋+1` with `W_q(c) ≤ w_max`.
pub fn min_runners_for_sla(lambda: f64, mu: f64, sla: &SlaConstraint) -> Result<u32> {
    let mut c = stability_floor(lambda, mu)?;
    loop {
        match mmc_wq(lambda, mu, c) {
            Ok(wq) if wq <= sla.w_max => return Ok(c),
            Ok(_) | Err(Error::Unstable { .. }) => c += 1,
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalRunners {
    pub c_star: u32,
    pub cost: CostBreakdown,
    /// Every runner count the scan evaluated, in increasing order.
    pub curve: Vec<(u32, CostBreakdown)>,
}

/// Scans runner counts upward from the SLA (or stability) floor and returns
/// the cheapest one. The scan stops once the cost has risen three times in a
/// row, once the waiting term is exactly zero, or after [`MAX_SCAN`] steps.
/// Ties go to the smaller count.
pub fn optimal_runner_count(
    lambda: f64,
    mu: f64,
    model: &CostModel,
    sla: Option<&SlaConstraint>,
) -> Result<OptimalRunners> {
    model.validate()?;
    let start = match sla {
        Some(sla) => min_runners_for_sla(lambda, mu, sla)?,
        None => stability_floor(lambda, mu)?,
    };
    let mut curve = Vec::new();
    let mut best: Option<(u32, CostBreakdown)> = None;
    let mut rising = 0;
    let mut prev_total = f64::INFINITY;
    for c in start..=start.saturating_add(MAX_SCAN) {
        let cost = total_cost(c, lambda, mu, model)?;
        curve.push((c, cost));
        if best.map_or(true, |(_, b)| cost.total < b.total) {
            best = Some((c, cost));
        }
        rising = if cost.total > prev_total { rising + 1 } else { 0 };
        prev_total = cost.total;
        // runner cost never decreases in c, so nothing beyond can be cheaper
        if rising >= RISING_STEPS_TO_STOP || cost.waiting == 0.0 {
            break;
        }
    }
    let (c_star, cost) = best.expect("scan evaluates at least one runner count");
    Ok(OptimalRunners { c_star, cost, curve })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub developers: u32,
    pub lambda: f64,
    pub c_star: u32,
    pub cost: f64,
}

/// Optimal fleet size as the team grows, with load proportional to the
/// number of developers.
pub fn developer_scaling_sweep(
    developers: &[u32],
    lambda_per_dev: f64,
    mu: f64,
    model: &CostModel,
    sla: Option<&SlaConstraint>,
) -> Result<Vec<SweepRow>> {
    if !(lambda_per_dev > 0.0 && lambda_per_dev.is_finite()) {
        return Err(Error::domain(format!("per-developer rate must be > 0, got {lambda_per_dev}")));
    }
    developers
        .iter()
        .map(|&d| {
            let lambda = f64::from(d) * lambda_per_dev;
            let opt = optimal_runner_count(lambda, mu, model, sla)?;
            Ok(SweepRow { developers: d, lambda, c_star: opt.c_star, cost: opt.cost.total })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case_study() -> CostModel {
        CostModel::hourly(0.05, 0.10).unwrap()
    }

    /// Exhaustive argmin over `[lo, hi]`, smallest c on ties.
    fn brute_force(lambda: f64, mu: f64, model: &CostModel, lo: u32, hi: u32) -> u32 {
        let mut best = (lo, f64::INFINITY);
        for c in lo..=hi {
            let t = total_cost(c, lambda, mu, model).unwrap().total;
            if t < best.1 {
                best = (c, t);
            }
        }
        best.0
    }

    #[test]
    fn case_study_costs() {
        let m = case_study();
        let injected = total_cost_with_wq(5, 1.0 / 3.0, 0.43, &m);
        assert!((injected.total - 15.86).abs() < 1e-9);
        assert!((injected.runner - 15.0).abs() < 1e-12);
        let computed = total_cost(5, 1.0 / 3.0, 0.2, &m).unwrap();
        assert!((computed.total - 15.090_829_821_246_91).abs() < 1e-9);
        let idle = total_cost(5, 0.0, 0.2, &m).unwrap();
        assert_eq!(idle.total, 5.0 * 60.0 * 0.05);
        assert!(matches!(total_cost(1, 1.0, 0.2, &m), Err(Error::Unstable { .. })));
    }

    #[test]
    fn weights_scale_terms() {
        let m = CostModel::new(0.05, 0.10, 2.0, 0.5, 60.0).unwrap();
        let base = total_cost(5, 1.0 / 3.0, 0.2, &case_study()).unwrap();
        let weighted = total_cost(5, 1.0 / 3.0, 0.2, &m).unwrap();
        assert!((weighted.runner - 2.0 * base.runner).abs() < 1e-12);
        assert!((weighted.waiting - 0.5 * base.waiting).abs() < 1e-12);
    }

    #[test]
    fn cost_model_validation() {
        assert!(CostModel::new(-1.0, 0.1, 1.0, 1.0, 60.0).is_err());
        assert!(CostModel::new(0.1, 0.1, 1.0, -1.0, 60.0).is_err());
        assert!(CostModel::new(0.1, 0.1, 1.0, 1.0, 0.0).is_err());
        assert!(SlaConstraint::new(0.0).is_err());
    }

    #[test]
    fn min_runners_examples() {
        // W_q(2) = 125/11 ≈ 11.36 > 5, W_q(3) ≈ 1.124 ≤ 5
        assert_eq!(min_runners_for_sla(1.0 / 3.0, 0.2, &SlaConstraint::new(5.0).unwrap()).unwrap(), 3);
        assert_eq!(min_runners_for_sla(1.0 / 3.0, 0.2, &SlaConstraint::new(12.0).unwrap()).unwrap(), 2);
        assert_eq!(min_runners_for_sla(1.0 / 3.0, 0.2, &SlaConstraint::new(1e9).unwrap()).unwrap(), 2);
        assert_eq!(min_runners_for_sla(1e-9, 0.2, &SlaConstraint::new(1.0).unwrap()).unwrap(), 1);
        assert_eq!(min_runners_for_sla(0.0, 0.2, &SlaConstraint::new(1.0).unwrap()).unwrap(), 1);
        // integral λ/μ: c = λ/μ is unstable, floor+1 is the first candidate
        assert_eq!(min_runners_for_sla(1.0, 0.5, &SlaConstraint::new(1e9).unwrap()).unwrap(), 3);
    }

    #[test]
    fn optimizer_case_study_matches_brute_force() {
        let m = case_study();
        let opt = optimal_runner_count(1.0 / 3.0, 0.2, &m, None).unwrap();
        assert_eq!(opt.c_star, brute_force(1.0 / 3.0, 0.2, &m, 2, 102));
        assert_eq!(opt.curve.first().unwrap().0, 2);
    }

    #[test]
    fn optimizer_zero_wait_rate_returns_floor() {
        let m = CostModel::hourly(0.05, 0.0).unwrap();
        assert_eq!(optimal_runner_count(1.0 / 3.0, 0.2, &m, None).unwrap().c_star, 2);
        let sla = SlaConstraint::new(1.0).unwrap();
        let floor = min_runners_for_sla(1.0 / 3.0, 0.2, &sla).unwrap();
        assert_eq!(optimal_runner_count(1.0 / 3.0, 0.2, &m, Some(&sla)).unwrap().c_star, floor);
    }

    #[test]
    fn optimizer_zero_runner_rate_matches_brute_force() {
        let m = CostModel::hourly(0.0, 0.10).unwrap();
        let sla = SlaConstraint::new(1.0).unwrap();
        let opt = optimal_runner_count(1.0 / 3.0, 0.2, &m, Some(&sla)).unwrap();
        let lo = min_runners_for_sla(1.0 / 3.0, 0.2, &sla).unwrap();
        assert_eq!(opt.c_star, brute_force(1.0 / 3.0, 0.2, &m, lo, lo + MAX_SCAN));
        assert_eq!(opt.cost.waiting, 0.0);
    }

    #[test]
    fn sweep_examples() {
        let m = case_study();
        let rows = developer_scaling_sweep(&[0, 10, 20], 2.0 / 60.0, 0.2, &m, None).unwrap();
        assert_eq!(rows[0].c_star, 1);
        assert_eq!(rows[0].cost, 60.0 * 0.05);
        assert!(f64::from(rows[2].c_star) >= 1.6 * f64::from(rows[1].c_star));
        assert!(rows.windows(2).all(|w| w[1].lambda > w[0].lambda && w[1].c_star >= w[0].c_star));

        let single = developer_scaling_sweep(&[15], 2.0 / 60.0, 0.2, &m, None).unwrap();
        let direct = optimal_runner_count(0.5, 0.2, &m, None).unwrap();
        assert_eq!(single[0].c_star, direct.c_star);
        assert_eq!(single[0].cost, direct.cost.total);
        assert!(developer_scaling_sweep(&[1], 0.0, 0.2, &m, None).is_err());
    }

    proptest! {
        #[test]
        fn sla_floor_is_tight(lambda in 0.01f64..20.0, mu in 0.05f64..2.0, w_max in 0.01f64..30.0) {
            let sla = SlaConstraint::new(w_max).unwrap();
            let c = min_runners_for_sla(lambda, mu, &sla).unwrap();
            prop_assert!(lambda / (f64::from(c) * mu) < 1.0);
            prop_assert!(mmc_wq(lambda, mu, c).unwrap() <= w_max);
            if c > 1 {
                match mmc_wq(lambda, mu, c - 1) {
                    Ok(wq) => prop_assert!(wq > w_max),
                    Err(e) => { let unstable = matches!(e, Error::Unstable { .. }); prop_assert!(unstable) }
                }
            }
        }

        #[test]
        fn sla_optimum_respects_floor(lambda in 0.01f64..10.0, mu in 0.05f64..2.0, w_max in 0.01f64..30.0,
                                      rr in 0.0f64..1.0, wr in 0.0f64..1.0) {
            let sla = SlaConstraint::new(w_max).unwrap();
            let m = CostModel::hourly(rr, wr).unwrap();
            let opt = optimal_runner_count(lambda, mu, &m, Some(&sla)).unwrap();
            prop_assert!(opt.c_star >= min_runners_for_sla(lambda, mu, &sla).unwrap());
        }
    }
}
