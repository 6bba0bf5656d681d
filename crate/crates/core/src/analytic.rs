//! Closed-form and approximate queueing results.
//!
//! All functions are pure. Rates are jobs/minute, times are minutes. Every
//! waiting-time function returns [`Error::Unstable`] exactly when the
//! utilization `λ/(cμ)` is at or above one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a single multi-server queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// Arrival rate, jobs/minute.
    pub lambda: f64,
    /// Per-server service rate, jobs/minute.
    pub mu: f64,
    /// Number of servers.
    pub c: u32,
    /// Squared coefficient of variation of inter-arrival times.
    pub ca2: f64,
    /// Squared coefficient of variation of service times.
    pub cs2: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, mu: f64, c: u32, ca2: f64, cs2: f64) -> Result<Self> {
        check_rates(lambda, mu, c)?;
        if !(ca2 >= 0.0 && ca2.is_finite()) || !(cs2 >= 0.0 && cs2.is_finite()) {
            return Err(Error::domain(format!(
                "squared coefficients of variation must be finite and >= 0 (ca2={ca2}, cs2={cs2})"
            )));
        }
        Ok(Self { lambda, mu, c, ca2, cs2 })
    }

    /// Poisson arrivals and exponential service.
    pub fn markovian(lambda: f64, mu: f64, c: u32) -> Result<Self> {
        Self::new(lambda, mu, c, 1.0, 1.0)
    }

    pub fn rho(&self) -> f64 {
        self.lambda / (f64::from(self.c) * self.mu)
    }

    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }

    /// Mean queueing delay under the model that matches the variability
    /// coefficients: exact Erlang-C for M/M/c, Allen-Cunneen for M/G/c with
    /// `c > 1`, Pollaczek-Khinchine for M/G/1, Kingman otherwise.
    pub fn wq(&self) -> Result<ModelEstimate> {
        let (model, wq) = if self.ca2 == 1.0 && self.cs2 == 1.0 {
            (QueueModel::Mmc, mmc_wq(self.lambda, self.mu, self.c)?)
        } else if self.ca2 == 1.0 && self.c == 1 {
            let mean = 1.0 / self.mu;
            let second = (1.0 + self.cs2) * mean * mean;
            (QueueModel::Mg1, mg1_wq(self.lambda, mean, second)?)
        } else if self.ca2 == 1.0 {
            (QueueModel::MgcAllenCunneen, mgc_wq_allen_cunneen(self.lambda, self.mu, self.c, self.cs2)?)
        } else {
            (QueueModel::GgcKingman, ggc_wq_kingman(self.lambda, self.mu, self.c, self.ca2, self.cs2)?)
        };
        Ok(ModelEstimate::from_wq(model, self.lambda, self.mu, self.rho(), wq))
    }
}

/// Which approximation produced a [`ModelEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueModel {
    Mmc,
    MgcAllenCunneen,
    GgcKingman,
    Mg1,
}

impl QueueModel {
    pub fn label(self) -> &'static str {
        match self {
            QueueModel::Mmc => "M/M/c (Erlang-C)",
            QueueModel::MgcAllenCunneen => "M/G/c (Allen-Cunneen)",
            QueueModel::GgcKingman => "G/G/c (Kingman)",
            QueueModel::Mg1 => "M/G/1 (Pollaczek-Khinchine)",
        }
    }
}

/// Mean-value summary for one queue, all derived from `W_q` with Little's law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelEstimate {
    pub model: QueueModel,
    pub rho: f64,
    pub wq: f64,
    pub w: f64,
    pub lq: f64,
    pub l: f64,
}

impl ModelEstimate {
    fn from_wq(model: QueueModel, lambda: f64, mu: f64, rho: f64, wq: f64) -> Self {
        let w = wq + 1.0 / mu;
        Self { model, rho, wq, w, lq: lambda * wq, l: lambda * w }
    }
}

fn check_rates(lambda: f64, mu: f64, c: u32) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("arrival rate must be finite and >= 0, got {lambda}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("service rate must be finite and > 0, got {mu}")));
    }
    if c == 0 {
        return Err(Error::domain("server count must be >= 1"));
    }
    Ok(())
}

fn stable_rho(lambda: f64, mu: f64, c: u32) -> Result<f64> {
    let rho = utilization(lambda, mu, c)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    Ok(rho)
}

/// `ρ = λ/(cμ)`. Values at or above one are returned as-is.
pub fn utilization(lambda: f64, mu: f64, c: u32) -> Result<f64> {
    check_rates(lambda, mu, c)?;
    Ok(lambda / (f64::from(c) * mu))
}

/// Erlang-C probability that an arriving job has to wait.
///
/// Evaluated through the Erlang-B recursion, which never forms `aᶜ` or `c!`
/// and stays finite for server counts in the tens of thousands.
pub fn erlang_c_pwait(lambda: f64, mu: f64, c: u32) -> Result<f64> {
    let rho = stable_rho(lambda, mu, c)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let a = lambda / mu;
    let mut blocking = 1.0;
    for k in 1..=c {
        let ab = a * blocking;
        blocking = ab / (f64::from(k) + ab);
    }
    let pwait = blocking / (1.0 - rho * (1.0 - blocking));
    Ok(pwait.clamp(0.0, 1.0))
}

/// Mean queueing delay of an M/M/c queue, `P_wait/(cμ − λ)`.
pub fn mmc_wq(lambda: f64, mu: f64, c: u32) -> Result<f64> {
    let pwait = erlang_c_pwait(lambda, mu, c)?;
    Ok(pwait / (f64::from(c) * mu - lambda))
}

/// Allen-Cunneen M/G/c delay: `((Cₛ² + 1)/2) · W_q(M/M/c)`.
pub fn mgc_wq_allen_cunneen(lambda: f64, mu: f64, c: u32, cs2: f64) -> Result<f64> {
    if !(cs2 >= 0.0 && cs2.is_finite()) {
        return Err(Error::domain(format!("cs2 must be finite and >= 0, got {cs2}")));
    }
    Ok((cs2 + 1.0) / 2.0 * mmc_wq(lambda, mu, c)?)
}

/// Kingman's heavy-traffic form `ρ/(1−ρ) · (Cₐ² + Cₛ²)/2 · 1/μ` with
/// `ρ = λ/(cμ)`. For `c > 1` this is the single-server expression applied
/// to the pooled utilization, without multi-server corrections.
pub fn ggc_wq_kingman(lambda: f64, mu: f64, c: u32, ca2: f64, cs2: f64) -> Result<f64> {
    if !(ca2 >= 0.0 && ca2.is_finite()) || !(cs2 >= 0.0 && cs2.is_finite()) {
        return Err(Error::domain(format!(
            "squared coefficients of variation must be finite and >= 0 (ca2={ca2}, cs2={cs2})"
        )));
    }
    let rho = stable_rho(lambda, mu, c)?;
    Ok(rho / (1.0 - rho) * (ca2 + cs2) / 2.0 / mu)
}

/// M/G/1 mean queueing delay `λ·E[S²] / (2(1−ρ))` from the first two
/// moments of the service time.
pub fn mg1_wq(lambda: f64, mean_s: f64, second_moment_s: f64) -> Result<f64> {
    if !(mean_s > 0.0 && mean_s.is_finite()) {
        return Err(Error::domain(format!("mean service time must be > 0, got {mean_s}")));
    }
    // relative slack so that E[S²] = E[S]² computed in floating point passes
    if !(second_moment_s >= mean_s * mean_s * (1.0 - 1e-12)) || !second_moment_s.is_finite() {
        return Err(Error::domain(format!(
            "second moment {second_moment_s} is below the squared mean {}",
            mean_s * mean_s
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("arrival rate must be finite and >= 0, got {lambda}")));
    }
    let rho = lambda * mean_s;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    Ok(lambda * second_moment_s / (2.0 * (1.0 - rho)))
}

/// Mean number in an M/G/1 system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkMeanJobs {
    /// `ρ + (ρ² + λ²σ²)/(2(1−ρ))`.
    pub standard: f64,
    /// `ρ + λ²σ²/(2(1−ρ))`, the form without the `ρ²` term. Kept for
    /// reconciliation with published figures; it does not reduce to the
    /// M/M/1 result.
    pub without_rho_squared: f64,
}

/// Pollaczek-Khinchine mean number of jobs in an M/G/1 system.
pub fn pk_mean_jobs(lambda: f64, mu: f64, sigma_s2: f64) -> Result<PkMeanJobs> {
    if !(sigma_s2 >= 0.0 && sigma_s2.is_finite()) {
        return Err(Error::domain(format!("service variance must be >= 0, got {sigma_s2}")));
    }
    let rho = stable_rho(lambda, mu, 1)?;
    let denom = 2.0 * (1.0 - rho);
    let variance_term = lambda * lambda * sigma_s2;
    Ok(PkMeanJobs {
        standard: rho + (rho * rho + variance_term) / denom,
        without_rho_squared: rho + variance_term / denom,
    })
}

/// Little's law, `L = λW`.
pub fn littles_law(lambda: f64, w: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !(w >= 0.0) {
        return Err(Error::domain(format!("littles_law needs lambda >= 0 and w >= 0, got ({lambda}, {w})")));
    }
    Ok(lambda * w)
}

/// A pool of identical runners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunnerPool {
    pub count: u32,
    /// Per-runner service rate, jobs/minute.
    pub mu: f64,
}

/// Runner pools with different per-runner service rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneousFleet {
    pools: Vec<RunnerPool>,
}

impl HeterogeneousFleet {
    pub fn new(pools: Vec<RunnerPool>) -> Result<Self> {
        if pools.is_empty() {
            return Err(Error::domain("fleet must contain at least one pool"));
        }
        for (i, p) in pools.iter().enumerate() {
            if p.count == 0 {
                return Err(Error::domain(format!("pool {i}: runner count must be >= 1")));
            }
            if !(p.mu > 0.0 && p.mu.is_finite()) {
                return Err(Error::domain(format!("pool {i}: service rate must be > 0, got {}", p.mu)));
            }
        }
        Ok(Self { pools })
    }

    pub fn homogeneous(count: u32, mu: f64) -> Result<Self> {
        Self::new(vec![RunnerPool { count, mu }])
    }

    pub fn pools(&self) -> &[RunnerPool] {
        &self.pools
    }

    pub fn total_runners(&self) -> u32 {
        self.pools.iter().map(|p| p.count).sum()
    }

    /// Whether every pool has the same service rate.
    pub fn is_homogeneous(&self) -> bool {
        self.pools.iter().all(|p| p.mu == self.pools[0].mu)
    }

    /// `ρ = λ/μ_eff`.
    pub fn utilization(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::domain(format!("arrival rate must be >= 0, got {lambda}")));
        }
        Ok(lambda / effective_service_rate(self)?)
    }
}

/// `μ_eff = Σ cᵢ·μᵢ`.
pub fn effective_service_rate(fleet: &HeterogeneousFleet) -> Result<f64> {
    if fleet.pools.is_empty() {
        return Err(Error::domain("fleet must contain at least one pool"));
    }
    Ok(fleet.pools.iter().map(|p| f64::from(p.count) * p.mu).sum())
}

/// Offered load on one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageLoad {
    pub lambda: f64,
    pub mu: f64,
    pub c: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub rho: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stages: Vec<StageStatus>,
    /// Stage with the highest utilization; the lowest index wins ties.
    pub bottleneck: usize,
}

impl StabilityReport {
    pub fn all_stable(&self) -> bool {
        self.stages.iter().all(|s| s.stable)
    }
}

pub fn stability_and_bottleneck(stages: &[StageLoad]) -> Result<StabilityReport> {
    if stages.is_empty() {
        return Err(Error::domain("at least one stage is required"));
    }
    let statuses = stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let rho = utilization(s.lambda, s.mu, s.c).map_err(|e| Error::domain(format!("stage {i}: {e}")))?;
            Ok(StageStatus { rho, stable: rho < 1.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport { bottleneck: argmax_first(statuses.iter().map(|s| s.rho)), stages: statuses })
}

/// Index of the largest value, first occurrence on ties.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// `k`-th harmonic number.
pub fn harmonic(k: u32) -> f64 {
    (1..=k).map(|i| 1.0 / f64::from(i)).sum()
}

/// Expected completion time of a job split into `k` independent exponential
/// subtasks with rate `mu`, all starting at once: `H_k/μ`.
pub fn forkjoin_expected_completion(k: u32, mu: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("fan-out must be >= 1"));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("subtask rate must be > 0, got {mu}")));
    }
    Ok(harmonic(k) / mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i128>;

    /// Erlang-C by direct series summation over exact rationals.
    fn erlang_c_exact(lambda: Q, mu: Q, c: u32) -> Q {
        let a = lambda / mu;
        let rho = a / Q::from_integer(c.into());
        let mut term = Q::from_integer(1);
        let mut partial = Q::from_integer(0);
        for k in 0..c {
            partial += term;
            term = term * a / Q::from_integer((k + 1).into());
        }
        term / ((Q::from_integer(1) - rho) * partial + term)
    }

    fn to_f64(q: Q) -> f64 {
        *q.numer() as f64 / *q.denom() as f64
    }

    #[test]
    fn utilization_examples() {
        assert!((utilization(20.0 / 60.0, 0.2, 5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(utilization(0.0, 0.2, 5).unwrap(), 0.0);
        assert!((utilization(0.5, 0.2, 5).unwrap() - 0.5).abs() < 1e-15);
        assert!(utilization(1.0, 0.0, 5).is_err());
        assert!(utilization(1.0, 1.0, 0).is_err());
        // no clamp above one
        assert!((utilization(1.2, 1.0, 1).unwrap() - 1.2).abs() < 1e-15);
    }

    #[test]
    fn erlang_c_matches_exact_series() {
        assert!((erlang_c_pwait(0.5, 1.0, 1).unwrap() - 0.5).abs() < 1e-15);
        let exact = erlang_c_exact(Q::new(1, 3), Q::new(1, 5), 5);
        let got = erlang_c_pwait(1.0 / 3.0, 0.2, 5).unwrap();
        assert!((got - to_f64(exact)).abs() < 1e-14, "{got} vs {exact}");
        assert!((got - 0.030_276_607_082_303_93).abs() < 1e-14);
        for c in 1..=12u32 {
            for num in 1..(4 * i128::from(c)) {
                let lambda = Q::new(num, 4);
                let exact = to_f64(erlang_c_exact(lambda, Q::from_integer(1), c));
                let got = erlang_c_pwait(to_f64(lambda), 1.0, c).unwrap();
                assert!((got - exact).abs() < 1e-12, "c={c} λ={lambda}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn erlang_c_small_and_large() {
        assert!(erlang_c_pwait(1e-9, 0.2, 5).unwrap() < 1e-30);
        assert_eq!(erlang_c_pwait(0.0, 0.2, 5).unwrap(), 0.0);
        let p = erlang_c_pwait(9_900.0, 1.0, 10_000).unwrap();
        assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        assert!(matches!(erlang_c_pwait(1.0, 0.2, 5), Err(Error::Unstable { .. })));
    }

    #[test]
    fn mmc_wq_examples() {
        assert!((mmc_wq(0.5, 1.0, 1).unwrap() - 1.0).abs() < 1e-15);
        let exact = erlang_c_exact(Q::new(1, 3), Q::new(1, 5), 5) / Q::new(2, 3);
        assert!((mmc_wq(1.0 / 3.0, 0.2, 5).unwrap() - to_f64(exact)).abs() < 1e-14);
        assert!((mmc_wq(1.0 / 3.0, 0.2, 5).unwrap() - 0.045_414_910_623_455_89).abs() < 1e-13);
        assert_eq!(mmc_wq(0.0, 0.2, 5).unwrap(), 0.0);
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mu = 1.3;
            let want = rho / (mu * (1.0 - rho));
            assert!((mmc_wq(rho * mu, mu, 1).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn allen_cunneen_examples() {
        assert_eq!(mgc_wq_allen_cunneen(1.0 / 3.0, 0.2, 5, 1.0).unwrap(), mmc_wq(1.0 / 3.0, 0.2, 5).unwrap());
        assert!((mgc_wq_allen_cunneen(0.5, 1.0, 1, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((mgc_wq_allen_cunneen(0.5, 1.0, 1, 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(mgc_wq_allen_cunneen(0.5, 1.0, 1, -1.0).is_err());
    }

    #[test]
    fn kingman_examples() {
        assert!((ggc_wq_kingman(0.5, 1.0, 1, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ggc_wq_kingman(3.0, 1.0, 4, 0.0, 0.0).unwrap(), 0.0);
        let md1 = ggc_wq_kingman(0.5, 1.0, 1, 1.0, 0.0).unwrap();
        assert!((md1 - 0.5).abs() < 1e-15);
        assert!((md1 - mg1_wq(0.5, 1.0, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mg1_examples() {
        assert!((mg1_wq(0.5, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mg1_wq(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(mg1_wq(0.0, 1.0, 2.0).unwrap(), 0.0);
        assert!(matches!(mg1_wq(0.5, 1.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(mg1_wq(1.0, 1.0, 2.0), Err(Error::Unstable { .. })));
    }

    #[test]
    fn pk_examples() {
        let exp = pk_mean_jobs(0.5, 1.0, 1.0).unwrap();
        assert!((exp.standard - 1.0).abs() < 1e-15);
        // literal variant misses the ρ² term: 0.5 + 0.25/1
        assert!((exp.without_rho_squared - 0.75).abs() < 1e-15);
        assert!((pk_mean_jobs(0.5, 1.0, 0.0).unwrap().standard - 0.75).abs() < 1e-15);
        assert_eq!(pk_mean_jobs(0.0, 1.0, 1.0).unwrap().standard, 0.0);
    }

    #[test]
    fn littles_law_examples() {
        assert!((littles_law(20.0, 0.1).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(littles_law(0.0, 7.0).unwrap(), 0.0);
        assert!(littles_law(-1.0, 1.0).is_err());
        assert!(littles_law(1.0, -1.0).is_err());
    }

    #[test]
    fn effective_rate_examples() {
        let f = |p: &[(u32, f64)]| {
            HeterogeneousFleet::new(p.iter().map(|&(count, mu)| RunnerPool { count, mu }).collect()).unwrap()
        };
        assert!((effective_service_rate(&f(&[(5, 0.2)])).unwrap() - 1.0).abs() < 1e-15);
        assert!((effective_service_rate(&f(&[(2, 0.5), (3, 0.1)])).unwrap() - 1.3).abs() < 1e-15);
        assert_eq!(effective_service_rate(&f(&[(1, 1.0), (1, 1.0)])).unwrap(), 2.0);
        assert!((f(&[(5, 0.2)]).utilization(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(HeterogeneousFleet::new(vec![]).is_err());
        assert!(HeterogeneousFleet::homogeneous(0, 1.0).is_err());
    }

    #[test]
    fn bottleneck_examples() {
        let stage = |rho: f64| StageLoad { lambda: rho, mu: 1.0, c: 1 };
        let r = stability_and_bottleneck(&[stage(0.333), stage(0.9), stage(0.5)]).unwrap();
        assert_eq!(r.bottleneck, 1);
        assert!(r.all_stable());
        let r = stability_and_bottleneck(&[stage(0.3), stage(1.2)]).unwrap();
        assert!(!r.stages[1].stable && r.stages[0].stable);
        assert_eq!(stability_and_bottleneck(&[stage(0.3)]).unwrap().bottleneck, 0);
        assert_eq!(stability_and_bottleneck(&[stage(0.7), stage(0.7)]).unwrap().bottleneck, 0);
        assert!(stability_and_bottleneck(&[]).is_err());
    }

    #[test]
    fn forkjoin_examples() {
        assert_eq!(forkjoin_expected_completion(1, 1.0).unwrap(), 1.0);
        assert!((forkjoin_expected_completion(2, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((forkjoin_expected_completion(4, 2.0).unwrap() - 25.0 / 24.0).abs() < 1e-15);
        assert!(forkjoin_expected_completion(0, 1.0).is_err());
    }

    #[test]
    fn forkjoin_monte_carlo() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Exp};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let exp = Exp::new(1.0).unwrap();
        let n = 1_000_000;
        for (k, mu) in [(2u32, 1.0), (4, 2.0)] {
            let total: f64 = (0..n).map(|_| (0..k).map(|_| exp.sample(&mut rng) / mu).fold(0.0, f64::max)).sum();
            let mc = total / n as f64;
            let closed = forkjoin_expected_completion(k, mu).unwrap();
            assert!((mc - closed).abs() / closed < 0.01, "k={k}: {mc} vs {closed}");
        }
    }

    #[test]
    fn pwait_monotone_on_grid() {
        let mu = 0.5;
        for c in 1..=20u32 {
            let mut prev = 0.0;
            for i in 1..40 {
                let lambda = f64::from(c) * mu * f64::from(i) / 40.0;
                let p = erlang_c_pwait(lambda, mu, c).unwrap();
                assert!(p > prev, "not increasing in λ at c={c}");
                prev = p;
            }
        }
        for i in 1..30 {
            let lambda = f64::from(i) * 0.3;
            let c0 = (lambda / mu).floor() as u32 + 1;
            let mut prev = 1.0;
            for c in c0..c0 + 15 {
                let p = erlang_c_pwait(lambda, mu, c).unwrap();
                assert!(p < prev, "not decreasing in c at λ={lambda}");
                prev = p;
            }
        }
    }

    #[test]
    fn forkjoin_monotone_in_k() {
        let mut prev = 0.0;
        for k in 1..200 {
            let t = forkjoin_expected_completion(k, 0.7).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    proptest! {
        #[test]
        fn allen_cunneen_cs2_one_is_mmc(mu in 0.01f64..10.0, c in 1u32..50, frac in 0.0f64..0.999) {
            let lambda = frac * f64::from(c) * mu;
            prop_assert_eq!(mgc_wq_allen_cunneen(lambda, mu, c, 1.0).unwrap(), mmc_wq(lambda, mu, c).unwrap());
        }

        #[test]
        fn kingman_single_server_matches_mg1(mu in 0.01f64..10.0, frac in 0.0f64..0.999, cs2 in 0.0f64..10.0) {
            let lambda = frac * mu;
            let mean = 1.0 / mu;
            let second = (1.0 + cs2) * mean * mean;
            let k = ggc_wq_kingman(lambda, mu, 1, 1.0, cs2).unwrap();
            let m = mg1_wq(lambda, mean, second).unwrap();
            prop_assert!((k - m).abs() <= 1e-9 * m.max(1e-300), "{} vs {}", k, m);
        }

        #[test]
        fn pk_exponential_is_mm1(mu in 0.01f64..10.0, frac in 0.0f64..0.999) {
            let lambda = frac * mu;
            let rho = lambda / mu;
            let l = pk_mean_jobs(lambda, mu, 1.0 / (mu * mu)).unwrap().standard;
            prop_assert!((l - rho / (1.0 - rho)).abs() <= 1e-12 * (1.0 + rho / (1.0 - rho)));
        }

        #[test]
        fn unstable_exactly_at_rho_ge_one(mu in 0.01f64..10.0, c in 1u32..30, frac in 0.0f64..2.0) {
            let lambda = frac * f64::from(c) * mu;
            let rho = utilization(lambda, mu, c).unwrap();
            let results = [
                erlang_c_pwait(lambda, mu, c).map(|_| ()),
                mmc_wq(lambda, mu, c).map(|_| ()),
                mgc_wq_allen_cunneen(lambda, mu, c, 0.5).map(|_| ()),
                ggc_wq_kingman(lambda, mu, c, 2.0, 0.5).map(|_| ()),
            ];
            for r in results {
                prop_assert_eq!(matches!(r, Err(Error::Unstable { .. })), rho >= 1.0);
                prop_assert_eq!(r.is_ok(), rho < 1.0);
            }
            let rho1 = utilization(lambda, mu, 1).unwrap();
            prop_assert_eq!(mg1_wq(lambda, 1.0 / mu, 2.0 / (mu * mu)).is_ok(), lambda * (1.0 / mu) < 1.0);
            prop_assert_eq!(pk_mean_jobs(lambda, mu, 1.0).is_err(), rho1 >= 1.0);
        }
    }
}
