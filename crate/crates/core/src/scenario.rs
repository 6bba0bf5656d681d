//! Scenario files: one TOML document per experiment.
//!
//! Rates are given per hour and times in minutes; [`Scenario::sim_config`]
//! converts to the per-minute units used everywhere else. Unknown keys are
//! rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{HeterogeneousFleet, RunnerPool};
use crate::cost::{CostModel, SlaConstraint};
use crate::error::{Error, Result};
use crate::sim::{
    ArrivalProcess, BatchSize, DeadlineRule, Discipline, DispatchPolicy, ForkJoin, JobMix, ScalingPolicy,
    ServiceDistribution, SimConfig, SizeEstimation, StageConfig,
};

const CASE_STUDY: &str = include_str!("../scenarios/case_study.toml");
const SENSITIVITY: &str = include_str!("../scenarios/sensitivity.toml");

/// Names accepted by [`Scenario::builtin`].
pub const BUILTIN_NAMES: [&str; 2] = ["case_study", "sensitivity"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub horizon_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_min: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: u32,
    pub arrival: ArrivalSpec,
    pub service: ServiceSpec,
    #[serde(default)]
    pub jobs: JobsSpec,
    /// Applied to every stage that does not set its own policy.
    #[serde(default)]
    pub scaling: ScalingPolicy,
    pub stages: Vec<StageSpec>,
    pub cost: CostSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sla: Option<SlaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivitySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantSpec>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    Poisson { rate_per_hour: f64 },
    BatchPoisson { batches_per_hour: f64, batch: BatchSize },
    Trace { timestamps_min: Vec<f64> },
}

impl ArrivalSpec {
    pub fn to_process(&self) -> ArrivalProcess {
        match self {
            ArrivalSpec::Poisson { rate_per_hour } => ArrivalProcess::Poisson { rate: rate_per_hour / 60.0 },
            ArrivalSpec::BatchPoisson { batches_per_hour, batch } => {
                ArrivalProcess::BatchPoisson { rate: batches_per_hour / 60.0, batch: *batch }
            }
            ArrivalSpec::Trace { timestamps_min } => ArrivalProcess::Trace { timestamps: timestamps_min.clone() },
        }
    }

    /// Job arrival rate in jobs/hour when it is known exactly.
    pub fn nominal_rate_per_hour(&self) -> Option<f64> {
        match self {
            ArrivalSpec::Poisson { rate_per_hour } => Some(*rate_per_hour),
            ArrivalSpec::BatchPoisson { batches_per_hour, batch } => Some(batches_per_hour * batch.mean()),
            ArrivalSpec::Trace { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceSpec {
    Exponential { mu_per_hour: f64 },
    Deterministic { minutes: f64 },
    Lognormal { mean_min: f64, cv2: f64 },
    Empirical { samples_min: Vec<f64> },
}

impl ServiceSpec {
    pub fn to_distribution(&self) -> ServiceDistribution {
        match self {
            ServiceSpec::Exponential { mu_per_hour } => ServiceDistribution::Exponential { rate: mu_per_hour / 60.0 },
            ServiceSpec::Deterministic { minutes } => ServiceDistribution::Deterministic { value: *minutes },
            ServiceSpec::Lognormal { mean_min, cv2 } => ServiceDistribution::Lognormal { mean: *mean_min, cv2: *cv2 },
            ServiceSpec::Empirical { samples_min } => ServiceDistribution::Empirical { samples: samples_min.clone() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobsSpec {
    #[serde(default)]
    pub critical_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<DeadlineSpec>,
    #[serde(default)]
    pub size_estimation: SizeEstimation,
}

impl Default for JobsSpec {
    fn default() -> Self {
        let mix = JobMix::default();
        Self { critical_fraction: mix.critical_fraction, deadline: None, size_estimation: mix.size_estimation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeadlineSpec {
    pub offset_min: f64,
    #[serde(default)]
    pub per_work: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub count: u32,
    pub mu_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForkJoinSpec {
    pub k: u32,
    pub service: ServiceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    #[serde(default = "default_discipline")]
    pub discipline: Discipline,
    #[serde(default = "default_dispatch")]
    pub dispatch: DispatchPolicy,
    pub pools: Vec<PoolSpec>,
    /// Overrides the scenario-level service distribution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<ServiceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fork_join: Option<ForkJoinSpec>,
    #[serde(default)]
    pub boot_delay_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingPolicy>,
}

fn default_discipline() -> Discipline {
    Discipline::Fcfs
}

fn default_dispatch() -> DispatchPolicy {
    DispatchPolicy::Jsq
}

impl StageSpec {
    pub fn fleet(&self) -> Result<HeterogeneousFleet> {
        let pools = self.pools.iter().map(|p| RunnerPool { count: p.count, mu: p.mu_per_hour / 60.0 }).collect();
        HeterogeneousFleet::new(pools).map_err(|e| Error::validation(format!("stage '{}': {e}", self.name)))
    }

    pub fn total_runners(&self) -> u32 {
        self.pools.iter().map(|p| p.count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub runner_rate_per_min: f64,
    pub wait_rate_per_min: f64,
    #[serde(default = "unit")]
    pub w1: f64,
    #[serde(default = "unit")]
    pub w2: f64,
    #[serde(default = "sixty")]
    pub horizon_min: f64,
    /// Externally quoted mean queueing delay to reconcile against the
    /// computed one in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_wq_min: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

fn sixty() -> f64 {
    60.0
}

impl CostSpec {
    pub fn model(&self) -> Result<CostModel> {
        CostModel::new(self.runner_rate_per_min, self.wait_rate_per_min, self.w1, self.w2, self.horizon_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaSpec {
    pub w_max_min: f64,
}

/// Alternative arrival rates evaluated analytically next to the base case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySpec {
    pub lambda_per_hour: Vec<f64>,
}

/// A policy variant for `compare`. Unset fields keep the scenario's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discipline: Option<Discipline>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispatch: Option<DispatchPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingPolicy>,
    /// Runner count of every stage's first pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runners: Option<u32>,
}

impl Scenario {
    pub fn builtin(name: &str) -> Result<Scenario> {
        let text = match name {
            "case_study" => CASE_STUDY,
            "sensitivity" => SENSITIVITY,
            other => {
                return Err(Error::validation(format!(
                    "unknown builtin scenario '{other}' (available: {})",
                    BUILTIN_NAMES.join(", ")
                )))
            }
        };
        parse_scenario(text, &format!("builtin:{name}"))
    }

    /// Loads `builtin:<name>` or a file path.
    pub fn resolve(spec: &str) -> Result<Scenario> {
        match spec.strip_prefix("builtin:") {
            Some(name) => Scenario::builtin(name),
            None => load_scenario(spec),
        }
    }

    pub fn arrival_process(&self) -> ArrivalProcess {
        self.arrival.to_process()
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        self.cost.model()
    }

    pub fn sla(&self) -> Result<Option<SlaConstraint>> {
        self.sla.map(|s| SlaConstraint::new(s.w_max_min)).transpose()
    }

    pub fn job_mix(&self) -> JobMix {
        JobMix {
            critical_fraction: self.jobs.critical_fraction,
            deadline: self.jobs.deadline.map(|d| DeadlineRule { offset: d.offset_min, per_work: d.per_work }),
            size_estimation: self.jobs.size_estimation,
        }
    }

    pub fn stage_service(&self, stage: &StageSpec) -> ServiceDistribution {
        stage.service.as_ref().unwrap_or(&self.service).to_distribution()
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let stages = self
            .stages
            .iter()
            .map(|s| {
                let mut cfg = StageConfig::new(s.name.clone(), s.fleet()?, self.stage_service(s))
                    .with_discipline(s.discipline)
                    .with_dispatch(s.dispatch)
                    .with_scaling(s.scaling.unwrap_or(self.scaling), s.boot_delay_min);
                if let Some(fj) = &s.fork_join {
                    cfg = cfg.with_fork_join(ForkJoin { k: fj.k, service: fj.service.to_distribution() });
                }
                Ok(cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = SimConfig::new(stages, self.arrival_process(), self.horizon_min).with_jobs(self.job_mix());
        if let Some(w) = self.warmup_min {
            cfg = cfg.with_warmup(w);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::validation("scenario name must not be empty"));
        }
        if self.replications == 0 {
            return Err(Error::validation("replications must be >= 1"));
        }
        if self.stages.is_empty() {
            return Err(Error::validation("scenario needs at least one [[stages]] entry"));
        }
        self.sim_config()?.validate()?;
        self.cost_model()?;
        self.sla()?;
        if let Some(s) = &self.sensitivity {
            if let Some(bad) = s.lambda_per_hour.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                return Err(Error::validation(format!("sensitivity rates must be >= 0, got {bad}")));
            }
        }
        if let Some(r) = self.cost.reference_wq_min {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::validation(format!("reference_wq_min must be >= 0, got {r}")));
            }
        }
        for v in &self.variants {
            self.with_variant(v)
                .sim_config()?
                .validate()
                .map_err(|e| Error::validation(format!("variant '{}': {e}", v.name)))?;
        }
        Ok(())
    }

    /// Copy of the scenario with a variant's overrides applied.
    pub fn with_variant(&self, v: &VariantSpec) -> Scenario {
        let mut s = self.clone();
        for stage in &mut s.stages {
            if let Some(d) = v.discipline {
                stage.discipline = d;
            }
            if let Some(d) = v.dispatch {
                stage.dispatch = d;
            }
            if let Some(p) = v.scaling {
                stage.scaling = Some(p);
            }
            if let (Some(c), Some(pool)) = (v.runners, stage.pools.first_mut()) {
                pool.count = c;
            }
        }
        s
    }
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    if text.trim().is_empty() {
        return Err(Error::Parse { path: origin.to_string(), message: "file is empty".into() });
    }
    let scenario: Scenario =
        toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_string(), message: e.to_string() })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn write_scenario(scenario: &Scenario) -> Result<String> {
    toml::to_string(scenario).map_err(|e| Error::validation(format!("cannot serialize scenario: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_study_parameters() {
        let s = Scenario::builtin("case_study").unwrap();
        assert_eq!(s.arrival, ArrivalSpec::Poisson { rate_per_hour: 20.0 });
        assert_eq!(s.service, ServiceSpec::Exponential { mu_per_hour: 12.0 });
        assert_eq!(s.stages.len(), 1);
        assert_eq!(s.stages[0].total_runners(), 5);
        assert_eq!(s.cost.runner_rate_per_min, 0.05);
        assert_eq!(s.cost.wait_rate_per_min, 0.10);

        let cfg = s.sim_config().unwrap();
        assert!((cfg.arrivals.mean_rate() - 1.0 / 3.0).abs() < 1e-15);
        assert!((cfg.stages[0].service.mean() - 5.0).abs() < 1e-12);

        let sens = Scenario::builtin("sensitivity").unwrap();
        assert_eq!(sens.arrival, ArrivalSpec::Poisson { rate_per_hour: 30.0 });
        assert!(Scenario::builtin("nope").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_empty_input() {
        let base = write_scenario(&Scenario::builtin("case_study").unwrap()).unwrap();
        let extra = format!("bogus = 1\n{base}");
        assert!(matches!(parse_scenario(&extra, "x"), Err(Error::Parse { .. })));
        let nested = base.replace("mu_per_hour = 12.0", "mu_per_hour = 12.0\nspeed = 2.0");
        assert!(matches!(parse_scenario(&nested, "x"), Err(Error::Parse { .. })));
        assert!(matches!(parse_scenario("", "x"), Err(Error::Parse { .. })));
        assert!(matches!(parse_scenario("  \n", "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn parse_errors_carry_position() {
        let Err(Error::Parse { message, .. }) = parse_scenario("name = \"a\"\nhorizon_min = \n", "f.toml") else {
            panic!("expected parse error");
        };
        assert!(message.contains("line 2"), "{message}");
    }

    #[test]
    fn threshold_band_is_validated() {
        let mut s = Scenario::builtin("case_study").unwrap();
        s.scaling = ScalingPolicy::Threshold { l_high: 3.0, l_low: 3.0, step: 1, review_period: 5.0, max_runners: 10 };
        let text = write_scenario(&s).unwrap();
        let err = parse_scenario(&text, "x").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("l_high"), "{err}");
    }

    fn service_spec() -> impl Strategy<Value = ServiceSpec> {
        prop_oneof![
            (1.0..100.0f64).prop_map(|mu_per_hour| ServiceSpec::Exponential { mu_per_hour }),
            (0.1..30.0f64).prop_map(|minutes| ServiceSpec::Deterministic { minutes }),
            (0.1..30.0f64, 0.0..4.0f64).prop_map(|(mean_min, cv2)| ServiceSpec::Lognormal { mean_min, cv2 }),
            prop::collection::vec(0.1..30.0f64, 1..6).prop_map(|samples_min| ServiceSpec::Empirical { samples_min }),
        ]
    }

    fn arrival_spec() -> impl Strategy<Value = ArrivalSpec> {
        prop_oneof![
            (0.1..200.0f64).prop_map(|rate_per_hour| ArrivalSpec::Poisson { rate_per_hour }),
            (0.1..50.0f64, 1u32..5).prop_map(|(b, size)| ArrivalSpec::BatchPoisson {
                batches_per_hour: b,
                batch: BatchSize::Fixed { size }
            }),
            prop::collection::vec(0.0..100.0f64, 1..8).prop_map(|mut ts| {
                ts.sort_by(f64::total_cmp);
                ArrivalSpec::Trace { timestamps_min: ts }
            }),
        ]
    }

    fn scaling() -> impl Strategy<Value = ScalingPolicy> {
        prop_oneof![
            Just(ScalingPolicy::None),
            (0.0..5.0f64, 0.5..10.0f64, 1u32..4).prop_map(|(lo, gap, step)| ScalingPolicy::Threshold {
                l_high: lo + gap,
                l_low: lo,
                step,
                review_period: 5.0,
                max_runners: 20,
            }),
        ]
    }

    fn stage() -> impl Strategy<Value = StageSpec> {
        (
            prop::collection::vec((1u32..6, 1.0..60.0f64), 1..3),
            prop::sample::select(Discipline::ALL.to_vec()),
            prop::option::of(service_spec()),
            prop::option::of(scaling()),
            0.0..5.0f64,
        )
            .prop_map(|(pools, discipline, service, scaling, boot)| StageSpec {
                name: "build".into(),
                discipline,
                dispatch: DispatchPolicy::Jsq,
                pools: pools.into_iter().map(|(count, mu_per_hour)| PoolSpec { count, mu_per_hour }).collect(),
                service,
                fork_join: None,
                boot_delay_min: boot,
                scaling,
            })
    }

    fn scenario() -> impl Strategy<Value = Scenario> {
        (
            (10.0..1e5f64, prop::option::of(0.0..5.0f64), any::<u64>(), 1u32..10),
            arrival_spec(),
            service_spec(),
            prop::collection::vec(stage(), 1..3),
            (0.0..1.0f64, 0.0..1.0f64, prop::option::of(0.0..2.0f64)),
            prop::option::of(0.1..10.0f64),
            prop::option::of(prop::collection::vec(0.0..100.0f64, 0..3)),
        )
            .prop_map(|((horizon, warmup, seed, reps), arrival, service, stages, cost, sla, sens)| Scenario {
                name: "generated".into(),
                horizon_min: horizon,
                warmup_min: warmup,
                seed,
                replications: reps,
                arrival,
                service,
                jobs: JobsSpec::default(),
                scaling: ScalingPolicy::None,
                stages,
                cost: CostSpec {
                    runner_rate_per_min: cost.0,
                    wait_rate_per_min: cost.1,
                    w1: 1.0,
                    w2: 1.0,
                    horizon_min: 60.0,
                    reference_wq_min: cost.2,
                },
                sla: sla.map(|w_max_min| SlaSpec { w_max_min }),
                sensitivity: sens.map(|lambda_per_hour| SensitivitySpec { lambda_per_hour }),
                variants: vec![VariantSpec {
                    name: "spt".into(),
                    discipline: Some(Discipline::Spt),
                    dispatch: None,
                    scaling: None,
                    runners: Some(3),
                }],
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn write_then_load_is_identity(s in scenario()) {
            prop_assume!(s.validate().is_ok());
            let text = write_scenario(&s).unwrap();
            let back = parse_scenario(&text, "roundtrip").unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
