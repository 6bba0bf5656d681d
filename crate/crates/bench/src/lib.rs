//! Shared workloads for the criterion benches.

use fleetq::sim::{ForkJoin, SimConfig};
use fleetq::{
    ArrivalProcess, Discipline, DispatchPolicy, HeterogeneousFleet, RunnerPool, ServiceDistribution, StageConfig,
};

/// The bundled single-stage M/M/5 case study over `horizon` minutes.
pub fn case_study(horizon: f64) -> SimConfig {
    let mut s = fleetq::Scenario::builtin("case_study").expect("bundled scenario parses");
    s.horizon_min = horizon;
    s.warmup_min = None;
    s.sim_config().expect("bundled scenario is valid")
}

/// Build stage on mixed runners feeding a fork-join test stage.
pub fn pipeline(horizon: f64) -> SimConfig {
    let build = StageConfig::new(
        "build",
        HeterogeneousFleet::new(vec![RunnerPool { count: 3, mu: 0.2 }, RunnerPool { count: 2, mu: 0.4 }]).unwrap(),
        ServiceDistribution::Lognormal { mean: 5.0, cv2: 2.0 },
    )
    .with_discipline(Discipline::Spt)
    .with_dispatch(DispatchPolicy::SizeBased);
    let test = StageConfig::new(
        "test",
        HeterogeneousFleet::homogeneous(8, 0.5).unwrap(),
        ServiceDistribution::Exponential { rate: 0.5 },
    )
    .with_fork_join(ForkJoin { k: 4, service: ServiceDistribution::Exponential { rate: 0.5 } });
    SimConfig::new(vec![build, test], ArrivalProcess::Poisson { rate: 0.5 }, horizon)
}
