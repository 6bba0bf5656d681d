//! Analytic and simulated views of a scenario, side by side.
//!
//! Every report type serializes with a fixed set of keys; values that do not
//! apply are `null` rather than missing.

use std::fmt::Write as _;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytic::{effective_service_rate, QueueParams};
use crate::cost::{min_runners_for_sla, optimal_runner_count, total_cost_with_wq, CostBreakdown};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, StageSpec, VariantSpec};
use crate::sim::{run_simulation, Discipline, MetricsReport};

pub const STATUS_OK: &str = "ok";
pub const STATUS_UNSTABLE: &str = "unstable (ρ ≥ 1)";
pub const STATUS_NOT_APPLICABLE: &str = "not applicable";

/// Relative gap under which a quoted reference `W_q` counts as consistent
/// with the computed one.
const REFERENCE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub replications: u32,
    pub horizon_min: f64,
    pub warmup_min: f64,
    /// Long-run job arrival rate, jobs/minute.
    pub arrival_rate: f64,
    pub stages: Vec<StageReport>,
    pub bottleneck: Bottleneck,
    pub cost: CostReport,
    pub sla: SlaReport,
    pub sensitivity: Vec<SensitivityRow>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub index: usize,
    pub name: String,
    pub runners: u32,
    pub analytic: AnalyticColumns,
    pub simulated: Option<SimulatedColumns>,
    pub delta: Option<Delta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticColumns {
    pub status: String,
    pub model: Option<String>,
    pub rho: Option<f64>,
    /// Utilization as an exact fraction of the configured rates.
    pub rho_exact: Option<String>,
    pub wq: Option<f64>,
    pub w: Option<f64>,
    pub lq: Option<f64>,
    pub l: Option<f64>,
}

/// Mean over replications with a 95% Student-t half width (`null` for a
/// single replication).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: Option<f64>,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Estimate { mean, ci95: None };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("n >= 2 gives positive dof").inverse_cdf(0.975);
        Estimate { mean, ci95: Some(t * (var / n as f64).sqrt()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedColumns {
    pub rho: Estimate,
    pub wq: Estimate,
    pub w: Estimate,
    pub lq: Estimate,
    pub l: Estimate,
    pub throughput: Estimate,
    pub mean_runners: Estimate,
    /// Largest `|L − λW| / L` over replications.
    pub littles_law_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub wq_abs: Option<f64>,
    pub wq_rel: Option<f64>,
    pub rho_abs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub analytic: Option<usize>,
    pub simulated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub runners: u32,
    pub analytic: Option<CostBreakdown>,
    pub simulated: Option<CostBreakdown>,
    pub reference: Option<ReferenceCheck>,
}

/// Reconciles an externally quoted `W_q` with the computed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub stated_wq: f64,
    pub computed_wq: Option<f64>,
    pub consistent: bool,
    pub cost_at_stated_wq: CostBreakdown,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaReport {
    pub w_max: Option<f64>,
    /// End-to-end queueing delay, summed over stages.
    pub analytic_wq: Option<f64>,
    pub analytic_pass: Option<bool>,
    pub simulated_wq: Option<f64>,
    pub simulated_pass: Option<bool>,
    /// Smallest runner count meeting the SLA for a single homogeneous stage.
    pub min_runners: Option<u32>,
}

impl SlaReport {
    /// Simulated verdict when available, otherwise the analytic one.
    pub fn met(&self) -> Option<bool> {
        self.simulated_pass.or(self.analytic_pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub lambda_per_hour: f64,
    pub rho: Option<f64>,
    pub rho_exact: Option<String>,
    pub status: String,
    pub wq: Option<f64>,
    /// Analytic `W_q` at this rate divided by the base-case value.
    pub wq_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub analytic: bool,
    pub simulate: bool,
}

impl ReportOptions {
    pub const ANALYTIC: ReportOptions = ReportOptions { analytic: true, simulate: false };
    pub const SIMULATE: ReportOptions = ReportOptions { analytic: false, simulate: true };
    pub const FULL: ReportOptions = ReportOptions { analytic: true, simulate: true };
}

fn exact_ratio(x: f64) -> Option<Ratio<i64>> {
    let r = Ratio::<i64>::approximate_float(x)?;
    (*r.numer() as f64 / *r.denom() as f64 == x).then_some(r)
}

/// `λ/(Σ cᵢμᵢ)` as a reduced fraction of the configured per-hour rates.
fn rho_fraction(lambda_per_hour: f64, stage: &StageSpec) -> Option<String> {
    let lambda = exact_ratio(lambda_per_hour)?;
    let mut capacity = Ratio::from_integer(0i64);
    for p in &stage.pools {
        capacity += Ratio::from_integer(i64::from(p.count)) * exact_ratio(p.mu_per_hour)?;
    }
    if capacity == Ratio::from_integer(0) {
        return None;
    }
    Some((lambda / capacity).to_string())
}

struct StageAnalysis {
    columns: AnalyticColumns,
    rho: Option<f64>,
}

fn analyze_stage(
    scenario: &Scenario,
    stage: &StageSpec,
    lambda: f64,
    lambda_per_hour: Option<f64>,
) -> Result<StageAnalysis> {
    let fleet = stage.fleet()?;
    let c = fleet.total_runners();
    let mu = effective_service_rate(&fleet)? / f64::from(c);
    let rho = lambda / (f64::from(c) * mu);
    let rho_exact = lambda_per_hour.and_then(|l| rho_fraction(l, stage));
    let na = |status: &str, model: Option<String>| AnalyticColumns {
        status: status.to_string(),
        model,
        rho: Some(rho),
        rho_exact: rho_exact.clone(),
        wq: None,
        w: None,
        lq: None,
        l: None,
    };
    if stage.fork_join.is_some() {
        return Ok(StageAnalysis { columns: na(STATUS_NOT_APPLICABLE, None), rho: Some(rho) });
    }
    let Some(ca2) = scenario.arrival_process().ca2() else {
        return Ok(StageAnalysis { columns: na(STATUS_NOT_APPLICABLE, None), rho: Some(rho) });
    };
    let cs2 = scenario.stage_service(stage).cv2();
    let params = QueueParams::new(lambda, mu, c, ca2, cs2)?;
    match params.wq() {
        Ok(est) => {
            let mut label = est.model.label().to_string();
            if !fleet.is_homogeneous() {
                label.push_str(", pooled μ_eff");
            }
            Ok(StageAnalysis {
                columns: AnalyticColumns {
                    status: STATUS_OK.to_string(),
                    model: Some(label),
                    rho: Some(rho),
                    rho_exact,
                    wq: Some(est.wq),
                    w: Some(est.w),
                    lq: Some(est.lq),
                    l: Some(est.l),
                },
                rho: Some(rho),
            })
        }
        Err(Error::Unstable { .. }) => Ok(StageAnalysis { columns: na(STATUS_UNSTABLE, None), rho: Some(rho) }),
        Err(e) => Err(e),
    }
}

/// Sum of per-stage analytic `W_q`, or `None` if any stage lacks one.
fn total_wq(stages: &[AnalyticColumns]) -> Option<f64> {
    stages.iter().map(|s| s.wq).sum()
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Runs the scenario's replications concurrently; results come back in
/// replication order.
pub fn run_replications(scenario: &Scenario) -> Result<Vec<MetricsReport>> {
    let cfg = scenario.sim_config()?;
    (0..u64::from(scenario.replications))
        .into_par_iter()
        .map(|r| run_simulation(&cfg, scenario.seed.wrapping_add(r)))
        .collect()
}

fn simulated_columns(runs: &[MetricsReport], stage: usize) -> SimulatedColumns {
    let pick = |f: fn(&crate::sim::StageMetrics) -> f64| {
        Estimate::from_samples(&runs.iter().map(|r| f(&r.stages[stage])).collect::<Vec<_>>())
    };
    SimulatedColumns {
        rho: pick(|s| s.rho),
        wq: pick(|s| s.wq),
        w: pick(|s| s.w),
        lq: pick(|s| s.lq),
        l: pick(|s| s.l),
        throughput: pick(|s| s.throughput),
        mean_runners: pick(|s| s.mean_runners),
        littles_law_gap: runs.iter().map(|r| r.stages[stage].littles_law_gap()).fold(0.0, f64::max),
    }
}

pub fn run_report(scenario: &Scenario, opts: ReportOptions) -> Result<Report> {
    scenario.validate()?;
    let cfg = scenario.sim_config()?;
    let lambda = cfg.arrivals.mean_rate();
    let lambda_per_hour = scenario.arrival.nominal_rate_per_hour();
    let cost_model = scenario.cost_model()?;
    let sla = scenario.sla()?;
    let runners: u32 = scenario.stages.iter().map(StageSpec::total_runners).sum();
    let mut notes = Vec::new();

    let analysis = if opts.analytic {
        Some(
            scenario
                .stages
                .iter()
                .map(|s| analyze_stage(scenario, s, lambda, lambda_per_hour))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let runs = if opts.simulate { Some(run_replications(scenario)?) } else { None };

    let stages: Vec<StageReport> = scenario
        .stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let analytic = match &analysis {
                Some(a) => a[i].columns.clone(),
                None => AnalyticColumns {
                    status: STATUS_NOT_APPLICABLE.to_string(),
                    model: None,
                    rho: None,
                    rho_exact: None,
                    wq: None,
                    w: None,
                    lq: None,
                    l: None,
                },
            };
            let simulated = runs.as_ref().map(|r| simulated_columns(r, i));
            let delta = match (&analysis, &simulated) {
                (Some(_), Some(sim)) => Some(Delta {
                    wq_abs: analytic.wq.map(|a| sim.wq.mean - a),
                    wq_rel: analytic.wq.filter(|a| *a > 0.0).map(|a| (sim.wq.mean - a) / a),
                    rho_abs: analytic.rho.map(|a| sim.rho.mean - a),
                }),
                _ => None,
            };
            StageReport { index: i, name: s.name.clone(), runners: s.total_runners(), analytic, simulated, delta }
        })
        .collect();

    let analytic_cols: Vec<AnalyticColumns> = stages.iter().map(|s| s.analytic.clone()).collect();
    let analytic_wq = if opts.analytic { total_wq(&analytic_cols) } else { None };
    let analytic_unstable = analytic_cols.iter().any(|a| a.status == STATUS_UNSTABLE);
    let simulated_wq = stages.iter().map(|s| s.simulated.as_ref().map(|m| m.wq.mean)).sum::<Option<f64>>();

    let bottleneck = Bottleneck {
        analytic: analysis.as_ref().and_then(|a| argmax(a.iter().map(|s| s.rho.unwrap_or(f64::NAN)))),
        simulated: runs
            .as_ref()
            .and_then(|_| argmax(stages.iter().map(|s| s.simulated.as_ref().map_or(f64::NAN, |m| m.rho.mean)))),
    };

    let reference = match (opts.analytic, scenario.cost.reference_wq_min) {
        (true, Some(stated)) => {
            let consistent = analytic_wq.is_some_and(|c| ((stated - c) / c).abs() <= REFERENCE_TOLERANCE);
            let cost_at_stated_wq = total_cost_with_wq(runners, lambda, stated, &cost_model);
            let note = match analytic_wq {
                Some(c) if !consistent => format!(
                    "reference W_q = {stated} min does not satisfy the queueing formula for these parameters \
                     (computed {c:.4} min); total cost at the reference value is {:.4}",
                    cost_at_stated_wq.total
                ),
                Some(c) => format!("reference W_q = {stated} min agrees with the computed {c:.4} min"),
                None => format!("reference W_q = {stated} min cannot be checked: no analytic W_q for this scenario"),
            };
            notes.push(note.clone());
            Some(ReferenceCheck { stated_wq: stated, computed_wq: analytic_wq, consistent, cost_at_stated_wq, note })
        }
        _ => None,
    };

    let simulated_cost = runs.as_ref().and_then(|_| {
        let mean_runners: f64 = stages.iter().filter_map(|s| s.simulated.as_ref()).map(|m| m.mean_runners.mean).sum();
        simulated_wq.map(|wq| cost_model.breakdown(mean_runners, lambda, wq))
    });
    let cost = CostReport {
        runners,
        analytic: analytic_wq.map(|wq| cost_model.breakdown(f64::from(runners), lambda, wq)),
        simulated: simulated_cost,
        reference,
    };

    let homogeneous_single = match scenario.stages.as_slice() {
        [only] if only.fork_join.is_none() && only.pools.len() == 1 => Some(only.pools[0].mu_per_hour / 60.0),
        _ => None,
    };
    let sla_report = SlaReport {
        w_max: sla.map(|s| s.w_max),
        analytic_wq,
        analytic_pass: match sla {
            Some(s) if opts.analytic => {
                if analytic_unstable {
                    Some(false)
                } else {
                    analytic_wq.map(|wq| wq <= s.w_max)
                }
            }
            _ => None,
        },
        simulated_wq,
        simulated_pass: sla.and_then(|s| simulated_wq.map(|wq| wq <= s.w_max)),
        min_runners: match (sla, homogeneous_single) {
            (Some(s), Some(mu)) if opts.analytic && lambda > 0.0 => min_runners_for_sla(lambda, mu, &s).ok(),
            _ => None,
        },
    };

    let sensitivity = match (&scenario.sensitivity, opts.analytic) {
        (Some(sens), true) => sens
            .lambda_per_hour
            .iter()
            .map(|&lph| sensitivity_row(scenario, lph, analytic_wq))
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    for row in &sensitivity {
        if let Some(ratio) = row.wq_ratio {
            notes.push(format!(
                "at λ = {} jobs/hour the analytic W_q is {:.3}x the base case",
                row.lambda_per_hour, ratio
            ));
        }
    }
    if analytic_unstable {
        notes.push("analytic columns marked unstable: some stage has ρ ≥ 1 and its queue grows without bound".into());
    }

    Ok(Report {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        replications: if opts.simulate { scenario.replications } else { 0 },
        horizon_min: scenario.horizon_min,
        warmup_min: cfg.effective_warmup(),
        arrival_rate: lambda,
        stages,
        bottleneck,
        cost,
        sla: sla_report,
        sensitivity,
        notes,
    })
}

fn sensitivity_row(scenario: &Scenario, lambda_per_hour: f64, base_wq: Option<f64>) -> Result<SensitivityRow> {
    let lambda = lambda_per_hour / 60.0;
    let analyses = scenario
        .stages
        .iter()
        .map(|s| analyze_stage(scenario, s, lambda, Some(lambda_per_hour)))
        .collect::<Result<Vec<_>>>()?;
    let worst = argmax(analyses.iter().map(|a| a.rho.unwrap_or(f64::NAN)));
    let cols: Vec<AnalyticColumns> = analyses.into_iter().map(|a| a.columns).collect();
    let wq = total_wq(&cols);
    let status = if cols.iter().any(|c| c.status == STATUS_UNSTABLE) {
        STATUS_UNSTABLE
    } else if wq.is_none() {
        STATUS_NOT_APPLICABLE
    } else {
        STATUS_OK
    };
    let (rho, rho_exact) = worst.map_or((None, None), |i| (cols[i].rho, cols[i].rho_exact.clone()));
    Ok(SensitivityRow {
        lambda_per_hour,
        rho,
        rho_exact,
        status: status.to_string(),
        wq,
        wq_ratio: match (wq, base_wq) {
            (Some(w), Some(b)) if b > 0.0 => Some(w / b),
            _ => None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub scenario: String,
    pub stages: Vec<StageOptimum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOptimum {
    pub name: String,
    pub lambda: f64,
    pub mu: f64,
    pub current_runners: u32,
    pub current_cost: Option<CostBreakdown>,
    pub c_star: u32,
    pub cost: CostBreakdown,
    pub sla_min_runners: Option<u32>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub runners: u32,
    pub total: f64,
    pub wq: f64,
}

/// Cost-optimal runner count per stage under the M/M/c model. Stages must
/// have a single runner pool.
pub fn optimize(scenario: &Scenario) -> Result<OptimizeReport> {
    scenario.validate()?;
    let lambda = scenario.arrival_process().mean_rate();
    let model = scenario.cost_model()?;
    let sla = scenario.sla()?;
    let stages = scenario
        .stages
        .iter()
        .map(|s| {
            let [pool] = s.pools.as_slice() else {
                return Err(Error::validation(format!(
                    "stage '{}': optimize needs exactly one runner pool, found {}",
                    s.name,
                    s.pools.len()
                )));
            };
            let mu = pool.mu_per_hour / 60.0;
            let opt = optimal_runner_count(lambda, mu, &model, sla.as_ref())?;
            let current_cost = crate::cost::total_cost(pool.count, lambda, mu, &model).ok();
            Ok(StageOptimum {
                name: s.name.clone(),
                lambda,
                mu,
                current_runners: pool.count,
                current_cost,
                c_star: opt.c_star,
                cost: opt.cost,
                sla_min_runners: sla.as_ref().map(|x| min_runners_for_sla(lambda, mu, x)).transpose()?,
                curve: opt.curve.iter().map(|(c, b)| CurvePoint { runners: *c, total: b.total, wq: b.wq }).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizeReport { scenario: scenario.name.clone(), stages })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub seed: u64,
    pub replications: u32,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variant: String,
    /// End-to-end queueing delay.
    pub wq: Estimate,
    pub response: Estimate,
    pub mean_runners: Estimate,
    pub cost: Estimate,
    pub sla_pass: Option<bool>,
    pub max_lateness: Option<f64>,
}

/// The four queue disciplines, used when a scenario lists no variants.
pub fn default_variants() -> Vec<VariantSpec> {
    Discipline::ALL
        .iter()
        .map(|d| VariantSpec {
            name: d.label().to_string(),
            discipline: Some(*d),
            dispatch: None,
            scaling: None,
            runners: None,
        })
        .collect()
}

/// Simulates every variant with the same seeds, so arrivals and service
/// demands are shared across rows.
pub fn compare_policies(scenario: &Scenario, variants: &[VariantSpec]) -> Result<Comparison> {
    if variants.len() < 2 {
        return Err(Error::validation(format!("compare needs at least 2 variants, got {}", variants.len())));
    }
    scenario.validate()?;
    let model = scenario.cost_model()?;
    let sla = scenario.sla()?;
    let rows = variants
        .iter()
        .map(|v| {
            let s = scenario.with_variant(v);
            s.sim_config()?.validate().map_err(|e| Error::validation(format!("variant '{}': {e}", v.name)))?;
            let runs = run_replications(&s)?;
            let wq: Vec<f64> = runs.iter().map(|r| r.stages.iter().map(|m| m.wq).sum()).collect();
            let runners: Vec<f64> = runs.iter().map(|r| r.stages.iter().map(|m| m.mean_runners).sum()).collect();
            let cost: Vec<f64> = runs
                .iter()
                .zip(wq.iter().zip(&runners))
                .map(|(r, (w, c))| model.breakdown(*c, r.stages[0].arrival_rate, *w).total)
                .collect();
            let wq_est = Estimate::from_samples(&wq);
            Ok(ComparisonRow {
                variant: v.name.clone(),
                wq: wq_est,
                response: Estimate::from_samples(&runs.iter().map(|r| r.mean_response).collect::<Vec<_>>()),
                mean_runners: Estimate::from_samples(&runners),
                cost: Estimate::from_samples(&cost),
                sla_pass: sla.map(|s| wq_est.mean <= s.w_max),
                max_lateness: runs.iter().filter_map(|r| r.max_lateness).reduce(f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { scenario: scenario.name.clone(), seed: scenario.seed, replications: scenario.replications, rows })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types always serialize")
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn est(e: &Estimate, prec: usize) -> String {
    match e.ci95 {
        Some(h) => format!("{:.prec$} ± {h:.prec$}", e.mean),
        None => format!("{:.prec$}", e.mean),
    }
}

fn pass(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "-",
    }
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(
            out,
            "arrival rate: {:.6} jobs/min ({:.3} jobs/hour); horizon {} min, warmup {} min",
            self.arrival_rate,
            self.arrival_rate * 60.0,
            self.horizon_min,
            self.warmup_min
        );
        if self.replications > 0 {
            let _ =
                writeln!(out, "replications: {} (seed {}), intervals are 95% Student-t", self.replications, self.seed);
        }
        for s in &self.stages {
            let _ = writeln!(out, "\nstage {} '{}' ({} runners)", s.index, s.name, s.runners);
            let a = &s.analytic;
            if a.rho.is_some() {
                let _ = writeln!(
                    out,
                    "  analytic   status {}  model {}  ρ {}{}",
                    a.status,
                    a.model.as_deref().unwrap_or("-"),
                    opt(a.rho, 4),
                    a.rho_exact.as_ref().map_or(String::new(), |r| format!(" (= {r})")),
                );
                let _ = writeln!(
                    out,
                    "             W_q {}  W {}  L_q {}  L {}",
                    opt(a.wq, 4),
                    opt(a.w, 4),
                    opt(a.lq, 4),
                    opt(a.l, 4)
                );
            }
            if let Some(m) = &s.simulated {
                let _ = writeln!(out, "  simulated  ρ {}  W_q {}  W {}", est(&m.rho, 4), est(&m.wq, 4), est(&m.w, 4));
                let _ = writeln!(
                    out,
                    "             L_q {}  L {}  throughput {}  runners {}  |L-λW|/L {:.4}",
                    est(&m.lq, 4),
                    est(&m.l, 4),
                    est(&m.throughput, 4),
                    est(&m.mean_runners, 2),
                    m.littles_law_gap
                );
            }
            if let Some(d) = &s.delta {
                let _ = writeln!(
                    out,
                    "  delta      W_q {} ({} rel)  ρ {}",
                    opt(d.wq_abs, 4),
                    opt(d.wq_rel.map(|r| r * 100.0), 1) + "%",
                    opt(d.rho_abs, 4)
                );
            }
        }
        let _ = writeln!(
            out,
            "\nbottleneck: analytic {}  simulated {}",
            self.bottleneck.analytic.map_or("-".into(), |i| self.stages[i].name.clone()),
            self.bottleneck.simulated.map_or("-".into(), |i| self.stages[i].name.clone()),
        );
        let _ = writeln!(out, "\ncost ({} configured runners)", self.cost.runners);
        let _ = writeln!(out, "  {:<10} {:>10} {:>10} {:>10} {:>10}", "", "runner", "waiting", "total", "W_q");
        let mut row = |label: &str, b: &CostBreakdown| {
            let _ =
                writeln!(out, "  {label:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", b.runner, b.waiting, b.total, b.wq);
        };
        if let Some(b) = &self.cost.analytic {
            row("analytic", b);
        }
        if let Some(b) = &self.cost.simulated {
            row("simulated", b);
        }
        if let Some(r) = &self.cost.reference {
            row("reference", &r.cost_at_stated_wq);
        }
        if let Some(w) = self.sla.w_max {
            let _ = writeln!(
                out,
                "\nSLA W_q <= {w} min: analytic {} ({})  simulated {} ({})  min runners {}",
                opt(self.sla.analytic_wq, 4),
                pass(self.sla.analytic_pass),
                opt(self.sla.simulated_wq, 4),
                pass(self.sla.simulated_pass),
                self.sla.min_runners.map_or("-".into(), |c| c.to_string())
            );
        }
        if !self.sensitivity.is_empty() {
            let _ = writeln!(out, "\nsensitivity");
            for r in &self.sensitivity {
                let _ = writeln!(
                    out,
                    "  λ = {} jobs/hour: ρ {}{}  W_q {}  ratio {}  {}",
                    r.lambda_per_hour,
                    opt(r.rho, 4),
                    r.rho_exact.as_ref().map_or(String::new(), |x| format!(" (= {x})")),
                    opt(r.wq, 4),
                    opt(r.wq_ratio, 3),
                    r.status
                );
            }
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out, "\nnotes");
            for n in &self.notes {
                let _ = writeln!(out, "  - {n}");
            }
        }
        out
    }
}

impl OptimizeReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("scenario: {}\n", self.scenario);
        for s in &self.stages {
            let _ = writeln!(
                out,
                "\nstage '{}': λ {:.4}/min, μ {:.4}/min, configured {} runners (total {})",
                s.name,
                s.lambda,
                s.mu,
                s.current_runners,
                opt(s.current_cost.map(|c| c.total), 4)
            );
            let _ = writeln!(
                out,
                "  optimum c* = {}: runner {:.4} + waiting {:.4} = {:.4} (W_q {:.4} min)",
                s.c_star, s.cost.runner, s.cost.waiting, s.cost.total, s.cost.wq
            );
            if let Some(c) = s.sla_min_runners {
                let _ = writeln!(out, "  smallest fleet meeting the SLA: {c}");
            }
            let _ = writeln!(out, "  {:>7} {:>12} {:>12}", "runners", "total", "W_q");
            for p in &s.curve {
                let _ = writeln!(out, "  {:>7} {:>12.4} {:>12.4}", p.runners, p.total, p.wq);
            }
        }
        out
    }
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "scenario: {} (seed {}, {} replications, common random numbers)\n\n",
            self.scenario, self.seed, self.replications
        );
        let _ = writeln!(
            out,
            "{:<16} {:>20} {:>20} {:>14} {:>20} {:>5} {:>12}",
            "variant", "W_q", "response", "runners", "cost", "SLA", "max late"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16} {:>20} {:>20} {:>14} {:>20} {:>5} {:>12}",
                r.variant,
                est(&r.wq, 4),
                est(&r.response, 4),
                est(&r.mean_runners, 2),
                est(&r.cost, 4),
                pass(r.sla_pass),
                opt(r.max_lateness, 3)
            );
        }
        out
    }
}
