//! Subcommand bodies as library functions returning data; writing files is
//! left to the caller.

use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{LayoutKind, PlanChoice, PlanMode, ReuseKind, Scenario, ScenarioFile, StartRule, TrafficSection};
use crate::analytic::{Reception, ZoneOutcome};
use crate::error::{Error, Result};
use crate::geometry::SfPlan;
use crate::metrics::{
    analytic_population, analytic_report, analytic_stp, crossing, fingerprint, mc_population, plan_outcomes,
    population_report, radial_curve, CurvePoint, ThroughputReport,
};
use crate::optimizer::{balance, chain_max_min, initial_plan, IbState, ModelEvaluator, Termination};
use crate::simulator::{McEstimate, Placement, Simulator};

/// Radial and angular nodes per zone of the analytic fairness grid.
const GRID_RADIAL: usize = 64;
const GRID_ANGULAR: usize = 8;

pub fn scenario_fingerprint(sc: &Scenario) -> Result<String> {
    fingerprint(&sc.file, sc.mc.seed)
}

/// A plan with its zone outcomes and, when balanced, the balancing record.
#[derive(Clone, Debug)]
pub struct ResolvedPlan {
    pub plan: SfPlan,
    pub outcomes: Vec<ZoneOutcome>,
    pub balance: Option<IbState>,
}

pub fn evaluator(sc: &Scenario) -> ModelEvaluator {
    ModelEvaluator {
        model: sc.model.clone(),
        reception: sc.reception,
        duty_rule: sc.duty_rule,
        duty_cap: sc.file.plan.duty_cap,
    }
}

/// Balances zone radii and duty cycles from the configured start.
pub fn optimize(sc: &Scenario) -> Result<IbState> {
    let ev = evaluator(sc);
    let caps = &sc.balance.range_caps;
    let start = match sc.start {
        StartRule::Warm => chain_max_min(&ev, caps, sc.balance.tolerance / 10.0)?,
        StartRule::EqualArea => initial_plan(sc.model.layout.cell_radius, sc.file.plan.duty_cap, caps)?,
    };
    let state = balance(&ev, &start, &sc.balance)?;
    log::info!(
        "balanced in {} iterations ({:?}), min throughput {:.4} bit/s",
        state.iterations,
        state.termination,
        state.min_throughput()
    );
    Ok(state)
}

pub fn resolve_plan(sc: &Scenario) -> Result<ResolvedPlan> {
    match &sc.plan {
        PlanChoice::Fixed(plan) => Ok(ResolvedPlan {
            outcomes: plan_outcomes(&sc.model, plan, sc.reception)?,
            plan: plan.clone(),
            balance: None,
        }),
        PlanChoice::Optimize => {
            let state = optimize(sc)?;
            Ok(ResolvedPlan {
                plan: state.plan.clone(),
                outcomes: state.outcomes.clone(),
                balance: Some(state),
            })
        }
    }
}

/// Report with zone throughputs from the analytic model and fairness and
/// percentile from the Monte-Carlo UE population.
pub fn evaluate(sc: &Scenario, resolved: &ResolvedPlan) -> Result<ThroughputReport> {
    let pop = mc_population(&sc.model, &resolved.plan, sc.reception, &sc.mc)?;
    analytic_report(
        &sc.model,
        &resolved.plan,
        &resolved.outcomes,
        &pop,
        sc.kappa,
        scenario_fingerprint(sc)?,
    )
}

/// Output of `analyze`: everything from closed forms and quadrature.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub resolved: ResolvedPlan,
    pub report: ThroughputReport,
    pub curve: Vec<CurvePoint>,
}

pub fn analyze(sc: &Scenario) -> Result<Analysis> {
    let resolved = resolve_plan(sc)?;
    let grid = analytic_population(&sc.model, &resolved.plan, sc.reception, GRID_RADIAL, GRID_ANGULAR)?;
    let report = analytic_report(
        &sc.model,
        &resolved.plan,
        &resolved.outcomes,
        &grid,
        sc.kappa,
        scenario_fingerprint(sc)?,
    )?;
    let curve = radial_curve(&sc.model, &resolved.plan, sc.reception, sc.curve_points, 0.0)?;
    Ok(Analysis { resolved, report, curve })
}

/// Analytic and simulated throughput at one position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveComparison {
    pub point: CurvePoint,
    /// Simulated throughput (bit/s) with its standard error.
    pub mc: McEstimate,
}

/// Output of `simulate`.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub plan: SfPlan,
    pub report: ThroughputReport,
    pub curve: Vec<CurveComparison>,
}

pub fn simulate(sc: &Scenario) -> Result<Simulation> {
    let resolved = resolve_plan(sc)?;
    let plan = resolved.plan;
    let pop = mc_population(&sc.model, &plan, sc.reception, &sc.mc)?;
    let report = population_report(&sc.model, &plan, &pop, sc.kappa, scenario_fingerprint(sc)?)?;
    let sim = Simulator::new(&sc.model, &plan, &sc.mc)?;
    let curve = radial_curve(&sc.model, &plan, sc.reception, sc.curve_points, 0.0)?
        .into_iter()
        .map(|point| {
            let at = Placement::Fixed([point.radius, 0.0]);
            let est = match sc.reception {
                Reception::SingleGateway => sim.simulate_success(point.sf, at)?,
                Reception::MultiGateway => sim.simulate_multigw(point.sf, at)?,
            };
            let rate = sc.model.phy.get(point.sf).bit_rate * plan.duty(point.sf);
            Ok(CurveComparison {
                point,
                mc: McEstimate {
                    mean: rate * est.mean,
                    stderr: rate * est.stderr,
                    replications: est.replications,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation { plan, report, curve })
}

/// Grid of a density sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub radii_km: Vec<f64>,
    pub densities_per_km2: Vec<f64>,
    pub receptions: Vec<Reception>,
    /// Interference range as a multiple of the cell radius; `None` keeps
    /// the range of the scenario.
    pub range_factor: Option<f64>,
    /// Also draw the Monte-Carlo population for fairness and percentile.
    pub with_population: bool,
}

/// One optimized point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub reception: Reception,
    pub ue_density_per_km2: f64,
    pub cell_radius_m: f64,
    pub gw_density_per_km2: f64,
    pub min_bps: f64,
    pub p90_spatial_bps_km2: Option<f64>,
    pub jain: Option<f64>,
    pub stp_mw_km2: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Largest throughput gap between adjacent used SFs at termination.
    pub gap_bps: f64,
}

/// The scenario of one sweep point: a balanced hexagonal grid.
pub fn sweep_scenario(
    base: &ScenarioFile,
    radius_km: f64,
    density_per_km2: f64,
    reception: Reception,
    range_factor: Option<f64>,
) -> Result<Scenario> {
    let mut file = base.clone();
    file.cell.layout = LayoutKind::HexGrid;
    file.cell.radius_km = Some(radius_km);
    file.cell.reception = reception;
    if let Some(f) = range_factor {
        file.cell.interference_range_km = f * radius_km;
    }
    file.cell.interference_range_km = file.cell.interference_range_km.max(radius_km);
    file.traffic = TrafficSection {
        active_density_per_km2: Some(density_per_km2),
        per_channel_density_per_km2: None,
    };
    file.plan.mode = PlanMode::Optimize;
    Scenario::from_file(file)
}

pub fn sweep(base: &ScenarioFile, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &reception in &spec.receptions {
        for &density in &spec.densities_per_km2 {
            for &radius in &spec.radii_km {
                points.push((reception, density, radius));
            }
        }
    }
    points
        .par_iter()
        .map(|&(reception, density, radius)| {
            let sc = sweep_scenario(base, radius, density, reception, spec.range_factor)?;
            let state = optimize(&sc)?;
            let (p90, jain) = if spec.with_population {
                let pop = mc_population(&sc.model, &state.plan, reception, &sc.mc)?;
                (Some(pop.percentile_spatial(sc.kappa)? * 1e6), Some(pop.jain()?))
            } else {
                (None, None)
            };
            log::info!("{reception:?} {density}/km2 r_c {radius} km: min {:.4}", state.min_throughput());
            Ok(SweepRow {
                reception,
                ue_density_per_km2: density,
                cell_radius_m: sc.model.layout.cell_radius,
                gw_density_per_km2: 1e6 / sc.model.layout.cell_area(),
                min_bps: state.min_throughput(),
                p90_spatial_bps_km2: p90,
                jain,
                stp_mw_km2: analytic_stp(&sc.model, &state.plan)? * 1e9,
                iterations: state.iterations,
                termination: state.termination,
                gap_bps: state.max_gap,
            })
        })
        .collect()
}

/// Gateway density at which the minimum throughput reaches `target_bps`,
/// per reception mode and UE density.
pub fn sweep_crossings(rows: &[SweepRow], target_bps: f64) -> Vec<(Reception, f64, Option<f64>)> {
    let mut keys: Vec<(Reception, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.reception && k.1 == r.ue_density_per_km2) {
            keys.push((r.reception, r.ue_density_per_km2));
        }
    }
    keys.into_iter()
        .map(|(reception, density)| {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.reception == reception && r.ue_density_per_km2 == density)
                .map(|r| (r.gw_density_per_km2, r.min_bps))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (reception, density, crossing(&pts, target_bps))
        })
        .collect()
}

/// Per-position throughput of one radius under the three reuse schemes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReuseRow {
    pub radius: f64,
    pub sf: crate::phy::Sf,
    pub full: f64,
    pub one_over_f: f64,
    pub lora_ffr: f64,
}

/// Radial throughput of the scenario's fixed plan on its hexagonal grid
/// under 1-reuse, 1/F-reuse and LoRa-FFR at the same active density.
pub fn compare_reuse(sc: &Scenario) -> Result<Vec<ReuseRow>> {
    let PlanChoice::Fixed(plan) = &sc.plan else {
        return Err(Error::config("plan.mode", "reuse comparison needs a fixed plan"));
    };
    if sc.file.cell.layout != LayoutKind::HexGrid || sc.file.cell.channels < 2 {
        return Err(Error::config("cell", "reuse comparison needs a hex_grid layout with at least 2 channels"));
    }
    let curves = [ReuseKind::Full, ReuseKind::OneOverF, ReuseKind::LoraFfr]
        .into_iter()
        .map(|reuse| {
            let mut file = sc.file.clone();
            file.cell.reuse = reuse;
            file.traffic = TrafficSection {
                active_density_per_km2: Some(sc.model.active_density * 1e6),
                per_channel_density_per_km2: None,
            };
            let variant = Scenario::from_file(file)?;
            radial_curve(&variant.model, plan, sc.reception, sc.curve_points, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(curves[0]
        .iter()
        .zip(&curves[1])
        .zip(&curves[2])
        .map(|((a, b), c)| ReuseRow {
            radius: a.radius,
            sf: a.sf,
            full: a.throughput,
            one_over_f: b.throughput,
            lora_ffr: c.throughput,
        })
        .collect())
}
