//! Report-level statistics: common and minimum throughput, spatial and
//! percentile-spatial throughput, Jain fairness and spatial transmit power.
//!
//! UEs enter as weighted samples: a weight is the number of real UEs a
//! sample stands for, so a continuum grid (analytic reports) and a sampled
//! pool (Monte-Carlo reports) share one code path.

use std::f64::consts::FRAC_PI_3;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{NetworkModel, Reception, ZoneOutcome, ZoneSpan};
use crate::error::{Error, Result};
use crate::geometry::{assign_sf, sample_hppp, Region, SfPlan};
use crate::phy::{Sf, SF_COUNT};
use crate::quadrature::integrate_2d;
use crate::simulator::{replicate_stream, McConfig, Simulator};

/// Default percentile of the percentile-spatial throughput.
pub const DEFAULT_KAPPA: f64 = 90.0;

const POPULATION_STREAM: u64 = 1 << 62;

/// `(mean)^2 / mean of squares`.
pub fn jain(values: &[f64]) -> Result<f64> {
    weighted_jain(values.iter().map(|&v| (v, 1.0)))
}

fn weighted_jain(samples: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut w, mut s1, mut s2, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (v, wt) in samples {
        if v < 0.0 || wt < 0.0 {
            return Err(Error::domain("fairness needs non-negative values"));
        }
        w += wt;
        s1 += wt * v;
        s2 += wt * v * v;
        n += 1;
    }
    if n == 0 || s2 <= 0.0 {
        return Err(Error::domain("fairness of an empty or all-zero population"));
    }
    Ok((s1 * s1 / (w * s2)).min(1.0))
}

/// Total throughput per unit area.
pub fn spatial_throughput(values: &[f64], area: f64) -> Result<f64> {
    check_area(area)?;
    Ok(values.iter().sum::<f64>() / area)
}

/// Spatial throughput of the lowest `kappa` percent of UEs.
pub fn percentile_spatial(values: &[f64], kappa: f64, area: f64) -> Result<f64> {
    check_area(area)?;
    check_kappa(kappa)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let keep = (kappa * v.len() as f64 / 100.0).floor() as usize;
    Ok(v[..keep].iter().sum::<f64>() / area)
}

/// Spatial transmit power from per-UE `(duty, power)` pairs.
pub fn stp(ues: &[(f64, f64)], area: f64) -> Result<f64> {
    check_area(area)?;
    Ok(ues.iter().map(|(d, p)| d * p).sum::<f64>() / area)
}

fn check_area(area: f64) -> Result<()> {
    if area > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("area must be positive"))
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa <= 100.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("percentile {kappa} outside (0, 100]")))
    }
}

/// Hex digest identifying a configuration and seed.
pub fn fingerprint<T: Serialize>(config: &T, seed: u64) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| Error::Parse(e.to_string()))?;
    let mut h = Sha256::new();
    h.update(json.as_bytes());
    h.update(seed.to_le_bytes());
    Ok(hex::encode(&h.finalize()[..8]))
}

/// One UE, or a patch of the cell standing for `weight` UEs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UeSample {
    pub position: [f64; 2],
    pub sf: Sf,
    pub weight: f64,
    pub throughput: f64,
    pub duty: f64,
    pub power_w: f64,
}

/// UEs of the reference cell with the area they cover.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Population {
    pub ues: Vec<UeSample>,
    pub area: f64,
}

impl Population {
    pub fn jain(&self) -> Result<f64> {
        weighted_jain(self.ues.iter().map(|u| (u.throughput, u.weight)))
    }

    pub fn spatial(&self) -> Result<f64> {
        check_area(self.area)?;
        Ok(self.ues.iter().map(|u| u.weight * u.throughput).sum::<f64>() / self.area)
    }

    /// Lowest-`kappa`-percent spatial throughput; the sample straddling the
    /// cut counts with the fraction of its weight below it.
    pub fn percentile_spatial(&self, kappa: f64) -> Result<f64> {
        check_area(self.area)?;
        check_kappa(kappa)?;
        let mut order: Vec<&UeSample> = self.ues.iter().collect();
        order.sort_by(|a, b| a.throughput.total_cmp(&b.throughput));
        let mut left = kappa / 100.0 * self.ues.iter().map(|u| u.weight).sum::<f64>();
        let mut total = 0.0;
        for u in order {
            if left <= 0.0 {
                break;
            }
            let w = u.weight.min(left);
            total += w * u.throughput;
            left -= w;
        }
        Ok(total / self.area)
    }

    /// Throughput of the worst-served UE.
    pub fn min_throughput(&self) -> Result<f64> {
        self.ues
            .iter()
            .map(|u| u.throughput)
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::domain("empty population"))
    }

    pub fn stp(&self) -> Result<f64> {
        check_area(self.area)?;
        Ok(self.ues.iter().map(|u| u.weight * u.duty * u.power_w).sum::<f64>() / self.area)
    }

    /// Weighted mean throughput of the UEs of each SF (zero when absent).
    pub fn per_sf(&self) -> [f64; SF_COUNT] {
        let mut num = [0.0; SF_COUNT];
        let mut den = [0.0; SF_COUNT];
        for u in &self.ues {
            num[u.sf.index()] += u.weight * u.throughput;
            den[u.sf.index()] += u.weight;
        }
        std::array::from_fn(|i| if den[i] > 0.0 { num[i] / den[i] } else { 0.0 })
    }
}

/// Throughput summary of one plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// Common throughput per SF (bit/s).
    pub per_sf: [f64; SF_COUNT],
    pub used: [bool; SF_COUNT],
    pub min_throughput: f64,
    /// bit/s/m^2
    pub spatial: f64,
    /// bit/s/m^2
    pub percentile_spatial: f64,
    pub kappa: f64,
    pub jain: f64,
    /// W/m^2
    pub stp: f64,
    pub fingerprint: String,
}

impl ThroughputReport {
    fn min_over_used(per_sf: &[f64; SF_COUNT], used: &[bool; SF_COUNT]) -> f64 {
        per_sf
            .iter()
            .zip(used)
            .filter(|(_, u)| **u)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

fn used_sfs(model: &NetworkModel, plan: &SfPlan) -> [bool; SF_COUNT] {
    std::array::from_fn(|i| plan.is_used(Sf::from_index(i), &model.layout))
}

/// Zone outcomes of `plan` under its own duty cycles.
pub fn plan_outcomes(model: &NetworkModel, plan: &SfPlan, reception: Reception) -> Result<Vec<ZoneOutcome>> {
    Sf::all()
        .map(|s| {
            model.zone_outcome(
                &ZoneSpan::of(plan, s),
                plan.duty_cap.max(plan.duty(s)),
                crate::analytic::DutyRule::Fixed(plan.duty(s)),
                reception,
            )
        })
        .collect()
}

/// Spatial transmit power of the zone model: `lambda * sum_s Delta_s * int P dA / S`.
pub fn analytic_stp(model: &NetworkModel, plan: &SfPlan) -> Result<f64> {
    let mut total = 0.0;
    for sf in Sf::all() {
        let span = ZoneSpan::of(plan, sf);
        if !plan.is_used(sf, &model.layout) || plan.duty(sf) <= 0.0 {
            continue;
        }
        let q = integrate_2d(
            |_, r| r * model.zone_power(sf, r, span.outer),
            &model.sector_breaks(&span),
            |phi| {
                let hi = span.outer.min(model.layout.boundary(phi));
                if hi <= span.inner {
                    Vec::new()
                } else {
                    model.radial_breaks(&span, span.inner, hi, false)
                }
            },
            model.quadrature.inner(),
            model.quadrature.outer(),
        )?;
        total += plan.duty(sf) * 6.0 * q.value;
    }
    Ok(model.active_density * total / model.layout.cell_area())
}

/// Midpoint grid over one sixth of the cell, replicated by symmetry; each
/// node carries `active_density * dA` UEs.
pub fn analytic_population(
    model: &NetworkModel,
    plan: &SfPlan,
    reception: Reception,
    radial: usize,
    angular: usize,
) -> Result<Population> {
    if radial == 0 || angular == 0 {
        return Err(Error::config("grid", "needs at least one node per axis"));
    }
    let mut ues = Vec::new();
    let dphi = FRAC_PI_3 / angular as f64;
    for sf in Sf::all() {
        let span = ZoneSpan::of(plan, sf);
        let mut pts = Vec::new();
        let mut weights = Vec::new();
        for j in 0..angular {
            let phi = (j as f64 + 0.5) * dphi;
            let hi = span.outer.min(model.layout.boundary(phi));
            if hi <= span.inner {
                continue;
            }
            let dr = (hi - span.inner) / radial as f64;
            for i in 0..radial {
                let r = span.inner + (i as f64 + 0.5) * dr;
                pts.push([r * phi.cos(), r * phi.sin()]);
                weights.push(6.0 * model.active_density * r * dr * dphi);
            }
        }
        if pts.is_empty() {
            continue;
        }
        let success = model.success_map(sf, plan, reception, &pts)?;
        let rate = model.phy.get(sf).bit_rate * plan.duty(sf);
        for ((p, w), s) in pts.into_iter().zip(weights).zip(success) {
            ues.push(UeSample {
                position: p,
                sf,
                weight: w,
                throughput: rate * s,
                duty: plan.duty(sf),
                power_w: model.zone_power(sf, p[0].hypot(p[1]), span.outer),
            });
        }
    }
    Ok(Population {
        ues,
        area: model.layout.cell_area(),
    })
}

/// Abscissa at which `points` (sorted by abscissa) first cross `target`
/// from below, by linear interpolation between neighbouring samples.
pub fn crossing(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 < target && y1 >= target).then(|| x0 + (target - y0) * (x1 - x0) / (y1 - y0))
    })
}

/// One sample of a radial throughput profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub radius: f64,
    pub sf: Sf,
    pub throughput: f64,
}

/// Per-position analytic throughput along the ray at `angle` (rad), with
/// `per_zone` midpoints inside every used zone.
pub fn radial_curve(
    model: &NetworkModel,
    plan: &SfPlan,
    reception: Reception,
    per_zone: usize,
    angle: f64,
) -> Result<Vec<CurvePoint>> {
    if per_zone == 0 {
        return Err(Error::config("grid", "needs at least one node per zone"));
    }
    let (sin, cos) = angle.sin_cos();
    let mut curve = Vec::new();
    for sf in Sf::all() {
        let span = ZoneSpan::of(plan, sf);
        let hi = span.outer.min(model.layout.boundary(angle));
        if hi <= span.inner {
            continue;
        }
        let dr = (hi - span.inner) / per_zone as f64;
        let radii: Vec<f64> = (0..per_zone).map(|i| span.inner + (i as f64 + 0.5) * dr).collect();
        let pts: Vec<[f64; 2]> = radii.iter().map(|&r| [r * cos, r * sin]).collect();
        let rate = model.phy.get(sf).bit_rate * plan.duty(sf);
        let success = model.success_map(sf, plan, reception, &pts)?;
        curve.extend(radii.into_iter().zip(success).map(|(radius, s)| CurvePoint {
            radius,
            sf,
            throughput: rate * s,
        }));
    }
    Ok(curve)
}

/// UE pool of the reference cell at `pool_factor` times the active density;
/// each pool UE stands for `1 / pool_factor` real UEs and gets the
/// Monte-Carlo success probability conditioned on simulated interference.
pub fn mc_population(model: &NetworkModel, plan: &SfPlan, reception: Reception, cfg: &McConfig) -> Result<Population> {
    let sim = Simulator::new(model, plan, cfg)?;
    let mut rng = replicate_stream(cfg.seed, POPULATION_STREAM);
    let region = Region::cell_ring(&model.layout, 0.0, model.layout.cell_radius);
    let pool = sample_hppp(&region, model.active_density * cfg.pool_factor, &mut rng);
    let mut by_sf: Vec<Vec<[f64; 2]>> = vec![Vec::new(); SF_COUNT];
    for p in pool {
        let sf = assign_sf(p, plan, &model.layout)?;
        by_sf[sf.index()].push(p);
    }
    let multi = reception == Reception::MultiGateway;
    let mut ues = Vec::new();
    for sf in Sf::all() {
        let pts = &by_sf[sf.index()];
        if pts.is_empty() {
            continue;
        }
        let samples = sim.interference_samples(sf)?;
        let rate = model.phy.get(sf).bit_rate * plan.duty(sf);
        let outer = plan.outer(sf);
        ues.extend(pts.iter().map(|&p| UeSample {
            position: p,
            sf,
            weight: 1.0 / cfg.pool_factor,
            throughput: rate * sim.conditional_success(sf, p, &samples, multi),
            duty: plan.duty(sf),
            power_w: model.zone_power(sf, p[0].hypot(p[1]), outer),
        }));
    }
    Ok(Population {
        ues,
        area: model.layout.cell_area(),
    })
}

/// Analytic report: per-SF common throughput from the zone model, the
/// percentile and fairness over the analytic position grid.
pub fn analytic_report(
    model: &NetworkModel,
    plan: &SfPlan,
    outcomes: &[ZoneOutcome],
    population: &Population,
    kappa: f64,
    fingerprint: String,
) -> Result<ThroughputReport> {
    if outcomes.len() != SF_COUNT {
        return Err(Error::domain("one outcome per SF expected"));
    }
    let used = used_sfs(model, plan);
    let per_sf: [f64; SF_COUNT] = std::array::from_fn(|i| if used[i] { outcomes[i].throughput } else { 0.0 });
    let spatial = outcomes
        .iter()
        .zip(used)
        .filter(|(_, u)| *u)
        .map(|(o, _)| model.active_density * o.area * o.throughput)
        .sum::<f64>()
        / model.layout.cell_area();
    Ok(ThroughputReport {
        min_throughput: ThroughputReport::min_over_used(&per_sf, &used),
        per_sf,
        used,
        spatial,
        percentile_spatial: population.percentile_spatial(kappa)?,
        kappa,
        jain: population.jain()?,
        stp: analytic_stp(model, plan)?,
        fingerprint,
    })
}

/// Report computed entirely from a sampled population.
pub fn population_report(
    model: &NetworkModel,
    plan: &SfPlan,
    population: &Population,
    kappa: f64,
    fingerprint: String,
) -> Result<ThroughputReport> {
    let used = used_sfs(model, plan);
    let per_sf = population.per_sf();
    Ok(ThroughputReport {
        min_throughput: ThroughputReport::min_over_used(&per_sf, &used),
        per_sf,
        used,
        spatial: population.spatial()?,
        percentile_spatial: population.percentile_spatial(kappa)?,
        kappa,
        jain: population.jain()?,
        stp: population.stp()?,
        fingerprint,
    })
}
