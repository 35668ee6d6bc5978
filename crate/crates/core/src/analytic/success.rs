use std::f64::consts::FRAC_PI_3;

use serde::{Deserialize, Serialize};

use super::kernel::MassTable;
use super::laplace::activity_factor;
use super::model::{NetworkModel, ZoneSpan, NEGLIGIBLE_SNR_EXPONENT};
use crate::error::{Error, Result};
use crate::geometry::SfPlan;
use crate::optimizer::{golden_section_max, optimal_duty_multicell};
use crate::phy::Sf;
use crate::quadrature::{gauss_legendre, integrate_2d};

/// Factors of the packet success lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuccessBreakdown {
    pub snr_factor: f64,
    pub sir_factor: f64,
    pub probability: f64,
}

/// Which gateways may decode an uplink packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reception {
    /// Only the home gateway of the UE.
    SingleGateway,
    /// Any co-channel gateway of the layout.
    MultiGateway,
}

/// How the duty cycle of a zone is chosen when it is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum DutyRule {
    /// Closed-form optimum of the zone throughput.
    ClosedForm,
    /// Closed form followed by a golden-section refinement of the exact objective.
    Tuned,
    /// The given duty cycle, clamped to the cap.
    Fixed(f64),
}

/// Duty cycle, success probability and common throughput of one zone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZoneOutcome {
    pub sf: Sf,
    pub duty: f64,
    pub success: f64,
    pub throughput: f64,
    pub area: f64,
}

/// Zone average of the multi-gateway success probability on fixed
/// quadrature nodes; cheap to re-evaluate for any duty cycle.
#[derive(Clone, Debug)]
pub struct ZoneAverager {
    weights: Vec<f64>,
    /// Per node: (noise exponent, interference mass) of every useful link.
    links: Vec<Vec<(f64, f64)>>,
    area: f64,
    density: f64,
}

impl ZoneAverager {
    pub fn success(&self, duty: f64) -> Result<f64> {
        let k = activity_factor(self.density, duty)?;
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.links)
            .map(|(w, l)| w * any_link(l, k))
            .sum();
        // degenerate zones carry ring weights that already sum to one
        Ok(if self.area > 0.0 { s / self.area } else { s })
    }
}

fn any_link(links: &[(f64, f64)], k: f64) -> f64 {
    1.0 - links
        .iter()
        .map(|&(a, g)| 1.0 - (-a - k * g).exp())
        .product::<f64>()
}

impl NetworkModel {
    /// Lower bound on the success probability of a zone-`sf` packet at its
    /// home gateway, evaluated for the zone-edge received power.
    pub fn packet_success(&self, sf: Sf, plan: &SfPlan) -> Result<SuccessBreakdown> {
        let span = ZoneSpan::of(plan, sf);
        let q = self.edge_rx_power(sf, span.outer);
        if !(q > 0.0) {
            return Err(Error::domain("zone received power must be positive"));
        }
        let p = self.phy.get(sf);
        let z = p.sir_threshold / q;
        let k = activity_factor(self.channel_density(sf), plan.duty(sf))?;
        let snr_factor = (-p.snr_threshold * self.env.noise_power_w / q).exp();
        let sir_factor = (-k * self.interference_mass(&span, z)).exp();
        Ok(SuccessBreakdown {
            snr_factor,
            sir_factor,
            probability: snr_factor * sir_factor,
        })
    }

    /// `R_s * Delta_s * P_suc`; zero for an unused SF.
    pub fn common_throughput(&self, sf: Sf, plan: &SfPlan) -> Result<f64> {
        if !plan.is_used(sf, &self.layout) {
            return Ok(0.0);
        }
        let p = self.packet_success(sf, plan)?;
        Ok(self.phy.get(sf).bit_rate * plan.duty(sf) * p.probability)
    }

    fn link_terms(&self, sf: Sf, outer: f64, w0: [f64; 2], gw: [f64; 2]) -> (f64, f64) {
        let p = self.phy.get(sf);
        let r = w0[0].hypot(w0[1]);
        let (dx, dy) = (w0[0] - gw[0], w0[1] - gw[1]);
        let q = self.zone_power(sf, r.min(outer), outer) * self.env.gain_from_sq(dx * dx + dy * dy);
        (p.snr_threshold * self.env.noise_power_w / q, p.sir_threshold / q)
    }

    /// Success probability at gateway `gw` of a zone-`sf` packet sent from
    /// `w0`, with the interference at `gw` distributed as at the reference gateway.
    pub fn success_at_gw(&self, w0: [f64; 2], gw: [f64; 2], sf: Sf, plan: &SfPlan) -> Result<f64> {
        let span = ZoneSpan::of(plan, sf);
        let k = activity_factor(self.channel_density(sf), plan.duty(sf))?;
        let (a, z) = self.link_terms(sf, span.outer, w0, gw);
        Ok((-a - k * self.interference_mass(&span, z)).exp())
    }

    /// Probability that at least one co-channel gateway decodes the packet,
    /// treating per-gateway interference as independent.
    pub fn success_multigw(&self, w0: [f64; 2], sf: Sf, plan: &SfPlan) -> Result<f64> {
        let span = ZoneSpan::of(plan, sf);
        let table = self.mass_table(&span);
        let k = activity_factor(self.channel_density(sf), plan.duty(sf))?;
        Ok(self.multigw_with_table(w0, &span, &table, k))
    }

    fn multigw_with_table(&self, w0: [f64; 2], span: &ZoneSpan, table: &MassTable, k: f64) -> f64 {
        let links: Vec<(f64, f64)> = self
            .useful_links(w0, span, table)
            .collect();
        any_link(&links, k)
    }

    fn useful_links<'a>(
        &'a self,
        w0: [f64; 2],
        span: &'a ZoneSpan,
        table: &'a MassTable,
    ) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.layout.gateways(span.sf).filter_map(move |gw| {
            let (a, z) = self.link_terms(span.sf, span.outer, w0, gw);
            (a < NEGLIGIBLE_SNR_EXPONENT).then(|| (a, table.mass(z)))
        })
    }

    /// Radial breakpoints and angular limits used by zone averages; angles
    /// cover one sixth of the plane, which the layouts are symmetric under.
    pub(crate) fn sector_breaks(&self, span: &ZoneSpan) -> Vec<f64> {
        let mut breaks: Vec<f64> = self
            .layout
            .angular_breaks(&[span.inner, span.outer])
            .into_iter()
            .filter(|&a| a < FRAC_PI_3 - 1e-12)
            .collect();
        breaks.push(FRAC_PI_3);
        breaks
    }

    /// Zone average of [`Self::success_multigw`] by nested adaptive quadrature.
    /// A zone of zero area returns the ring average at its outer radius.
    pub fn avg_success_zone(&self, sf: Sf, plan: &SfPlan) -> Result<f64> {
        let span = ZoneSpan::of(plan, sf);
        let table = self.mass_table(&span);
        let k = activity_factor(self.channel_density(sf), plan.duty(sf))?;
        let area = self.layout.zone(plan, sf).area;
        let angles = self.sector_breaks(&span);
        if area <= 0.0 {
            let q = crate::quadrature::integrate_pieces(
                |phi| {
                    let r = self.layout.boundary(phi).min(span.outer);
                    self.multigw_with_table([r * phi.cos(), r * phi.sin()], &span, &table, k)
                },
                &angles,
                self.quadrature.outer(),
            )?;
            return Ok(q.value / FRAC_PI_3);
        }
        let q = integrate_2d(
            |phi, r| r * self.multigw_with_table([r * phi.cos(), r * phi.sin()], &span, &table, k),
            &angles,
            |phi| {
                let hi = span.outer.min(self.layout.boundary(phi));
                if hi <= span.inner {
                    Vec::new()
                } else {
                    vec![span.inner, hi]
                }
            },
            self.quadrature.inner(),
            self.quadrature.outer(),
        )?;
        Ok(6.0 * q.value / area)
    }

    /// Fixed-node zone averager for repeated evaluation over duty cycles.
    pub fn zone_averager(&self, span: &ZoneSpan) -> ZoneAverager {
        let table = self.mass_table(span);
        let nodes = gauss_legendre(self.quadrature.order);
        let angles = self.sector_breaks(span);
        let mut weights = Vec::new();
        let mut links = Vec::new();
        let area = crate::geometry::zone_area(span.inner, span.outer.max(span.inner), self.layout.clip())
            .map(|z| z.area)
            .unwrap_or(0.0);
        let panels = self.quadrature.angular_panels;
        for w in angles.windows(2) {
            let width = (w[1] - w[0]) / panels as f64;
            for p in 0..panels {
                let lo = w[0] + p as f64 * width;
                for (x, wx) in nodes.0.iter().zip(&nodes.1) {
                    let phi = lo + 0.5 * width * (1.0 + x);
                    let wphi = 0.5 * width * wx;
                    let hi = span.outer.min(self.layout.boundary(phi));
                    if area <= 0.0 {
                        // degenerate zone: ring at the outer radius
                        let w0 = [hi * phi.cos(), hi * phi.sin()];
                        weights.push(wphi / FRAC_PI_3);
                        links.push(self.useful_links(w0, span, &table).collect());
                        continue;
                    }
                    if hi <= span.inner {
                        continue;
                    }
                    let rw = (hi - span.inner) / self.quadrature.radial_panels as f64;
                    for rp in 0..self.quadrature.radial_panels {
                        let rlo = span.inner + rp as f64 * rw;
                        for (y, wy) in nodes.0.iter().zip(&nodes.1) {
                            let r = rlo + 0.5 * rw * (1.0 + y);
                            let w0 = [r * phi.cos(), r * phi.sin()];
                            weights.push(6.0 * wphi * 0.5 * rw * wy * r);
                            links.push(self.useful_links(w0, span, &table).collect());
                        }
                    }
                }
            }
        }
        ZoneAverager {
            weights,
            links,
            area,
            density: self.channel_density(span.sf),
        }
    }

    /// Duty cycle, success probability and throughput of a zone under the
    /// given reception mode and duty rule.
    pub fn zone_outcome(&self, span: &ZoneSpan, duty_cap: f64, rule: DutyRule, reception: Reception) -> Result<ZoneOutcome> {
        let p = self.phy.get(span.sf);
        let area = crate::geometry::zone_area(span.inner, span.outer.max(span.inner), self.layout.clip())
            .map(|z| z.area)
            .unwrap_or(0.0);
        let q = self.edge_rx_power(span.sf, span.outer);
        let density = self.channel_density(span.sf);
        let z0 = p.sir_threshold / q;
        let snr = (-p.snr_threshold * self.env.noise_power_w / q).exp();
        let closed = |g: f64| optimal_duty_multicell(density, g, duty_cap);
        let (duty, success) = match reception {
            Reception::SingleGateway => {
                let g = self.interference_mass(span, z0);
                let duty = match rule {
                    DutyRule::Fixed(d) => d.min(duty_cap),
                    // the closed form is the exact optimum of this objective
                    DutyRule::ClosedForm | DutyRule::Tuned => closed(g)?,
                };
                let k = activity_factor(density, duty)?;
                (duty, snr * (-k * g).exp())
            }
            Reception::MultiGateway => {
                let avg = self.zone_averager(span);
                let duty = match rule {
                    DutyRule::Fixed(d) => d.min(duty_cap),
                    DutyRule::ClosedForm => closed(self.interference_mass(span, z0))?,
                    DutyRule::Tuned => {
                        let start = closed(self.interference_mass(span, z0))?;
                        let objective = |d: f64| avg.success(d).map(|s| d * s).unwrap_or(0.0);
                        let (best, val) = golden_section_max(objective, 0.0, duty_cap, duty_cap * 1e-6);
                        if val >= objective(start) {
                            best
                        } else {
                            start
                        }
                    }
                };
                (duty, avg.success(duty)?)
            }
        };
        Ok(ZoneOutcome {
            sf: span.sf,
            duty,
            success,
            throughput: p.bit_rate * duty * success,
            area,
        })
    }

    /// Success probability of a packet sent from `w0` (any zone) under the
    /// given reception mode, using the plan's duty cycles.
    pub fn position_success(&self, w0: [f64; 2], sf: Sf, plan: &SfPlan, reception: Reception) -> Result<f64> {
        match reception {
            Reception::MultiGateway => self.success_multigw(w0, sf, plan),
            Reception::SingleGateway => self.success_at_gw(w0, [0.0, 0.0], sf, plan),
        }
    }

    /// [`Self::position_success`] at many positions of zone `sf`, sharing
    /// one interference table.
    pub fn success_map(&self, sf: Sf, plan: &SfPlan, reception: Reception, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        let span = ZoneSpan::of(plan, sf);
        let table = self.mass_table(&span);
        let k = activity_factor(self.channel_density(sf), plan.duty(sf))?;
        Ok(points
            .iter()
            .map(|&w| match reception {
                Reception::MultiGateway => self.multigw_with_table(w, &span, &table, k),
                Reception::SingleGateway => {
                    let (a, z) = self.link_terms(sf, span.outer, w, [0.0, 0.0]);
                    (-a - k * table.mass(z)).exp()
                }
            })
            .collect())
    }
}
