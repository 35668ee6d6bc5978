use std::f64::consts::{FRAC_PI_3, TAU};

use serde::{Deserialize, Serialize};

use super::kernel::{InterferenceKernel, MassTable};
use super::laplace::{activity_factor, bracket, LaplaceEvaluation};
use crate::error::{Error, Result};
use crate::geometry::{apothem, hex_arc_measure, CellLayout, CellShape, SfPlan, Tier};
use crate::phy::{PhyProfile, PowerPolicy, RadioEnvironment, Sf};
use crate::quadrature::{gauss_legendre, integrate_2d, Tolerance};

/// Numerical settings for every spatial integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    /// Relative tolerance of inner (radial) adaptive integrals.
    pub inner_rel: f64,
    /// Relative tolerance of outer (angular) adaptive integrals.
    pub outer_rel: f64,
    pub max_subdivisions: usize,
    /// Gauss-Legendre order of each panel of the fixed-node kernels.
    pub order: usize,
    /// Panels per smooth angular interval in the fixed-node kernels.
    pub angular_panels: usize,
    /// Panels per smooth radial interval in the fixed-node kernels.
    pub radial_panels: usize,
    /// Grid step of the interference-mass table in `ln z`.
    pub table_step: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            inner_rel: 1e-6,
            outer_rel: 1e-5,
            max_subdivisions: 400,
            order: 12,
            angular_panels: 2,
            radial_panels: 2,
            table_step: 0.2,
        }
    }
}

impl QuadratureSettings {
    pub fn inner(&self) -> Tolerance {
        Tolerance {
            abs: 0.0,
            rel: self.inner_rel,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn outer(&self) -> Tolerance {
        Tolerance {
            abs: 0.0,
            rel: self.outer_rel,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_rel > 0.0 && self.outer_rel > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        if self.order < 2 || self.angular_panels == 0 || self.radial_panels == 0 {
            return Err(Error::config("quadrature.order", "needs at least 2 nodes and 1 panel"));
        }
        if !(self.table_step > 0.0 && self.table_step <= 1.0) {
            return Err(Error::config("quadrature.table_step", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Everything needed to evaluate an SF plan: radio, PHY table, power law,
/// gateway layout and total active UE density (per m^2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub phy: PhyProfile,
    pub env: RadioEnvironment,
    pub power: PowerPolicy,
    pub layout: CellLayout,
    pub active_density: f64,
    pub quadrature: QuadratureSettings,
}

/// Spatial extent of the zone of one SF: UEs at distance `(inner, outer]`
/// from their gateway, clipped to the cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneSpan {
    pub sf: Sf,
    pub inner: f64,
    pub outer: f64,
}

impl ZoneSpan {
    pub fn of(plan: &SfPlan, sf: Sf) -> Self {
        ZoneSpan {
            sf,
            inner: plan.inner(sf),
            outer: plan.outer(sf),
        }
    }
}

// Orbit of tier members under the symmetries of the cell shape: members
// related by a rotation of 60 degrees or a reflection see identical integrals.
fn tier_classes(tier: &Tier, shape: CellShape) -> Vec<([f64; 2], f64)> {
    let mut classes: Vec<(f64, [f64; 2], f64)> = Vec::new();
    for &m in &tier.members {
        let key = match shape {
            CellShape::Disk => 0.0,
            CellShape::Hexagon => {
                let a = m[1].atan2(m[0]).rem_euclid(FRAC_PI_3);
                a.min(FRAC_PI_3 - a)
            }
        };
        match classes.iter_mut().find(|c| (c.0 - key).abs() < 1e-9) {
            Some(c) => c.2 += 1.0,
            None => classes.push((key, m, 1.0)),
        }
    }
    classes.into_iter().map(|(_, m, n)| (m, n)).collect()
}

fn gl_panels(a: f64, b: f64, panels: usize, nodes: &(Vec<f64>, Vec<f64>)) -> impl Iterator<Item = (f64, f64)> + '_ {
    let width = (b - a) / panels as f64;
    (0..panels).flat_map(move |p| {
        let lo = a + p as f64 * width;
        let half = 0.5 * width;
        nodes
            .0
            .iter()
            .zip(&nodes.1)
            .map(move |(x, w)| (lo + half * (1.0 + x), half * w))
    })
}

impl NetworkModel {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.power.validate()?;
        self.quadrature.validate()?;
        if !(self.active_density >= 0.0 && self.active_density.is_finite()) {
            return Err(Error::config("density_per_km2", "must be non-negative"));
        }
        Ok(())
    }

    /// UE density on the channel of zone `sf`.
    pub fn channel_density(&self, sf: Sf) -> f64 {
        self.layout.channel_density(sf, self.active_density)
    }

    /// Transmit power of a UE `r` metres from its gateway in a zone ending at `outer`.
    pub fn zone_power(&self, sf: Sf, r: f64, outer: f64) -> f64 {
        self.power
            .snap(self.power.continuous_power(sf, r, outer, &self.env))
    }

    /// Mean received power at the home gateway of the zone-edge UE.
    pub fn edge_rx_power(&self, sf: Sf, outer: f64) -> f64 {
        self.zone_power(sf, outer, outer) * self.env.mean_channel_gain(outer)
    }

    fn equalized(&self) -> bool {
        self.power.beta == 1.0 && self.power.levels_w.is_none()
    }

    /// Outer limit of the cell along `phi` intersected with the zone.
    fn zone_outer(&self, span: &ZoneSpan, phi: f64) -> f64 {
        span.outer.min(self.layout.boundary(phi))
    }

    /// Radial breakpoints in `[lo, hi]`: power-level switches and the hexagon apothem.
    pub(crate) fn radial_breaks(&self, span: &ZoneSpan, lo: f64, hi: f64, with_apothem: bool) -> Vec<f64> {
        let mut pts = vec![lo];
        if let Some(segs) = self.power.level_segments(span.sf, lo, hi, &self.env) {
            pts.extend(segs.iter().skip(1).map(|s| s.0));
        }
        if with_apothem && self.layout.shape == CellShape::Hexagon {
            let a = apothem(self.layout.cell_radius);
            if a > lo && a < hi {
                pts.push(a);
            }
        }
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn clipped_area(&self, span: &ZoneSpan) -> f64 {
        crate::geometry::zone_area(span.inner, span.outer.max(span.inner), self.layout.clip())
            .map(|z| z.area)
            .unwrap_or(0.0)
    }

    /// Fixed-node kernel of the interference mass of zone `span`.
    pub fn interference_kernel(&self, span: &ZoneSpan) -> InterferenceKernel {
        let q = &self.quadrature;
        let nodes = gauss_legendre(q.order);
        let mut kernel = InterferenceKernel::new();
        let tiers = self.layout.tiers(span.sf);
        let rmax = match self.layout.shape {
            CellShape::Disk => span.outer,
            CellShape::Hexagon => span.outer.min(self.layout.cell_radius),
        };
        // reference cell: power depends only on the radius
        if span.inner < rmax {
            if self.equalized() {
                kernel.push(self.clipped_area(span), self.edge_rx_power(span.sf, span.outer));
            } else {
                let breaks = self.radial_breaks(span, span.inner, rmax, true);
                for w in breaks.windows(2) {
                    for (r, wr) in gl_panels(w[0], w[1], q.radial_panels, &nodes) {
                        let arc = match self.layout.shape {
                            CellShape::Disk => TAU,
                            CellShape::Hexagon => hex_arc_measure(self.layout.cell_radius, r),
                        };
                        let rx = self.zone_power(span.sf, r, span.outer) * self.env.mean_channel_gain(r);
                        kernel.push(wr * r * arc, rx);
                    }
                }
            }
        }
        kernel.close_tier();
        let angles = self.layout.angular_breaks(&[span.inner, span.outer]);
        for tier in tiers.iter().skip(1) {
            for (v, count) in tier_classes(tier, self.layout.shape) {
                for w in angles.windows(2) {
                    for (phi, wphi) in gl_panels(w[0], w[1], q.angular_panels, &nodes) {
                        let hi = self.zone_outer(span, phi);
                        if hi <= span.inner {
                            continue;
                        }
                        let (c, s) = (phi.cos(), phi.sin());
                        let breaks = self.radial_breaks(span, span.inner, hi, false);
                        for rw in breaks.windows(2) {
                            for (r, wr) in gl_panels(rw[0], rw[1], q.radial_panels, &nodes) {
                                let (x, y) = (v[0] + r * c, v[1] + r * s);
                                let rx = self.zone_power(span.sf, r, span.outer)
                                    * self.env.gain_from_sq(x * x + y * y);
                                kernel.push(count * wphi * wr * r, rx);
                            }
                        }
                    }
                }
            }
            kernel.close_tier();
        }
        kernel
    }

    /// Interference mass of one tier by nested adaptive quadrature.
    pub fn tier_mass_adaptive(&self, span: &ZoneSpan, tier: usize, z: f64) -> Result<(f64, f64)> {
        let tiers = self.layout.tiers(span.sf);
        let t = tiers
            .get(tier)
            .ok_or_else(|| Error::domain(format!("tier {tier} not in layout")))?;
        let angles = self.layout.angular_breaks(&[span.inner, span.outer]);
        let mut total = 0.0;
        let mut err = 0.0;
        for (v, count) in tier_classes(t, self.layout.shape) {
            let q = integrate_2d(
                |phi, r| {
                    let (x, y) = (v[0] + r * phi.cos(), v[1] + r * phi.sin());
                    let rx = self.zone_power(span.sf, r, span.outer) * self.env.gain_from_sq(x * x + y * y);
                    bracket(z * rx) * r
                },
                &angles,
                |phi| {
                    let hi = self.zone_outer(span, phi);
                    if hi <= span.inner {
                        Vec::new()
                    } else {
                        self.radial_breaks(span, span.inner, hi, false)
                    }
                },
                self.quadrature.inner(),
                self.quadrature.outer(),
            )?;
            total += count * q.value;
            err += count * q.error;
        }
        Ok((total, err))
    }

    /// Interference mass of the reference cell's own zone.
    fn home_mass(&self, span: &ZoneSpan, z: f64) -> Result<(f64, f64)> {
        if self.equalized() {
            let area = self.clipped_area(span);
            return Ok((area * bracket(z * self.edge_rx_power(span.sf, span.outer)), 0.0));
        }
        self.tier_mass_adaptive(span, 0, z)
    }

    fn coefficient(&self, sf: Sf, duty: f64) -> Result<f64> {
        activity_factor(self.channel_density(sf), duty)
    }

    /// Laplace transform of the interference from tier `tier` (0 = own cell).
    pub fn laplace_tier(&self, z: f64, tier: usize, plan: &SfPlan, sf: Sf) -> Result<LaplaceEvaluation> {
        if z < 0.0 {
            return Err(Error::domain("z must be non-negative"));
        }
        let span = ZoneSpan::of(plan, sf);
        let k = self.coefficient(sf, plan.duty(sf))?;
        let (m, e) = if tier == 0 {
            self.home_mass(&span, z)?
        } else {
            self.tier_mass_adaptive(&span, tier, z)?
        };
        Ok(LaplaceEvaluation::from_log_terms(z, vec![-k * m], k * e))
    }

    /// Laplace transform of the total interference at the reference gateway.
    pub fn laplace_total(&self, z: f64, plan: &SfPlan, sf: Sf) -> Result<LaplaceEvaluation> {
        if z < 0.0 {
            return Err(Error::domain("z must be non-negative"));
        }
        let span = ZoneSpan::of(plan, sf);
        let k = self.coefficient(sf, plan.duty(sf))?;
        let mut logs = Vec::new();
        let mut err = 0.0;
        let (m0, e0) = self.home_mass(&span, z)?;
        logs.push(-k * m0);
        err += k * e0;
        for tier in 1..self.layout.tiers(sf).len() {
            let (m, e) = self.tier_mass_adaptive(&span, tier, z)?;
            logs.push(-k * m);
            err += k * e;
        }
        Ok(LaplaceEvaluation::from_log_terms(z, logs, err))
    }

    /// Interference mass `G(z)` of zone `sf`, independent of the duty cycle.
    pub fn interference_mass(&self, span: &ZoneSpan, z: f64) -> f64 {
        self.interference_kernel(span).mass(z)
    }

    /// Table of `G(z)` covering every link from a zone UE to any gateway
    /// whose SNR factor is not negligible.
    pub fn mass_table(&self, span: &ZoneSpan) -> MassTable {
        let kernel = self.interference_kernel(span);
        let p = self.phy.get(span.sf);
        let strongest = self.power.max_power_w * self.env.mean_channel_gain(0.0);
        let z_lo = p.sir_threshold / strongest;
        let z_hi = NEGLIGIBLE_SNR_EXPONENT * p.sir_threshold / (p.snr_threshold * self.env.noise_power_w.max(f64::MIN_POSITIVE));
        MassTable::build(kernel, z_lo, z_hi.max(z_lo * 10.0), self.quadrature.table_step)
    }
}

/// Links whose noise exponent `eta sigma^2 / Q` exceeds this are treated as lost.
pub(crate) const NEGLIGIBLE_SNR_EXPONENT: f64 = 40.0;
