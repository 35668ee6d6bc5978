//! Cell layouts on a hexagonal grid, co-channel tier enumeration, SF zone
//! partitioning and spatial sampling.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{Sf, SF_COUNT};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Shape of the service area of one gateway.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellShape {
    Disk,
    /// Regular hexagon with circumradius equal to the cell radius and a
    /// vertex on the positive x axis.
    Hexagon,
}

/// How the F channels are shared between neighbouring cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReuseScheme {
    /// Every cell uses all F channels.
    Full,
    /// Each cell owns one channel; co-channel cells form a sparser lattice.
    OneOverF,
    /// SFs below `edge_from` reuse all channels, the rest use one channel per cell.
    LoraFfr { edge_from: Sf },
}

impl ReuseScheme {
    pub fn lora_ffr_default() -> Self {
        ReuseScheme::LoraFfr {
            edge_from: Sf::from_index(3),
        }
    }

    /// Whether zone `sf` sees the sparse co-channel lattice.
    pub fn uses_reuse_lattice(self, sf: Sf) -> bool {
        match self {
            ReuseScheme::Full => false,
            ReuseScheme::OneOverF => true,
            ReuseScheme::LoraFfr { edge_from } => sf >= edge_from,
        }
    }
}

/// Co-channel gateways at a common distance from the reference gateway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    pub distance: f64,
    /// Positions (m) of the member gateways.
    pub members: Vec<[f64; 2]>,
}

impl Tier {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Layout of gateways around the reference gateway at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellLayout {
    pub shape: CellShape,
    pub cell_radius: f64,
    pub reuse: ReuseScheme,
    pub channels: u32,
    pub interference_range: f64,
    /// Tiers seen by zones using every channel in every cell (tier 0 first).
    full_tiers: Vec<Tier>,
    /// Tiers of the sparse co-channel lattice (tier 0 first).
    reuse_tiers: Vec<Tier>,
}

/// Hexagon circumradius-to-apothem factor.
pub fn apothem(circumradius: f64) -> f64 {
    0.5 * SQRT3 * circumradius
}

/// Distance from the hexagon center to its boundary along direction `phi`.
pub fn hex_radius(circumradius: f64, phi: f64) -> f64 {
    let folded = phi.rem_euclid(FRAC_PI_3) - FRAC_PI_6;
    apothem(circumradius) / folded.cos()
}

/// Angular measure (rad) of the circle of radius `r` lying inside the hexagon.
pub fn hex_arc_measure(circumradius: f64, r: f64) -> f64 {
    let a = apothem(circumradius);
    if r <= a {
        TAU
    } else if r >= circumradius {
        0.0
    } else {
        (TAU - 12.0 * (a / r).acos()).max(0.0)
    }
}

/// Area of the disk of radius `r` intersected with the hexagon.
fn hex_disk_area(circumradius: f64, r: f64) -> f64 {
    let a = apothem(circumradius);
    if r <= a {
        PI * r * r
    } else if r >= circumradius {
        1.5 * SQRT3 * circumradius * circumradius
    } else {
        let segment = r * r * (a / r).acos() - a * (r * r - a * a).sqrt();
        PI * r * r - 6.0 * segment
    }
}

/// Boundary applied to an annular zone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Clip {
    None,
    Hexagon { circumradius: f64 },
}

/// Zone area together with a flag telling whether the outer radius was
/// clamped to the clip polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneArea {
    pub area: f64,
    pub clamped: bool,
}

/// Area of the annulus `r_lo < d <= r_hi`, optionally intersected with a hexagon.
pub fn zone_area(r_lo: f64, r_hi: f64, clip: Clip) -> Result<ZoneArea> {
    if !(r_lo >= 0.0 && r_hi >= r_lo) {
        return Err(Error::domain(format!("invalid annulus [{r_lo}, {r_hi}]")));
    }
    Ok(match clip {
        Clip::None => ZoneArea {
            area: PI * (r_hi * r_hi - r_lo * r_lo),
            clamped: false,
        },
        Clip::Hexagon { circumradius } => {
            let clamped = r_hi > circumradius;
            let hi = r_hi.min(circumradius);
            let lo = r_lo.min(circumradius);
            ZoneArea {
                area: hex_disk_area(circumradius, hi) - hex_disk_area(circumradius, lo),
                clamped,
            }
        }
    })
}

/// Distance from a point at polar position `(r, psi)` around a gateway to a
/// second gateway `distance` away along `psi = 0`.
pub fn interferer_distance(distance: f64, r: f64, psi: f64) -> f64 {
    (distance * distance + r * r - 2.0 * r * distance * psi.cos())
        .max(0.0)
        .sqrt()
}

// Lattice basis: neighbours sit at 30 + k*60 degrees, sqrt(3) r_c away.
fn lattice_point(i: i64, j: i64, cell_radius: f64) -> [f64; 2] {
    let s = SQRT3 * cell_radius;
    let (a1x, a1y) = (s * FRAC_PI_6.cos(), s * FRAC_PI_6.sin());
    [i as f64 * a1x, i as f64 * a1y + j as f64 * s]
}

/// Generator `(p, q)` of the co-channel sub-lattice with `p^2 + pq + q^2 = F`.
fn reuse_generator(channels: u32) -> Result<(i64, i64)> {
    let f = channels as i64;
    for p in 0..=f {
        for q in 0..=p {
            if p * p + p * q + q * q == f {
                return Ok((p, q));
            }
        }
    }
    Err(Error::config(
        "channels",
        format!("{channels} is not a hexagonal reuse number (p^2 + pq + q^2)"),
    ))
}

fn is_cochannel(i: i64, j: i64, (p, q): (i64, i64)) -> bool {
    // solve (i, j) = a (p, q) + b (-q, p + q) over the integers
    let det = p * p + p * q + q * q;
    let a = i * (p + q) + j * q;
    let b = j * p - i * q;
    a % det == 0 && b % det == 0
}

fn group_tiers(mut points: Vec<[f64; 2]>, cell_radius: f64) -> Vec<Tier> {
    let norm = |p: &[f64; 2]| p[0].hypot(p[1]);
    points.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
    let mut tiers: Vec<Tier> = Vec::new();
    for p in points {
        let d = norm(&p);
        match tiers.last_mut() {
            Some(t) if (t.distance - d).abs() <= 1e-6 * cell_radius => t.members.push(p),
            _ => tiers.push(Tier {
                distance: d,
                members: vec![p],
            }),
        }
    }
    tiers
}

impl CellLayout {
    /// Isolated cell: only the reference gateway.
    pub fn single(shape: CellShape, cell_radius: f64) -> Result<Self> {
        Self::build(shape, cell_radius, ReuseScheme::Full, 1, cell_radius, false)
    }

    /// Hexagonal grid keeping every co-channel cell with `D - r_c <= d_max`.
    pub fn hex_grid(
        cell_radius: f64,
        reuse: ReuseScheme,
        channels: u32,
        interference_range: f64,
    ) -> Result<Self> {
        Self::build(CellShape::Hexagon, cell_radius, reuse, channels, interference_range, true)
    }

    fn build(
        shape: CellShape,
        cell_radius: f64,
        reuse: ReuseScheme,
        channels: u32,
        interference_range: f64,
        grid: bool,
    ) -> Result<Self> {
        if !(cell_radius > 0.0 && cell_radius.is_finite()) {
            return Err(Error::config("cell_radius_km", "must be positive and finite"));
        }
        if channels == 0 {
            return Err(Error::config("channels", "must be at least 1"));
        }
        if !(interference_range >= cell_radius) {
            return Err(Error::config(
                "interference_range_km",
                "must be at least the cell radius",
            ));
        }
        let tier0 = Tier {
            distance: 0.0,
            members: vec![[0.0, 0.0]],
        };
        let (full, sparse) = if grid {
            if !interference_range.is_finite() {
                return Err(Error::config("interference_range_km", "must be finite"));
            }
            let generator = reuse_generator(channels)?;
            let reach = interference_range + cell_radius;
            let n = (reach / (0.5 * SQRT3 * cell_radius)).ceil() as i64 + 1;
            let mut full = Vec::new();
            let mut sparse = Vec::new();
            for i in -n..=n {
                for j in -n..=n {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let p = lattice_point(i, j, cell_radius);
                    if p[0].hypot(p[1]) - cell_radius > interference_range * (1.0 + 1e-12) {
                        continue;
                    }
                    full.push(p);
                    if is_cochannel(i, j, generator) {
                        sparse.push(p);
                    }
                }
            }
            (full, sparse)
        } else {
            (Vec::new(), Vec::new())
        };
        let mut full_tiers = vec![tier0.clone()];
        full_tiers.extend(group_tiers(full, cell_radius));
        let mut reuse_tiers = vec![tier0];
        reuse_tiers.extend(group_tiers(sparse, cell_radius));
        Ok(CellLayout {
            shape,
            cell_radius,
            reuse,
            channels,
            interference_range,
            full_tiers,
            reuse_tiers,
        })
    }

    /// Tiers interfering with zone `sf`, tier 0 (the reference cell) first.
    pub fn tiers(&self, sf: Sf) -> &[Tier] {
        if self.reuse.uses_reuse_lattice(sf) {
            &self.reuse_tiers
        } else {
            &self.full_tiers
        }
    }

    /// Co-channel gateways (including the reference) that can receive zone `sf`.
    pub fn gateways(&self, sf: Sf) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.tiers(sf).iter().flat_map(|t| t.members.iter().copied())
    }

    /// Number of cells considered in the layout, regardless of channel.
    pub fn cell_count(&self) -> usize {
        self.full_tiers.iter().map(Tier::multiplicity).sum()
    }

    /// Density of UEs sharing one channel with the reference zone `sf`.
    pub fn channel_density(&self, sf: Sf, active_density: f64) -> f64 {
        match self.reuse {
            ReuseScheme::Full => active_density / self.channels as f64,
            ReuseScheme::OneOverF => active_density,
            ReuseScheme::LoraFfr { edge_from } => {
                if sf >= edge_from {
                    active_density
                } else {
                    active_density / self.channels as f64
                }
            }
        }
    }

    pub fn clip(&self) -> Clip {
        match self.shape {
            CellShape::Disk => Clip::None,
            CellShape::Hexagon => Clip::Hexagon {
                circumradius: self.cell_radius,
            },
        }
    }

    /// Area of the whole cell.
    pub fn cell_area(&self) -> f64 {
        match self.shape {
            CellShape::Disk => PI * self.cell_radius * self.cell_radius,
            CellShape::Hexagon => 1.5 * SQRT3 * self.cell_radius * self.cell_radius,
        }
    }

    /// Boundary distance of the cell along direction `phi`.
    pub fn boundary(&self, phi: f64) -> f64 {
        match self.shape {
            CellShape::Disk => self.cell_radius,
            CellShape::Hexagon => hex_radius(self.cell_radius, phi),
        }
    }

    /// Angles in `[0, 2pi]` where the boundary of the cell has a kink.
    pub fn boundary_kinks(&self) -> Vec<f64> {
        match self.shape {
            CellShape::Disk => vec![0.0, TAU],
            CellShape::Hexagon => (0..=6).map(|k| k as f64 * FRAC_PI_3).collect(),
        }
    }

    /// Whether a point relative to its own gateway lies inside the cell.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let d = p[0].hypot(p[1]);
        d <= self.boundary(p[1].atan2(p[0])) * (1.0 + 1e-12)
    }

    pub fn zone(&self, plan: &SfPlan, sf: Sf) -> Zone {
        let inner = plan.inner(sf);
        let outer = plan.outer(sf);
        let area = zone_area(inner, outer, self.clip())
            .map(|z| z.area)
            .unwrap_or(0.0);
        Zone {
            sf,
            inner,
            outer,
            area,
            clip: self.clip(),
        }
    }

    /// Angular sub-intervals on which the outer radius `min(r, boundary)` is
    /// smooth, for polar integration over a zone ending at radius `r`.
    pub fn angular_breaks(&self, radii: &[f64]) -> Vec<f64> {
        let mut breaks = self.boundary_kinks();
        if self.shape == CellShape::Hexagon {
            let a = apothem(self.cell_radius);
            for &r in radii {
                if r > a && r < self.cell_radius {
                    let half = (a / r).acos();
                    for k in 0..6 {
                        let mid = FRAC_PI_6 + k as f64 * FRAC_PI_3;
                        breaks.push(mid - half);
                        breaks.push(mid + half);
                    }
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        breaks
    }
}

/// One SF zone of the reference cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zone {
    pub sf: Sf,
    pub inner: f64,
    pub outer: f64,
    pub area: f64,
    pub clip: Clip,
}

/// Decision variables: zone radii, per-SF duty cycles and the duty cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfPlan {
    /// Outer radii of the SF7..SF11 zones (m); SF12 ends at the cell radius.
    pub radii: [f64; SF_COUNT - 1],
    pub cell_radius: f64,
    pub duty: [f64; SF_COUNT],
    pub duty_cap: f64,
}

impl SfPlan {
    pub fn new(radii: [f64; SF_COUNT - 1], cell_radius: f64, duty: [f64; SF_COUNT], duty_cap: f64) -> Result<Self> {
        let plan = SfPlan {
            radii,
            cell_radius,
            duty,
            duty_cap,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_radius > 0.0) {
            return Err(Error::config("cell_radius_km", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.duty_cap) {
            return Err(Error::config("duty_cap", "must lie in [0, 1)"));
        }
        let mut prev = 0.0;
        for (k, &r) in self.radii.iter().enumerate() {
            if !(r >= prev && r <= self.cell_radius * (1.0 + 1e-12)) {
                return Err(Error::config(
                    "plan.radii_m",
                    format!("radius of SF{} breaks 0 <= r7 <= ... <= r11 <= r_c", k + 7),
                ));
            }
            prev = r;
        }
        for &d in &self.duty {
            if !(d >= 0.0 && d <= self.duty_cap * (1.0 + 1e-12)) {
                return Err(Error::config("plan.duty", "duty cycles must lie in [0, duty_cap]"));
            }
        }
        Ok(())
    }

    /// Radii giving every SF the same share of a disk of radius `cell_radius`.
    pub fn equal_area(cell_radius: f64, duty: f64, duty_cap: f64) -> Result<Self> {
        let radii = std::array::from_fn(|k| cell_radius * ((k + 1) as f64 / SF_COUNT as f64).sqrt());
        Self::new(radii, cell_radius, [duty; SF_COUNT], duty_cap)
    }

    /// Radii splitting `[0, cell_radius]` into equally wide rings.
    pub fn equal_width(cell_radius: f64, duty: f64, duty_cap: f64) -> Result<Self> {
        let radii = std::array::from_fn(|k| cell_radius * (k + 1) as f64 / SF_COUNT as f64);
        Self::new(radii, cell_radius, [duty; SF_COUNT], duty_cap)
    }

    pub fn inner(&self, sf: Sf) -> f64 {
        match sf.index() {
            0 => 0.0,
            i => self.radii[i - 1],
        }
    }

    pub fn outer(&self, sf: Sf) -> f64 {
        match sf.index() {
            i if i == SF_COUNT - 1 => self.cell_radius,
            i => self.radii[i],
        }
    }

    pub fn duty(&self, sf: Sf) -> f64 {
        self.duty[sf.index()]
    }

    /// Sets the outer radius of zone `sf` (SF7..SF11).
    pub fn set_outer(&mut self, sf: Sf, r: f64) {
        self.radii[sf.index()] = r;
    }

    /// A zone is used when it covers a positive area of the cell.
    pub fn is_used(&self, sf: Sf, layout: &CellLayout) -> bool {
        layout.zone(self, sf).area > 0.0
    }

    pub fn used(&self, layout: &CellLayout) -> [bool; SF_COUNT] {
        std::array::from_fn(|i| self.is_used(Sf::from_index(i), layout))
    }
}

/// SF of a location relative to the reference gateway; zones are half-open
/// `(r_{s-1}, r_s]`, with the origin assigned to SF7.
pub fn assign_sf(location: [f64; 2], plan: &SfPlan, layout: &CellLayout) -> Result<Sf> {
    if !layout.contains(location) {
        return Err(Error::domain(format!(
            "location ({:.1}, {:.1}) lies outside the reference cell",
            location[0], location[1]
        )));
    }
    let d = location[0].hypot(location[1]);
    Ok(Sf::all()
        .find(|&sf| d <= plan.outer(sf))
        .unwrap_or(Sf::MAX))
}

/// Bounded sampling region centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub inner: f64,
    pub outer: f64,
    pub hexagon: Option<f64>,
}

impl Region {
    pub fn disk(radius: f64) -> Self {
        Region {
            inner: 0.0,
            outer: radius,
            hexagon: None,
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Region {
            inner,
            outer,
            hexagon: None,
        }
    }

    pub fn hexagon(circumradius: f64) -> Self {
        Region {
            inner: 0.0,
            outer: circumradius,
            hexagon: Some(circumradius),
        }
    }

    /// The cell of `layout` restricted to the ring `(inner, outer]`.
    pub fn cell_ring(layout: &CellLayout, inner: f64, outer: f64) -> Self {
        Region {
            inner,
            outer,
            hexagon: match layout.shape {
                CellShape::Disk => None,
                CellShape::Hexagon => Some(layout.cell_radius),
            },
        }
    }

    pub fn area(&self) -> f64 {
        let clip = match self.hexagon {
            None => Clip::None,
            Some(c) => Clip::Hexagon { circumradius: c },
        };
        zone_area(self.inner, self.outer.max(self.inner), clip)
            .map(|z| z.area)
            .unwrap_or(0.0)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let d = p[0].hypot(p[1]);
        d > self.inner
            && d <= self.outer
            && self
                .hexagon
                .is_none_or(|c| d <= hex_radius(c, p[1].atan2(p[0])))
    }
}

/// Draws a homogeneous Poisson point process of density `density` (per m^2)
/// on `region`.
pub fn sample_hppp<R: Rng + ?Sized>(region: &Region, density: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let outer = match region.hexagon {
        Some(c) => region.outer.min(c),
        None => region.outer,
    };
    if density <= 0.0 || outer <= region.inner {
        return Vec::new();
    }
    // sample the bounding annulus and thin by the clip polygon
    let (lo2, hi2) = (region.inner * region.inner, outer * outer);
    let mean = density * PI * (hi2 - lo2);
    let count = poisson(mean, rng);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let r = (lo2 + rng.random::<f64>() * (hi2 - lo2)).sqrt();
        let phi = rng.random::<f64>() * TAU;
        let p = [r * phi.cos(), r * phi.sin()];
        if region.hexagon.is_none_or(|c| r <= hex_radius(c, phi)) {
            points.push(p);
        }
    }
    points
}

/// One Poisson variate; zero mean yields zero.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0)
}
