//! Poisson-rain Monte-Carlo oracle: space-time packet generation around the
//! reference gateway, duration-averaged interference and the exact joint
//! SNR and SIR capture test.
//!
//! Replication `i` draws from its own ChaCha stream, and the UE location
//! pool is redrawn every [`BLOCK`] replications from a stream of its own, so
//! results depend only on the seed and never on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::analytic::{NetworkModel, NEGLIGIBLE_SNR_EXPONENT};
use crate::error::{Error, Result};
use crate::geometry::{hex_radius, poisson, sample_hppp, CellShape, Region, SfPlan};
use crate::phy::{Sf, SF_COUNT};

/// Replications sharing one draw of the UE location pool.
pub const BLOCK: usize = 1024;
const POOL_STREAM: u64 = 1 << 63;

/// Deterministic, non-overlapping random stream of replication `index`.
pub fn replicate_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// How interference energy enters the SIR test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    /// Interference averaged over the reference packet.
    #[default]
    Average,
    /// Any overlapping packet counts with full power (sensitivity study only).
    Peak,
}

/// Per-replication statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Draw the reference fading and record 0 or 1.
    #[default]
    Bernoulli,
    /// Average the success indicator over the reference fading in closed form.
    Conditional,
}

/// Interference seen by different gateways under macro diversity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiGwMode {
    /// Every gateway sees an independent realization.
    #[default]
    Independent,
    /// One realization of packets, independent fading per link.
    Shared,
}

/// Where the reference UE sits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Fixed position relative to the reference gateway (m).
    Fixed([f64; 2]),
    /// Uniform over the zone of the SF in the reference cell.
    ZoneUniform,
}

/// Monte-Carlo settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub replications: usize,
    pub seed: u64,
    /// Pool density as a multiple of the active density.
    pub pool_factor: f64,
    /// Energy cross-correlation between SFs, `cross_sf[s][s']` for an
    /// SF-`s'` packet hitting an SF-`s` reference. Diagonal is ignored.
    pub cross_sf: Option<[[f64; SF_COUNT]; SF_COUNT]>,
    pub interference: InterferenceMode,
    pub estimator: Estimator,
    pub multigw: MultiGwMode,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replications: 100_000,
            seed: 1,
            pool_factor: 10.0,
            cross_sf: None,
            interference: InterferenceMode::Average,
            estimator: Estimator::Bernoulli,
            multigw: MultiGwMode::Independent,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if !(self.pool_factor >= 1.0 && self.pool_factor.is_finite()) {
            return Err(Error::config("pool_factor", "pool density must be at least the active density"));
        }
        if let Some(chi) = &self.cross_sf {
            let bad = chi
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
                .any(|(_, &c)| !(0.0..1.0).contains(&c));
            if bad {
                return Err(Error::config("cross_sf", "entries must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// Mean of a Monte-Carlo statistic and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replications: usize,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors (plus `slack`).
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr + slack
    }
}

/// Empirical Laplace transform and mean of the aggregate interference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterferenceEstimate {
    pub z: Vec<f64>,
    pub laplace: Vec<McEstimate>,
    pub mean: McEstimate,
}

#[derive(Clone, Copy, Debug)]
struct PoolPoint {
    pos: [f64; 2],
    tx: f64,
    /// Mean received power at the reference gateway.
    rx0: f64,
}

/// Packets of one SF zone, replicated over a set of cells.
#[derive(Clone, Debug)]
struct Source {
    region: Region,
    outer: f64,
    sf: Sf,
    cells: Vec<[f64; 2]>,
    /// Mean number of packets overlapping the reference window.
    packets: f64,
    /// Duration of these packets and of the reference packet (s).
    duration: f64,
    reference: f64,
    weight: f64,
    same_sf: bool,
}

#[derive(Default)]
struct Moments {
    n: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl Moments {
    fn new(width: usize) -> Self {
        Moments {
            n: 0,
            sum: vec![0.0; width],
            sumsq: vec![0.0; width],
        }
    }

    fn push(&mut self, v: &[f64]) {
        self.n += 1;
        for ((s, q), x) in self.sum.iter_mut().zip(&mut self.sumsq).zip(v) {
            *s += x;
            *q += x * x;
        }
    }

    fn merge(mut self, other: Moments) -> Self {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(other.sumsq) {
            *a += b;
        }
        self
    }

    fn estimate(&self, k: usize) -> McEstimate {
        let n = self.n as f64;
        let mean = self.sum[k] / n;
        let var = if self.n > 1 {
            ((self.sumsq[k] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            stderr: (var / n).sqrt(),
            replications: self.n,
        }
    }
}

/// Monte-Carlo engine for one model, plan and configuration.
pub struct Simulator<'a> {
    model: &'a NetworkModel,
    plan: &'a SfPlan,
    cfg: &'a McConfig,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a NetworkModel, plan: &'a SfPlan, cfg: &'a McConfig) -> Result<Self> {
        model.validate()?;
        plan.validate()?;
        cfg.validate()?;
        Ok(Simulator { model, plan, cfg })
    }

    fn region(&self, sf: Sf) -> Region {
        Region::cell_ring(&self.model.layout, self.plan.inner(sf), self.plan.outer(sf))
    }

    fn sources(&self, sf: Sf) -> Result<Vec<Source>> {
        let cells: Vec<[f64; 2]> = self.model.layout.gateways(sf).collect();
        let reference = self.model.phy.get(sf).packet_duration;
        let mut out = Vec::new();
        for other in Sf::all() {
            let weight = if other == sf {
                1.0
            } else {
                match &self.cfg.cross_sf {
                    Some(chi) => chi[sf.index()][other.index()],
                    None => 0.0,
                }
            };
            if weight <= 0.0 {
                continue;
            }
            let region = self.region(other);
            let duty = self.plan.duty(other);
            let duration = self.model.phy.get(other).packet_duration;
            let rate = crate::phy::access_rate(duty, duration)?;
            let density = self.model.channel_density(other);
            let packets = rate * (reference + duration) * density * region.area() * cells.len() as f64;
            out.push(Source {
                region,
                outer: self.plan.outer(other),
                sf: other,
                cells: cells.clone(),
                packets,
                duration,
                reference,
                weight,
                same_sf: other == sf,
            });
        }
        Ok(out)
    }

    fn draw_pools(&self, sources: &[Source], block: u64) -> Vec<Vec<PoolPoint>> {
        let mut rng = replicate_stream(self.cfg.seed, POOL_STREAM | block);
        sources
            .iter()
            .map(|src| {
                let density = self.model.channel_density(src.sf) * self.cfg.pool_factor;
                let mut pool = Vec::new();
                for &c in &src.cells {
                    for p in sample_hppp(&src.region, density, &mut rng) {
                        let tx = self.model.zone_power(src.sf, p[0].hypot(p[1]), src.outer);
                        let pos = [p[0] + c[0], p[1] + c[1]];
                        let rx0 = tx * self.model.env.gain_from_sq(pos[0] * pos[0] + pos[1] * pos[1]);
                        pool.push(PoolPoint { pos, tx, rx0 });
                    }
                }
                pool
            })
            .collect()
    }

    /// Fraction of the reference packet covered by a packet starting at
    /// offset `t` relative to it.
    fn overlap(&self, src: &Source, t: f64) -> f64 {
        let h = if src.same_sf {
            (1.0 - t.abs() / src.reference).max(0.0)
        } else {
            ((src.reference.min(t + src.duration) - t.max(0.0)) / src.reference).max(0.0)
        };
        match self.cfg.interference {
            InterferenceMode::Average => h,
            InterferenceMode::Peak => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Visits every packet of one replication: `(pool point, weight * overlap)`.
    fn for_each_packet<R: Rng>(
        &self,
        sources: &[Source],
        pools: &[Vec<PoolPoint>],
        rng: &mut R,
        mut visit: impl FnMut(&PoolPoint, f64, &mut R),
    ) {
        for (src, pool) in sources.iter().zip(pools) {
            if pool.is_empty() {
                continue;
            }
            let count = poisson(src.packets, rng);
            for _ in 0..count {
                let p = &pool[rng.random_range(0..pool.len())];
                let t = -src.duration + rng.random::<f64>() * (src.duration + src.reference);
                let h = self.overlap(src, t);
                if h > 0.0 {
                    visit(p, src.weight * h, rng);
                }
            }
        }
    }

    /// One duration-averaged interference realization at the reference gateway.
    fn interference_at_origin<R: Rng>(&self, sources: &[Source], pools: &[Vec<PoolPoint>], rng: &mut R) -> f64 {
        let mut total = 0.0;
        self.for_each_packet(sources, pools, rng, |p, w, rng| {
            let fade: f64 = Exp1.sample(rng);
            total += p.rx0 * fade * w;
        });
        total
    }

    fn reference_position<R: Rng>(&self, sf: Sf, placement: Placement, rng: &mut R) -> Result<[f64; 2]> {
        match placement {
            Placement::Fixed(p) => Ok(p),
            Placement::ZoneUniform => {
                let region = self.region(sf);
                if region.area() <= 0.0 {
                    return Err(Error::domain(format!("zone of {sf} is empty")));
                }
                let (lo2, hi2) = (region.inner * region.inner, region.outer * region.outer);
                loop {
                    let r = (lo2 + rng.random::<f64>() * (hi2 - lo2)).sqrt();
                    let phi = rng.random::<f64>() * TAU;
                    let inside = match self.model.layout.shape {
                        CellShape::Disk => true,
                        CellShape::Hexagon => r <= hex_radius(self.model.layout.cell_radius, phi),
                    };
                    if inside {
                        return Ok([r * phi.cos(), r * phi.sin()]);
                    }
                }
            }
        }
    }

    /// Runs `f` once per replication in parallel blocks and returns the
    /// moments of its `width` outputs.
    fn run<F>(&self, sf: Sf, width: usize, f: F) -> Result<Moments>
    where
        F: Fn(&[Source], &[Vec<PoolPoint>], &mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
    {
        let sources = self.sources(sf)?;
        let n = self.cfg.replications;
        let blocks = n.div_ceil(BLOCK);
        let parts: Vec<Result<Moments>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let pools = self.draw_pools(&sources, b as u64);
                let mut m = Moments::new(width);
                let mut out = vec![0.0; width];
                for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                    let mut rng = replicate_stream(self.cfg.seed, i as u64);
                    f(&sources, &pools, &mut rng, &mut out)?;
                    m.push(&out);
                }
                Ok(m)
            })
            .collect();
        // merge in block order so the sums never depend on scheduling
        parts
            .into_iter()
            .try_fold(Moments::new(width), |acc, p| Ok(acc.merge(p?)))
    }

    fn link(&self, sf: Sf, w0: [f64; 2], gw: [f64; 2]) -> (f64, f64) {
        let p = self.model.phy.get(sf);
        let tx = self.model.zone_power(sf, w0[0].hypot(w0[1]).min(self.plan.outer(sf)), self.plan.outer(sf));
        let (dx, dy) = (w0[0] - gw[0], w0[1] - gw[1]);
        let q = tx * self.model.env.gain_from_sq(dx * dx + dy * dy);
        (p.snr_threshold * self.model.env.noise_power_w / q, q)
    }

    fn decide<R: Rng>(&self, a: f64, sir_exponent: f64, rng: &mut R) -> f64 {
        match self.cfg.estimator {
            Estimator::Conditional => (-a.max(sir_exponent)).exp(),
            Estimator::Bernoulli => {
                let fade: f64 = Exp1.sample(rng);
                f64::from(u8::from(fade >= a && fade >= sir_exponent))
            }
        }
    }

    /// Success probability of a zone-`sf` packet at the reference gateway.
    pub fn simulate_success(&self, sf: Sf, placement: Placement) -> Result<McEstimate> {
        let gamma = self.model.phy.get(sf).sir_threshold;
        let m = self.run(sf, 1, |sources, pools, rng, out| {
            let w0 = self.reference_position(sf, placement, rng)?;
            let (a, q) = self.link(sf, w0, [0.0, 0.0]);
            let i = self.interference_at_origin(sources, pools, rng);
            out[0] = self.decide(a, gamma * i / q, rng);
            Ok(())
        })?;
        Ok(m.estimate(0))
    }

    /// Probability that at least one co-channel gateway decodes the packet.
    pub fn simulate_multigw(&self, sf: Sf, placement: Placement) -> Result<McEstimate> {
        let gamma = self.model.phy.get(sf).sir_threshold;
        let gateways: Vec<[f64; 2]> = self.model.layout.gateways(sf).collect();
        let env = &self.model.env;
        let m = self.run(sf, 1, |sources, pools, rng, out| {
            let w0 = self.reference_position(sf, placement, rng)?;
            let links: Vec<(f64, f64, [f64; 2])> = gateways
                .iter()
                .map(|&g| {
                    let (a, q) = self.link(sf, w0, g);
                    (a, q, g)
                })
                .filter(|l| l.0 < NEGLIGIBLE_SNR_EXPONENT)
                .collect();
            let interference: Vec<f64> = match self.cfg.multigw {
                MultiGwMode::Independent => links
                    .iter()
                    .map(|_| self.interference_at_origin(sources, pools, rng))
                    .collect(),
                MultiGwMode::Shared => {
                    let mut acc = vec![0.0; links.len()];
                    self.for_each_packet(sources, pools, rng, |p, w, rng| {
                        for (slot, l) in acc.iter_mut().zip(&links) {
                            let (dx, dy) = (p.pos[0] - l.2[0], p.pos[1] - l.2[1]);
                            let fade: f64 = Exp1.sample(rng);
                            *slot += p.tx * env.gain_from_sq(dx * dx + dy * dy) * fade * w;
                        }
                    });
                    acc
                }
            };
            let mut miss = 1.0;
            for (l, i) in links.iter().zip(interference) {
                miss *= 1.0 - self.decide(l.0, gamma * i / l.1, rng);
            }
            out[0] = 1.0 - miss;
            Ok(())
        })?;
        Ok(m.estimate(0))
    }

    /// Empirical `E[exp(-z I)]` on a grid of `z` and the mean interference
    /// at the reference gateway.
    pub fn simulate_interference(&self, sf: Sf, z: &[f64]) -> Result<InterferenceEstimate> {
        let width = z.len() + 1;
        let m = self.run(sf, width, |sources, pools, rng, out| {
            let i = self.interference_at_origin(sources, pools, rng);
            for (o, zk) in out.iter_mut().zip(z) {
                *o = (-zk * i).exp();
            }
            out[width - 1] = i;
            Ok(())
        })?;
        Ok(InterferenceEstimate {
            z: z.to_vec(),
            laplace: (0..z.len()).map(|k| m.estimate(k)).collect(),
            mean: m.estimate(width - 1),
        })
    }

    /// Interference realizations at the reference gateway, one per
    /// replication, in replication order.
    pub fn interference_samples(&self, sf: Sf) -> Result<Vec<f64>> {
        let sources = self.sources(sf)?;
        let n = self.cfg.replications;
        let blocks: Vec<Vec<f64>> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let pools = self.draw_pools(&sources, b as u64);
                (b * BLOCK..((b + 1) * BLOCK).min(n))
                    .map(|i| {
                        let mut rng = replicate_stream(self.cfg.seed, i as u64);
                        self.interference_at_origin(&sources, &pools, &mut rng)
                    })
                    .collect()
            })
            .collect();
        Ok(blocks.concat())
    }

    /// Success probability of a UE at `w0` averaged over the reference fading
    /// and the given interference realizations; with several gateways each
    /// link sees the samples as an independent copy.
    pub fn conditional_success(&self, sf: Sf, w0: [f64; 2], samples: &[f64], multi_gateway: bool) -> f64 {
        let gamma = self.model.phy.get(sf).sir_threshold;
        let single = |gw: [f64; 2]| {
            let (a, q) = self.link(sf, w0, gw);
            if a >= NEGLIGIBLE_SNR_EXPONENT || samples.is_empty() {
                return 0.0;
            }
            samples.iter().map(|i| (-a.max(gamma * i / q)).exp()).sum::<f64>() / samples.len() as f64
        };
        if multi_gateway {
            1.0 - self
                .model
                .layout
                .gateways(sf)
                .map(|g| 1.0 - single(g))
                .product::<f64>()
        } else {
            single([0.0, 0.0])
        }
    }
}
