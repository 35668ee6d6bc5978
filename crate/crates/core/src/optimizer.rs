//! Closed-form optimal duty cycles and iterative balancing of SF zone radii
//! for max-min fair throughput.

use std::cell::RefCell;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{bracket, DutyRule, NetworkModel, Reception, ZoneOutcome, ZoneSpan};
use crate::error::{Error, Result};
use crate::geometry::SfPlan;
use crate::phy::{Sf, SF_COUNT};

fn surd_duty(x: f64, cap: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("load factor {x} must be finite and non-negative")));
    }
    if !(0.0..1.0).contains(&cap) {
        return Err(Error::domain(format!("duty cap {cap} outside [0, 1)")));
    }
    // 1 + x - sqrt(x (2 + x)) written without cancellation for large x
    let root = 1.0 / (1.0 + x + (x * (2.0 + x)).sqrt());
    Ok(root.min(cap))
}

/// Throughput-maximizing duty cycle of an isolated equal-power zone of area
/// `area` with SIR threshold `sir_threshold` (linear), capped at `cap`.
pub fn optimal_duty_single(density: f64, area: f64, sir_threshold: f64, cap: f64) -> Result<f64> {
    if density < 0.0 || area < 0.0 || sir_threshold <= 0.0 {
        return Err(Error::domain("density and area must be non-negative, threshold positive"));
    }
    surd_duty(density * area * bracket(sir_threshold), cap)
}

/// Same optimum for a general interference mass `G(z0)`.
pub fn optimal_duty_multicell(density: f64, mass: f64, cap: f64) -> Result<f64> {
    if density < 0.0 || mass < 0.0 {
        return Err(Error::domain("density and interference mass must be non-negative"));
    }
    surd_duty(density * mass, cap)
}

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search; returns
/// the best abscissa seen and its value.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    let mut guard = 0;
    while (b - a).abs() > tol && guard < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (x, v);
            }
        }
        guard += 1;
    }
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    best
}

/// Maps one SF zone to its duty cycle and common throughput.
pub trait ThroughputEvaluator: Sync {
    fn cell_radius(&self) -> f64;
    fn duty_cap(&self) -> f64;
    /// Whether the zone `(inner, outer]` of `sf` covers any of the cell.
    fn zone_area(&self, sf: Sf, inner: f64, outer: f64) -> f64;
    fn evaluate(&self, sf: Sf, inner: f64, outer: f64) -> Result<ZoneOutcome>;
}

/// Evaluator backed by the analytic network model.
#[derive(Clone, Debug)]
pub struct ModelEvaluator {
    pub model: NetworkModel,
    pub reception: Reception,
    pub duty_rule: DutyRule,
    pub duty_cap: f64,
}

impl ThroughputEvaluator for ModelEvaluator {
    fn cell_radius(&self) -> f64 {
        self.model.layout.cell_radius
    }

    fn duty_cap(&self) -> f64 {
        self.duty_cap
    }

    fn zone_area(&self, _sf: Sf, inner: f64, outer: f64) -> f64 {
        crate::geometry::zone_area(inner, outer.max(inner), self.model.layout.clip())
            .map(|z| z.area)
            .unwrap_or(0.0)
    }

    fn evaluate(&self, sf: Sf, inner: f64, outer: f64) -> Result<ZoneOutcome> {
        self.model.zone_outcome(
            &ZoneSpan { sf, inner, outer },
            self.duty_cap,
            self.duty_rule,
            self.reception,
        )
    }
}

/// Why balancing stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every pair of adjacent used SFs is within the tolerance.
    GapClosed,
    /// Remaining gaps cannot be reduced within the radius bounds.
    NoReducibleGap,
    MaxIterations,
}

/// Settings of the balancing loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceSettings {
    /// Target throughput gap (bit/s).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Upper bound on the outer radius of each SF zone (m).
    pub range_caps: [f64; SF_COUNT],
}

impl Default for BalanceSettings {
    fn default() -> Self {
        BalanceSettings {
            tolerance: 0.02,
            max_iterations: 50,
            range_caps: crate::phy::DEFAULT_MAX_RANGE_M,
        }
    }
}

/// One step of the balancing trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub sf: Sf,
    pub radius: f64,
    /// Throughput gap of the tuned pair after tuning (bit/s).
    pub gap: f64,
}

/// Result of balancing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IbState {
    pub plan: SfPlan,
    pub outcomes: Vec<ZoneOutcome>,
    pub used: [bool; SF_COUNT],
    pub max_gap: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
}

impl IbState {
    pub fn throughputs(&self) -> [f64; SF_COUNT] {
        std::array::from_fn(|i| self.outcomes[i].throughput)
    }

    /// Smallest common throughput over used SFs.
    pub fn min_throughput(&self) -> f64 {
        self.outcomes
            .iter()
            .zip(self.used)
            .filter(|(_, u)| *u)
            .map(|(o, _)| o.throughput)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of tuning one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuneResult {
    pub radius: f64,
    /// The equalizing radius lies outside the bounds; `radius` is the nearer bound.
    pub at_boundary: bool,
    pub lower: ZoneOutcome,
    pub upper: ZoneOutcome,
}

struct CachedEvaluator<'a, E: ThroughputEvaluator + ?Sized> {
    inner: &'a E,
    cache: RefCell<HashMap<(u8, u64, u64), ZoneOutcome>>,
}

impl<'a, E: ThroughputEvaluator + ?Sized> CachedEvaluator<'a, E> {
    fn new(inner: &'a E) -> Self {
        CachedEvaluator {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn eval(&self, sf: Sf, inner: f64, outer: f64) -> Result<ZoneOutcome> {
        let key = (sf.value(), inner.to_bits(), outer.to_bits());
        if let Some(o) = self.cache.borrow().get(&key) {
            return Ok(*o);
        }
        let o = self.inner.evaluate(sf, inner, outer)?;
        self.cache.borrow_mut().insert(key, o);
        Ok(o)
    }

    fn eval_all(&self, plan: &SfPlan) -> Result<Vec<ZoneOutcome>> {
        let missing: Vec<Sf> = Sf::all()
            .filter(|&s| {
                let key = (s.value(), plan.inner(s).to_bits(), plan.outer(s).to_bits());
                !self.cache.borrow().contains_key(&key)
            })
            .collect();
        let fresh: Vec<Result<ZoneOutcome>> = missing
            .par_iter()
            .map(|&s| self.inner.evaluate(s, plan.inner(s), plan.outer(s)))
            .collect();
        for (s, o) in missing.into_iter().zip(fresh) {
            let key = (s.value(), plan.inner(s).to_bits(), plan.outer(s).to_bits());
            self.cache.borrow_mut().insert(key, o?);
        }
        Sf::all().map(|s| self.eval(s, plan.inner(s), plan.outer(s))).collect()
    }
}

/// Finds the outer radius of zone `sf` in `[lo, hi]` at which its throughput
/// equals that of the next zone, by bisection to a throughput resolution of
/// `resolution`. The other radii of `plan` stay fixed.
pub fn tune_threshold<E: ThroughputEvaluator + ?Sized>(
    sf: Sf,
    plan: &SfPlan,
    evaluator: &E,
    bounds: (f64, f64),
    resolution: f64,
) -> Result<TuneResult> {
    tune_cached(sf, plan, &CachedEvaluator::new(evaluator), bounds, resolution)
}

fn tune_cached<E: ThroughputEvaluator + ?Sized>(
    sf: Sf,
    plan: &SfPlan,
    ev: &CachedEvaluator<'_, E>,
    (lo, hi): (f64, f64),
    resolution: f64,
) -> Result<TuneResult> {
    let next = sf
        .next()
        .ok_or_else(|| Error::domain("the last SF has no outer threshold"))?;
    if !(lo <= hi) {
        return Err(Error::domain(format!("empty tuning interval [{lo}, {hi}]")));
    }
    let inner = plan.inner(sf);
    let outer_next = plan.outer(next);
    let at = |r: f64| -> Result<(f64, ZoneOutcome, ZoneOutcome)> {
        let a = ev.eval(sf, inner, r)?;
        let b = ev.eval(next, r, outer_next)?;
        Ok((a.throughput - b.throughput, a, b))
    };
    let (f_lo, a_lo, b_lo) = at(lo)?;
    if f_lo <= 0.0 {
        return Ok(TuneResult {
            radius: lo,
            at_boundary: f_lo < -resolution,
            lower: a_lo,
            upper: b_lo,
        });
    }
    let (f_hi, a_hi, b_hi) = at(hi)?;
    if f_hi >= 0.0 {
        return Ok(TuneResult {
            radius: hi,
            at_boundary: f_hi > resolution,
            lower: a_hi,
            upper: b_hi,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f_lo, f_hi);
    let mut best = if fa.abs() < fb.abs() { (lo, fa, a_lo, b_lo) } else { (hi, fb, a_hi, b_hi) };
    let mut first = true;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (fm, am, bm) = at(m)?;
        if first {
            // runtime check of the monotonicity bisection relies on
            let slack = 1e-9 * (fa.abs() + fb.abs());
            if !(fa + slack >= fm && fm + slack >= fb) {
                return Err(Error::NonMonotone {
                    sf: sf.value(),
                    detail: format!("gap {fa:.4}, {fm:.4}, {fb:.4} at r = {a:.1}, {m:.1}, {b:.1} m"),
                });
            }
            first = false;
        }
        if fm.abs() < best.1.abs() {
            best = (m, fm, am, bm);
        }
        if fm.abs() <= resolution {
            break;
        }
        if fm > 0.0 {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
        let _ = (fa, fb);
    }
    Ok(TuneResult {
        radius: best.0,
        at_boundary: false,
        lower: best.2,
        upper: best.3,
    })
}

fn spread(outcomes: &[ZoneOutcome], used: &[bool; SF_COUNT]) -> f64 {
    let (lo, hi) = outcomes
        .iter()
        .zip(used)
        .filter(|(_, u)| **u)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (o, _)| {
            (lo.min(o.throughput), hi.max(o.throughput))
        });
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Direct max-min solution used to warm-start [`balance`]: bisects on a
/// target throughput, growing each zone outward from SF7 as far as the
/// target allows, and keeps the largest target the last zone still meets.
pub fn chain_max_min<E: ThroughputEvaluator + ?Sized>(
    evaluator: &E,
    caps: &[f64; SF_COUNT],
    resolution: f64,
) -> Result<SfPlan> {
    if !(resolution > 0.0) {
        return Err(Error::config("tolerance", "resolution must be positive"));
    }
    let ev = CachedEvaluator::new(evaluator);
    let rc = evaluator.cell_radius();
    let radius_tol = 1e-7 * rc;
    let theta = |i: usize, lo: f64, hi: f64| ev.eval(Sf::from_index(i), lo, hi).map(|o| o.throughput);
    let chain = |target: f64| -> Result<Option<[f64; SF_COUNT - 1]>> {
        let mut radii = [0.0; SF_COUNT - 1];
        let mut prev = 0.0;
        for i in 0..SF_COUNT - 1 {
            let hi = caps[i].min(rc).max(prev);
            let r = if theta(i, prev, hi)? >= target {
                hi
            } else if theta(i, prev, prev)? < target {
                prev
            } else {
                let (mut a, mut b) = (prev, hi);
                while b - a > radius_tol {
                    let m = 0.5 * (a + b);
                    if theta(i, prev, m)? >= target {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                a
            };
            radii[i] = r;
            prev = r;
        }
        Ok((theta(SF_COUNT - 1, prev, rc)? >= target).then_some(radii))
    };
    let mut lo = 0.0;
    let mut best = chain(lo)?.ok_or_else(|| Error::domain("no plan reaches zero throughput"))?;
    let mut hi = 1.0;
    while let Some(r) = chain(hi)? {
        best = r;
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::domain("throughput target unbounded"));
        }
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        match chain(mid)? {
            Some(r) => {
                best = r;
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let duty = evaluator.duty_cap();
    SfPlan::new(best, rc, [duty; SF_COUNT], duty)
}

/// Equal-area starting plan respecting the range caps.
pub fn initial_plan(cell_radius: f64, duty_cap: f64, caps: &[f64; SF_COUNT]) -> Result<SfPlan> {
    let mut plan = SfPlan::equal_area(cell_radius, duty_cap, duty_cap)?;
    let mut prev: f64 = 0.0;
    for i in 0..SF_COUNT - 1 {
        let r = plan.radii[i].min(caps[i]).max(prev);
        plan.radii[i] = r;
        prev = r;
    }
    Ok(plan)
}

/// Iteratively equalizes the largest throughput gap between adjacent used
/// SFs by moving their shared radius.
pub fn balance<E: ThroughputEvaluator + ?Sized>(
    evaluator: &E,
    start: &SfPlan,
    settings: &BalanceSettings,
) -> Result<IbState> {
    if !(settings.tolerance > 0.0) {
        return Err(Error::config("tolerance", "balancing tolerance must be positive"));
    }
    let rc = evaluator.cell_radius();
    if (start.cell_radius - rc).abs() > 1e-9 * rc {
        return Err(Error::config("plan", "start plan and evaluator disagree on the cell radius"));
    }
    start.validate()?;
    let ev = CachedEvaluator::new(evaluator);
    let mut plan = start.clone();
    let mut outcomes = ev.eval_all(&plan)?;
    let used_of = |plan: &SfPlan| -> [bool; SF_COUNT] {
        std::array::from_fn(|i| {
            let s = Sf::from_index(i);
            evaluator.zone_area(s, plan.inner(s), plan.outer(s)) > 0.0
        })
    };
    let gaps_of = |outcomes: &[ZoneOutcome], used: &[bool; SF_COUNT]| -> Vec<(usize, f64)> {
        (0..SF_COUNT - 1)
            .filter(|&i| used[i] && used[i + 1])
            .map(|i| (i, outcomes[i].throughput - outcomes[i + 1].throughput))
            .collect()
    };
    let mut trace = Vec::new();
    let mut blocked = [false; SF_COUNT - 1];
    let mut iterations = 0;
    let resolution = settings.tolerance / 10.0;
    let termination = loop {
        let used = used_of(&plan);
        if spread(&outcomes, &used) < settings.tolerance {
            break Termination::GapClosed;
        }
        // largest reducible gap; ties go to the lowest SF
        let pick = gaps_of(&outcomes, &used)
            .into_iter()
            .filter(|(i, g)| !blocked[*i] && g.abs() > resolution)
            .fold(None::<(usize, f64)>, |acc, (i, g)| match acc {
                Some((_, best)) if best >= g.abs() => acc,
                _ => Some((i, g.abs())),
            });
        let Some((i, _)) = pick else {
            break Termination::NoReducibleGap;
        };
        if iterations >= settings.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let sf = Sf::from_index(i);
        let lo = plan.inner(sf);
        let hi = plan.outer(Sf::from_index(i + 1)).min(settings.range_caps[i]).min(rc).max(lo);
        let tuned = tune_cached(sf, &plan, &ev, (lo, hi), resolution)?;
        let old = plan.radii[i];
        plan.radii[i] = tuned.radius;
        outcomes[i] = tuned.lower;
        outcomes[i + 1] = tuned.upper;
        trace.push(TraceRow {
            iteration: iterations,
            sf,
            radius: tuned.radius,
            gap: (tuned.lower.throughput - tuned.upper.throughput).abs(),
        });
        if (tuned.radius - old).abs() <= 1e-9 * rc {
            blocked[i] = true;
        } else {
            blocked = [false; SF_COUNT - 1];
        }
    };
    for (i, o) in outcomes.iter().enumerate() {
        plan.duty[i] = o.duty;
    }
    plan.duty_cap = evaluator.duty_cap();
    let used = used_of(&plan);
    let max_gap = spread(&outcomes, &used);
    Ok(IbState {
        plan,
        outcomes,
        used,
        max_gap,
        iterations,
        termination,
        trace,
    })
}
