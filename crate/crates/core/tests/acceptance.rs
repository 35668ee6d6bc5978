//! Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL
//! line per criterion followed by the individual checks. Exits non-zero
//! when any criterion fails.

use std::time::Instant;

use lora_planner::analytic::{mean_interference, DutyRule, Reception, ZoneSpan};
use lora_planner::cli::{
    compare_reuse, evaluate, optimize, sweep, sweep_crossings, FileFormat, PlanChoice, ResolvedPlan, Scenario,
    ScenarioFile, SweepSpec,
};
use lora_planner::geometry::{sample_hppp, Region, SfPlan};
use lora_planner::metrics::{analytic_stp, jain, mc_population, plan_outcomes, ThroughputReport};
use lora_planner::optimizer::{IbState, Termination};
use lora_planner::phy::{Sf, SF_COUNT};
use lora_planner::simulator::{Placement, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one balancing run, checked against the iteration budget.
struct BalanceRecord {
    name: String,
    iterations: usize,
    termination: Termination,
    gap: f64,
}

impl BalanceRecord {
    fn of(name: impl Into<String>, s: &IbState) -> Self {
        BalanceRecord {
            name: name.into(),
            iterations: s.iterations,
            termination: s.termination,
            gap: s.max_gap,
        }
    }
}

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }

    /// `value` within `rel` of `target`.
    fn near(&mut self, name: &str, value: f64, target: f64, rel: f64) {
        let err = (value - target) / target;
        self.check(
            name,
            err.abs() <= rel,
            format!("{value:.5e} vs {target:.5e} ({:+.3}%, allowed ±{}%)", 100.0 * err, 100.0 * rel),
        );
    }

    /// `value` within `abs` of `target`.
    fn within(&mut self, name: &str, value: f64, target: f64, abs: f64) {
        self.check(
            name,
            (value - target).abs() <= abs,
            format!("{value:.4} vs {target} (±{abs})"),
        );
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.check(name, value >= bound, format!("{value:.4} >= {bound}"));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

fn scenario(text: &str) -> Scenario {
    Scenario::from_file(ScenarioFile::parse(text, FileFormat::Toml).expect("scenario parses")).expect("scenario is valid")
}

fn fixed_plan(sc: &Scenario) -> SfPlan {
    match &sc.plan {
        PlanChoice::Fixed(p) => p.clone(),
        PlanChoice::Optimize => panic!("scenario has no fixed plan"),
    }
}

/// Balanced plan and its report: zone throughputs from the analytic model,
/// fairness and percentile from the Monte-Carlo population.
fn balanced(sc: &Scenario) -> (IbState, ThroughputReport) {
    let state = optimize(sc).expect("balancing succeeds");
    let resolved = ResolvedPlan {
        plan: state.plan.clone(),
        outcomes: state.outcomes.clone(),
        balance: None,
    };
    let report = evaluate(sc, &resolved).expect("report");
    (state, report)
}

fn fixed_report(sc: &Scenario) -> ThroughputReport {
    let plan = fixed_plan(sc);
    let resolved = ResolvedPlan {
        outcomes: plan_outcomes(&sc.model, &plan, sc.reception).expect("outcomes"),
        plan,
        balance: None,
    };
    evaluate(sc, &resolved).expect("report")
}

const POPULATION_MC: &str = "[mc]\nreplications = 10000\n";

fn criterion_1() -> Criterion {
    let mut c = Criterion::default();
    let start = Instant::now();
    for lambda in [350.0, 700.0] {
        for duty in [0.002, 0.006, 0.01, 0.014, 0.02] {
            let sc = scenario(&format!(
                "[cell]\nradius_km = 0.9\n[traffic]\nactive_density_per_km2 = {lambda}\n[power]\nbeta = 1.0\n\
                 [plan]\nmode = \"equal_width\"\nduty = {duty}\nduty_cap = 0.02\n\
                 [mc]\nreplications = 100000\nestimator = \"conditional\"\n"
            ));
            let plan = fixed_plan(&sc);
            let sim = Simulator::new(&sc.model, &plan, &sc.mc).unwrap();
            for sf in [9, 10].map(|s| Sf::new(s).unwrap()) {
                let analytic = sc.model.packet_success(sf, &plan).unwrap().probability;
                let mc = sim.simulate_success(sf, Placement::ZoneUniform).unwrap();
                let rel = (analytic - mc.mean) / mc.mean;
                c.check(
                    format!("lambda {lambda}, duty {duty}, {sf}"),
                    rel.abs() <= 0.05,
                    format!("analytic {analytic:.5} mc {:.5} ± {:.5} ({:+.2}%)", mc.mean, mc.stderr, 100.0 * rel),
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.check("grid wall time", secs <= 600.0, format!("{secs:.1} s <= 600 s"));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::default();
    let sc = scenario(
        "[cell]\nradius_km = 0.9\n[power]\nbeta = 1.0\n[plan]\nmode = \"equal_width\"\nduty = 0.01\n\
         [mc]\nreplications = 1000000\n",
    );
    let plan = fixed_plan(&sc);
    let sf = Sf::new(10).unwrap();
    let m = &sc.model;
    let p = m.phy.get(sf);
    let q = m.edge_rx_power(sf, plan.outer(sf));
    let area = m.layout.zone(&plan, sf).area;
    let closed = mean_interference(m.active_density, plan.duty(sf), p.packet_duration, area, q).unwrap();
    let sim = Simulator::new(m, &plan, &sc.mc).unwrap();
    let est = sim.simulate_interference(sf, &[]).unwrap();
    c.near("Monte-Carlo mean vs closed form", est.mean.mean, closed, 0.01);
    // Richardson-extrapolated forward difference of -ln L at the origin
    let slope = |h: f64| -m.laplace_total(h, &plan, sf).unwrap().value.ln() / h;
    let h = 1e-4 / closed;
    let derivative = 2.0 * slope(h / 2.0) - slope(h);
    c.near("-d ln L/dz at 0 vs closed form", derivative, closed, 0.001);
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cap = 0.5;
    let run = |c: &mut Criterion, label: String, sc: &Scenario, span: ZoneSpan| {
        let at = |rule| sc.model.zone_outcome(&span, cap, rule, Reception::SingleGateway).unwrap();
        let best = at(DutyRule::ClosedForm);
        let grid = (1..=10_000)
            .map(|i| at(DutyRule::Fixed(cap * i as f64 / 10_000.0)).throughput)
            .fold(0.0, f64::max);
        c.check(
            label,
            best.throughput >= 0.999 * grid,
            format!("closed form {:.5} (duty {:.5}) vs grid {grid:.5}", best.throughput, best.duty),
        );
    };
    for k in 0..20 {
        let lambda = rng.random_range(50.0..2000.0);
        let gamma_db = rng.random_range(0.0..10.0);
        let inner = rng.random_range(0.0..780.0);
        let outer = inner + rng.random_range(20.0..200.0);
        let sc = scenario(&format!(
            "[cell]\nradius_km = 1.0\n[traffic]\nactive_density_per_km2 = {lambda}\n[phy]\nsir_threshold_db = {gamma_db}\n\
             [power]\nbeta = 1.0\n"
        ));
        let sf = Sf::from_index(k % SF_COUNT);
        run(&mut c, format!("single cell #{k}: lambda {lambda:.0}, gamma {gamma_db:.1} dB, zone ({inner:.0}, {outer:.0}] m"), &sc, ZoneSpan { sf, inner, outer });
    }
    for k in 0..5 {
        let lambda = rng.random_range(100.0..1000.0);
        let gamma_db = rng.random_range(0.0..10.0);
        let inner = rng.random_range(0.0..600.0);
        let outer = inner + rng.random_range(50.0..250.0);
        let sc = scenario(&format!(
            "[cell]\nlayout = \"hex_grid\"\nradius_km = 1.0\n[traffic]\nactive_density_per_km2 = {lambda}\n\
             [phy]\nsir_threshold_db = {gamma_db}\n[power]\nbeta = 1.0\n"
        ));
        let sf = Sf::from_index(k % SF_COUNT);
        run(&mut c, format!("19 cells #{k}: lambda {lambda:.0}, gamma {gamma_db:.1} dB, zone ({inner:.0}, {outer:.0}] m"), &sc, ZoneSpan { sf, inner, outer });
    }
    c
}

fn criterion_4(records: &mut Vec<BalanceRecord>) -> Criterion {
    let mut c = Criterion::default();
    let bench = scenario(&format!(
        "[cell]\nradius_km = 1.0\n[power]\nbeta = 0.0\n[plan]\nmode = \"equal_area\"\nduty = 0.01\n{POPULATION_MC}"
    ));
    let r = fixed_report(&bench);
    c.near("benchmark min throughput", r.min_throughput, 0.29, 0.10);
    c.within("benchmark Jain", r.jain, 0.2145, 0.02);
    let stp = analytic_stp(&bench.model, &fixed_plan(&bench)).unwrap() * 1e9;
    c.within("benchmark STP (mW/km2, to the quoted digit)", stp, 87.9, 0.05);

    let opt = scenario(&format!("[cell]\nradius_km = 1.0\n[power]\nbeta = 1.0\n{POPULATION_MC}"));
    let (state, r) = balanced(&opt);
    c.near("optimized min throughput", r.min_throughput, 2.81, 0.10);
    c.at_least("optimized Jain", r.jain, 0.99);
    c.near("optimized 90%-spatial (bit/s/km2)", r.percentile_spatial * 1e6, 930.5, 0.10);
    c.near("optimized STP (mW/km2)", r.stp * 1e9, 22.8, 0.15);
    let last = SF_COUNT - 1;
    c.check(
        "SF12 unused",
        !r.used[last],
        format!(
            "SF11 zone ends at {:.1} m of 1000 m; SF12 {}",
            state.plan.radii[last - 1],
            if r.used[last] { "still serves the outer ring" } else { "unused" }
        ),
    );
    let d11 = state.plan.duty[last - 1];
    c.check("duty cycle of SF11 at the 1% cap", (d11 - 0.01).abs() < 1e-12, format!("{d11}"));
    records.push(BalanceRecord::of("single cell 1 km", &state));
    c
}

fn criterion_5(records: &mut Vec<BalanceRecord>) -> Criterion {
    let mut c = Criterion::default();
    let sc = scenario(&format!("[cell]\nradius_km = 2.0\n[power]\nbeta = 1.0\n{POPULATION_MC}"));
    let (state, r) = balanced(&sc);
    c.within("Jain", r.jain, 0.7614, 0.05);
    c.near("90%-spatial (bit/s/km2)", r.percentile_spatial * 1e6, 134.4, 0.15);
    c.near("STP (mW/km2)", r.stp * 1e9, 7.42, 0.15);
    records.push(BalanceRecord::of("single cell 2 km", &state));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::default();
    let profiles = [
        ("five levels 2..14 dBm", "power_levels_dbm = [2.0, 5.0, 8.0, 11.0, 14.0]\n", 1.12, 0.206),
        (
            "1 dB steps -10..14 dBm",
            "power_levels_dbm = [-10.0, -9.0, -8.0, -7.0, -6.0, -5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0]\n",
            1.66,
            0.328,
        ),
        ("continuous", "", 1.95, 0.999),
    ];
    for (name, levels, min_target, jain_target) in profiles {
        let sc = scenario(&format!(
            "[cell]\nradius_km = 0.5\n[power]\nbeta = 1.0\n{levels}\
             [plan]\nmode = \"explicit\"\nradii_m = [500.0, 500.0, 500.0, 500.0, 500.0]\nduty = 0.01\n\
             [mc]\nreplications = 20000\npool_factor = 100.0\n"
        ));
        let plan = fixed_plan(&sc);
        let pop = mc_population(&sc.model, &plan, sc.reception, &sc.mc).unwrap();
        c.near(&format!("{name}: min throughput"), pop.min_throughput().unwrap(), min_target, 0.10);
        c.within(&format!("{name}: Jain"), pop.jain().unwrap(), jain_target, 0.03);
    }
    c
}

fn criterion_7(records: &mut Vec<BalanceRecord>) -> Criterion {
    let mut c = Criterion::default();
    let grid = "[cell]\nlayout = \"hex_grid\"\nradius_km = 1.0\ninterference_range_km = 3.2\n";
    let single = scenario(&format!("{grid}[power]\nbeta = 1.0\n{POPULATION_MC}"));
    c.check(
        "19 cells within 3.2 km",
        single.model.layout.cell_count() == 19,
        format!("{} cells", single.model.layout.cell_count()),
    );
    let (state, r) = balanced(&single);
    c.near("single-GW min throughput", r.min_throughput, 1.591, 0.10);
    c.at_least("single-GW Jain", r.jain, 0.99);
    c.near("single-GW 90%-spatial (bit/s/km2)", r.percentile_spatial * 1e6, 605.0, 0.10);
    c.near("single-GW STP (mW/km2)", r.stp * 1e9, 11.5, 0.15);
    records.push(BalanceRecord::of("19 cells, single-GW", &state));

    let multi = scenario(&format!("{grid}reception = \"multi_gateway\"\n[power]\nbeta = 0.9\n{POPULATION_MC}"));
    let (state, r) = balanced(&multi);
    c.near("multi-GW min throughput", r.min_throughput, 2.147, 0.10);
    c.near("multi-GW 90%-spatial (bit/s/km2)", r.percentile_spatial * 1e6, 779.3, 0.10);
    c.near("multi-GW STP (mW/km2)", r.stp * 1e9, 12.8, 0.15);
    records.push(BalanceRecord::of("19 cells, multi-GW", &state));
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::default();
    let sc = scenario(
        "[cell]\nlayout = \"hex_grid\"\nradius_km = 0.7\ninterference_range_km = 3.2\nchannels = 3\n\
         [traffic]\nactive_density_per_km2 = 1050.0\n[power]\nbeta = 0.0\n\
         [plan]\nmode = \"equal_area\"\nduty = 0.01\n[output]\ncurve_points_per_zone = 16\n",
    );
    c.check(
        "37 cells within 3.2 km",
        sc.model.layout.cell_count() == 37,
        format!("{} cells", sc.model.layout.cell_count()),
    );
    let rows = compare_reuse(&sc).unwrap();
    let center = |sf: Sf| sf.value() <= 9;
    let inner: Vec<_> = rows.iter().filter(|r| center(r.sf)).collect();
    let worst = inner.iter().map(|r| r.full - r.one_over_f).fold(f64::INFINITY, f64::min);
    c.check(
        "1-reuse >= 1/3-reuse on SF7-9",
        worst >= 0.0,
        format!("{} radii, smallest margin {worst:.4} bit/s", inner.len()),
    );
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let ffr_center = rows.iter().filter(|r| center(r.sf)).map(|r| rel(r.lora_ffr, r.full)).fold(0.0, f64::max);
    let ffr_edge = rows
        .iter()
        .filter(|r| !center(r.sf))
        .map(|r| rel(r.lora_ffr, r.one_over_f))
        .fold(0.0, f64::max);
    c.check("LoRa-FFR = 1-reuse on SF7-9", ffr_center <= 1e-6, format!("max relative difference {ffr_center:.1e}"));
    c.check("LoRa-FFR = 1/3-reuse on SF10-12", ffr_edge <= 1e-6, format!("max relative difference {ffr_edge:.1e}"));
    c
}

fn criterion_9(records: &[BalanceRecord]) -> Criterion {
    let mut c = Criterion::default();
    for r in records {
        let ok = r.iterations <= 50 && (r.termination != Termination::GapClosed || r.gap < 0.02);
        c.check(
            r.name.clone(),
            ok,
            format!("{:?} after {} iterations, gap {:.4} bit/s", r.termination, r.iterations, r.gap),
        );
    }
    if records.is_empty() {
        c.check("balancing runs", false, "no runs recorded; run criteria 4, 5, 7 or the sweep first");
    }
    c
}

fn criterion_10() -> Criterion {
    let mut c = Criterion::default();
    let sc = scenario("[cell]\nradius_km = 1.0\n[power]\nbeta = 1.0\n[plan]\nmode = \"equal_area\"\nduty = 0.01\n");
    let plan = fixed_plan(&sc);
    let m = &sc.model;

    let mut laplace_ok = true;
    for sf in Sf::all() {
        let z0 = m.phy.get(sf).sir_threshold / m.edge_rx_power(sf, plan.outer(sf));
        laplace_ok &= (m.laplace_total(0.0, &plan, sf).unwrap().value - 1.0).abs() < 1e-12;
        let values: Vec<f64> = (0..=40)
            .map(|i| m.laplace_total(z0 * 10f64.powf(-2.0 + 0.1 * i as f64), &plan, sf).unwrap().value)
            .collect();
        laplace_ok &= values.windows(2).all(|w| w[1] <= w[0] + 1e-12 && w[1] > 0.0);
    }
    c.check("Laplace transform: L(0) = 1, positive, non-increasing", laplace_ok, "6 SFs x 41 points");

    let mut doubled = sc.model.clone();
    doubled.active_density *= 2.0;
    let sf = Sf::new(9).unwrap();
    let z0 = m.phy.get(sf).sir_threshold / m.edge_rx_power(sf, plan.outer(sf));
    let a = m.laplace_total(z0, &plan, sf).unwrap().value.ln();
    let b = doubled.laplace_total(z0, &plan, sf).unwrap().value.ln();
    c.check("log-linearity in density", ((b - 2.0 * a) / a).abs() < 1e-9, format!("ln L(2 lambda) / ln L(lambda) = {:.12}", b / a));

    let bern = scenario(
        "[cell]\nradius_km = 1.0\n[power]\nbeta = 1.0\n[plan]\nmode = \"equal_area\"\nduty = 0.01\n\
         [mc]\nreplications = 20000\n",
    );
    let bplan = fixed_plan(&bern);
    let sim = Simulator::new(&bern.model, &bplan, &bern.mc).unwrap();
    let mut worst = f64::INFINITY;
    for sf in Sf::all() {
        let a = bern.model.packet_success(sf, &bplan).unwrap().probability;
        let e = sim.simulate_success(sf, Placement::ZoneUniform).unwrap();
        worst = worst.min((e.mean + 3.0 * e.stderr - a) / e.stderr.max(1e-12));
    }
    c.check("analytic success <= MC + 3 stderr", worst >= 0.0, format!("smallest slack {worst:.2} stderr"));

    let grid = scenario("[cell]\nlayout = \"hex_grid\"\nradius_km = 1.0\n[plan]\nmode = \"equal_area\"\nduty = 0.01\n");
    let gplan = fixed_plan(&grid);
    let mut diversity_ok = true;
    for (r, phi) in [(100.0, 0.1), (600.0, 0.4), (850.0, 0.0), (800.0, 0.5)] {
        let w0 = [r * f64::cos(phi), r * f64::sin(phi)];
        let sf = lora_planner::geometry::assign_sf(w0, &gplan, &grid.model.layout).unwrap();
        let multi = grid.model.success_multigw(w0, sf, &gplan).unwrap();
        let best = grid
            .model
            .layout
            .gateways(sf)
            .map(|g| grid.model.success_at_gw(w0, g, sf, &gplan).unwrap())
            .fold(0.0, f64::max);
        diversity_ok &= multi >= best - 1e-12;
    }
    c.check("multi-GW success >= best single GW", diversity_ok, "4 positions");

    let v = [0.3, 2.0, 5.5, 0.0, 1.25];
    let scaled: Vec<f64> = v.iter().map(|x| 7.5 * x).collect();
    let (j1, j2) = (jain(&v).unwrap(), jain(&scaled).unwrap());
    c.check("Jain scaling invariance", (j1 - j2).abs() < 1e-12, format!("{j1:.12} vs {j2:.12}"));

    let sf = Sf::new(10).unwrap();
    let first = sim.simulate_success(sf, Placement::ZoneUniform).unwrap();
    let again = Simulator::new(&bern.model, &bplan, &bern.mc).unwrap().simulate_success(sf, Placement::ZoneUniform).unwrap();
    c.check("determinism under a fixed seed", first == again, format!("{} == {}", first.mean, again.mean));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let region = Region::disk(1000.0);
    let counts: Vec<f64> = (0..10_000).map(|_| sample_hppp(&region, 20e-6, &mut rng).len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|n| (n - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    c.check(
        "Poisson count dispersion",
        (0.95..=1.05).contains(&(var / mean)),
        format!("variance/mean {:.4} (mean {mean:.2}, expected {:.2})", var / mean, 20e-6 * region.area()),
    );
    c
}

fn crossings(records: &mut Vec<BalanceRecord>) -> Criterion {
    let mut c = Criterion::default();
    let targets = [
        ("single-GW", Reception::SingleGateway, "1.0", [(350.0, 0.27), (700.0, 0.48)]),
        ("multi-GW", Reception::MultiGateway, "0.9", [(350.0, 0.22), (700.0, 0.36)]),
    ];
    for (name, reception, beta, expected) in targets {
        let base = ScenarioFile::parse(
            &format!("[cell]\nlayout = \"hex_grid\"\nradius_km = 1.0\ninterference_range_km = 3.2\n[power]\nbeta = {beta}\n"),
            FileFormat::Toml,
        )
        .unwrap();
        let spec = SweepSpec {
            radii_km: vec![2.6, 2.0, 1.5, 1.0, 0.7],
            densities_per_km2: vec![350.0, 700.0],
            receptions: vec![reception],
            range_factor: None,
            with_population: false,
        };
        let rows = sweep(&base, &spec).unwrap();
        for r in &rows {
            c.check(
                format!("{name}, {} UEs/km2, r_c {} m: min throughput", r.ue_density_per_km2, r.cell_radius_m),
                true,
                format!("{:.4} bit/s at {:.4} GWs/km2", r.min_bps, r.gw_density_per_km2),
            );
            records.push(BalanceRecord {
                name: format!("sweep {name}, {} UEs/km2, r_c {} m", r.ue_density_per_km2, r.cell_radius_m),
                iterations: r.iterations,
                termination: r.termination,
                gap: r.gap_bps,
            });
        }
        for (_, density, x) in sweep_crossings(&rows, 1.0) {
            let target = expected.iter().find(|e| e.0 == density).unwrap().1;
            match x {
                Some(x) => c.within(&format!("{name}, {density} UEs/km2: GW density at 1 bit/s"), x, target, 0.05),
                None => c.check(format!("{name}, {density} UEs/km2"), false, "minimum throughput never crosses 1 bit/s"),
            }
        }
    }
    c
}

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |key: &str| only.is_empty() || only.iter().any(|o| o == key);
    let mut records = Vec::new();
    let mut results: Vec<(&str, &str, Criterion)> = Vec::new();
    let mut run = |key: &'static str, title: &'static str, f: &mut dyn FnMut() -> Criterion| {
        if wanted(key) {
            let t = Instant::now();
            let c = f();
            println!(
                "criterion {key:<9} {title:<48} {} ({:.1} s)",
                if c.passed() { "PASS" } else { "FAIL" },
                t.elapsed().as_secs_f64()
            );
            for ch in &c.checks {
                println!("    [{}] {}: {}", if ch.ok { "ok" } else { "FAIL" }, ch.name, ch.detail);
            }
            results.push((key, title, c));
        }
    };
    run("1", "analytic vs Monte-Carlo success", &mut criterion_1);
    run("2", "mean interference", &mut criterion_2);
    run("3", "closed-form duty cycle optimality", &mut criterion_3);
    run("4", "single cell, 1 km", &mut || criterion_4(&mut records));
    run("5", "single cell, 2 km", &mut || criterion_5(&mut records));
    run("6", "discrete transmit power", &mut criterion_6);
    run("7", "19-cell grid, 1 km", &mut || criterion_7(&mut records));
    run("8", "frequency reuse comparison", &mut criterion_8);
    run("10", "property suites", &mut criterion_10);
    run("sweep", "gateway density crossings", &mut || crossings(&mut records));
    run("9", "balancing contract", &mut || criterion_9(&records));
    let failed: Vec<&str> = results.iter().filter(|r| !r.2.passed()).map(|r| r.0).collect();
    println!(
        "\nacceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
