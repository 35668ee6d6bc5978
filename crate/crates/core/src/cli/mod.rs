//! Command-line front end: scenario ingestion, subcommand dispatch and
//! result files.

mod commands;
mod output;
mod scenario;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use commands::{
    analyze, compare_reuse, evaluate, evaluator, optimize, resolve_plan, scenario_fingerprint, simulate, sweep,
    sweep_crossings, sweep_scenario, Analysis, CurveComparison, ResolvedPlan, ReuseRow, Simulation, SweepRow,
    SweepSpec,
};
pub use output::{report_table, Table};
pub use scenario::{
    CellSection, DutyChoice, DutySpec, FileFormat, LayoutKind, OutputSection, PhySection, PlanChoice, PlanMode,
    PlanSection, PowerSection, RadioSection, ReuseKind, Scenario, ScenarioFile, StartRule, TrafficSection,
    DEFAULT_DENSITY_PER_KM2,
};

use crate::analytic::Reception;
use crate::error::{Error, Result};
use crate::geometry::SfPlan;
use crate::metrics::ThroughputReport;
use output::num;

#[derive(Debug, Parser)]
#[command(name = "lora-planner", version, about = "Capacity planning for large-scale LoRa networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Monte-Carlo seed (overrides the scenario).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte-Carlo replications (overrides the scenario).
    #[arg(long, global = true)]
    pub replications: Option<usize>,
    /// Balancing tolerance in bit/s (overrides the scenario).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of the report file.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReceptionArg {
    Single,
    Multi,
}

impl From<ReceptionArg> for Reception {
    fn from(r: ReceptionArg) -> Self {
        match r {
            ReceptionArg::Single => Reception::SingleGateway,
            ReceptionArg::Multi => Reception::MultiGateway,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic report and radial throughput curve of the scenario's plan.
    Analyze { scenario: PathBuf },
    /// Balance the SF plan; writes the plan, its report and the balancing trace.
    Optimize { scenario: PathBuf },
    /// Monte-Carlo report and radial curve next to the analytic values.
    Simulate { scenario: PathBuf },
    /// Optimize a grid of cell radii and UE densities on a hexagonal layout.
    Sweep {
        scenario: PathBuf,
        /// Cell radii (km).
        #[arg(long, value_delimiter = ',', default_values_t = [2.6, 2.0, 1.5, 1.0, 0.7])]
        radii_km: Vec<f64>,
        /// Active UE densities (per km^2).
        #[arg(long, value_delimiter = ',', default_values_t = [350.0, 700.0])]
        densities: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ReceptionArg::Single, ReceptionArg::Multi])]
        reception: Vec<ReceptionArg>,
        /// Interference range as a multiple of the cell radius.
        #[arg(long)]
        range_factor: Option<f64>,
        /// Minimum throughput (bit/s) whose required gateway density is reported.
        #[arg(long, default_value_t = 1.0)]
        target_bps: f64,
        /// Skip the Monte-Carlo population (no fairness or percentile columns).
        #[arg(long)]
        no_population: bool,
    },
    /// Radial throughput under 1-reuse, 1/F-reuse and LoRa-FFR.
    CompareReuse { scenario: PathBuf },
}

impl Command {
    fn scenario_path(&self) -> &Path {
        match self {
            Command::Analyze { scenario }
            | Command::Optimize { scenario }
            | Command::Simulate { scenario }
            | Command::Sweep { scenario, .. }
            | Command::CompareReuse { scenario } => scenario,
        }
    }
}

/// Loads the scenario and applies command-line overrides.
pub fn load_scenario(cli: &Cli) -> Result<ScenarioFile> {
    let mut file = ScenarioFile::load(cli.command.scenario_path())?;
    if let Some(seed) = cli.seed {
        file.mc.seed = seed;
    }
    if let Some(n) = cli.replications {
        file.mc.replications = n;
    }
    if let Some(t) = cli.tolerance {
        file.plan.tolerance = t;
    }
    Ok(file)
}

struct Sink<'a> {
    dir: &'a Path,
    fingerprint: String,
    format: ReportFormat,
}

impl Sink<'_> {
    fn table(&self, name: &str, table: &Table) -> Result<()> {
        table.write_file(&self.dir.join(name), &self.fingerprint)
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(self.dir.join(name), text + "\n")?;
        Ok(())
    }

    fn report(&self, report: &ThroughputReport, plan: &SfPlan) -> Result<()> {
        match self.format {
            ReportFormat::Csv => self.table("report.csv", &report_table(report, plan)),
            ReportFormat::Json => self.json("report.json", report),
        }
    }
}

fn curve_columns() -> Table {
    Table::new(&[
        ("radius_m", "m"),
        ("sf", "-"),
        ("analytic_bps", "bit/s"),
        ("mc_bps", "bit/s"),
        ("mc_stderr", "bit/s"),
    ])
}

/// Runs one subcommand, writing its artifacts under `cli.out_dir`.
pub fn run(cli: &Cli) -> Result<()> {
    let file = load_scenario(cli)?;
    let scenario = Scenario::from_file(file.clone())?;
    std::fs::create_dir_all(&cli.out_dir)?;
    let sink = Sink {
        dir: &cli.out_dir,
        fingerprint: scenario_fingerprint(&scenario)?,
        format: cli.format,
    };
    std::fs::write(cli.out_dir.join("scenario.json"), file.to_json()? + "\n")?;
    match &cli.command {
        Command::Analyze { .. } => {
            let a = analyze(&scenario)?;
            sink.json("plan.json", &a.resolved.plan)?;
            sink.report(&a.report, &a.resolved.plan)?;
            let mut t = curve_columns();
            for p in &a.curve {
                t.push(vec![num(p.radius), p.sf.value().to_string(), num(p.throughput), String::new(), String::new()]);
            }
            sink.table("throughput_curve.csv", &t)?;
        }
        Command::Optimize { .. } => {
            let state = optimize(&scenario)?;
            let resolved = ResolvedPlan {
                plan: state.plan.clone(),
                outcomes: state.outcomes.clone(),
                balance: None,
            };
            let report = evaluate(&scenario, &resolved)?;
            sink.json("plan.json", &resolved.plan)?;
            sink.json("balance.json", &state)?;
            sink.report(&report, &resolved.plan)?;
            let mut t = Table::new(&[("iter", "-"), ("s0", "-"), ("r_s0_m", "m"), ("gap_bps", "bit/s")]);
            for r in &state.trace {
                t.push(vec![r.iteration.to_string(), r.sf.value().to_string(), num(r.radius), num(r.gap)]);
            }
            sink.table("ib_trace.csv", &t)?;
        }
        Command::Simulate { .. } => {
            let s = simulate(&scenario)?;
            sink.report(&s.report, &s.plan)?;
            let mut t = curve_columns();
            for c in &s.curve {
                t.push(vec![
                    num(c.point.radius),
                    c.point.sf.value().to_string(),
                    num(c.point.throughput),
                    num(c.mc.mean),
                    num(c.mc.stderr),
                ]);
            }
            sink.table("throughput_curve.csv", &t)?;
        }
        Command::Sweep {
            radii_km,
            densities,
            reception,
            range_factor,
            target_bps,
            no_population,
            ..
        } => {
            let spec = SweepSpec {
                radii_km: radii_km.clone(),
                densities_per_km2: densities.clone(),
                receptions: reception.iter().map(|&r| r.into()).collect(),
                range_factor: *range_factor,
                with_population: !no_population,
            };
            let rows = sweep(&file, &spec)?;
            let mut t = Table::new(&[
                ("gw_density_per_km2", "1/km2"),
                ("ue_density_per_km2", "1/km2"),
                ("min_bps", "bit/s"),
                ("p90_spatial_bps_km2", "bit/s/km2"),
                ("jain", "-"),
                ("stp_mw_km2", "mW/km2"),
                ("reception_mode", "-"),
                ("ib_iterations", "-"),
                ("ib_gap_bps", "bit/s"),
            ]);
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            for r in &rows {
                t.push(vec![
                    num(r.gw_density_per_km2),
                    num(r.ue_density_per_km2),
                    num(r.min_bps),
                    opt(r.p90_spatial_bps_km2),
                    opt(r.jain),
                    num(r.stp_mw_km2),
                    reception_name(r.reception).into(),
                    r.iterations.to_string(),
                    num(r.gap_bps),
                ]);
            }
            sink.table("sweep.csv", &t)?;
            let mut c = Table::new(&[
                ("reception_mode", "-"),
                ("ue_density_per_km2", "1/km2"),
                ("target_bps", "bit/s"),
                ("gw_density_per_km2", "1/km2"),
            ]);
            for (rec, density, x) in sweep_crossings(&rows, *target_bps) {
                c.push(vec![reception_name(rec).into(), num(density), num(*target_bps), opt(x)]);
            }
            sink.table("sweep_crossings.csv", &c)?;
        }
        Command::CompareReuse { .. } => {
            let rows = compare_reuse(&scenario)?;
            let mut t = Table::new(&[
                ("radius_m", "m"),
                ("sf", "-"),
                ("full_reuse_bps", "bit/s"),
                ("one_over_f_bps", "bit/s"),
                ("lora_ffr_bps", "bit/s"),
            ]);
            for r in &rows {
                t.push(vec![num(r.radius), r.sf.value().to_string(), num(r.full), num(r.one_over_f), num(r.lora_ffr)]);
            }
            sink.table("reuse_curves.csv", &t)?;
        }
    }
    Ok(())
}

fn reception_name(r: Reception) -> &'static str {
    match r {
        Reception::SingleGateway => "single_gw",
        Reception::MultiGateway => "multi_gw",
    }
}
