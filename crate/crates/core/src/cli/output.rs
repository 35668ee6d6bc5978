//! Plot-ready CSV tables: a `# fingerprint: ...` comment line, a header
//! row, a units row, then data.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::geometry::SfPlan;
use crate::metrics::ThroughputReport;
use crate::phy::Sf;

/// Named columns with their units and stringified rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: impl Write, fingerprint: &str) -> Result<()> {
        let mut out = out;
        writeln!(out, "# fingerprint: {fingerprint}")?;
        let mut w = csv::Writer::from_writer(out);
        let io = std::io::Error::from;
        w.write_record(self.columns.iter().map(|c| c.0)).map_err(io)?;
        w.write_record(self.columns.iter().map(|c| c.1)).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path, fingerprint: &str) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(file, fingerprint)
    }
}

/// Formats a number with the shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// W/m^2 to mW/km^2.
pub fn mw_per_km2(w_per_m2: f64) -> f64 {
    w_per_m2 * 1e9
}

/// Per m^2 to per km^2.
pub fn per_km2(per_m2: f64) -> f64 {
    per_m2 * 1e6
}

/// `report(metric, value, unit)` rows for a report and the plan behind it.
pub fn report_table(report: &ThroughputReport, plan: &SfPlan) -> Table {
    let mut t = Table::new(&[("metric", "-"), ("value", "-"), ("unit", "-")]);
    let mut row = |m: String, v: String, u: &str| t.push(vec![m, v, u.to_string()]);
    row("min_throughput".into(), num(report.min_throughput), "bit/s");
    row("spatial_throughput".into(), num(per_km2(report.spatial)), "bit/s/km2");
    row(
        format!("p{}_spatial_throughput", report.kappa),
        num(per_km2(report.percentile_spatial)),
        "bit/s/km2",
    );
    row("jain".into(), num(report.jain), "-");
    row("stp".into(), num(mw_per_km2(report.stp)), "mW/km2");
    for sf in Sf::all() {
        let i = sf.index();
        let tag = sf.value();
        row(format!("used_sf{tag}"), u8::from(report.used[i]).to_string(), "flag");
        row(format!("throughput_sf{tag}"), num(report.per_sf[i]), "bit/s");
        row(format!("duty_sf{tag}"), num(plan.duty(sf)), "fraction");
        row(format!("outer_radius_sf{tag}"), num(plan.outer(sf)), "m");
    }
    t
}
