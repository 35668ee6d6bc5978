//! Scenario files in user-facing units (km, dBm, dB, UEs per km^2), TOML or
//! JSON by extension, and their conversion to SI model objects.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{DutyRule, NetworkModel, QuadratureSettings, Reception};
use crate::error::{Error, Result};
use crate::geometry::{CellLayout, CellShape, ReuseScheme, SfPlan};
use crate::metrics::DEFAULT_KAPPA;
use crate::optimizer::BalanceSettings;
use crate::phy::{
    dbm_to_watts, PhyProfile, PowerPolicy, RadioEnvironment, Sf, DEFAULT_MAX_RANGE_M,
    DEFAULT_PAYLOAD_BYTES, DEFAULT_SIR_THRESHOLD_DB, DEFAULT_SNR_THRESHOLDS_DB, SF_COUNT,
};
use crate::simulator::McConfig;

/// Default total active UE density (per km^2).
pub const DEFAULT_DENSITY_PER_KM2: f64 = 350.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    /// One isolated cell.
    #[default]
    Single,
    /// Reference cell surrounded by a hexagonal grid of gateways.
    HexGrid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReuseKind {
    #[default]
    Full,
    OneOverF,
    LoraFfr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSection {
    pub layout: LayoutKind,
    /// Shape of an isolated cell; grid cells are always hexagons.
    pub shape: CellShape,
    pub radius_km: Option<f64>,
    pub reuse: ReuseKind,
    /// First SF of the edge region under LoRa-FFR.
    pub ffr_edge_sf: u8,
    pub channels: u32,
    pub interference_range_km: f64,
    pub reception: Reception,
}

impl Default for CellSection {
    fn default() -> Self {
        CellSection {
            layout: LayoutKind::Single,
            shape: CellShape::Disk,
            radius_km: None,
            reuse: ReuseKind::Full,
            ffr_edge_sf: 10,
            channels: 1,
            interference_range_km: 3.2,
            reception: Reception::SingleGateway,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    /// Active UEs per km^2 over all channels.
    pub active_density_per_km2: Option<f64>,
    /// Active UEs per km^2 on the channel of the SF7 zone.
    pub per_channel_density_per_km2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_mhz: f64,
    pub pathloss_exponent: f64,
    pub gw_height_m: f64,
    pub noise_dbm: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        RadioSection {
            carrier_mhz: 868.0,
            pathloss_exponent: 3.5,
            gw_height_m: 25.0,
            noise_dbm: -117.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhySection {
    pub bandwidth_khz: f64,
    pub code_rate: f64,
    pub payload_bytes: f64,
    pub sir_threshold_db: f64,
    pub snr_thresholds_db: [f64; SF_COUNT],
    /// Path-loss-only range of each SF, bounding its zone radius (m).
    pub max_range_m: [f64; SF_COUNT],
}

impl Default for PhySection {
    fn default() -> Self {
        PhySection {
            bandwidth_khz: 125.0,
            code_rate: 0.8,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            sir_threshold_db: DEFAULT_SIR_THRESHOLD_DB,
            snr_thresholds_db: DEFAULT_SNR_THRESHOLDS_DB,
            max_range_m: DEFAULT_MAX_RANGE_M,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub max_power_dbm: f64,
    /// Zone-edge power per SF; defaults to the maximum power.
    pub edge_power_dbm: Option<[f64; SF_COUNT]>,
    pub beta: f64,
    /// Allowed discrete transmit powers, ascending.
    pub power_levels_dbm: Option<Vec<f64>>,
}

impl Default for PowerSection {
    fn default() -> Self {
        PowerSection {
            max_power_dbm: 14.0,
            edge_power_dbm: None,
            beta: 0.9,
            power_levels_dbm: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    /// Balance zone radii and duty cycles.
    #[default]
    Optimize,
    /// Radii and duty cycles given in the file.
    Explicit,
    EqualArea,
    EqualWidth,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    /// Direct max-min chain solution.
    #[default]
    Warm,
    /// Equal-area radii clamped to the SF ranges.
    EqualArea,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DutyChoice {
    #[default]
    ClosedForm,
    Tuned,
}

/// A duty cycle shared by every SF or one per SF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DutySpec {
    Common(f64),
    PerSf([f64; SF_COUNT]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub mode: PlanMode,
    /// Outer radii of the SF7..SF11 zones (m), explicit mode only.
    pub radii_m: Option<[f64; SF_COUNT - 1]>,
    /// Duty cycles of fixed plans; defaults to the cap.
    pub duty: Option<DutySpec>,
    pub duty_cap: f64,
    /// Balancing tolerance on throughput gaps (bit/s).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub duty_rule: DutyChoice,
    pub start: StartRule,
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection {
            mode: PlanMode::Optimize,
            radii_m: None,
            duty: None,
            duty_cap: 0.01,
            tolerance: 0.02,
            max_iterations: 50,
            duty_rule: DutyChoice::ClosedForm,
            start: StartRule::Warm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Percentile of the percentile-spatial throughput.
    pub kappa: f64,
    /// Radial samples per zone in throughput curves.
    pub curve_points_per_zone: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            kappa: DEFAULT_KAPPA,
            curve_points_per_zone: 4,
        }
    }
}

/// Scenario exactly as written (plus defaults); serializing it back
/// reproduces the run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub cell: CellSection,
    pub traffic: TrafficSection,
    pub radio: RadioSection,
    pub phy: PhySection,
    pub power: PowerSection,
    pub plan: PlanSection,
    pub mc: McConfig,
    pub output: OutputSection,
    pub quadrature: QuadratureSettings,
}

/// Plan to evaluate: fixed up front or produced by balancing.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanChoice {
    Fixed(SfPlan),
    Optimize,
}

/// Validated scenario in SI units.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub model: NetworkModel,
    pub plan: PlanChoice,
    pub reception: Reception,
    pub balance: BalanceSettings,
    pub duty_rule: DutyRule,
    pub start: StartRule,
    pub mc: McConfig,
    pub kappa: f64,
    pub curve_points: usize,
}

/// Text format of a scenario file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Toml,
    Json,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Ok(FileFormat::Toml),
            Some("json") => Ok(FileFormat::Json),
            _ => Err(Error::Parse(format!(
                "{}: scenario files must end in .toml or .json",
                path.display()
            ))),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, format: FileFormat) -> Result<Self> {
        match format {
            FileFormat::Toml => toml::from_str(text).map_err(|e| Error::Parse(e.to_string())),
            FileFormat::Json => serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string())),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let format = FileFormat::from_path(path)?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::parse(&text, format)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    fn cell_radius_m(&self) -> Result<f64> {
        let r = self
            .cell
            .radius_km
            .ok_or_else(|| Error::config("cell.radius_km", "is required"))?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::config("cell.radius_km", "must be positive and finite"));
        }
        Ok(1e3 * r)
    }

    fn reuse(&self) -> Result<ReuseScheme> {
        Ok(match self.cell.reuse {
            ReuseKind::Full => ReuseScheme::Full,
            ReuseKind::OneOverF => ReuseScheme::OneOverF,
            ReuseKind::LoraFfr => ReuseScheme::LoraFfr {
                edge_from: Sf::new(self.cell.ffr_edge_sf)
                    .map_err(|_| Error::config("cell.ffr_edge_sf", "must lie in 7..=12"))?,
            },
        })
    }

    fn layout(&self) -> Result<CellLayout> {
        let rc = self.cell_radius_m()?;
        match self.cell.layout {
            LayoutKind::Single => {
                if self.cell.reuse != ReuseKind::Full {
                    return Err(Error::config("cell.reuse", "an isolated cell has nothing to reuse against"));
                }
                CellLayout::single(self.cell.shape, rc)
            }
            LayoutKind::HexGrid => {
                CellLayout::hex_grid(rc, self.reuse()?, self.cell.channels, 1e3 * self.cell.interference_range_km)
            }
        }
    }

    /// Total active density (per m^2), reconciling the two ways to give it.
    fn active_density(&self, layout: &CellLayout) -> Result<f64> {
        let t = &self.traffic;
        for (field, v) in [
            ("traffic.active_density_per_km2", t.active_density_per_km2),
            ("traffic.per_channel_density_per_km2", t.per_channel_density_per_km2),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(field, "must be positive and finite"));
                }
            }
        }
        // per-channel density of the SF7 zone per unit of active density
        let share = layout.channel_density(Sf::MIN, 1.0);
        let active = match (t.active_density_per_km2, t.per_channel_density_per_km2) {
            (Some(a), Some(c)) => {
                if ((a * share - c) / c).abs() > 1e-9 {
                    return Err(Error::config(
                        "traffic.per_channel_density_per_km2",
                        format!("inconsistent with {a} active UEs/km^2 under this reuse scheme (expected {})", a * share),
                    ));
                }
                a
            }
            (Some(a), None) => a,
            (None, Some(c)) => c / share,
            (None, None) => DEFAULT_DENSITY_PER_KM2,
        };
        Ok(active * 1e-6)
    }

    fn phy(&self) -> Result<PhyProfile> {
        let p = &self.phy;
        PhyProfile::new(
            1e3 * p.bandwidth_khz,
            p.code_rate,
            p.snr_thresholds_db,
            [p.sir_threshold_db; SF_COUNT],
            [p.payload_bytes; SF_COUNT],
            p.max_range_m,
        )
    }

    fn env(&self) -> Result<RadioEnvironment> {
        let r = &self.radio;
        if !(r.carrier_mhz > 0.0) {
            return Err(Error::config("radio.carrier_mhz", "must be positive"));
        }
        if !(r.gw_height_m >= 0.0) {
            return Err(Error::config("radio.gw_height_m", "must be non-negative"));
        }
        let env = RadioEnvironment {
            carrier_hz: 1e6 * r.carrier_mhz,
            noise_power_w: dbm_to_watts(r.noise_dbm),
            pathloss_exponent: r.pathloss_exponent,
            gw_height_m: r.gw_height_m,
            ..RadioEnvironment::default()
        };
        env.validate()?;
        Ok(env)
    }

    fn power(&self) -> Result<PowerPolicy> {
        let p = &self.power;
        let max = dbm_to_watts(p.max_power_dbm);
        let edge = p.edge_power_dbm.map_or([max; SF_COUNT], |e| e.map(dbm_to_watts));
        let levels = p
            .power_levels_dbm
            .as_ref()
            .map(|l| l.iter().copied().map(dbm_to_watts).collect());
        PowerPolicy::new(max, edge, p.beta, levels)
    }

    fn fixed_plan(&self, cell_radius: f64) -> Result<PlanChoice> {
        let p = &self.plan;
        let duty = match &p.duty {
            None => [p.duty_cap; SF_COUNT],
            Some(DutySpec::Common(d)) => [*d; SF_COUNT],
            Some(DutySpec::PerSf(d)) => *d,
        };
        let radii = match p.mode {
            PlanMode::Optimize => return Ok(PlanChoice::Optimize),
            PlanMode::Explicit => p
                .radii_m
                .ok_or_else(|| Error::config("plan.radii_m", "explicit plans need five radii"))?,
            PlanMode::EqualArea => SfPlan::equal_area(cell_radius, 0.0, p.duty_cap)?.radii,
            PlanMode::EqualWidth => SfPlan::equal_width(cell_radius, 0.0, p.duty_cap)?.radii,
        };
        SfPlan::new(radii, cell_radius, duty, p.duty_cap).map(PlanChoice::Fixed)
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(ScenarioFile::load(path)?)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let p = &file.plan;
        if !(0.0..=1.0).contains(&p.duty_cap) || p.duty_cap >= 1.0 {
            return Err(Error::config("plan.duty_cap", "must lie in [0, 1)"));
        }
        if !(p.tolerance > 0.0) {
            return Err(Error::config("plan.tolerance", "must be positive"));
        }
        if file.output.curve_points_per_zone == 0 {
            return Err(Error::config("output.curve_points_per_zone", "must be at least 1"));
        }
        if !(file.output.kappa > 0.0 && file.output.kappa <= 100.0) {
            return Err(Error::config("output.kappa", "must lie in (0, 100]"));
        }
        file.mc.validate()?;
        file.quadrature.validate()?;
        let layout = file.layout()?;
        let model = NetworkModel {
            phy: file.phy()?,
            env: file.env()?,
            power: file.power()?,
            active_density: file.active_density(&layout)?,
            layout,
            quadrature: file.quadrature.clone(),
        };
        model.validate()?;
        let plan = file.fixed_plan(model.layout.cell_radius)?;
        let balance = BalanceSettings {
            tolerance: p.tolerance,
            max_iterations: p.max_iterations,
            range_caps: file.phy.max_range_m,
        };
        let duty_rule = match p.duty_rule {
            DutyChoice::ClosedForm => DutyRule::ClosedForm,
            DutyChoice::Tuned => DutyRule::Tuned,
        };
        Ok(Scenario {
            reception: file.cell.reception,
            start: p.start,
            mc: file.mc.clone(),
            kappa: file.output.kappa,
            curve_points: file.output.curve_points_per_zone,
            balance,
            duty_rule,
            plan,
            model,
            file,
        })
    }
}
