//! LoRa physical-layer constants and the elementary link quantities built on
//! them: bit rates, packet durations, channel-access rates, mean channel gains
//! and the distance-based transmit power laws.
//!
//! Every threshold is stored in linear scale. Conversions from dB happen once,
//! when a profile is built.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of spreading factors (7 through 12).
pub const SF_COUNT: usize = 6;

/// A LoRa spreading factor in `7..=12`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Sf(u8);

impl Sf {
    pub const MIN: Sf = Sf(7);
    pub const MAX: Sf = Sf(12);

    pub fn new(value: u8) -> Result<Self> {
        if (7..=12).contains(&value) {
            Ok(Sf(value))
        } else {
            Err(Error::domain(format!("spreading factor {value} outside 7..=12")))
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < SF_COUNT, "SF index {index} out of range");
        Sf(index as u8 + 7)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Position of this SF in per-SF arrays (SF7 is 0).
    pub fn index(self) -> usize {
        (self.0 - 7) as usize
    }

    pub fn next(self) -> Option<Sf> {
        (self.0 < 12).then(|| Sf(self.0 + 1))
    }

    pub fn all() -> impl DoubleEndedIterator<Item = Sf> + ExactSizeIterator {
        (7u8..=12).map(Sf)
    }
}

impl TryFrom<u8> for Sf {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Sf::new(value)
    }
}

impl From<Sf> for u8 {
    fn from(sf: Sf) -> u8 {
        sf.0
    }
}

impl fmt::Display for Sf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SF{}", self.0)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1e3)
}

/// Raw bit rate `s / 2^s * B * C` in bit/s.
pub fn bitrate(sf: u8, bandwidth_hz: f64, code_rate: f64) -> Result<f64> {
    let sf = Sf::new(sf)?;
    if bandwidth_hz < 0.0 || !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::domain(format!(
            "bandwidth {bandwidth_hz} Hz / code rate {code_rate} invalid"
        )));
    }
    let s = sf.value() as f64;
    Ok(s / 2f64.powi(sf.value() as i32) * bandwidth_hz * code_rate)
}

/// Packet initiations per UE per second for duty cycle `duty` and packet
/// duration `duration_s`.
pub fn access_rate(duty: f64, duration_s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&duty) {
        return Err(Error::domain(format!("duty cycle {duty} outside [0, 1)")));
    }
    if duration_s <= 0.0 {
        return Err(Error::domain(format!("packet duration {duration_s} s must be positive")));
    }
    Ok(duty / ((1.0 - duty) * duration_s))
}

/// Per-SF link parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfParams {
    pub bit_rate: f64,
    /// Linear SNR threshold.
    pub snr_threshold: f64,
    /// Linear co-SF SIR threshold.
    pub sir_threshold: f64,
    pub payload_bits: f64,
    pub packet_duration: f64,
    /// Range reachable under path loss alone, used to cap zone radii.
    pub max_range_m: f64,
}

/// The SF table together with the channel bandwidth and code rate it derives from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhyProfile {
    pub bandwidth_hz: f64,
    pub code_rate: f64,
    entries: [SfParams; SF_COUNT],
}

/// Default SNR thresholds (dB) for SF7..SF12.
pub const DEFAULT_SNR_THRESHOLDS_DB: [f64; SF_COUNT] = [-6.0, -9.0, -12.0, -15.0, -17.5, -20.0];
/// Default maximum range under path loss only (m) for SF7..SF12.
pub const DEFAULT_MAX_RANGE_M: [f64; SF_COUNT] = [1053.0, 1283.0, 1563.0, 1904.0, 2244.0, 2645.0];
pub const DEFAULT_SIR_THRESHOLD_DB: f64 = 6.0;
pub const DEFAULT_PAYLOAD_BYTES: f64 = 25.0;

impl PhyProfile {
    /// Builds a profile from dB thresholds; payloads are given in bytes.
    pub fn new(
        bandwidth_hz: f64,
        code_rate: f64,
        snr_thresholds_db: [f64; SF_COUNT],
        sir_thresholds_db: [f64; SF_COUNT],
        payload_bytes: [f64; SF_COUNT],
        max_range_m: [f64; SF_COUNT],
    ) -> Result<Self> {
        if bandwidth_hz <= 0.0 {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        if !(code_rate > 0.0 && code_rate <= 1.0) {
            return Err(Error::config("code_rate", "must lie in (0, 1]"));
        }
        let mut entries = [SfParams {
            bit_rate: 0.0,
            snr_threshold: 0.0,
            sir_threshold: 0.0,
            payload_bits: 0.0,
            packet_duration: 0.0,
            max_range_m: 0.0,
        }; SF_COUNT];
        for sf in Sf::all() {
            let i = sf.index();
            if payload_bytes[i] <= 0.0 {
                return Err(Error::config("payload_bytes", "must be positive"));
            }
            if max_range_m[i] <= 0.0 {
                return Err(Error::config("max_range_m", "must be positive"));
            }
            let bit_rate = bitrate(sf.value(), bandwidth_hz, code_rate)?;
            let payload_bits = 8.0 * payload_bytes[i];
            entries[i] = SfParams {
                bit_rate,
                snr_threshold: db_to_linear(snr_thresholds_db[i]),
                sir_threshold: db_to_linear(sir_thresholds_db[i]),
                payload_bits,
                packet_duration: payload_bits / bit_rate,
                max_range_m: max_range_m[i],
            };
        }
        for pair in entries.windows(2) {
            if pair[1].snr_threshold > pair[0].snr_threshold {
                return Err(Error::config(
                    "snr_thresholds_db",
                    "must be non-increasing in the spreading factor",
                ));
            }
        }
        Ok(PhyProfile {
            bandwidth_hz,
            code_rate,
            entries,
        })
    }

    pub fn get(&self, sf: Sf) -> &SfParams {
        &self.entries[sf.index()]
    }

    pub fn entries(&self) -> &[SfParams; SF_COUNT] {
        &self.entries
    }
}

impl Default for PhyProfile {
    fn default() -> Self {
        PhyProfile::new(
            125e3,
            0.8,
            DEFAULT_SNR_THRESHOLDS_DB,
            [DEFAULT_SIR_THRESHOLD_DB; SF_COUNT],
            [DEFAULT_PAYLOAD_BYTES; SF_COUNT],
            DEFAULT_MAX_RANGE_M,
        )
        .expect("default PHY table is valid")
    }
}

/// Carrier, path-loss law, gateway height and receiver noise.
///
/// Small-scale fading is Rayleigh: the channel power mark is a unit-mean
/// exponential variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioEnvironment {
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub pathloss_exponent: f64,
    pub gw_height_m: f64,
    pub noise_power_w: f64,
}

impl Default for RadioEnvironment {
    fn default() -> Self {
        RadioEnvironment {
            carrier_hz: 868e6,
            light_speed: 3e8,
            pathloss_exponent: 3.5,
            gw_height_m: 25.0,
            noise_power_w: dbm_to_watts(-117.0),
        }
    }
}

impl RadioEnvironment {
    pub fn validate(&self) -> Result<()> {
        if self.carrier_hz <= 0.0 || self.light_speed <= 0.0 {
            return Err(Error::config("carrier_hz", "carrier and light speed must be positive"));
        }
        if self.pathloss_exponent < 2.0 {
            return Err(Error::config("pathloss_exponent", "must be at least 2"));
        }
        if self.gw_height_m < 0.0 {
            return Err(Error::config("gw_height_m", "must be non-negative"));
        }
        if self.noise_power_w < 0.0 {
            return Err(Error::config("noise_power_dbm", "noise power must be non-negative"));
        }
        Ok(())
    }

    /// Mean channel power at 1 m: `(4 pi f_c / c)^-2`.
    pub fn reference_gain(&self) -> f64 {
        (4.0 * PI * self.carrier_hz / self.light_speed).powi(-2)
    }

    /// Mean channel power gain at horizontal distance `d` from a gateway.
    pub fn mean_channel_gain(&self, d: f64) -> f64 {
        self.gain_from_sq(d * d)
    }

    /// Same as [`mean_channel_gain`](Self::mean_channel_gain) but from a squared distance.
    #[inline]
    pub fn gain_from_sq(&self, d_sq: f64) -> f64 {
        let h2 = self.gw_height_m * self.gw_height_m;
        self.reference_gain() * (h2 + d_sq).powf(-0.5 * self.pathloss_exponent)
    }
}

/// Transmit power policy: per-SF zone-edge powers, the fractional
/// power-control exponent and an optional set of allowed discrete levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    pub max_power_w: f64,
    pub edge_power_w: [f64; SF_COUNT],
    pub beta: f64,
    pub levels_w: Option<Vec<f64>>,
}

impl PowerPolicy {
    pub fn new(
        max_power_w: f64,
        edge_power_w: [f64; SF_COUNT],
        beta: f64,
        levels_w: Option<Vec<f64>>,
    ) -> Result<Self> {
        let policy = PowerPolicy {
            max_power_w,
            edge_power_w,
            beta,
            levels_w,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// All SFs transmit `max_power_w` at their zone edge.
    pub fn uniform(max_power_w: f64, beta: f64) -> Result<Self> {
        Self::new(max_power_w, [max_power_w; SF_COUNT], beta, None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_power_w <= 0.0 {
            return Err(Error::config("max_power_dbm", "maximum power must be positive"));
        }
        for p in self.edge_power_w {
            if !(p > 0.0 && p <= self.max_power_w * (1.0 + 1e-12)) {
                return Err(Error::config("edge_power_dbm", "must lie in (0, P_max]"));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config("beta", "must lie in [0, 1]"));
        }
        if let Some(levels) = &self.levels_w {
            if levels.is_empty() {
                return Err(Error::config("power_levels_dbm", "level set is empty"));
            }
            if levels.iter().any(|&p| p <= 0.0) {
                return Err(Error::config("power_levels_dbm", "levels must be positive"));
            }
            if levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config("power_levels_dbm", "levels must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn edge_power(&self, sf: Sf) -> f64 {
        self.edge_power_w[sf.index()]
    }

    /// Continuous power of a UE at distance `r` in a zone whose outer edge is `r_edge`.
    pub fn continuous_power(&self, sf: Sf, r: f64, r_edge: f64, env: &RadioEnvironment) -> f64 {
        let h2 = env.gw_height_m * env.gw_height_m;
        let ratio = (h2 + r * r) / (h2 + r_edge * r_edge);
        self.edge_power(sf) * ratio.powf(0.5 * env.pathloss_exponent * self.beta)
    }

    /// Transmit power at distance `r`, snapped to the level set when one is configured.
    pub fn tx_power(&self, sf: Sf, r: f64, r_edge: f64, env: &RadioEnvironment) -> Result<f64> {
        if r < 0.0 || r > r_edge * (1.0 + 1e-12) + 1e-9 {
            return Err(Error::domain(format!(
                "distance {r} m outside the {sf} zone (edge {r_edge} m)"
            )));
        }
        Ok(self.snap(self.continuous_power(sf, r, r_edge, env)))
    }

    /// Rounds `p` to the nearest allowed level in dB; identity without levels.
    pub fn snap(&self, p: f64) -> f64 {
        match &self.levels_w {
            None => p,
            Some(levels) => nearest_level_db(levels, p),
        }
    }

    /// Distances at which the snapped power switches level inside a zone
    /// `[r_lo, r_hi]`, as `(r_start, r_end, level)` segments ordered by radius.
    /// Without a level set, returns `None`.
    pub fn level_segments(
        &self,
        sf: Sf,
        r_lo: f64,
        r_hi: f64,
        env: &RadioEnvironment,
    ) -> Option<Vec<(f64, f64, f64)>> {
        let levels = self.levels_w.as_ref()?;
        if r_hi <= r_lo {
            return Some(Vec::new());
        }
        let h2 = env.gw_height_m * env.gw_height_m;
        let exponent = 0.5 * env.pathloss_exponent * self.beta;
        let edge = self.edge_power(sf);
        // radius at which the continuous law reaches power p
        let radius_at = |p: f64| -> f64 {
            if exponent == 0.0 {
                return if p <= edge { f64::INFINITY } else { f64::NEG_INFINITY };
            }
            let sq = (h2 + r_hi * r_hi) * (p / edge).powf(1.0 / exponent) - h2;
            if sq <= 0.0 {
                0.0
            } else {
                sq.sqrt()
            }
        };
        let mut cuts = Vec::new();
        for pair in levels.windows(2) {
            let threshold = (pair[0] * pair[1]).sqrt();
            let r = radius_at(threshold);
            if r > r_lo && r < r_hi {
                cuts.push(r);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut bounds = vec![r_lo];
        bounds.extend(cuts);
        bounds.push(r_hi);
        let segs = bounds
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let p = self.snap(self.continuous_power(sf, mid, r_hi, env));
                (w[0], w[1], p)
            })
            .collect();
        Some(segs)
    }
}

fn nearest_level_db(levels: &[f64], p: f64) -> f64 {
    let lp = p.ln();
    let mut best = levels[0];
    let mut best_d = f64::INFINITY;
    for &l in levels {
        let d = (l.ln() - lp).abs();
        // ties go to the lower level
        if d < best_d - 1e-12 {
            best = l;
            best_d = d;
        }
    }
    best
}

/// Mean received power of every UE of one zone under full channel inversion:
/// `P_edge * alpha0 * (H^2 + r_edge^2)^(-n0/2)`.
pub fn equalized_rx_power(edge_power_w: f64, r_edge: f64, env: &RadioEnvironment) -> f64 {
    edge_power_w * env.mean_channel_gain(r_edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bitrate_matches_table() {
        assert_relative_eq!(bitrate(7, 125e3, 0.8).unwrap(), 5468.75);
        assert!((bitrate(12, 125e3, 0.8).unwrap() - 292.97).abs() < 0.01);
        assert_eq!(bitrate(9, 0.0, 0.8).unwrap(), 0.0);
        assert!(bitrate(6, 125e3, 0.8).is_err());
        assert!(bitrate(13, 125e3, 0.8).is_err());
    }

    #[test]
    fn access_rate_cases() {
        assert_eq!(access_rate(0.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(access_rate(0.5, 1.0).unwrap(), 1.0);
        let t7 = 200.0 / 5468.75;
        assert!((access_rate(0.01, t7).unwrap() - 0.2762).abs() < 1e-4);
        assert!(access_rate(1.0, 1.0).is_err());
    }

    #[test]
    fn reference_gain_at_868mhz() {
        let env = RadioEnvironment::default();
        assert!((env.reference_gain() - 7.565e-4).abs() < 1e-6);
        let g0 = env.mean_channel_gain(0.0);
        assert_relative_eq!(g0, env.reference_gain() * 25f64.powf(-3.5), max_relative = 1e-12);
        assert!(env.mean_channel_gain(100.0) > env.mean_channel_gain(200.0));
    }

    #[test]
    fn default_profile_is_monotone() {
        let phy = PhyProfile::default();
        for w in phy.entries().windows(2) {
            assert!(w[1].bit_rate < w[0].bit_rate);
            assert!(w[1].packet_duration > w[0].packet_duration);
            assert!(w[1].snr_threshold <= w[0].snr_threshold);
        }
        let p7 = phy.get(Sf::MIN);
        assert_relative_eq!(p7.packet_duration, 200.0 / 5468.75);
    }

    #[test]
    fn tx_power_edge_and_constant_cases() {
        let env = RadioEnvironment::default();
        let pmax = dbm_to_watts(14.0);
        let pol = PowerPolicy::uniform(pmax, 1.0).unwrap();
        let sf = Sf::new(9).unwrap();
        assert_relative_eq!(pol.tx_power(sf, 450.0, 450.0, &env).unwrap(), pmax);
        assert!(pol.tx_power(sf, 451.0, 450.0, &env).is_err());

        let flat = PowerPolicy::uniform(pmax, 0.0).unwrap();
        assert_relative_eq!(flat.tx_power(sf, 17.0, 450.0, &env).unwrap(), pmax);

        let at_zero = pol.tx_power(sf, 0.0, 1000.0, &env).unwrap();
        assert_relative_eq!(at_zero, pmax * (625.0f64 / 1_000_625.0).powf(1.75), max_relative = 1e-12);
    }

    #[test]
    fn channel_inversion_equalizes_received_power() {
        let env = RadioEnvironment::default();
        let pmax = dbm_to_watts(14.0);
        let pol = PowerPolicy::uniform(pmax, 1.0).unwrap();
        let sf = Sf::MIN;
        let q = equalized_rx_power(pmax, 700.0, &env);
        for i in 0..=70 {
            let r = 10.0 * i as f64;
            let rx = pol.tx_power(sf, r, 700.0, &env).unwrap() * env.mean_channel_gain(r);
            assert_relative_eq!(rx, q, max_relative = 1e-12);
        }
    }

    #[test]
    fn equalized_power_regression() {
        let env = RadioEnvironment::default();
        let q = equalized_rx_power(dbm_to_watts(14.0), 500.0, &env);
        // P_edge * alpha0 * (25^2 + 500^2)^(-1.75), evaluated once and pinned
        assert_relative_eq!(q, 6.768472e-15, max_relative = 1e-6);
        assert!(equalized_rx_power(dbm_to_watts(14.0), 1e9, &env) < 1e-35);
    }

    #[test]
    fn snapping_picks_nearest_db_level() {
        let levels: Vec<f64> = [2.0, 5.0, 8.0, 11.0, 14.0].iter().map(|&d| dbm_to_watts(d)).collect();
        let pol = PowerPolicy::new(dbm_to_watts(14.0), [dbm_to_watts(14.0); 6], 1.0, Some(levels)).unwrap();
        assert_relative_eq!(watts_to_dbm(pol.snap(dbm_to_watts(12.4))), 11.0, epsilon = 1e-9);
        assert_relative_eq!(watts_to_dbm(pol.snap(dbm_to_watts(12.6))), 14.0, epsilon = 1e-9);
        assert_relative_eq!(watts_to_dbm(pol.snap(dbm_to_watts(-30.0))), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn level_segments_cover_zone() {
        let env = RadioEnvironment::default();
        let levels: Vec<f64> = [2.0, 5.0, 8.0, 11.0, 14.0].iter().map(|&d| dbm_to_watts(d)).collect();
        let pol = PowerPolicy::new(dbm_to_watts(14.0), [dbm_to_watts(14.0); 6], 1.0, Some(levels)).unwrap();
        let segs = pol.level_segments(Sf::MIN, 0.0, 500.0, &env).unwrap();
        assert_eq!(segs.first().unwrap().0, 0.0);
        assert_eq!(segs.last().unwrap().1, 500.0);
        for w in segs.windows(2) {
            assert_eq!(w[0].1, w[1].0);
            assert!(w[1].2 > w[0].2);
        }
        for &(a, b, p) in &segs {
            let mid = 0.5 * (a + b);
            assert_relative_eq!(pol.tx_power(Sf::MIN, mid, 500.0, &env).unwrap(), p);
        }
    }

    #[test]
    fn invalid_policies_rejected() {
        assert!(PowerPolicy::uniform(0.025, 1.5).is_err());
        assert!(PowerPolicy::new(0.025, [0.03; 6], 1.0, None).is_err());
        assert!(PowerPolicy::new(0.025, [0.02; 6], 1.0, Some(vec![0.02, 0.01])).is_err());
    }

    #[test]
    fn sf_roundtrip() {
        let sf: Sf = serde_json::from_str("10").unwrap();
        assert_eq!(sf.index(), 3);
        assert!(serde_json::from_str::<Sf>("13").is_err());
        assert_eq!(Sf::all().count(), 6);
        assert_eq!(Sf::MAX.next(), None);
    }

    proptest::proptest! {
        #[test]
        fn access_rate_increasing(a in 0.0f64..0.98, d in 1e-4f64..0.01) {
            let t = 0.1;
            proptest::prop_assert!(access_rate(a + d, t).unwrap() > access_rate(a, t).unwrap());
        }

        #[test]
        fn snapping_error_bounded_in_db(dbm in 2.0f64..14.0) {
            let lv = [2.0, 5.0, 8.0, 11.0, 14.0];
            let levels: Vec<f64> = lv.iter().map(|&d| dbm_to_watts(d)).collect();
            let pol = PowerPolicy::new(dbm_to_watts(14.0), [dbm_to_watts(14.0); 6], 1.0, Some(levels)).unwrap();
            let snapped = watts_to_dbm(pol.snap(dbm_to_watts(dbm)));
            proptest::prop_assert!((snapped - dbm).abs() <= 1.5 + 1e-9);
        }
    }
}
