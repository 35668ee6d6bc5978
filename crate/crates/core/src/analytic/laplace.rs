//! Laplace transforms of the duration-averaged aggregate interference.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phy::RadioEnvironment;
use crate::quadrature::{integrate_pieces, Tolerance};

/// `1 - ln(1 + x) / x`, the per-interferer factor of the Poisson-rain
/// exponent; continuous at `x = 0` where it vanishes.
#[inline]
pub fn bracket(x: f64) -> f64 {
    if x < 1e-4 {
        // alternating series, truncation error below x^4 / 5
        x * (0.5 - x * (1.0 / 3.0 - 0.25 * x))
    } else {
        1.0 - x.ln_1p() / x
    }
}

/// Value of a Laplace transform of interference together with its per-tier
/// log-contributions (tier 0 first).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaplaceEvaluation {
    pub z: f64,
    pub value: f64,
    pub log_terms: Vec<f64>,
    pub error_estimate: f64,
}

impl LaplaceEvaluation {
    pub(crate) fn from_log_terms(z: f64, log_terms: Vec<f64>, error_estimate: f64) -> Self {
        let value = log_terms.iter().sum::<f64>().exp();
        LaplaceEvaluation {
            z,
            value,
            log_terms,
            error_estimate,
        }
    }
}

/// Coefficient `2 lambda Delta / (1 - Delta)` multiplying the spatial
/// interference mass in every exponent.
pub fn activity_factor(density: f64, duty: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&duty) {
        return Err(Error::domain(format!("duty cycle {duty} outside [0, 1)")));
    }
    if density < 0.0 {
        return Err(Error::domain("negative density"));
    }
    Ok(2.0 * density * duty / (1.0 - duty))
}

/// Laplace transform of the interference from one equal-power zone of area
/// `area` around the receiving gateway.
pub fn laplace_single_cell(
    z: f64,
    density: f64,
    duty: f64,
    area: f64,
    rx_power: f64,
) -> Result<LaplaceEvaluation> {
    if z < 0.0 || area < 0.0 || rx_power <= 0.0 {
        return Err(Error::domain("z and area must be non-negative, power positive"));
    }
    let k = activity_factor(density, duty)?;
    let log = -k * area * bracket(z * rx_power);
    Ok(LaplaceEvaluation::from_log_terms(z, vec![log], 0.0))
}

/// Mean duration-averaged interference (Campbell's formula).
pub fn mean_interference(density: f64, duty: f64, duration: f64, area: f64, rx_power: f64) -> Result<f64> {
    let rate = crate::phy::access_rate(duty, duration)?;
    Ok(density * rate * duration * area * rx_power)
}

/// Laplace transform when the zone UEs use piecewise-constant powers:
/// `segments` lists `(r_start, r_end, power)` rings around the gateway.
pub fn laplace_discrete_power(
    z: f64,
    density: f64,
    access_rate: f64,
    duration: f64,
    segments: &[(f64, f64, f64)],
    env: &RadioEnvironment,
    tol: Tolerance,
) -> Result<LaplaceEvaluation> {
    if z < 0.0 {
        return Err(Error::domain("z must be non-negative"));
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for &(r0, r1, p) in segments {
        if r1 <= r0 {
            continue;
        }
        let q = integrate_pieces(
            |r| bracket(p * env.mean_channel_gain(r) * z) * r,
            &[r0, r1],
            tol,
        )?;
        total += q.value;
        err += q.error;
    }
    let coef = 4.0 * std::f64::consts::PI * duration * density * access_rate;
    Ok(LaplaceEvaluation::from_log_terms(z, vec![-coef * total], coef * err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn bracket_branches_agree() {
        for x in [1e-5f64, 5e-5, 9.9e-5, 1e-4, 1.01e-4] {
            let direct = 1.0 - x.ln_1p() / x;
            assert_relative_eq!(bracket(x), direct, max_relative = 1e-7);
        }
        assert_eq!(bracket(0.0), 0.0);
        assert!(bracket(1e12) < 1.0);
    }

    #[test]
    fn single_cell_limits() {
        let l = laplace_single_cell(0.0, 3.5e-4, 0.01, 1e6, 1e-14).unwrap();
        assert_eq!(l.value, 1.0);
        let l = laplace_single_cell(1e15, 0.0, 0.01, 1e6, 1e-14).unwrap();
        assert_eq!(l.value, 1.0);
        assert!(laplace_single_cell(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mean_matches_derivative_of_log_laplace() {
        let (lam, duty, t, area, q) = (3.5e-4, 0.01, 0.0366, 2.1e5, 7e-15);
        let mean = mean_interference(lam, duty, t, area, q).unwrap();
        let h = 1e-3 / q;
        let lp = laplace_single_cell(h, lam, duty, area, q).unwrap().value.ln();
        let lm = laplace_single_cell(2.0 * h, lam, duty, area, q).unwrap().value.ln();
        // second-order one-sided difference at zero
        let d = -(4.0 * lp - lm) / (2.0 * h);
        assert_relative_eq!(d, mean, max_relative = 1e-3);
    }

    #[test]
    fn discrete_with_equalizing_single_level_matches_integral_form() {
        let env = RadioEnvironment::default();
        let z = 1e14;
        let l = laplace_discrete_power(z, 3.5e-4, 0.27, 0.0366, &[(0.0, 500.0, 0.025)], &env, Tolerance::relative(1e-9))
            .unwrap();
        assert!(l.value > 0.0 && l.value < 1.0);
        let l0 = laplace_discrete_power(0.0, 3.5e-4, 0.27, 0.0366, &[(0.0, 500.0, 0.025)], &env, Tolerance::relative(1e-9))
            .unwrap();
        assert_eq!(l0.value, 1.0);
    }

    proptest! {
        #[test]
        fn single_cell_monotone_in_z(a in 1e10f64..1e16, b in 1e10f64..1e16) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f = |z| laplace_single_cell(z, 3.5e-4, 0.01, 3e5, 7e-15).unwrap().value;
            prop_assert!(f(lo) >= f(hi));
            prop_assert!(f(hi) > 0.0 && f(lo) <= 1.0);
        }

        #[test]
        fn doubling_density_squares(z in 1e12f64..1e16) {
            let l1 = laplace_single_cell(z, 3.5e-4, 0.01, 3e5, 7e-15).unwrap().value;
            let l2 = laplace_single_cell(z, 7e-4, 0.01, 3e5, 7e-15).unwrap().value;
            prop_assert!((l2 - l1 * l1).abs() <= 1e-12);
        }
    }
}
