//! Globally adaptive Gauss-Kronrod (7/15) quadrature and a nested 2-D driver.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute and relative targets plus a cap on interval bisections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            abs: 0.0,
            rel,
            max_subdivisions: 200,
        }
    }
}

/// Value and error estimate of one integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Quad {
    pub const ZERO: Quad = Quad {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut pairs = [(0.0, 0.0); 7];
    for (j, pair) in pairs.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        *pair = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let mut err = ((kronrod - gauss) * half).abs();
    // QUADPACK-style rescaling: the raw Gauss/Kronrod difference is very
    // pessimistic for smooth integrands
    let mean = kronrod * 0.5;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in pairs.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    asc *= half.abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let abs_total = abs_sum * half.abs();
    if abs_total > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_total);
    }
    (value, err, abs_total)
}

#[derive(PartialEq)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst interval until the
/// summed error estimate meets `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quad> {
    if a == b {
        return Ok(Quad::ZERO);
    }
    let (value, error, abs0) = gk15(&mut f, a, b);
    let mut evaluations = 45;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, abs: abs0 });
    let mut total = value;
    let mut total_err = error;
    let mut abs_total = abs0;
    let mut splits = 0;
    loop {
        // never ask for more than round-off allows
        let floor = 1e3 * f64::EPSILON * abs_total;
        let target = tol.abs.max(tol.rel * total.abs()).max(floor);
        if total_err <= target || total_err == 0.0 {
            break;
        }
        if splits >= tol.max_subdivisions {
            return Err(Error::Quadrature {
                estimate: total,
                residual: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision
            heap.push(worst);
            return Err(Error::Quadrature {
                estimate: total,
                residual: total_err,
            });
        }
        let (v1, e1, a1) = gk15(&mut f, worst.a, mid);
        let (v2, e2, a2) = gk15(&mut f, mid, worst.b);
        abs_total += a1 + a2 - worst.abs;
        evaluations += 90;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1, abs: a1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2, abs: a2 });
        splits += 1;
    }
    // re-sum to shed accumulated rounding from the running totals
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Quad {
        value,
        error,
        evaluations,
    })
}

/// Integrates over a list of breakpoints, summing piecewise results.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance) -> Result<Quad> {
    let mut acc = Quad::ZERO;
    for w in points.windows(2) {
        let q = integrate(&mut f, w[0], w[1], tol)?;
        acc.value += q.value;
        acc.error += q.error;
        acc.evaluations += q.evaluations;
    }
    Ok(acc)
}

/// Nested integral `int_{outer} int_{inner(x)} f(x, y) dy dx`.
///
/// `inner_limits(x)` returns the breakpoints of the inner integral for a given
/// outer abscissa; an empty or single-point list contributes zero. Inner
/// failures abort the whole evaluation with the inner residual.
pub fn integrate_2d<F, L>(
    f: F,
    outer_points: &[f64],
    inner_limits: L,
    inner_tol: Tolerance,
    outer_tol: Tolerance,
) -> Result<Quad>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> Vec<f64>,
{
    let mut failure: Option<Error> = None;
    let mut inner_err = 0.0f64;
    let mut evals = 0usize;
    let outer = integrate_pieces(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            let limits = inner_limits(x);
            if limits.len() < 2 {
                return 0.0;
            }
            match integrate_pieces(|y| f(x, y), &limits, inner_tol) {
                Ok(q) => {
                    inner_err = inner_err.max(q.error);
                    evals += q.evaluations;
                    q.value
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        outer_points,
        outer_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let mut q = outer?;
    let span = outer_points.last().unwrap_or(&0.0) - outer_points.first().unwrap_or(&0.0);
    q.error += inner_err * span.abs();
    q.evaluations += evals;
    Ok(q)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(q.value, 0.0, epsilon = 1e-12);
        let q = integrate(|x| x.powi(6), -1.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(q.value, 2.0 / 7.0, max_relative = 1e-13);
    }

    #[test]
    fn peaked_integrand_converges() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::relative(1e-9)).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(q.value, exact, max_relative = 1e-8);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, Tolerance::relative(1e-8)).unwrap();
        assert_relative_eq!(q.value, 2.0 / 3.0, max_relative = 1e-8);
    }

    #[test]
    fn nonconvergence_reports_residual() {
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-14,
            max_subdivisions: 3,
        };
        match integrate(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, tol) {
            Err(Error::Quadrature { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected quadrature error, got {other:?}"),
        }
    }

    #[test]
    fn disk_area_by_nested_integral() {
        let q = integrate_2d(
            |_phi, r| r,
            &[0.0, std::f64::consts::TAU],
            |_| vec![0.0, 3.0],
            Tolerance::relative(1e-10),
            Tolerance::relative(1e-10),
        )
        .unwrap();
        assert_relative_eq!(q.value, std::f64::consts::PI * 9.0, max_relative = 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_relative_eq!(s, 2.0 / 19.0, max_relative = 1e-12);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }
}
