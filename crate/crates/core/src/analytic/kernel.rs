//! Precomputed quadrature nodes for the spatial interference mass
//! `G(z) = sum over co-channel cells of the integral of bracket(z Q) dA`
//! and a cubic Hermite table of `ln G` over `ln z`.

use super::laplace::bracket;

/// Derivative of [`bracket`].
#[inline]
pub fn bracket_derivative(x: f64) -> f64 {
    if x < 1e-4 {
        0.5 - x * (2.0 / 3.0 - 0.75 * x)
    } else {
        x.ln_1p() / (x * x) - 1.0 / (x * (1.0 + x))
    }
}

/// Weighted received-power nodes of every interfering zone, grouped by tier.
#[derive(Clone, Debug, Default)]
pub struct InterferenceKernel {
    pub(crate) weights: Vec<f64>,
    pub(crate) powers: Vec<f64>,
    /// Start index of each tier in the node arrays, plus a final sentinel.
    pub(crate) tier_offsets: Vec<usize>,
}

impl InterferenceKernel {
    pub(crate) fn new() -> Self {
        InterferenceKernel {
            weights: Vec::new(),
            powers: Vec::new(),
            tier_offsets: vec![0],
        }
    }

    pub(crate) fn push(&mut self, weight: f64, power: f64) {
        if weight > 0.0 {
            self.weights.push(weight);
            self.powers.push(power);
        }
    }

    pub(crate) fn close_tier(&mut self) {
        self.tier_offsets.push(self.weights.len());
    }

    pub fn tier_count(&self) -> usize {
        self.tier_offsets.len() - 1
    }

    fn range_mass(&self, lo: usize, hi: usize, z: f64) -> f64 {
        self.weights[lo..hi]
            .iter()
            .zip(&self.powers[lo..hi])
            .map(|(w, q)| w * bracket(z * q))
            .sum()
    }

    /// Total interference mass `G(z)`.
    pub fn mass(&self, z: f64) -> f64 {
        self.range_mass(0, self.weights.len(), z)
    }

    /// `G(z)` split by tier.
    pub fn tier_masses(&self, z: f64) -> Vec<f64> {
        self.tier_offsets
            .windows(2)
            .map(|w| self.range_mass(w[0], w[1], z))
            .collect()
    }

    /// `G(z)` and `dG/dz`.
    pub fn mass_and_slope(&self, z: f64) -> (f64, f64) {
        self.weights
            .iter()
            .zip(&self.powers)
            .fold((0.0, 0.0), |(g, d), (w, q)| {
                let x = z * q;
                (g + w * bracket(x), d + w * q * bracket_derivative(x))
            })
    }

    /// Limit of `G(z)` as `z` grows: the summed interfering area.
    pub fn saturation(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }
}

/// Tabulated `G(z)` on a uniform grid in `ln z`, interpolated by cubic
/// Hermite splines on `ln G` with exact slopes. Queries outside the grid
/// fall back to direct evaluation.
#[derive(Clone, Debug)]
pub struct MassTable {
    kernel: InterferenceKernel,
    ln_z0: f64,
    step: f64,
    ln_g: Vec<f64>,
    slope: Vec<f64>,
}

impl MassTable {
    pub fn build(kernel: InterferenceKernel, z_lo: f64, z_hi: f64, step: f64) -> Self {
        let empty = kernel.saturation() <= 0.0 || !(z_lo > 0.0) || !(z_hi > z_lo);
        if empty {
            return MassTable {
                kernel,
                ln_z0: 0.0,
                step,
                ln_g: Vec::new(),
                slope: Vec::new(),
            };
        }
        let ln_z0 = z_lo.ln();
        let n = ((z_hi.ln() - ln_z0) / step).ceil() as usize + 1;
        let (ln_g, slope) = (0..=n)
            .map(|i| {
                let z = (ln_z0 + i as f64 * step).exp();
                let (g, d) = kernel.mass_and_slope(z);
                // d ln G / d ln z
                (g.ln(), z * d / g)
            })
            .unzip();
        MassTable {
            kernel,
            ln_z0,
            step,
            ln_g,
            slope,
        }
    }

    pub fn kernel(&self) -> &InterferenceKernel {
        &self.kernel
    }

    pub fn mass(&self, z: f64) -> f64 {
        if self.ln_g.len() < 2 || z <= 0.0 {
            return if z <= 0.0 { 0.0 } else { self.kernel.mass(z) };
        }
        let u = (z.ln() - self.ln_z0) / self.step;
        if u < 0.0 || u >= (self.ln_g.len() - 1) as f64 {
            return self.kernel.mass(z);
        }
        let i = u as usize;
        let t = u - i as f64;
        let (y0, y1) = (self.ln_g[i], self.ln_g[i + 1]);
        let (m0, m1) = (self.slope[i] * self.step, self.slope[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        y.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_kernel() -> InterferenceKernel {
        let mut k = InterferenceKernel::new();
        for i in 0..50 {
            k.push(1.0 + i as f64, 1e-15 * (1.0 + 0.3 * i as f64).powi(3));
        }
        k.close_tier();
        k.push(5.0, 1e-17);
        k.close_tier();
        k
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for x in [1e-6, 5e-5, 2e-4, 0.3, 7.0, 1e3] {
            let h = 1e-6 * x;
            let fd = (bracket(x + h) - bracket(x - h)) / (2.0 * h);
            assert_relative_eq!(bracket_derivative(x), fd, max_relative = 1e-5);
        }
    }

    #[test]
    fn tier_masses_add_up() {
        let k = toy_kernel();
        let z = 3e14;
        let parts = k.tier_masses(z);
        assert_eq!(parts.len(), 2);
        assert_relative_eq!(parts.iter().sum::<f64>(), k.mass(z), max_relative = 1e-14);
    }

    #[test]
    fn table_interpolation_is_accurate() {
        let k = toy_kernel();
        let table = MassTable::build(k.clone(), 1e10, 1e20, 0.2);
        for i in 0..400 {
            let z = 1e10 * 10f64.powf(i as f64 * 0.025);
            assert_relative_eq!(table.mass(z), k.mass(z), max_relative = 2e-6);
        }
        // outside the grid
        assert_relative_eq!(table.mass(1e25), k.mass(1e25), max_relative = 1e-14);
        assert_eq!(table.mass(0.0), 0.0);
    }
}
