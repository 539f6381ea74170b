//! The explicit ground state `W(r) = (1 + r^2/(n(n-2)))^{-(n-2)/2}` and the
//! variational constants derived from it.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{critical_exponent, sphere_area, BesselBasis, RadialField};

/// `W(r)` in dimension `dim`.
pub fn w_profile(dim: u32, r: f64) -> f64 {
    let n = dim as f64;
    (1.0 + r * r / (n * (n - 2.0))).powf(-0.5 * (n - 2.0))
}

/// `W'(r)`.
pub fn w_profile_derivative(dim: u32, r: f64) -> f64 {
    let n = dim as f64;
    let c2 = n * (n - 2.0);
    -(n - 2.0) * r / c2 * (1.0 + r * r / c2).powf(-0.5 * n)
}

/// Samples of `e^{i theta} lambda^{-(n-2)/2} W(r / lambda)`.
pub fn ground_state_profile(
    basis: Arc<BesselBasis>,
    scale: f64,
    phase: f64,
) -> Result<RadialField> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ground state scale {scale} must be positive"
        )));
    }
    let dim = basis.spec().dim;
    let amp = scale.powf(-0.5 * (dim as f64 - 2.0));
    let rot = Complex64::from_polar(1.0, phase);
    RadialField::from_fn(basis, |r| rot * (amp * w_profile(dim, r / scale)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateConstants {
    pub dim: u32,
    /// `||grad W||_2^2`
    pub grad_sq: f64,
    /// `||W||_{p}^{p}` with `p = 2n/(n-2)`
    pub crit_pow: f64,
    /// `||W||_p`
    pub crit_norm: f64,
    /// sharp Sobolev constant `||W||_p / ||grad W||_2`
    pub sobolev: f64,
    /// `E~(W) = (1/2 - 1/p) ||W||_p^p`
    pub critical_energy: f64,
    /// `||grad W||^2 / 2`, the bound on `delta * E~(W)`
    pub delta_energy_bound: f64,
    pub resolution: usize,
    pub relative_error: f64,
}

impl GroundStateConstants {
    pub fn exponent(&self) -> f64 {
        critical_exponent(self.dim)
    }

    /// `(key, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("dim", self.dim as f64),
            ("grad_w_sq", self.grad_sq),
            ("w_crit_pow", self.crit_pow),
            ("w_crit_norm", self.crit_norm),
            ("sobolev_constant", self.sobolev),
            ("critical_energy_w", self.critical_energy),
            ("delta_energy_bound", self.delta_energy_bound),
            ("resolution", self.resolution as f64),
            ("relative_error", self.relative_error),
        ]
    }
}

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

// Composite Gauss-Legendre on r = c tan(phi), phi in [0, pi/2); the map grades
// the radial grid so the algebraic tails are integrated to infinity.
fn radial_integral(dim: u32, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = dim as f64;
    let c = (n * (n - 2.0)).sqrt();
    let h = FRAC_PI_2 / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL8_X.iter().zip(GL8_W) {
            let phi = mid + 0.5 * h * x;
            let r = c * phi.tan();
            let jac = c / phi.cos().powi(2);
            acc += 0.5 * h * w * jac * r.powf(n - 1.0) * f(r);
        }
    }
    sphere_area(dim) * acc
}

/// Ground-state constants by graded quadrature at `resolution` panels,
/// gated by agreement with the `2 * resolution` rule.
pub fn ground_state_constants(dim: u32, resolution: usize) -> Result<GroundStateConstants> {
    if !(3..=5).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} not in 3..=5"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument(
            "quadrature resolution must be positive".into(),
        ));
    }
    let p = critical_exponent(dim);
    let grad = |panels| radial_integral(dim, panels, |r| w_profile_derivative(dim, r).powi(2));
    let pow = |panels| radial_integral(dim, panels, |r| w_profile(dim, r).powf(p));
    let (g1, g2) = (grad(resolution), grad(2 * resolution));
    let (p1, p2) = (pow(resolution), pow(2 * resolution));
    let relative_error = ((g1 - g2) / g2).abs().max(((p1 - p2) / p2).abs());
    if !(relative_error <= 1e-8) {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} too low: two-level estimate {relative_error:e} > 1e-8"
        )));
    }
    let crit_norm = p2.powf(1.0 / p);
    Ok(GroundStateConstants {
        dim,
        grad_sq: g2,
        crit_pow: p2,
        crit_norm,
        sobolev: crit_norm / g2.sqrt(),
        critical_energy: (0.5 - 1.0 / p) * p2,
        delta_energy_bound: 0.5 * g2,
        resolution,
        relative_error,
    })
}

/// Constants at the default resolution.
pub fn default_constants(dim: u32) -> Result<GroundStateConstants> {
    ground_state_constants(dim, 256)
}

/// `||Delta f + |f|^{4/(n-2)} f||_2 / ||f||_{H^1-dot}`; zero for the zero field.
pub fn stationarity_residual(f: &RadialField) -> f64 {
    let dim = f.spec().dim as f64;
    let power = 4.0 / (dim - 2.0);
    let lap = f
        .to_spectral()
        .multiply(|l| Complex64::new(-l, 0.0))
        .to_physical();
    let res = lap
        .values()
        .iter()
        .zip(f.values())
        .map(|(d, u)| d + u * u.norm().powf(power));
    let sq: f64 = res
        .zip(f.basis().weights())
        .map(|(v, w)| w * v.norm_sqr())
        .sum();
    let grad = f.kinetic().sqrt();
    if grad == 0.0 {
        return sq.sqrt();
    }
    sq.sqrt() / grad
}

/// `F(y) = y^2 / (2 C*^2) - y^p / p`; maximal at `y = ||W||_p` with value `E~(W)`.
pub fn remark_curve(y: f64, constants: &GroundStateConstants) -> f64 {
    let p = constants.exponent();
    0.5 * y * y / (constants.sobolev * constants.sobolev) - y.powf(p) / p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use statrs::function::beta::beta;

    // closed forms from Beta integrals of (1+s^2)^{-n} s^{2a-1}
    fn beta_oracle(dim: u32) -> (f64, f64) {
        let n = dim as f64;
        let c = (n * (n - 2.0)).sqrt();
        let omega = sphere_area(dim);
        let pow = omega * c.powf(n) * 0.5 * beta(0.5 * n, 0.5 * n);
        let grad =
            omega * c.powf(n - 2.0) * (n - 2.0).powi(2) * 0.5 * beta(0.5 * n + 1.0, 0.5 * n - 1.0);
        (grad, pow)
    }

    #[test]
    fn profile_values() {
        assert_eq!(w_profile(3, 0.0), 1.0);
        assert!((w_profile(3, 3f64.sqrt()) - 0.5f64.sqrt()).abs() < 1e-15);
        let b = BesselBasis::shared(GridSpec::new(3, 40.0, 64).unwrap()).unwrap();
        assert!(ground_state_profile(b, -1.0, 0.0).is_err());
    }

    #[test]
    fn constants_match_beta_closed_forms() {
        for dim in 3..=5 {
            let c = default_constants(dim).unwrap();
            let (grad, pow) = beta_oracle(dim);
            assert!(((c.grad_sq - grad) / grad).abs() < 1e-10, "dim {dim}");
            assert!(((c.crit_pow - pow) / pow).abs() < 1e-10, "dim {dim}");
            // Pohozaev
            assert!(((c.grad_sq - c.crit_pow) / c.grad_sq).abs() < 1e-8);
            let p = c.exponent();
            assert!(
                (c.critical_energy - (0.5 - 1.0 / p) * c.crit_pow).abs()
                    < 1e-10 * c.critical_energy
            );
        }
    }

    #[test]
    fn three_dimensional_critical_energy() {
        // ||W||_6^6 = 3^{3/2} pi^2 / 4 in three dimensions
        let exact = 3f64.powf(1.5) * std::f64::consts::PI.powi(2) / 4.0 / 3.0;
        let lo = ground_state_constants(3, 128).unwrap();
        let hi = ground_state_constants(3, 512).unwrap();
        assert!((lo.critical_energy - hi.critical_energy).abs() < 1e-8 * hi.critical_energy);
        assert!((hi.critical_energy - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn low_resolution_is_rejected() {
        assert!(ground_state_constants(3, 0).is_err());
    }

    #[test]
    fn scaling_preserves_gradient_norm() {
        for dim in 3..=5 {
            let n = dim as f64;
            let base = radial_integral(dim, 512, |r| w_profile_derivative(dim, r).powi(2));
            for &s in &[0.5f64, 2.0] {
                let amp = s.powf(-0.5 * (n - 2.0));
                let g = radial_integral(dim, 512, |r| {
                    (amp / s * w_profile_derivative(dim, r / s)).powi(2)
                });
                assert!(((g - base) / base).abs() < 1e-10, "dim {dim} scale {s}");
            }
        }
    }

    #[test]
    fn remark_curve_peaks_at_ground_state() {
        for dim in 3..=5 {
            let c = default_constants(dim).unwrap();
            assert_eq!(remark_curve(0.0, &c), 0.0);
            let y = c.crit_norm;
            let h = 1e-5 * y;
            let slope = (remark_curve(y + h, &c) - remark_curve(y - h, &c)) / (2.0 * h);
            assert!(slope.abs() < 1e-8, "dim {dim}: {slope}");
            assert!((remark_curve(y, &c) - c.critical_energy).abs() < 1e-8 * c.critical_energy);
        }
    }

    #[test]
    fn zero_field_residual_is_zero() {
        let b = BesselBasis::shared(GridSpec::new(4, 40.0, 64).unwrap()).unwrap();
        assert_eq!(stationarity_residual(&RadialField::zeros(b)), 0.0);
    }
}
