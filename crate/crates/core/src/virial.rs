//! Localized virial identity: the weight `a = m^2 phi(r/m)`, the momentum
//! `M_a`, the exact time derivative, the lower bound with its error terms, and
//! the residual of the identity along a trace.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trace;
use crate::functionals::{NonlinearityParams, ThresholdConstants};
use crate::grid::{smooth_cutoff, BesselBasis, FineQuadrature, RadialField};
use crate::quadrature::integrate;

const H_REL_TOL: f64 = 1e-13;

/// `phi(2)`, the plateau value of the weight profile.
pub const PHI_PLATEAU: f64 = 2.5;

// phi on [1, 2] as a polynomial in s = rho - 1:
// 1 + 2s + s^2 - 7/2 s^4 + 2 s^5, matching rho^2 to second order at s = 0
// and the plateau to second order at s = 1.
fn blend(s: f64) -> [f64; 5] {
    [
        1.0 + 2.0 * s + s * s - 3.5 * s.powi(4) + 2.0 * s.powi(5),
        2.0 + 2.0 * s - 14.0 * s.powi(3) + 10.0 * s.powi(4),
        2.0 - 42.0 * s * s + 40.0 * s.powi(3),
        -84.0 * s + 120.0 * s * s,
        -84.0 + 240.0 * s,
    ]
}

/// `phi` and its first four derivatives (the fourth without the jump terms).
pub fn phi_derivatives(rho: f64) -> [f64; 5] {
    if rho <= 1.0 {
        [rho * rho, 2.0 * rho, 2.0, 0.0, 0.0]
    } else if rho < 2.0 {
        blend(rho - 1.0)
    } else {
        [PHI_PLATEAU, 0.0, 0.0, 0.0, 0.0]
    }
}

#[derive(Clone, Debug)]
pub struct VirialWeight {
    m: f64,
    dim: u32,
    basis: Arc<BesselBasis>,
    /// Samples at the grid nodes.
    pub a: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub bilaplacian: Vec<f64>,
    pub chi: Vec<f64>,
    /// Constant in front of `Y_m` in the lower bound.
    pub y_constant: f64,
    inner: FineQuadrature,
    middle: FineQuadrature,
    outer: Option<FineQuadrature>,
}

impl VirialWeight {
    /// Weight at scale `m`; requires `2m < R`.
    pub fn new(m: f64, basis: Arc<BesselBasis>) -> Result<Self> {
        let r_max = basis.spec().r_max;
        if !(m > 0.0 && 2.0 * m < r_max) {
            return Err(Error::InvalidArgument(format!(
                "virial scale m = {m} needs 0 < 2m < {r_max}"
            )));
        }
        let dim = basis.spec().dim;
        let nodes = basis.nodes().to_vec();
        let mut w = VirialWeight {
            m,
            dim,
            a: Vec::new(),
            a1: Vec::new(),
            a2: Vec::new(),
            bilaplacian: Vec::new(),
            chi: Vec::new(),
            y_constant: 0.0,
            inner: FineQuadrature::new(basis.clone(), 0.0, m)?,
            middle: FineQuadrature::new(basis.clone(), m, 2.0 * m)?,
            outer: Some(FineQuadrature::new(basis.clone(), 2.0 * m, r_max)?),
            basis,
        };
        for &r in &nodes {
            let d = w.derivatives(r);
            w.a.push(d[0]);
            w.a1.push(d[1]);
            w.a2.push(d[2]);
            w.bilaplacian.push(w.bilaplacian_at(r));
            w.chi.push(w.chi_at(r));
        }
        w.y_constant = w.compute_y_constant();
        Ok(w)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `a, a', a'', a''', a''''` at radius `r`.
    pub fn derivatives(&self, r: f64) -> [f64; 5] {
        let m = self.m;
        let rho = r / m;
        if rho <= 1.0 {
            // exact on the inner ball
            return [r * r, 2.0 * r, 2.0, 0.0, 0.0];
        }
        let p = phi_derivatives(rho);
        [m * m * p[0], m * p[1], p[2], p[3] / m, p[4] / (m * m)]
    }

    /// `Delta a = a'' + (n-1) a'/r`.
    pub fn laplacian_at(&self, r: f64) -> f64 {
        let d = self.derivatives(r);
        if r <= self.m {
            return 2.0 * self.dim as f64;
        }
        d[2] + (self.dim as f64 - 1.0) * d[1] / r
    }

    /// `(Delta a)'`; bounded, with jumps where `phi'''` jumps.
    pub fn laplacian_slope_at(&self, r: f64) -> f64 {
        if r <= self.m {
            return 0.0;
        }
        let d = self.derivatives(r);
        d[3] + (self.dim as f64 - 1.0) * (d[2] / r - d[1] / (r * r))
    }

    /// Pointwise `Delta Delta a` away from the blend endpoints.
    pub fn bilaplacian_at(&self, r: f64) -> f64 {
        if r <= self.m || r >= 2.0 * self.m {
            return 0.0;
        }
        let n1 = self.dim as f64 - 1.0;
        let d = self.derivatives(r);
        let b1 = self.laplacian_slope_at(r);
        let b2 = d[4] + n1 * (d[3] / r - 2.0 * d[2] / (r * r) + 2.0 * d[1] / r.powi(3));
        b2 + n1 * b1 / r
    }

    pub fn chi_at(&self, r: f64) -> f64 {
        smooth_cutoff(r, self.m, 2.0 * self.m)
    }

    pub fn chi_slope_at(&self, r: f64) -> f64 {
        let m = self.m;
        if r <= m || r >= 2.0 * m {
            return 0.0;
        }
        let x = (r - m) / m;
        -30.0 * x * x * (1.0 - x) * (1.0 - x) / m
    }

    // sup over [m, 2m] of the coefficients bounding the outer contributions
    // by (m/r)(|u_r|^2 + |u|^2/r^2 + |u|^p g)
    fn compute_y_constant(&self) -> f64 {
        let m = self.m;
        let samples = 10_000;
        let mut worst: f64 = 0.0;
        for i in 0..=samples {
            let r = m * (1.0 + i as f64 / samples as f64);
            let d = self.derivatives(r);
            let b1 = self.laplacian_slope_at(r).abs();
            let chi = self.chi_at(r);
            let chi1 = self.chi_slope_at(r);
            let scale = r / m;
            let c_grad = b1 * r * scale + 4.0 * d[2].abs() * scale + 16.0 * chi * chi * scale;
            let c_mass = b1 * r * scale + 16.0 * chi1 * chi1 * r * r * scale;
            let c_pot = 2.0 * self.laplacian_at(r).abs() * scale;
            worst = worst.max(c_grad).max(c_mass).max(c_pot);
        }
        worst
    }

    fn check(&self, f: &RadialField) -> Result<()> {
        if !self.basis.same(f.basis()) {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }
}

/// `H(y)` in its defining form and in its integrated-by-parts form.
pub fn h_forms(y: f64, p: &NonlinearityParams) -> Result<(f64, f64)> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "H argument {y} must be finite and >= 0"
        )));
    }
    if y == 0.0 {
        return Ok((0.0, 0.0));
    }
    let n = p.dim as f64;
    let top = y.powf(n / (n - 2.0)) * p.g_tilde(y);
    let first = integrate(
        |s| s.powf(2.0 / (n - 2.0)) * p.g_tilde(s),
        0.0,
        y,
        0.0,
        H_REL_TOL,
    )?;
    let second = if p.gamma == 0.0 {
        0.0
    } else {
        integrate(
            |s| s.powf(n / (n - 2.0)) * p.g_tilde_prime(s),
            0.0,
            y,
            0.0,
            H_REL_TOL,
        )?
    };
    let ratio = (n - 2.0) / n;
    Ok((-top + first, (ratio - 1.0) * top - ratio * second))
}

/// `H'(y) = -(2/(n-2)) y^{2/(n-2)} g~(y) - y^{n/(n-2)} g~'(y)`.
pub fn h_prime(y: f64, p: &NonlinearityParams) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let n = p.dim as f64;
    -(2.0 / (n - 2.0)) * y.powf(2.0 / (n - 2.0)) * p.g_tilde(y)
        - y.powf(n / (n - 2.0)) * p.g_tilde_prime(y)
}

/// `M_a = int 2 a'(r) Im(conj(u) u_r) dx`.
pub fn virial_functional(f: &RadialField, w: &VirialWeight) -> Result<f64> {
    w.check(f)?;
    let density =
        |r: f64, u: Complex64, ur: Complex64| 2.0 * w.derivatives(r)[1] * (u.conj() * ur).im;
    Ok(w.inner.integrate(f, density)? + w.middle.integrate(f, density)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialRow {
    pub time: f64,
    pub m_a: f64,
    /// `int (-Delta Delta a)|u|^2 + 4 a''|u_r|^2 - 2 a' d_r H(|u|^2)`.
    pub rhs_exact: f64,
    /// `8 K~(chi_m u)`.
    pub main: f64,
    /// `8 int_{|x|<=m} h(|u|)|u|^p`.
    pub h_term: f64,
    pub x_m: f64,
    pub y_m: f64,
    /// `X_m / (delta^{1/2} int_{|x|<=2m} |u|^p)`.
    pub x_ratio: Option<f64>,
    /// `main - h_term - 4(n-2) X_m - C_Y Y_m`.
    pub lower_bound: f64,
    pub dm_dt: Option<f64>,
    pub residual: Option<f64>,
}

impl VirialRow {
    /// Lower-bound form of the identity within a relative quadrature tolerance.
    pub fn inequality_holds(&self, rel_tol: f64) -> bool {
        let scale = self.rhs_exact.abs() + self.main.abs() + self.h_term + self.y_m;
        self.rhs_exact >= self.lower_bound - rel_tol * scale
    }
}

/// All right-hand-side components at one snapshot. `linear` drops the
/// nonlinear contribution to the exact derivative.
pub fn virial_rhs(
    time: f64,
    f: &RadialField,
    w: &VirialWeight,
    p: &NonlinearityParams,
    tc: &ThresholdConstants,
    linear: bool,
) -> Result<VirialRow> {
    w.check(f)?;
    let n = p.dim as f64;
    let pe = 2.0 * n / (n - 2.0);
    let exact = |r: f64, u: Complex64, ur: Complex64| {
        let d = w.derivatives(r);
        let flux = 2.0 * (u.conj() * ur).re;
        let mut v = w.laplacian_slope_at(r) * flux + 4.0 * d[2] * ur.norm_sqr();
        if !linear {
            v -= 2.0 * d[1] * h_prime(u.norm_sqr(), p) * flux;
        }
        v
    };
    let k_density = |r: f64, u: Complex64, ur: Complex64| {
        let chi = w.chi_at(r);
        (w.chi_slope_at(r) * u + chi * ur).norm_sqr() - (chi * u.norm()).powf(pe)
    };
    let both = |q: &dyn Fn(f64, Complex64, Complex64) -> f64| -> Result<f64> {
        Ok(w.inner.integrate(f, q)? + w.middle.integrate(f, q)?)
    };
    let rhs_exact = both(&exact)?;
    let main = 8.0 * both(&k_density)?;
    let h_term = 8.0
        * w.inner
            .integrate(f, |_, u, _| p.h(u.norm()) * u.norm().powf(pe))?;
    let x_m = if p.gamma == 0.0 {
        0.0
    } else {
        let mut acc = 0.0;
        for q in [&w.inner, &w.middle] {
            let (u, _) = q.sample(f)?;
            for (v, wk) in u.iter().zip(q.weights()) {
                let y = v.norm_sqr();
                acc += wk
                    * integrate(
                        |s| s.powf(n / (n - 2.0)) * p.g_tilde_prime(s),
                        0.0,
                        y,
                        0.0,
                        H_REL_TOL,
                    )?;
            }
        }
        acc
    };
    let m = w.m;
    let y_density = |r: f64, u: Complex64, ur: Complex64| {
        m / r * (ur.norm_sqr() + u.norm_sqr() / (r * r) + u.norm().powf(pe) * p.g(u.norm()))
    };
    let mut y_m = w.middle.integrate(f, y_density)?;
    if let Some(outer) = &w.outer {
        y_m += outer.integrate(f, y_density)?;
    }
    let local_pow = both(&|_, u: Complex64, _| u.norm().powf(pe))?;
    let x_ratio = (local_pow > 0.0).then(|| x_m / (tc.delta.sqrt() * local_pow));
    let lower_bound = main - h_term - 4.0 * (n - 2.0) * x_m - w.y_constant * y_m;
    Ok(VirialRow {
        time,
        m_a: virial_functional(f, w)?,
        rhs_exact,
        main,
        h_term,
        x_m,
        y_m,
        x_ratio,
        lower_bound,
        dm_dt: None,
        residual: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub m: f64,
    pub rows: Vec<VirialRow>,
    pub max_residual: f64,
    /// `max_residual / max |rhs_exact|` (zero when the right-hand side vanishes).
    pub relative_residual: f64,
    pub y_constant: f64,
}

/// Compares the centered difference of `M_a` over snapshot times with the
/// exact derivative at interior snapshots.
pub fn virial_identity_residual(
    trace: &Trace,
    m: f64,
    tc: &ThresholdConstants,
) -> Result<VirialReport> {
    if trace.snapshots.len() < 3 {
        return Err(Error::Trace(format!(
            "{} snapshots, need at least 3",
            trace.snapshots.len()
        )));
    }
    let basis = trace.snapshots[0].field.basis().clone();
    let w = VirialWeight::new(m, basis)?;
    let params = trace.params();
    let mut rows = trace
        .snapshots
        .iter()
        .map(|s| {
            virial_rhs(
                s.time,
                &s.field,
                &w,
                &params.nonlinearity,
                tc,
                params.linear,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_residual: f64 = 0.0;
    let mut max_rhs: f64 = 0.0;
    for i in 1..rows.len() - 1 {
        let d = (rows[i + 1].m_a - rows[i - 1].m_a) / (rows[i + 1].time - rows[i - 1].time);
        let res = (d - rows[i].rhs_exact).abs();
        rows[i].dm_dt = Some(d);
        rows[i].residual = Some(res);
        max_residual = max_residual.max(res);
        max_rhs = max_rhs.max(rows[i].rhs_exact.abs());
    }
    let relative_residual = if max_rhs > 0.0 {
        max_residual / max_rhs
    } else {
        0.0
    };
    Ok(VirialReport {
        m,
        rows,
        max_residual,
        relative_residual,
        y_constant: w.y_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, EvolutionParams};
    use crate::grid::GridSpec;

    fn basis() -> Arc<BesselBasis> {
        BesselBasis::shared(GridSpec::new(3, 40.0, 512).unwrap()).unwrap()
    }

    fn tc() -> ThresholdConstants {
        ThresholdConstants::with_defaults(3, 0.05, 2.0).unwrap()
    }

    #[test]
    fn blend_matches_at_both_ends() {
        let left = blend(0.0);
        assert_eq!(&left[..3], &[1.0, 2.0, 2.0]);
        let right = blend(1.0);
        assert_eq!(right[0], PHI_PLATEAU);
        assert!(right[1].abs() < 1e-15 && right[2].abs() < 1e-15);
    }

    #[test]
    fn weight_is_exact_on_inner_ball() {
        let w = VirialWeight::new(4.0, basis()).unwrap();
        for (i, &r) in w.basis.nodes().iter().enumerate() {
            if r <= 4.0 {
                assert_eq!(w.a[i], r * r);
                assert_eq!(w.a1[i], 2.0 * r);
                assert_eq!(w.bilaplacian[i], 0.0);
                assert_eq!(w.chi[i], 1.0);
            }
            if r >= 8.0 {
                assert_eq!(w.chi[i], 0.0);
                assert_eq!(w.a1[i], 0.0);
            }
        }
        assert_eq!(w.derivatives(2.0)[0], 4.0);
        assert!(VirialWeight::new(20.0, basis()).is_err());
    }

    #[test]
    fn bilaplacian_matches_finite_differences() {
        let w = VirialWeight::new(4.0, basis()).unwrap();
        let lap = |r: f64| w.laplacian_at(r);
        let h = 1e-4;
        for &r in &[4.5, 5.3, 6.1, 7.7] {
            let fd = (lap(r + h) - lap(r - h)) / (2.0 * h);
            assert!((fd - w.laplacian_slope_at(r)).abs() < 1e-6, "r {r}");
            let slope = |r: f64| w.laplacian_slope_at(r);
            let bl = (slope(r + h) - slope(r - h)) / (2.0 * h) + 2.0 * slope(r) / r;
            assert!((bl - w.bilaplacian_at(r)).abs() < 1e-5, "r {r}");
        }
    }

    #[test]
    fn h_forms_examples() {
        let p = NonlinearityParams::new(0.0, 3).unwrap();
        assert_eq!(h_forms(0.0, &p).unwrap(), (0.0, 0.0));
        let (a, b) = h_forms(1.7, &p).unwrap();
        let exact = -2.0 / 3.0 * 1.7f64.powi(3);
        assert!((a - exact).abs() < 1e-13 && (b - exact).abs() < 1e-13);
        // midpoint Riemann sums with 10^6 cells
        let p = NonlinearityParams::new(0.5, 4).unwrap();
        let y: f64 = 3.0;
        let cells = 1_000_000;
        let h = y / cells as f64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..cells {
            let s = (i as f64 + 0.5) * h;
            s1 += s * p.g_tilde(s) * h;
            s2 += s * s * p.g_tilde_prime(s) * h;
        }
        let top = y * y * p.g_tilde(y);
        let (f1, f2) = h_forms(y, &p).unwrap();
        assert!(((f1 - (-top + s1)) / f1).abs() < 1e-9);
        assert!(((f2 - (-0.5 * top - 0.5 * s2)) / f2).abs() < 1e-9);
        assert!(((f1 - f2) / f1).abs() < 1e-9);
    }

    #[test]
    fn h_prime_is_derivative() {
        for &gamma in &[0.0, 0.3, 1.0] {
            for dim in 3..=5 {
                let p = NonlinearityParams::new(gamma, dim).unwrap();
                for &y in &[0.5, 2.0, 30.0] {
                    let h = 1e-5 * y;
                    let fd =
                        (h_forms(y + h, &p).unwrap().0 - h_forms(y - h, &p).unwrap().0) / (2.0 * h);
                    assert!(((fd - h_prime(y, &p)) / fd).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn real_and_zero_fields_carry_no_momentum() {
        let b = basis();
        let w = VirialWeight::new(4.0, b.clone()).unwrap();
        let f = RadialField::from_fn(b.clone(), |r| Complex64::new((-r * r).exp(), 0.0)).unwrap();
        assert_eq!(virial_functional(&f, &w).unwrap(), 0.0);
        assert_eq!(
            virial_functional(&RadialField::zeros(b.clone()), &w).unwrap(),
            0.0
        );
        let p = NonlinearityParams::new(0.5, 3).unwrap();
        let row = virial_rhs(0.0, &RadialField::zeros(b), &w, &p, &tc(), false).unwrap();
        assert_eq!(
            (row.rhs_exact, row.main, row.h_term, row.x_m, row.y_m),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn chirped_gaussian_momentum_matches_oracle() {
        let b = basis();
        let w = VirialWeight::new(3.0, b.clone()).unwrap();
        let f = RadialField::from_fn(b, |r| Complex64::from_polar((-r * r / 2.0).exp(), r * r))
            .unwrap();
        // Im(conj(u) u_r) = 2r |u|^2 for u = A(r) e^{i r^2}
        let omega = crate::grid::sphere_area(3);
        let oracle = integrate(
            |r| omega * r * r * 2.0 * w.derivatives(r)[1] * 2.0 * r * (-r * r).exp(),
            0.0,
            6.0,
            0.0,
            1e-13,
        )
        .unwrap();
        let v = virial_functional(&f, &w).unwrap();
        assert!(v > 0.0);
        assert!(((v - oracle) / oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn inner_support_has_no_outer_error() {
        let b = basis();
        let w = VirialWeight::new(8.0, b.clone()).unwrap();
        let f =
            RadialField::from_fn(b, |r| Complex64::new(smooth_cutoff(r, 1.0, 3.9), 0.0)).unwrap();
        let p = NonlinearityParams::new(0.2, 3).unwrap();
        let row = virial_rhs(0.0, &f, &w, &p, &tc(), false).unwrap();
        // the interpolant leaks at rounding level beyond the support
        assert!(row.y_m < 1e-6 * row.main.abs(), "{}", row.y_m);
        assert!(row.inequality_holds(1e-8));
    }

    #[test]
    fn truncated_ground_state_main_term_matches_oracle() {
        use crate::ground_state::{w_profile, w_profile_derivative};
        let b = BesselBasis::shared(GridSpec::new(3, 120.0, 512).unwrap()).unwrap();
        // taper far outside the virial support
        let tw = |r: f64| w_profile(3, r) * smooth_cutoff(r, 40.0, 108.0);
        let f = RadialField::from_fn(b.clone(), |r| Complex64::new(tw(r), 0.0)).unwrap();
        let w = VirialWeight::new(10.0, b).unwrap();
        let p = NonlinearityParams::new(0.0, 3).unwrap();
        let row = virial_rhs(0.0, &f, &w, &p, &tc(), false).unwrap();
        let omega = crate::grid::sphere_area(3);
        let k = |r: f64| {
            let (c, c1) = (w.chi_at(r), w.chi_slope_at(r));
            let v = c * w_profile(3, r);
            omega
                * r
                * r
                * ((c1 * w_profile(3, r) + c * w_profile_derivative(3, r)).powi(2) - v.powi(6))
        };
        let grad = |r: f64| omega * r * r * w_profile_derivative(3, r).powi(2);
        let oracle = 8.0
            * (integrate(k, 0.0, 10.0, 0.0, 1e-13).unwrap()
                + integrate(k, 10.0, 20.0, 0.0, 1e-13).unwrap());
        let scale = 8.0 * integrate(grad, 0.0, 20.0, 0.0, 1e-13).unwrap();
        assert!(
            (row.main - oracle).abs() < 1e-6 * scale,
            "{} vs {oracle}",
            row.main
        );
        assert_eq!(row.x_m, 0.0);
    }

    #[test]
    fn linear_identity_residual_is_small() {
        let b = basis();
        let u0 = RadialField::from_fn(b, |r| Complex64::new((-r * r / 2.0).exp(), 0.0)).unwrap();
        let nl = NonlinearityParams::new(0.0, 3).unwrap();
        let mut p = EvolutionParams::defaults(&GridSpec::new(3, 40.0, 512).unwrap(), nl, 0.2);
        p.dt = 1e-3;
        p.stride = 10;
        p.linear = true;
        let tr = evolve(&u0, &p).unwrap();
        let rep = virial_identity_residual(&tr, 4.0, &tc()).unwrap();
        assert!(rep.relative_residual < 1e-3, "{}", rep.relative_residual);
        assert!(rep.rows.iter().all(|r| r.inequality_holds(1e-8)));
    }
}
