//! Scalar functionals of a snapshot: the log-modified energy, the critical
//! energy and its correction, the virial functional, Sobolev-type norms,
//! space-time norms of traces, and the inequality chains that control the
//! logarithmic excess of the nonlinearity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Snapshot;
use crate::grid::{critical_exponent, sobolev_exponent, FineQuadrature, RadialField};
use crate::quadrature::integrate;

const DENSITY_REL_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityParams {
    pub gamma: f64,
    pub dim: u32,
}

impl NonlinearityParams {
    pub fn new(gamma: f64, dim: u32) -> Result<Self> {
        let p = NonlinearityParams { gamma, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma {} must be >= 0",
                self.gamma
            )));
        }
        if !(3..=5).contains(&self.dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension {} not in 3..=5",
                self.dim
            )));
        }
        Ok(())
    }

    pub fn exponent(&self) -> f64 {
        critical_exponent(self.dim)
    }

    /// `g(a) = log^gamma(2 + a^2)`.
    pub fn g(&self, amplitude: f64) -> f64 {
        self.g_tilde(amplitude * amplitude)
    }

    /// `g~(y) = log^gamma(2 + y)`, also `g(sqrt(y))`.
    pub fn g_tilde(&self, y: f64) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            (2.0 + y).ln().powf(self.gamma)
        }
    }

    /// `d/dy g~(y)`.
    pub fn g_tilde_prime(&self, y: f64) -> f64 {
        if self.gamma == 0.0 {
            0.0
        } else {
            let l = (2.0 + y).ln();
            self.gamma * l.powf(self.gamma - 1.0) / (2.0 + y)
        }
    }

    /// `h(a) = g(a) - 1`.
    pub fn h(&self, amplitude: f64) -> f64 {
        self.g(amplitude) - 1.0
    }
}

pub fn g_of(amplitude: f64, p: &NonlinearityParams) -> f64 {
    p.g(amplitude)
}

/// `F(a) = int_0^a s^{(n+2)/(n-2)} g(s) ds`.
pub fn potential_density(amplitude: f64, p: &NonlinearityParams) -> Result<f64> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude {amplitude} must be >= 0"
        )));
    }
    let e = p.exponent();
    if p.gamma == 0.0 {
        return Ok(amplitude.powf(e) / e);
    }
    integrate(
        |s| s.powf(e - 1.0) * p.g(s),
        0.0,
        amplitude,
        0.0,
        DENSITY_REL_TOL,
    )
}

/// `int_0^a h(s) s^{p-1} ds`, the pointwise density of the correction.
pub fn correction_density(amplitude: f64, p: &NonlinearityParams) -> Result<f64> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude {amplitude} must be >= 0"
        )));
    }
    if p.gamma == 0.0 || amplitude == 0.0 {
        return Ok(0.0);
    }
    let e = p.exponent();
    // h changes sign, so the tolerance is taken relative to int |h| s^{p-1}
    let scale = amplitude.powf(e) / e * p.h(0.0).abs().max(p.h(amplitude).abs());
    integrate(
        |s| s.powf(e - 1.0) * p.h(s),
        0.0,
        amplitude,
        DENSITY_REL_TOL * scale,
        DENSITY_REL_TOL,
    )
}

fn check_params(f: &RadialField, p: &NonlinearityParams) -> Result<()> {
    if f.spec().dim != p.dim {
        return Err(Error::InvalidArgument(format!(
            "field dimension {} but nonlinearity dimension {}",
            f.spec().dim,
            p.dim
        )));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("field samples".into()));
    }
    Ok(())
}

fn node_sum(f: &RadialField, density: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for (u, w) in f.values().iter().zip(f.basis().weights()) {
        acc += w * density(u.norm())?;
    }
    Ok(acc)
}

/// `int F(|f|) dx`.
pub fn potential(f: &RadialField, p: &NonlinearityParams) -> Result<f64> {
    check_params(f, p)?;
    node_sum(f, |a| potential_density(a, p))
}

/// `||f||_p^p` with `p = 2n/(n-2)`.
pub fn critical_power(f: &RadialField) -> f64 {
    let e = f.spec().critical_exponent();
    f.integrate(|_, u| u.norm().powf(e))
}

/// `E(f) = ||grad f||^2 / 2 - int F`.
pub fn energy(f: &RadialField, p: &NonlinearityParams) -> Result<f64> {
    Ok(0.5 * f.kinetic() - potential(f, p)?)
}

/// `E~(f) = ||grad f||^2 / 2 - ||f||_p^p / p`.
pub fn critical_energy(f: &RadialField) -> f64 {
    0.5 * f.kinetic() - critical_power(f) / f.spec().critical_exponent()
}

/// `X(f) = int int_0^{|f|} h(s) s^{p-1} ds dx`.
pub fn correction(f: &RadialField, p: &NonlinearityParams) -> Result<f64> {
    check_params(f, p)?;
    node_sum(f, |a| correction_density(a, p))
}

/// `K~(f) = ||grad f||^2 - ||f||_p^p`.
pub fn functional_k(f: &RadialField) -> f64 {
    f.kinetic() - critical_power(f)
}

/// `(int_{|x| <= R} |f|^2)^{1/2}`.
pub fn local_mass(f: &RadialField, radius: f64) -> Result<f64> {
    let r_max = f.spec().r_max;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} must be positive"
        )));
    }
    if radius > r_max {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} exceeds ball radius {r_max}"
        )));
    }
    if radius == r_max {
        return Ok(f.mass().sqrt());
    }
    let q = FineQuadrature::new(f.basis().clone(), 0.0, radius)?;
    Ok(q.integrate(f, |_, u, _| u.norm_sqr())?.max(0.0).sqrt())
}

/// `||D f|| + ||D^k f||`.
pub fn htilde_norm(f: &RadialField, k: f64) -> Result<f64> {
    if !(k >= 1.0 && k <= 3.0) {
        return Err(Error::InvalidArgument(format!(
            "regularity {k} outside [1, 3]"
        )));
    }
    let c = f.to_spectral();
    Ok(c.seminorm(1.0) + c.seminorm(k))
}

/// All scalar functionals of one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub time: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub critical_energy: f64,
    pub correction: f64,
    pub functional_k: f64,
    pub critical_power: f64,
    pub htilde: f64,
}

pub const ENERGY_REPORT_COLUMNS: [&str; 10] = [
    "time",
    "mass",
    "kinetic",
    "potential",
    "energy",
    "critical_energy",
    "correction",
    "functional_k",
    "critical_power",
    "htilde",
];

impl EnergyReport {
    pub fn compute(time: f64, f: &RadialField, p: &NonlinearityParams, k: f64) -> Result<Self> {
        check_params(f, p)?;
        let spectral = f.to_spectral();
        let kinetic = spectral.seminorm_sq(1.0);
        let htilde = kinetic.sqrt() + spectral.seminorm(k);
        let pot = potential(f, p)?;
        let crit = critical_power(f);
        let e = f.spec().critical_exponent();
        Ok(EnergyReport {
            time,
            mass: f.mass(),
            kinetic,
            potential: pot,
            energy: 0.5 * kinetic - pot,
            critical_energy: 0.5 * kinetic - crit / e,
            correction: correction(f, p)?,
            functional_k: kinetic - crit,
            critical_power: crit,
            htilde,
        })
    }

    fn fields(&self) -> [f64; 10] {
        [
            self.time,
            self.mass,
            self.kinetic,
            self.potential,
            self.energy,
            self.critical_energy,
            self.correction,
            self.functional_k,
            self.critical_power,
            self.htilde,
        ]
    }

    pub fn csv_header() -> String {
        ENERGY_REPORT_COLUMNS.join(",")
    }

    pub fn to_csv(&self) -> String {
        self.fields()
            .iter()
            .map(|v| fmt17(*v))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{s}: {e}")))
            })
            .collect::<Result<_>>()?;
        if v.len() != 10 {
            return Err(Error::Parse(format!(
                "energy report row has {} columns, expected 10",
                v.len()
            )));
        }
        Ok(EnergyReport {
            time: v[0],
            mass: v[1],
            kinetic: v[2],
            potential: v[3],
            energy: v[4],
            critical_energy: v[5],
            correction: v[6],
            functional_k: v[7],
            critical_power: v[8],
            htilde: v[9],
        })
    }
}

/// Decimal with 17 significant digits; parses back to the same binary64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `(int_J ||u(t)||_q^q dt)^{1/q}` by the trapezoid rule on snapshot times.
/// `q` defaults to `2(n+2)/(n-2)`.
pub fn spacetime_norm(snapshots: &[Snapshot], q: Option<f64>) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(Error::Trace(format!(
            "{} snapshots, need at least 2",
            snapshots.len()
        )));
    }
    let dim = snapshots[0].field.spec().dim as f64;
    let q = q.unwrap_or(2.0 * (dim + 2.0) / (dim - 2.0));
    let vals: Vec<f64> = snapshots
        .iter()
        .map(|s| s.field.lp_norm(q).map(|v| v.powf(q)))
        .collect::<Result<_>>()?;
    Ok(trapezoid(snapshots, &vals).powf(1.0 / q))
}

pub(crate) fn trapezoid(snapshots: &[Snapshot], vals: &[f64]) -> f64 {
    snapshots
        .windows(2)
        .zip(vals.windows(2))
        .map(|(s, v)| 0.5 * (s[1].time - s[0].time) * (v[0] + v[1]))
        .sum()
}

/// `sup_t ||u||_{H~^k} + ||D u||_{L^r L^r} + ||D^k u||_{L^r L^r}`, `r = 2(n+2)/n`.
pub fn q_functional(snapshots: &[Snapshot], k: f64) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(Error::Trace(format!(
            "{} snapshots, need at least 2",
            snapshots.len()
        )));
    }
    let dim = snapshots[0].field.spec().dim as f64;
    let r = 2.0 * (dim + 2.0) / dim;
    let mut sup: f64 = 0.0;
    let mut d1 = Vec::with_capacity(snapshots.len());
    let mut dk = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        sup = sup.max(htilde_norm(&s.field, k)?);
        d1.push(
            crate::grid::fractional_derivative(&s.field, 1.0)?
                .lp_norm(r)?
                .powf(r),
        );
        dk.push(
            crate::grid::fractional_derivative(&s.field, k)?
                .lp_norm(r)?
                .powf(r),
        );
    }
    Ok(sup + trapezoid(snapshots, &d1).powf(1.0 / r) + trapezoid(snapshots, &dk).powf(1.0 / r))
}

/// Constants of the threshold argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConstants {
    pub dim: u32,
    pub delta: f64,
    pub k: f64,
    pub k_bar: f64,
    pub eps_breve: f64,
    pub theta: f64,
    pub c_breve: f64,
    pub big_c_breve: f64,
    pub c_a: f64,
}

pub const DEFAULT_C_BREVE: f64 = 0.05;
pub const DEFAULT_BIG_C_BREVE: f64 = 20.0;
pub const DEFAULT_C_A: f64 = 1e3;

impl ThresholdConstants {
    /// Derives `k_bar`, `eps_breve` and `theta` from the free constants.
    pub fn new(
        dim: u32,
        delta: f64,
        k: f64,
        c_breve: f64,
        big_c_breve: f64,
        c_a: f64,
    ) -> Result<Self> {
        if !(3..=5).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension {dim} not in 3..=5"
            )));
        }
        if !(k > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "regularity k = {k} must exceed 1"
            )));
        }
        if !(c_breve > 0.0 && c_breve < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "c_breve = {c_breve} must lie in (0, 1/2)"
            )));
        }
        if !(big_c_breve > 0.0 && c_a > 0.0 && delta > 0.0) {
            return Err(Error::InvalidArgument(
                "delta, C_breve and C_a must be positive".into(),
            ));
        }
        let n = dim as f64;
        let cap = (n + 2.0) / 4.0;
        let k_bar = 1.0 + (k - 1.0).min(cap - 1.0) / 2.0;
        let p = critical_exponent(dim);
        let q = sobolev_exponent(k_bar, 2.0, dim)?;
        let eps_breve = c_breve * (q - p);
        let theta = p * (q - (p + 2.0 * eps_breve)) / ((p + 2.0 * eps_breve) * (q - p));
        let tc = ThresholdConstants {
            dim,
            delta,
            k,
            k_bar,
            eps_breve,
            theta,
            c_breve,
            big_c_breve,
            c_a,
        };
        tc.validate()?;
        Ok(tc)
    }

    pub fn with_defaults(dim: u32, delta: f64, k: f64) -> Result<Self> {
        Self::new(
            dim,
            delta,
            k,
            DEFAULT_C_BREVE,
            DEFAULT_BIG_C_BREVE,
            DEFAULT_C_A,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim as f64;
        let upper = ((n + 2.0) / 4.0).min(self.k);
        if !(self.k_bar > 1.0 && self.k_bar < upper) {
            return Err(Error::InvalidArgument(format!(
                "k_bar {} outside (1, {upper})",
                self.k_bar
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0 && self.eps_breve > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta {} or eps_breve {} out of range",
                self.theta, self.eps_breve
            )));
        }
        Ok(())
    }

    /// `k_bar_2^* = 2n/(n - 2 k_bar)`.
    pub fn k_bar_exponent(&self) -> f64 {
        sobolev_exponent(self.k_bar, 2.0, self.dim).expect("validated")
    }

    /// `(C_breve / eps_breve)^gamma`.
    pub fn h_breve_factor(&self, gamma: f64) -> f64 {
        (self.big_c_breve / self.eps_breve).powf(gamma)
    }

    /// `h_breve(s) = (C_breve/eps_breve)^gamma g_breve(s) - 1` with `g_breve(s) = log^gamma(2 + s)`.
    pub fn h_breve(&self, s: f64, gamma: f64) -> f64 {
        let g = if gamma == 0.0 {
            1.0
        } else {
            (2.0 + s).ln().powf(gamma)
        };
        self.h_breve_factor(gamma) * g - 1.0
    }
}

/// Sharp constant `S` in `||u||_{2n/(n-2s)} <= S ||D^s u||_2`.
pub fn fractional_sobolev_constant(dim: u32, s: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let n = dim as f64;
    let sq = 2f64.powf(-2.0 * s) * std::f64::consts::PI.powf(-s) * gamma((n - 2.0 * s) / 2.0)
        / gamma((n + 2.0 * s) / 2.0)
        * (gamma(n) / gamma(n / 2.0)).powf(2.0 * s / n);
    sq.sqrt()
}

/// Lines of the Jensen/Hölder chain bounding the large-amplitude part of `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenChain {
    /// `X_2`, the part of `X` over `{|f| >= 2}`.
    pub lhs: f64,
    /// Every line of the chain, starting with `lhs` and ending with `rhs`.
    pub lines: Vec<f64>,
    pub rhs: f64,
    /// Constant of the final line.
    pub constant: f64,
    /// Exponent of `||f||_{H~^k}` in the final line.
    pub norm_exponent: f64,
}

impl JensenChain {
    /// True when each line is bounded by the next up to `rel_tol`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lines
            .windows(2)
            .all(|w| w[0] <= w[1] + rel_tol * w[1].abs().max(f64::MIN_POSITIVE))
    }

    /// Index of the first failing step, if any.
    pub fn first_violation(&self, rel_tol: f64) -> Option<usize> {
        self.lines
            .windows(2)
            .position(|w| w[0] > w[1] + rel_tol * w[1].abs().max(f64::MIN_POSITIVE))
    }
}

/// Evaluates the chain
///
/// ```text
/// X_2 <= int_{|f|>=2} h_b(A) B
///     <= (||f||_p^p / p) h_b(p/(p+2e) int|f|^{p+2e} / int|f|^p)
///     <= (||f||_p^p / p) h_b(p/(p+2e) ||f||_q^{2cq} / ||f||_p^{2cp})
///     <= (||f||_p^p / p) h_b(p/(p+2e) (S ||f||_{H~^k})^{2cq} / ||f||_p^{2cp})
///     <= C ||f||_p^p h_b(C ||f||_{H~^k}^{2cq} / ||f||_p^{2cp})
/// ```
///
/// with `A = p|f|^{2e}/(p+2e)`, `B = |f|^p/p`, `e = eps_breve`, `c = c_breve`,
/// `q = k_bar_2^*` and `S` the sharp `H^{k_bar}` Sobolev constant.
pub fn jensen_chain_check(
    f: &RadialField,
    p: &NonlinearityParams,
    tc: &ThresholdConstants,
) -> Result<JensenChain> {
    check_params(f, p)?;
    let gamma = p.gamma;
    let e = tc.eps_breve;
    let pe = p.exponent();
    let q = tc.k_bar_exponent();
    let c = tc.c_breve;
    let hb = |s: f64| tc.h_breve(s, gamma);

    let lhs = node_sum(f, |a| {
        if a >= 2.0 {
            correction_density(a, p)
        } else {
            Ok(0.0)
        }
    })?;
    let crit = critical_power(f);
    if crit == 0.0 {
        return Ok(JensenChain {
            lhs,
            lines: vec![lhs; 6],
            rhs: lhs,
            constant: 1.0,
            norm_exponent: 2.0 * c * q,
        });
    }
    let l1 = f.integrate(|_, u| {
        let a = u.norm();
        if a >= 2.0 {
            hb(pe * a.powf(2.0 * e) / (pe + 2.0 * e)) * a.powf(pe) / pe
        } else {
            0.0
        }
    });
    let raised = f.integrate(|_, u| u.norm().powf(pe + 2.0 * e));
    let scale = pe / (pe + 2.0 * e);
    let l2 = crit / pe * hb(scale * raised / crit);
    let norm_p = crit.powf(1.0 / pe);
    let norm_q = f.lp_norm(q)?;
    let l3 = crit / pe * hb(scale * norm_q.powf(2.0 * c * q) / norm_p.powf(2.0 * c * pe));
    let sob = fractional_sobolev_constant(p.dim, tc.k_bar);
    let htilde = htilde_norm(f, tc.k)?;
    let l4 = crit / pe * hb(scale * (sob * htilde).powf(2.0 * c * q) / norm_p.powf(2.0 * c * pe));
    let constant = (scale * sob.powf(2.0 * c * q)).max(1.0);
    let l5 = constant * crit * hb(constant * htilde.powf(2.0 * c * q) / norm_p.powf(2.0 * c * pe));
    Ok(JensenChain {
        lhs,
        lines: vec![lhs, l1, l2, l3, l4, l5],
        rhs: l5,
        constant,
        norm_exponent: 2.0 * c * q,
    })
}

/// Dyadic family of radii `m 2^{-levels}, ..., m/2, m` carrying the measure
/// `sum (m'/|x|) 1_{|x| >= m'} dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnularMeasure {
    pub m: f64,
    pub levels: u32,
}

impl AnnularMeasure {
    pub fn density(&self, r: f64) -> f64 {
        (0..=self.levels)
            .map(|l| self.m * 0.5f64.powi(l as i32))
            .filter(|&mp| r >= mp)
            .map(|mp| mp / r)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl HolderCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

/// `||f||_{L^{p+2e}(mu)} <= ||f||_{L^p(mu)}^theta ||f||_{L^q(mu)}^{1-theta}`.
pub fn measure_holder_check(
    f: &RadialField,
    measure: &AnnularMeasure,
    tc: &ThresholdConstants,
) -> Result<HolderCheck> {
    let total: f64 = f
        .basis()
        .nodes()
        .iter()
        .zip(f.basis().weights())
        .map(|(&r, w)| w * measure.density(r))
        .sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "annular measure with m = {} has no mass on the grid",
            measure.m
        )));
    }
    let pe = f.spec().critical_exponent();
    let q = tc.k_bar_exponent();
    let mid = pe + 2.0 * tc.eps_breve;
    let norm = |s: f64| {
        f.integrate(|r, u| measure.density(r) * u.norm().powf(s))
            .powf(1.0 / s)
    };
    let lhs = norm(mid);
    let rhs = norm(pe).powf(tc.theta) * norm(q).powf(1.0 - tc.theta);
    Ok(HolderCheck { lhs, rhs })
}
