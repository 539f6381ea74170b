//! Hypothesis checks on initial data and the trapping conclusions on traces.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trace;
use crate::functionals::{
    critical_energy, critical_power, energy, htilde_norm, NonlinearityParams, ThresholdConstants,
};
use crate::grid::{sobolev_exponent, RadialField};
use crate::ground_state::{remark_curve, GroundStateConstants};

/// "a << b" is read as `a <= b / 10`.
pub const MUCH_LESS_FACTOR: f64 = 0.1;
/// `k - 1 << 1` is read as `k < 1.1`.
pub const NEAR_ENERGY_REGULARITY: f64 = 1.1;
/// Data of `H~^k` size at most this use the small-data route.
pub const SMALL_DATA_SIZE: f64 = 0.1;
/// `||u_0||_{H~^k} >~ 1` is read as `>= 1`.
pub const LARGE_DATA_SIZE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmallnessRegime {
    /// `k - 1 << 1`: prefactor `(k_2^* - 1_2^*)^{-gamma}` present.
    Ass1,
    /// `k - 1 >~ 1`.
    Ass2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSmallness {
    pub regime: SmallnessRegime,
    /// `log10 log10` of the tower `C_a^{C_a^{C_a^{delta^{-1/2}}}}`.
    pub log10_log10_tower: f64,
    /// `log10(lhs + 1)`; finite even when `lhs` overflows.
    pub log10_lhs_plus_one: f64,
    /// Literal left-hand side, `inf` when it exceeds the float range.
    pub lhs: f64,
    /// `delta / 10 - lhs`.
    pub margin: f64,
    pub passes: bool,
}

/// Evaluates the literal smallness condition on `gamma` in nested log space.
pub fn gamma_smallness(
    gamma: f64,
    delta: f64,
    norm_u0: f64,
    k: f64,
    dim: u32,
    c_a: f64,
) -> Result<GammaSmallness> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma {gamma} must be >= 0"
        )));
    }
    if !(delta > 0.0 && norm_u0 > 0.0 && norm_u0.is_finite() && c_a > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need delta > 0, ||u0|| > 0 and C_a > 1 (got {delta}, {norm_u0}, {c_a})"
        )));
    }
    if !(k > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "regularity k = {k} must exceed 1"
        )));
    }
    let regime = if k < NEAR_ENERGY_REGULARITY {
        SmallnessRegime::Ass1
    } else {
        SmallnessRegime::Ass2
    };
    // ln of the extra factor (k_2^* - 1_2^*)^{-gamma}
    let ln_pref = match regime {
        SmallnessRegime::Ass1 => {
            let gap = sobolev_exponent(k, 2.0, dim)? - crate::grid::critical_exponent(dim);
            -gamma * gap.ln()
        }
        SmallnessRegime::Ass2 => 0.0,
    };
    let ln_ca = c_a.ln();
    // ln ln T = C_a^{x} ln C_a + ln ln C_a with x = delta^{-1/2}
    let ln_ln_tower = c_a.powf(delta.powf(-0.5)) * ln_ca + ln_ca.ln();
    let log10_log10_tower = (ln_ln_tower - LN_10.ln()) / LN_10;
    // ln ln(T c ||u0||) = ln ln T + ln(1 + ln(c ||u0||) / ln T)
    let ln_t = ln_ln_tower.exp();
    let ln_ln_arg = ln_ln_tower + ((ln_pref + norm_u0.ln()) / ln_t).ln_1p();
    let ln_lhs_plus_one = if gamma == 0.0 {
        ln_ca
    } else {
        ln_ca + ln_pref + gamma * ln_ln_arg
    };
    let lhs = if gamma == 0.0 {
        c_a - 1.0
    } else {
        ln_lhs_plus_one.exp() - 1.0
    };
    let bound = MUCH_LESS_FACTOR * delta;
    Ok(GammaSmallness {
        regime,
        log10_log10_tower,
        log10_lhs_plus_one: ln_lhs_plus_one / LN_10,
        lhs,
        margin: bound - lhs,
        passes: lhs <= bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub energy: f64,
    pub critical_energy: f64,
    /// `(1 - 2 delta) E~(W)`.
    pub energy_threshold: f64,
    pub energy_margin: f64,
    pub crit_norm: f64,
    pub w_crit_norm: f64,
    pub norm_margin: f64,
    pub htilde: f64,
    /// `||u_0||_{H~^k} - 1`.
    pub size_margin: f64,
    pub energy_ok: bool,
    pub norm_ok: bool,
    pub size_ok: bool,
    /// The three data conditions hold with positive margin.
    pub admissible: bool,
    /// `||u_0||_{H~^k} <= 0.1`: global theory comes from the small-data argument instead.
    pub small_data_route: bool,
    /// `None` for the zero field, where the literal condition is undefined.
    pub gamma_smallness: Option<GammaSmallness>,
}

fn delta_upper_bound(constants: &GroundStateConstants) -> f64 {
    constants.delta_energy_bound / constants.critical_energy
}

/// Evaluates the data conditions and the smallness condition on `gamma`.
pub fn check_initial_assumptions(
    u0: &RadialField,
    delta: f64,
    p: &NonlinearityParams,
    tc: &ThresholdConstants,
    constants: &GroundStateConstants,
) -> Result<AdmissibilityReport> {
    let upper = delta_upper_bound(constants);
    if !(delta > 0.0 && delta < upper) {
        return Err(Error::InvalidArgument(format!(
            "delta {delta} outside (0, {upper})"
        )));
    }
    let e = energy(u0, p)?;
    let threshold = (1.0 - 2.0 * delta) * constants.critical_energy;
    let crit_norm = critical_power(u0).powf(1.0 / constants.exponent());
    let htilde = htilde_norm(u0, tc.k)?;
    let energy_margin = threshold - e;
    let norm_margin = constants.crit_norm - crit_norm;
    let size_margin = htilde - LARGE_DATA_SIZE;
    let (energy_ok, norm_ok, size_ok) =
        (energy_margin > 0.0, norm_margin > 0.0, size_margin >= 0.0);
    let gamma_smallness = if htilde > 0.0 {
        Some(gamma_smallness(
            p.gamma, delta, htilde, tc.k, p.dim, tc.c_a,
        )?)
    } else {
        None
    };
    Ok(AdmissibilityReport {
        energy: e,
        critical_energy: critical_energy(u0),
        energy_threshold: threshold,
        energy_margin,
        crit_norm,
        w_crit_norm: constants.crit_norm,
        norm_margin,
        htilde,
        size_margin,
        energy_ok,
        norm_ok,
        size_ok,
        admissible: energy_ok && norm_ok && size_ok,
        small_data_route: htilde <= SMALL_DATA_SIZE,
        gamma_smallness,
    })
}

/// `delta'` from the variational curve `F(y) = y^2/(2 C*^2) - y^p/p`.
///
/// `y_delta` solves `F(y) = (1 - delta) F(y_W)` on `[0, y_W]`; every `y` below
/// it gives `||grad u||^2 <= (y_delta/y_W)^2 ||grad W||^2` and
/// `K~ >= (1 - (y_delta/y_W)^{p-2}) ||grad u||^2`.
pub fn delta_prime(delta: f64, constants: &GroundStateConstants) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    let y_w = constants.crit_norm;
    let target = (1.0 - delta) * remark_curve(y_w, constants);
    let (mut lo, mut hi) = (0.0, y_w);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if remark_curve(mid, constants) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(hi - lo <= 1e-14 * y_w) {
        return Err(Error::RootFind(format!(
            "delta' bisection stalled at [{lo}, {hi}]"
        )));
    }
    Ok(delta_prime_from_ratio(lo / y_w, constants.exponent()))
}

pub(crate) fn delta_prime_from_ratio(ratio: f64, p: f64) -> f64 {
    (1.0 - ratio * ratio).min(1.0 - ratio.powf(p - 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrappingCheck {
    pub time: f64,
    /// `(1 - delta') ||grad W||^2 - ||grad u||^2`
    pub kinetic_margin: f64,
    /// `K~(u) - delta' ||grad u||^2`
    pub virial_margin: f64,
    /// `(1 - delta) E~(W) - E~(u)`
    pub energy_margin: f64,
}

impl TrappingCheck {
    pub fn holds(&self) -> bool {
        self.kinetic_margin >= 0.0 && self.virial_margin >= 0.0 && self.energy_margin > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrappingReport {
    pub delta: f64,
    pub delta_prime: f64,
    pub checks: Vec<TrappingCheck>,
    pub violations: usize,
    pub first_violation: Option<f64>,
    pub worst_kinetic_margin: f64,
    pub worst_virial_margin: f64,
    pub worst_energy_margin: f64,
}

/// Checks the two trapping inequalities and the critical-energy bound at every snapshot.
pub fn trapping_monitor(
    trace: &Trace,
    delta: f64,
    constants: &GroundStateConstants,
) -> Result<TrappingReport> {
    let dp = delta_prime(delta, constants)?;
    let checks: Vec<TrappingCheck> = trace
        .reports
        .iter()
        .map(|r| TrappingCheck {
            time: r.time,
            kinetic_margin: (1.0 - dp) * constants.grad_sq - r.kinetic,
            virial_margin: r.functional_k - dp * r.kinetic,
            energy_margin: (1.0 - delta) * constants.critical_energy - r.critical_energy,
        })
        .collect();
    let worst = |f: fn(&TrappingCheck) -> f64| checks.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(TrappingReport {
        delta,
        delta_prime: dp,
        violations: checks.iter().filter(|c| !c.holds()).count(),
        first_violation: checks.iter().find(|c| !c.holds()).map(|c| c.time),
        worst_kinetic_margin: worst(|c| c.kinetic_margin),
        worst_virial_margin: worst(|c| c.virial_margin),
        worst_energy_margin: worst(|c| c.energy_margin),
        checks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstgReport {
    /// `h_breve(M delta^{-1} eps_breve^{-gamma})`
    pub value: f64,
    /// `delta / 10`
    pub bound: f64,
    pub holds: bool,
}

/// Checks `h_breve(M / (delta eps_breve^gamma)) << delta`.
pub fn constg_check(
    m: f64,
    delta: f64,
    gamma: f64,
    tc: &ThresholdConstants,
) -> Result<ConstgReport> {
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("M = {m} must be >= 1")));
    }
    if !(delta > 0.0 && gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need delta > 0 and gamma >= 0 (got {delta}, {gamma})"
        )));
    }
    let arg = m / delta * tc.eps_breve.powf(-gamma);
    let value = tc.h_breve(arg, gamma);
    let bound = MUCH_LESS_FACTOR * delta;
    Ok(ConstgReport {
        value,
        bound,
        holds: value <= bound,
    })
}
