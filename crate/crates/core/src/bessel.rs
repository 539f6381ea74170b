//! Bessel functions of the first kind for the integer and half-integer
//! orders used by the radial transforms, plus their positive zeros.

use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

const ASYMPTOTIC_THRESHOLD: f64 = 30.0;

/// `J_nu(x)` for `x >= 0` and `nu` a non-negative multiple of 1/2 up to 4.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    debug_assert!((2.0 * nu).fract() == 0.0 && nu >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x >= ASYMPTOTIC_THRESHOLD {
        return hankel_asymptotic(nu, x);
    }
    if nu.fract() == 0.0 {
        miller(nu as usize, x)
    } else if x < 2.0 {
        power_series(nu, x)
    } else {
        spherical(nu, x)
    }
}

fn power_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / statrs::function::gamma::gamma(nu + 1.0);
    let mut sum = term;
    let q = -half * half;
    for m in 1..200 {
        let m = m as f64;
        term *= q / (m * (m + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

// Upward recurrence from the closed forms of J_{1/2} and J_{-1/2}; stable
// for x above the order.
fn spherical(nu: f64, x: f64) -> f64 {
    let pref = (FRAC_2_PI / x).sqrt();
    let mut prev = pref * x.cos(); // J_{-1/2}
    let mut cur = pref * x.sin(); // J_{1/2}
    let mut order = 0.5;
    while order < nu {
        let next = (2.0 * order / x) * cur - prev;
        prev = cur;
        cur = next;
        order += 1.0;
    }
    cur
}

// Miller backward recurrence normalised by J_0 + 2 sum J_{2k} = 1.
fn miller(order: usize, x: f64) -> f64 {
    let start = 2 * (((x as usize) + 40 + order) / 2 + 1);
    let mut next = 0.0_f64;
    let mut cur = 1e-300_f64;
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if k - 1 == order {
            wanted = cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    norm += cur;
    wanted / norm
}

fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let kk = k as f64;
            term *= (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * x);
        }
        if term.abs() > last && k > 2 {
            break;
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let phase = (0.5 * nu + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    // cos(x - phase), sin(x - phase) without reducing x - phase in floating point
    let c = cx * cp + sx * sp;
    let s = sx * cp - cx * sp;
    (FRAC_2_PI / x).sqrt() * (p * c - q * s)
}

/// First `count` positive zeros of `J_nu`.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    let mu = 4.0 * nu * nu;
    let mut zeros = Vec::with_capacity(count);
    for m in 1..=count {
        let beta = (m as f64 + 0.5 * nu - 0.25) * PI;
        let e = 8.0 * beta;
        let mut x =
            beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e.powi(3));
        let lo = beta - 0.5 * PI;
        let hi = beta + 0.5 * PI;
        let mut converged = false;
        for _ in 0..50 {
            let j = bessel_j(nu, x);
            // J_nu' = (nu/x) J_nu - J_{nu+1}
            let dj = nu / x * j - bessel_j(nu + 1.0, x);
            let step = j / dj;
            x -= step;
            if !(lo..=hi).contains(&x) || !x.is_finite() {
                break;
            }
            if step.abs() <= 4.0 * f64::EPSILON * x {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::BesselZero {
                order: nu,
                index: m,
            });
        }
        if let Some(&prev) = zeros.last() {
            if x <= prev {
                return Err(Error::BesselZero {
                    order: nu,
                    index: m,
                });
            }
        }
        zeros.push(x);
    }
    Ok(zeros)
}
