//! Radial grid on a ball, Fourier-Bessel transforms and the norms built on them.
//!
//! Fields are sampled at scaled Bessel zeros `r_i = j_{nu,i} R / j_{nu,N+1}` and
//! expanded in the Dirichlet eigenfunctions
//! `psi_j(r) = c_j r^{-nu} J_nu(j_{nu,j} r / R)` of the radial Laplacian in `n`
//! dimensions, normalised in `L^2(B_R)`. With the Gauss-type weights `w_i` the
//! matrix `sqrt(w_i) psi_j(r_i)` is symmetric and orthogonal up to rounding;
//! it is polished to machine orthogonality once at construction.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j, bessel_zeros};
use crate::error::{Error, Result};

/// Fraction of the radius treated as the boundary shell by the mass guard.
pub const BOUNDARY_SHELL_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: u32,
    pub r_max: f64,
    pub modes: usize,
}

impl GridSpec {
    pub fn new(dim: u32, r_max: f64, modes: usize) -> Result<Self> {
        let spec = GridSpec { dim, r_max, modes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not in 3..=5",
                self.dim
            )));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "radius {} must be positive",
                self.r_max
            )));
        }
        if self.modes < 8 {
            return Err(Error::InvalidGrid(format!(
                "{} modes, need at least 8",
                self.modes
            )));
        }
        Ok(())
    }

    /// Bessel order `n/2 - 1`.
    pub fn order(&self) -> f64 {
        0.5 * self.dim as f64 - 1.0
    }

    /// Energy-critical exponent `2n/(n-2)`.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dim)
    }

    /// Surface area of the unit sphere in `R^n`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.dim)
    }
}

pub fn critical_exponent(dim: u32) -> f64 {
    let n = dim as f64;
    2.0 * n / (n - 2.0)
}

pub fn sphere_area(dim: u32) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(0.5 * n) / statrs::function::gamma::gamma(0.5 * n)
}

/// Exponent `m_r^*` with `1/m_r^* = 1/r - m/n`.
pub fn sobolev_exponent(m: f64, r: f64, n: u32) -> Result<f64> {
    let nf = n as f64;
    if !(r >= 1.0) || m < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sobolev exponent needs r >= 1, m >= 0 (got m={m}, r={r})"
        )));
    }
    if m >= nf / r {
        return Err(Error::InvalidArgument(format!(
            "m={m} >= n/r={}; exponent undefined",
            nf / r
        )));
    }
    Ok(1.0 / (1.0 / r - m / nf))
}

#[derive(Debug)]
pub struct BesselBasis {
    spec: GridSpec,
    zeros: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
    eigenvalues: Vec<f64>,
    norms: Vec<f64>,
    transform: Vec<f64>,
    derivative: Vec<f64>,
}

impl BesselBasis {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let nu = spec.order();
        let big_n = spec.modes;
        let r_max = spec.r_max;
        let zeros = bessel_zeros(nu, big_n + 1)?;
        let s = zeros[big_n];
        let omega = spec.sphere_area();
        let jp: Vec<f64> = zeros[..big_n]
            .iter()
            .map(|&z| bessel_j(nu + 1.0, z).abs())
            .collect();
        let nodes: Vec<f64> = zeros[..big_n].iter().map(|&z| z * r_max / s).collect();
        let weights: Vec<f64> = (0..big_n)
            .map(|i| {
                omega * nodes[i].powf(2.0 * nu) * 2.0 * r_max * r_max / (s * s * jp[i] * jp[i])
            })
            .collect();
        let sqrt_weights: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let eigenvalues: Vec<f64> = zeros[..big_n]
            .iter()
            .map(|&z| (z / r_max).powi(2))
            .collect();
        let norms: Vec<f64> = jp
            .iter()
            .map(|&j| (2.0 / omega).sqrt() / (r_max * j))
            .collect();

        let rows: Vec<Vec<f64>> = (0..big_n)
            .into_par_iter()
            .map(|i| {
                (0..big_n)
                    .map(|j| 2.0 * bessel_j(nu, zeros[i] * zeros[j] / s) / (s * jp[i] * jp[j]))
                    .collect()
            })
            .collect();
        let mut transform: Vec<f64> = rows.into_iter().flatten().collect();
        orthogonalize_involution(&mut transform, big_n);

        let derivative: Vec<f64> = (0..big_n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let r = nodes[i];
                let zeros = &zeros;
                let norms = &norms;
                (0..big_n).map(move |j| {
                    let alpha = zeros[j] / r_max;
                    -norms[j] * alpha * r.powf(-nu) * bessel_j(nu + 1.0, alpha * r)
                })
            })
            .collect();

        Ok(BesselBasis {
            spec,
            zeros,
            nodes,
            weights,
            sqrt_weights,
            eigenvalues,
            norms,
            transform,
            derivative,
        })
    }

    /// Process-wide cached basis for `spec`.
    pub fn shared(spec: GridSpec) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(u32, u64, usize), Arc<BesselBasis>>>> =
            OnceLock::new();
        let key = (spec.dim, spec.r_max.to_bits(), spec.modes);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&key) {
            return Ok(b.clone());
        }
        let basis = Arc::new(BesselBasis::new(spec)?);
        cache
            .lock()
            .expect("basis cache poisoned")
            .insert(key, basis.clone());
        Ok(basis)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.modes
    }

    pub fn is_empty(&self) -> bool {
        self.spec.modes == 0
    }

    /// Positive zeros `j_{nu,1..N+1}` of `J_nu`.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Eigenvalues `lambda_j` of `-Delta`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Value of the `j`-th normalised eigenfunction at radius `r`.
    pub fn eigenfunction(&self, j: usize, r: f64) -> f64 {
        let nu = self.spec.order();
        let alpha = self.zeros[j] / self.spec.r_max;
        if r == 0.0 {
            // limit of r^{-nu} J_nu(alpha r)
            return self.norms[j] * (0.5 * alpha).powf(nu)
                / statrs::function::gamma::gamma(nu + 1.0);
        }
        self.norms[j] * r.powf(-nu) * bessel_j(nu, alpha * r)
    }

    /// Grid representation of the `j`-th eigenfunction (a column of the
    /// orthogonal transform, unweighted).
    pub fn mode_samples(&self, j: usize) -> Vec<f64> {
        let n = self.spec.modes;
        (0..n)
            .map(|i| self.transform[i * n + j] / self.sqrt_weights[i])
            .collect()
    }

    /// Radial derivative of the `j`-th eigenfunction at `r`.
    pub fn eigenfunction_derivative(&self, j: usize, r: f64) -> f64 {
        let nu = self.spec.order();
        let alpha = self.zeros[j] / self.spec.r_max;
        if r == 0.0 {
            return 0.0;
        }
        -self.norms[j] * alpha * r.powf(-nu) * bessel_j(nu + 1.0, alpha * r)
    }

    pub(crate) fn same(&self, other: &BesselBasis) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }

    fn apply(&self, matrix: &[f64], input: &[Complex64], out: &mut [Complex64]) {
        let n = self.spec.modes;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &matrix[i * n..(i + 1) * n];
            let mut re = 0.0;
            let mut im = 0.0;
            for (a, v) in row.iter().zip(input) {
                re += a * v.re;
                im += a * v.im;
            }
            *o = Complex64::new(re, im);
        }
    }

    fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let weighted: Vec<Complex64> = values
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(u, s)| u * s)
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec.modes];
        self.apply(&self.transform, &weighted, &mut out);
        out
    }

    fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec.modes];
        self.apply(&self.transform, coeffs, &mut out);
        for (u, s) in out.iter_mut().zip(&self.sqrt_weights) {
            *u /= s;
        }
        out
    }
}

// Newton-Schulz iteration towards the matrix sign of a symmetric matrix whose
// square is already close to the identity.
fn orthogonalize_involution(x: &mut [f64], n: usize) {
    let defect = |m: &[f64]| -> (Vec<f64>, f64) {
        let sq = matmul(m, m, n);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((sq[i * n + j] - target).abs());
            }
        }
        (sq, worst)
    };
    let (mut sq, mut worst) = defect(x);
    for _ in 0..8 {
        if worst < 1e-14 {
            break;
        }
        // x <- x (3 I - x^2) / 2
        for i in 0..n {
            for j in 0..n {
                let v = -sq[i * n + j] + if i == j { 3.0 } else { 0.0 };
                sq[i * n + j] = 0.5 * v;
            }
        }
        let mut next = matmul(x, &sq, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (next[i * n + j] + next[j * n + i]);
                next[i * n + j] = avg;
                next[j * n + i] = avg;
            }
        }
        let (nsq, nworst) = defect(&next);
        if nworst >= worst {
            break;
        }
        x.copy_from_slice(&next);
        sq = nsq;
        worst = nworst;
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for k in 0..n {
            let aik = a[i * n + k];
            let brow = &b[k * n..(k + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    });
    out
}

/// Complex samples of a radial function at the basis nodes.
#[derive(Clone, Debug)]
pub struct RadialField {
    basis: Arc<BesselBasis>,
    values: Vec<Complex64>,
}

/// Fourier-Bessel coefficients of a radial field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    basis: Arc<BesselBasis>,
    coeffs: Vec<Complex64>,
}

impl RadialField {
    pub fn new(basis: Arc<BesselBasis>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} samples, grid has {}",
                values.len(),
                basis.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(RadialField { basis, values })
    }

    pub fn zeros(basis: Arc<BesselBasis>) -> Self {
        let n = basis.len();
        RadialField {
            basis,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(basis: Arc<BesselBasis>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = basis.nodes().iter().map(|&r| f(r)).collect();
        RadialField::new(basis, values)
    }

    pub fn basis(&self) -> &Arc<BesselBasis> {
        &self.basis
    }

    pub fn spec(&self) -> &GridSpec {
        self.basis.spec()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField {
            basis: self.basis.clone(),
            coeffs: self.basis.forward(&self.values),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> RadialField {
        RadialField {
            basis: self.basis.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> RadialField {
        let values = self
            .basis
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &u)| f(r, u))
            .collect();
        RadialField {
            basis: self.basis.clone(),
            values,
        }
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        if !self.basis.same(&other.basis) {
            return Err(Error::BasisMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(RadialField {
            basis: self.basis.clone(),
            values,
        })
    }

    pub fn conj(&self) -> RadialField {
        self.map(|_, u| u.conj())
    }

    /// Node quadrature of `f(r, u)` against the radial volume element.
    pub fn integrate(&self, f: impl Fn(f64, Complex64) -> f64) -> f64 {
        self.basis
            .nodes()
            .iter()
            .zip(&self.values)
            .zip(self.basis.weights())
            .map(|((&r, &u), w)| w * f(r, u))
            .sum()
    }

    /// `||f||_{L^2}^2`.
    pub fn mass(&self) -> f64 {
        self.integrate(|_, u| u.norm_sqr())
    }

    /// `||D^s f||_{L^2}` with `D^s` the multiplier `lambda^{s/2}`.
    pub fn seminorm(&self, s: f64) -> f64 {
        self.to_spectral().seminorm(s)
    }

    /// `||grad f||_{L^2}^2`.
    pub fn kinetic(&self) -> f64 {
        self.to_spectral().seminorm_sq(1.0)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Radial derivative at the nodes, from the spectral expansion.
    pub fn radial_derivative(&self) -> Vec<Complex64> {
        let c = self.basis.forward(&self.values);
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        self.basis.apply(&self.basis.derivative, &c, &mut out);
        out
    }

    /// Mass fraction carried by the outer shell `r >= (1 - 0.05) R`.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let edge = (1.0 - BOUNDARY_SHELL_FRACTION) * self.spec().r_max;
        let shell = self.integrate(|r, u| if r >= edge { u.norm_sqr() } else { 0.0 });
        shell / total
    }
}

impl SpectralField {
    pub fn new(basis: Arc<BesselBasis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients, grid has {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(SpectralField { basis, coeffs })
    }

    pub fn basis(&self) -> &Arc<BesselBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn to_physical(&self) -> RadialField {
        RadialField {
            basis: self.basis.clone(),
            values: self.basis.inverse(&self.coeffs),
        }
    }

    pub fn multiply(&self, f: impl Fn(f64) -> Complex64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, &l)| c * f(l))
            .collect();
        SpectralField {
            basis: self.basis.clone(),
            coeffs,
        }
    }

    pub fn seminorm_sq(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, &l)| {
                if s == 0.0 {
                    c.norm_sqr()
                } else {
                    l.powf(s) * c.norm_sqr()
                }
            })
            .sum()
    }

    pub fn seminorm(&self, s: f64) -> f64 {
        self.seminorm_sq(s).sqrt()
    }

    /// Field values at arbitrary radii.
    pub fn evaluate(&self, radii: &[f64]) -> Vec<Complex64> {
        radii
            .iter()
            .map(|&r| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * self.basis.eigenfunction(j, r))
                    .sum()
            })
            .collect()
    }
}

pub fn to_spectral(f: &RadialField) -> SpectralField {
    f.to_spectral()
}

pub fn from_spectral(c: &SpectralField) -> RadialField {
    c.to_physical()
}

pub fn fractional_derivative(f: &RadialField, s: f64) -> Result<RadialField> {
    if !(0.0..=3.0).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "derivative order {s} outside [0, 3]"
        )));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.to_spectral()
        .multiply(|l| Complex64::new(l.powf(0.5 * s), 0.0))
        .to_physical())
}

/// `e^{i t Delta} f`.
pub fn free_propagator(f: &RadialField, t: f64) -> Result<RadialField> {
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("propagation time {t}")));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("propagator input".into()));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.to_spectral()
        .multiply(|l| Complex64::from_polar(1.0, -t * l))
        .to_physical())
}

pub fn lp_norm(f: &RadialField, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Lebesgue exponent {p} must be >= 1"
        )));
    }
    let s = f.integrate(|_, u| u.norm().powf(p));
    Ok(s.powf(1.0 / p))
}

/// Quintic smoothstep: 1 for `r <= start`, 0 for `r >= end`.
pub fn smooth_cutoff(r: f64, start: f64, end: f64) -> f64 {
    if r <= start {
        1.0
    } else if r >= end {
        0.0
    } else {
        let x = (r - start) / (end - start);
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// Gauss-Legendre rule on a sub-interval of the ball that evaluates the
/// spectral interpolant (and its radial derivative) between nodes.
#[derive(Debug, Clone)]
pub struct FineQuadrature {
    basis: Arc<BesselBasis>,
    radii: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

const GL6_X: [f64; 6] = [
    -0.932_469_514_203_152_1,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152_1,
];
const GL6_W: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_1,
    0.467_913_934_572_691_1,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

impl FineQuadrature {
    /// Rule on `[a, b]` with panels no wider than half the node spacing.
    pub fn new(basis: Arc<BesselBasis>, a: f64, b: f64) -> Result<Self> {
        let r_max = basis.spec().r_max;
        if !(0.0 <= a && a <= b && b <= r_max * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}] outside [0, {r_max}]"
            )));
        }
        let spacing = PI * r_max / basis.zeros()[basis.len()];
        let panels = (((b - a) / (0.5 * spacing)).ceil() as usize).max(1);
        let h = (b - a) / panels as f64;
        let omega = basis.spec().sphere_area();
        let dim = basis.spec().dim as i32;
        let mut radii = Vec::with_capacity(6 * panels);
        let mut weights = Vec::with_capacity(6 * panels);
        for p in 0..panels {
            let c = a + (p as f64 + 0.5) * h;
            for (x, w) in GL6_X.iter().zip(GL6_W) {
                let r = c + 0.5 * h * x;
                radii.push(r);
                weights.push(0.5 * h * w * omega * r.powi(dim - 1));
            }
        }
        let n = basis.len();
        let values: Vec<f64> = radii
            .par_iter()
            .flat_map_iter(|&r| (0..n).map(move |j| (r, j)))
            .map(|(r, j)| basis.eigenfunction(j, r))
            .collect();
        let derivs: Vec<f64> = radii
            .par_iter()
            .flat_map_iter(|&r| (0..n).map(move |j| (r, j)))
            .map(|(r, j)| basis.eigenfunction_derivative(j, r))
            .collect();
        Ok(FineQuadrature {
            basis,
            radii,
            weights,
            values,
            derivs,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Volume weights `w_k` with `int f dx ~ sum_k w_k f(r_k)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples `(u, u_r)` of the interpolant at the rule's radii.
    pub fn sample(&self, f: &RadialField) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        if !self.basis.same(&f.basis) {
            return Err(Error::BasisMismatch);
        }
        let c = self.basis.forward(&f.values);
        let n = self.basis.len();
        let mut u = vec![Complex64::new(0.0, 0.0); self.radii.len()];
        let mut ur = vec![Complex64::new(0.0, 0.0); self.radii.len()];
        for k in 0..self.radii.len() {
            let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            let vrow = &self.values[k * n..(k + 1) * n];
            let drow = &self.derivs[k * n..(k + 1) * n];
            for j in 0..n {
                a += c[j] * vrow[j];
                b += c[j] * drow[j];
            }
            u[k] = a;
            ur[k] = b;
        }
        Ok((u, ur))
    }

    /// `int integrand(r, u, u_r) dx` over the rule's shell.
    pub fn integrate(
        &self,
        f: &RadialField,
        integrand: impl Fn(f64, Complex64, Complex64) -> f64,
    ) -> Result<f64> {
        let (u, ur) = self.sample(f)?;
        Ok((0..self.radii.len())
            .map(|k| self.weights[k] * integrand(self.radii[k], u[k], ur[k]))
            .sum())
    }
}
