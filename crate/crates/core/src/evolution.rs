//! Strang-split time stepping of the radial log-supercritical NLS on the
//! Dirichlet ball, trace recording and persistence, and scattering detection.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{fmt17, htilde_norm, EnergyReport, NonlinearityParams};
use crate::grid::{free_propagator, BesselBasis, GridSpec, RadialField, SpectralField};
use crate::ground_state::default_constants;

pub const DEFAULT_AMPLITUDE_CAP: f64 = 1e3;
pub const DEFAULT_KINETIC_CAP: f64 = 5.0;
pub const DEFAULT_BOUNDARY_LIMIT: f64 = 1e-6;
pub const TRUSTWORTHY_BOUNDARY_LIMIT: f64 = 1e-8;
const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionParams {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded snapshots.
    pub stride: usize,
    /// Halt once `sup |u|` exceeds this multiple of `sup |u_0|`.
    pub amplitude_cap: f64,
    /// Halt once `||grad u||^2` exceeds this multiple of `||grad W||^2`.
    pub kinetic_cap: f64,
    /// Halt once the boundary-shell mass fraction exceeds this.
    pub boundary_limit: f64,
    /// Regularity used for the `H~^k` column of the energy reports.
    pub k: f64,
    pub nonlinearity: NonlinearityParams,
    /// Drop the nonlinear substep and integrate the free equation.
    #[serde(default)]
    pub linear: bool,
}

impl EvolutionParams {
    /// Defaults with `dt = 1e-3 (R/N)^2`.
    pub fn defaults(grid: &GridSpec, nonlinearity: NonlinearityParams, t_end: f64) -> Self {
        let h = grid.r_max / grid.modes as f64;
        EvolutionParams {
            dt: 1e-3 * h * h,
            t_end,
            stride: 1000,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
            kinetic_cap: DEFAULT_KINETIC_CAP,
            boundary_limit: DEFAULT_BOUNDARY_LIMIT,
            k: 2.0,
            nonlinearity,
            linear: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} = {v} must be positive and finite"
                )))
            }
        };
        positive(self.dt, "dt")?;
        positive(self.amplitude_cap, "amplitude_cap")?;
        positive(self.kinetic_cap, "kinetic_cap")?;
        positive(self.boundary_limit, "boundary_limit")?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} must be >= 0",
                self.t_end
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        if !(1.0..=3.0).contains(&self.k) {
            return Err(Error::InvalidArgument(format!(
                "k = {} outside [1, 3]",
                self.k
            )));
        }
        self.nonlinearity.validate()
    }

    /// Number of steps and the step that lands exactly on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.t_end / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltStatus {
    Completed,
    KineticEscape,
    AmplitudeCap,
    BoundaryMass,
}

impl HaltStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltStatus::Completed => "completed",
            HaltStatus::KineticEscape => "kinetic-escape",
            HaltStatus::AmplitudeCap => "amplitude-cap",
            HaltStatus::BoundaryMass => "boundary-mass",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub field: RadialField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: String,
    pub grid: GridSpec,
    pub params: EvolutionParams,
    pub halt: HaltStatus,
    pub halt_time: f64,
    /// First time the boundary-shell mass fraction exceeded 1e-8.
    pub trustworthy_horizon: Option<f64>,
    /// Free-form provenance (configuration, seed) carried through unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub header: TraceHeader,
    pub snapshots: Vec<Snapshot>,
    pub reports: Vec<EnergyReport>,
}

const TRACE_FORMAT: &str = "nlslab-trace";

impl Trace {
    pub fn spec(&self) -> &GridSpec {
        &self.header.grid
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.header.params
    }

    pub fn halt(&self) -> HaltStatus {
        self.header.halt
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trace has at least one snapshot")
    }

    /// Header line, then `t, re_0, im_0, ..., re_{N-1}, im_{N-1}` per snapshot.
    pub fn to_text(&self) -> Result<String> {
        let mut out =
            serde_json::to_string(&self.header).map_err(|e| Error::Trace(e.to_string()))?;
        out.push('\n');
        for s in &self.snapshots {
            out.push_str(&fmt17(s.time));
            for v in s.field.values() {
                write!(out, ",{},{}", fmt17(v.re), fmt17(v.im)).expect("string write");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses a trace and recomputes its energy reports.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Trace("empty trace".into()))?;
        let header: TraceHeader =
            serde_json::from_str(head).map_err(|e| Error::Trace(format!("header: {e}")))?;
        if header.format != TRACE_FORMAT {
            return Err(Error::Trace(format!("unknown format {:?}", header.format)));
        }
        header.grid.validate()?;
        let basis = BesselBasis::shared(header.grid)?;
        let n = header.grid.modes;
        let mut snapshots = Vec::new();
        for (i, line) in lines.enumerate() {
            let nums: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Trace(format!("row {i}: {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if nums.len() != 1 + 2 * n {
                return Err(Error::Trace(format!(
                    "row {i} has {} numbers, expected {}",
                    nums.len(),
                    1 + 2 * n
                )));
            }
            let values = nums[1..]
                .chunks(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect();
            let time = nums[0];
            if let Some(prev) = snapshots.last().map(|s: &Snapshot| s.time) {
                if !(time > prev) {
                    return Err(Error::Trace(format!(
                        "row {i}: time {time} not after {prev}"
                    )));
                }
            }
            snapshots.push(Snapshot {
                time,
                field: RadialField::new(basis.clone(), values)?,
            });
        }
        if snapshots.is_empty() {
            return Err(Error::Trace("trace has no snapshots".into()));
        }
        let p = header.params;
        let reports = snapshots
            .iter()
            .map(|s| EnergyReport::compute(s.time, &s.field, &p.nonlinearity, p.k))
            .collect::<Result<_>>()?;
        Ok(Trace {
            header,
            snapshots,
            reports,
        })
    }

    pub fn reports_csv(&self) -> String {
        let mut out = EnergyReport::csv_header();
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }
}

/// `u -> u exp(i tau |u|^{4/(n-2)} g(|u|))` pointwise.
pub fn nonlinear_phase_step(f: &RadialField, tau: f64, p: &NonlinearityParams) -> RadialField {
    let power = 4.0 / (p.dim as f64 - 2.0);
    f.map(|_, u| {
        let a = u.norm();
        if a == 0.0 {
            return u;
        }
        u * Complex64::from_polar(1.0, tau * a.powf(power) * p.g(a))
    })
}

/// `e^{i dt/2 Delta} o phase(dt) o e^{i dt/2 Delta}`.
pub fn strang_step(f: &RadialField, dt: f64, p: &NonlinearityParams) -> Result<RadialField> {
    let half = free_propagator(f, 0.5 * dt)?;
    free_propagator(&nonlinear_phase_step(&half, dt, p), 0.5 * dt)
}

fn propagate_spectral(c: &SpectralField, t: f64) -> RadialField {
    c.multiply(|l| Complex64::from_polar(1.0, -t * l))
        .to_physical()
}

/// Integrates from `u0` until `t_end` or a guard fires.
pub fn evolve(u0: &RadialField, params: &EvolutionParams) -> Result<Trace> {
    evolve_with_provenance(u0, params, None)
}

pub fn evolve_with_provenance(
    u0: &RadialField,
    params: &EvolutionParams,
    provenance: Option<serde_json::Value>,
) -> Result<Trace> {
    params.validate()?;
    let spec = *u0.spec();
    if spec.dim != params.nonlinearity.dim {
        return Err(Error::InvalidArgument(format!(
            "field dimension {} but nonlinearity dimension {}",
            spec.dim, params.nonlinearity.dim
        )));
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial data".into()));
    }
    let b0 = u0.boundary_mass_fraction();
    if b0 > params.boundary_limit {
        return Err(Error::InvalidArgument(format!(
            "initial boundary-shell mass fraction {b0:e} exceeds {:e}",
            params.boundary_limit
        )));
    }
    let nl = params.nonlinearity;
    let (steps, dt) = params.schedule();
    let amp_cap = params.amplitude_cap * u0.sup_norm();
    let kin_cap = params.kinetic_cap * default_constants(spec.dim)?.grad_sq;
    let report = |t: f64, f: &RadialField| EnergyReport::compute(t, f, &nl, params.k);

    let mut snapshots = vec![Snapshot {
        time: 0.0,
        field: u0.clone(),
    }];
    let mut reports = vec![report(0.0, u0)?];
    let mut horizon = (b0 > TRUSTWORTHY_BOUNDARY_LIMIT).then_some(0.0);
    let mut halt = HaltStatus::Completed;
    let mut halt_time = params.t_end;

    // Consecutive half linear steps are fused; `u` lags the true state by a
    // half step whenever `open` is set.
    let mut u = u0.clone();
    let mut open = false;
    for step in 1..=steps {
        let c = u.to_spectral();
        let kinetic = c.seminorm_sq(1.0);
        u = propagate_spectral(&c, if open { dt } else { 0.5 * dt });
        if !params.linear {
            u = nonlinear_phase_step(&u, dt, &nl);
        }
        open = true;
        let t = step as f64 * dt;
        if !u.is_finite() {
            return Err(Error::NonFinite(format!("solution at t = {t}")));
        }
        let fired = if kinetic > kin_cap {
            Some(HaltStatus::KineticEscape)
        } else if u.sup_norm() > amp_cap {
            Some(HaltStatus::AmplitudeCap)
        } else {
            None
        };
        let boundary = u.boundary_mass_fraction();
        if horizon.is_none() && boundary > TRUSTWORTHY_BOUNDARY_LIMIT {
            horizon = Some(t);
        }
        let fired =
            fired.or((boundary > params.boundary_limit).then_some(HaltStatus::BoundaryMass));
        if fired.is_some() || step % params.stride == 0 || step == steps {
            u = free_propagator(&u, 0.5 * dt)?;
            open = false;
            reports.push(report(t, &u)?);
            snapshots.push(Snapshot {
                time: t,
                field: u.clone(),
            });
        }
        if let Some(status) = fired {
            halt = status;
            halt_time = t;
            break;
        }
    }
    let header = TraceHeader {
        format: TRACE_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        grid: spec,
        params: *params,
        halt,
        halt_time,
        trustworthy_horizon: horizon,
        provenance,
    };
    Ok(Trace {
        header,
        snapshots,
        reports,
    })
}

#[derive(Clone, Debug)]
pub struct ScatteringReport {
    /// Dyadic times `1, 2, 4, ...` at which `v(t) = e^{-it Delta} u(t)` was sampled.
    pub times: Vec<f64>,
    /// `||v(t_{j+1}) - v(t_j)||_{H~^k}` for consecutive dyadic times.
    pub cauchy_residuals: Vec<f64>,
    pub scattered: bool,
    pub u_plus_estimate: RadialField,
}

/// Cauchy test for `e^{-it Delta} u(t)` along dyadic times. Residuals must be
/// non-increasing up to `1e-12` of the largest profile norm.
pub fn scattering_detector(trace: &Trace, k: f64, tol: f64) -> Result<ScatteringReport> {
    if trace.halt() != HaltStatus::Completed {
        return Err(Error::Trace(format!(
            "trace halted early ({})",
            trace.halt().as_str()
        )));
    }
    let t_end = trace.last().time;
    if t_end < 4.0 - 1e-9 {
        return Err(Error::Trace(format!("t_end = {t_end} < 4")));
    }
    let nearest = |t: f64| {
        trace
            .snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("non-empty")
    };
    let mut times = Vec::new();
    let mut profiles = Vec::new();
    let mut t = 1.0;
    while t <= t_end * (1.0 + 1e-12) {
        let s = nearest(t);
        times.push(s.time);
        profiles.push(free_propagator(&s.field, -s.time)?);
        t *= 2.0;
    }
    let cauchy_residuals = profiles
        .windows(2)
        .map(|w| htilde_norm(&w[1].sub(&w[0])?, k))
        .collect::<Result<Vec<_>>>()?;
    // differences at the rounding level of the profiles count as ties
    let mut floor: f64 = 0.0;
    for v in &profiles {
        floor = floor.max(htilde_norm(v, k)?);
    }
    floor *= ROUNDING_FLOOR;
    let monotone = cauchy_residuals.windows(2).all(|w| w[1] <= w[0] + floor);
    let last = cauchy_residuals.last().copied().unwrap_or(0.0);
    Ok(ScatteringReport {
        times,
        scattered: monotone && last < tol,
        cauchy_residuals,
        u_plus_estimate: profiles.pop().expect("at least one dyadic time"),
    })
}

/// `steps` plain Strang steps without guards or recording.
pub fn integrate_fixed(
    u0: &RadialField,
    dt: f64,
    steps: usize,
    p: &NonlinearityParams,
) -> Result<RadialField> {
    let mut u = u0.clone();
    for _ in 0..steps {
        u = strang_step(&u, dt, p)?;
    }
    Ok(u)
}
