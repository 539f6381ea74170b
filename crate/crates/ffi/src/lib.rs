//! C ABI over the `nlslab` core.
//!
//! Grids, fields and traces cross the boundary as opaque handles. Every
//! fallible entry point returns an [`NlsStatus`]; the message of the most
//! recent failure on the calling thread is available from
//! [`nlslab_last_error_message`]. Handles are freed with the matching
//! `*_free` function and strings with [`nlslab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use nlslab::evolution::{evolve, scattering_detector, EvolutionParams, HaltStatus, Trace};
use nlslab::functionals::{
    correction, critical_energy, critical_power, energy, functional_k, htilde_norm,
    NonlinearityParams,
};
use nlslab::grid::{free_propagator, BesselBasis, GridSpec, RadialField};
use nlslab::ground_state::ground_state_profile;
use nlslab::runner::{output_dir, run_simulation, Runner};
use nlslab::virial::virial_identity_residual;
use nlslab::Error;
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    /// Bessel zero, quadrature or root finder failure.
    Numerical = 4,
    Trace = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    IndexOutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlsHalt {
    Completed = 0,
    KineticEscape = 1,
    AmplitudeCap = 2,
    BoundaryMass = 3,
}

impl From<HaltStatus> for NlsHalt {
    fn from(h: HaltStatus) -> Self {
        match h {
            HaltStatus::Completed => NlsHalt::Completed,
            HaltStatus::KineticEscape => NlsHalt::KineticEscape,
            HaltStatus::AmplitudeCap => NlsHalt::AmplitudeCap,
            HaltStatus::BoundaryMass => NlsHalt::BoundaryMass,
        }
    }
}

/// Opaque Fourier-Bessel grid.
pub struct NlsGrid {
    basis: Arc<BesselBasis>,
}

/// Opaque radial field on a grid.
pub struct NlsField {
    field: RadialField,
}

/// Opaque simulation trace.
pub struct NlsTrace {
    trace: Trace,
}

/// Integral quantities of one field.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NlsFieldNorms {
    pub mass: f64,
    pub kinetic: f64,
    pub critical_power: f64,
    pub energy: f64,
    pub critical_energy: f64,
    pub correction: f64,
    pub functional_k: f64,
    pub htilde: f64,
}

/// Evolution settings. Fill with [`nlslab_evolve_params_default`] first.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlsEvolveParams {
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub amplitude_cap: f64,
    pub kinetic_cap: f64,
    pub boundary_limit: f64,
    pub k: f64,
    pub linear: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NlsScattering {
    pub scattered: bool,
    /// Number of Cauchy residuals computed.
    pub count: usize,
    /// Last Cauchy residual, NaN when `count == 0`.
    pub final_residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NlsVirial {
    pub max_residual: f64,
    pub relative_residual: f64,
    pub rows: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> NlsStatus {
    match err {
        Error::InvalidGrid(_) | Error::InvalidArgument(_) | Error::BasisMismatch => {
            NlsStatus::InvalidArgument
        }
        Error::NonFinite(_) => NlsStatus::NonFinite,
        Error::BesselZero { .. } | Error::Quadrature { .. } | Error::RootFind(_) => {
            NlsStatus::Numerical
        }
        Error::Trace(_) | Error::Parse(_) => NlsStatus::Trace,
        Error::Config { .. } => NlsStatus::Config,
        Error::Io(_) => NlsStatus::Io,
    }
}

struct Fail(NlsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> NlsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => NlsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            NlsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(NlsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(
            NlsStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_value<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(
            NlsStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    *out = value;
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(NlsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            NlsStatus::InvalidArgument,
            format!("{name} is not valid UTF-8"),
        )
    })
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nlslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nlslab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nlslab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_grid_new(
    dim: u32,
    r_max: f64,
    modes: usize,
    out: *mut *mut NlsGrid,
) -> NlsStatus {
    guard(|| {
        let basis = BesselBasis::shared(GridSpec::new(dim, r_max, modes)?)?;
        put(out, NlsGrid { basis })
    })
}

/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn nlslab_grid_free(grid: *mut NlsGrid) {
    free_box(grid)
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn nlslab_grid_len(grid: *const NlsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.basis.len())
}

/// Copies the radial nodes into `out[0..len]`.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nlslab_grid_nodes(
    grid: *const NlsGrid,
    out: *mut f64,
    len: usize,
) -> NlsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        copy_out(g.basis.nodes(), out, len)
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(NlsStatus::NullPointer, "output buffer is null".into()));
    }
    if len < src.len() {
        return Err(Fail(
            NlsStatus::BufferTooSmall,
            format!("need {} entries, got {len}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Builds a field from node samples. `im` may be null for a real field.
///
/// # Safety
/// `re` (and `im` when non-null) must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_new(
    grid: *const NlsGrid,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        if re.is_null() {
            return Err(Fail(NlsStatus::NullPointer, "re is null".into()));
        }
        if len != g.basis.len() {
            return Err(Fail(
                NlsStatus::InvalidArgument,
                format!("expected {} samples, got {len}", g.basis.len()),
            ));
        }
        let re = std::slice::from_raw_parts(re, len);
        let values: Vec<Complex64> = if im.is_null() {
            re.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect()
        };
        put(
            out,
            NlsField {
                field: RadialField::new(g.basis.clone(), values)?,
            },
        )
    })
}

/// `amplitude * exp(-(r/width)^2)`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_gaussian(
    grid: *const NlsGrid,
    amplitude: f64,
    width: f64,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        if !(width > 0.0 && width.is_finite() && amplitude.is_finite()) {
            return Err(Fail(
                NlsStatus::InvalidArgument,
                format!("bad gaussian ({amplitude}, {width})"),
            ));
        }
        let field = RadialField::from_fn(g.basis.clone(), |r| {
            Complex64::new(amplitude * (-(r / width).powi(2)).exp(), 0.0)
        })?;
        put(out, NlsField { field })
    })
}

/// Untapered rescaled ground state `e^{i phase} scale^{-(n-2)/2} W(r/scale)`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_ground_state(
    grid: *const NlsGrid,
    scale: f64,
    phase: f64,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        put(
            out,
            NlsField {
                field: ground_state_profile(g.basis.clone(), scale, phase)?,
            },
        )
    })
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_free(field: *mut NlsField) {
    free_box(field)
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_len(field: *const NlsField) -> usize {
    field.as_ref().map_or(0, |f| f.field.values().len())
}

/// Copies node samples out. Either buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_samples(
    field: *const NlsField,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> NlsStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let v = f.field.values();
        if len < v.len() {
            return Err(Fail(
                NlsStatus::BufferTooSmall,
                format!("need {} entries, got {len}", v.len()),
            ));
        }
        for (i, z) in v.iter().enumerate() {
            if !re.is_null() {
                *re.add(i) = z.re;
            }
            if !im.is_null() {
                *im.add(i) = z.im;
            }
        }
        Ok(())
    })
}

/// Mass, energies and norms of `field` for nonlinearity exponent `gamma`
/// and regularity `k`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_norms(
    field: *const NlsField,
    gamma: f64,
    k: f64,
    out: *mut NlsFieldNorms,
) -> NlsStatus {
    guard(|| {
        let f = &deref(field, "field")?.field;
        let p = NonlinearityParams::new(gamma, f.spec().dim)?;
        let norms = NlsFieldNorms {
            mass: f.mass(),
            kinetic: f.kinetic(),
            critical_power: critical_power(f),
            energy: energy(f, &p)?,
            critical_energy: critical_energy(f),
            correction: correction(f, &p)?,
            functional_k: functional_k(f),
            htilde: htilde_norm(f, k)?,
        };
        write_value(out, norms)
    })
}

/// Free Schroedinger evolution `e^{it Delta} field` as a new handle.
///
/// # Safety
/// `field` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_field_propagate(
    field: *const NlsField,
    t: f64,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let f = deref(field, "field")?;
        put(
            out,
            NlsField {
                field: free_propagator(&f.field, t)?,
            },
        )
    })
}

/// Default settings for `grid` (`dt = 1e-3 (R/N)^2`).
///
/// # Safety
/// `grid` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_evolve_params_default(
    grid: *const NlsGrid,
    gamma: f64,
    t_end: f64,
    out: *mut NlsEvolveParams,
) -> NlsStatus {
    guard(|| {
        let spec = *deref(grid, "grid")?.basis.spec();
        let p = EvolutionParams::defaults(&spec, NonlinearityParams::new(gamma, spec.dim)?, t_end);
        write_value(
            out,
            NlsEvolveParams {
                gamma,
                dt: p.dt,
                t_end: p.t_end,
                stride: p.stride,
                amplitude_cap: p.amplitude_cap,
                kinetic_cap: p.kinetic_cap,
                boundary_limit: p.boundary_limit,
                k: p.k,
                linear: p.linear,
            },
        )
    })
}

/// Runs the split-step integrator from `initial`.
///
/// # Safety
/// `initial` and `params` must be valid and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_evolve(
    initial: *const NlsField,
    params: *const NlsEvolveParams,
    out: *mut *mut NlsTrace,
) -> NlsStatus {
    guard(|| {
        let u0 = &deref(initial, "initial")?.field;
        let c = deref(params, "params")?;
        let params = EvolutionParams {
            dt: c.dt,
            t_end: c.t_end,
            stride: c.stride,
            amplitude_cap: c.amplitude_cap,
            kinetic_cap: c.kinetic_cap,
            boundary_limit: c.boundary_limit,
            k: c.k,
            nonlinearity: NonlinearityParams::new(c.gamma, u0.spec().dim)?,
            linear: c.linear,
        };
        put(
            out,
            NlsTrace {
                trace: evolve(u0, &params)?,
            },
        )
    })
}

/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_free(trace: *mut NlsTrace) {
    free_box(trace)
}

/// Number of snapshots, 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_len(trace: *const NlsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.snapshots.len())
}

/// # Safety
/// `trace` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_halt(trace: *const NlsTrace, out: *mut NlsHalt) -> NlsStatus {
    guard(|| write_value(out, deref(trace, "trace")?.trace.halt().into()))
}

/// # Safety
/// `trace` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_time(
    trace: *const NlsTrace,
    index: usize,
    out: *mut f64,
) -> NlsStatus {
    guard(|| {
        let t = &deref(trace, "trace")?.trace;
        let s = t
            .snapshots
            .get(index)
            .ok_or_else(|| out_of_range(index, t.snapshots.len()))?;
        write_value(out, s.time)
    })
}

fn out_of_range(index: usize, len: usize) -> Fail {
    Fail(
        NlsStatus::IndexOutOfRange,
        format!("snapshot {index} of {len}"),
    )
}

/// Copies snapshot `index` into a new field handle.
///
/// # Safety
/// `trace` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_snapshot(
    trace: *const NlsTrace,
    index: usize,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let t = &deref(trace, "trace")?.trace;
        let s = t
            .snapshots
            .get(index)
            .ok_or_else(|| out_of_range(index, t.snapshots.len()))?;
        put(
            out,
            NlsField {
                field: s.field.clone(),
            },
        )
    })
}

/// Serializes the trace in the text format read by [`nlslab_trace_from_text`].
/// Release the string with [`nlslab_string_free`].
///
/// # Safety
/// `trace` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_to_text(
    trace: *const NlsTrace,
    out: *mut *mut c_char,
) -> NlsStatus {
    guard(|| {
        let text = deref(trace, "trace")?.trace.to_text()?;
        let c = CString::new(text)
            .map_err(|_| Fail(NlsStatus::Trace, "trace text contains NUL".into()))?;
        write_value(out, c.into_raw())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_from_text(
    text: *const c_char,
    out: *mut *mut NlsTrace,
) -> NlsStatus {
    guard(|| {
        let text = c_str(text, "text")?;
        put(
            out,
            NlsTrace {
                trace: Trace::from_text(text)?,
            },
        )
    })
}

/// Cauchy test of the profile `e^{-it Delta} u(t)` in `H~^k`.
///
/// # Safety
/// `trace` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_scattering(
    trace: *const NlsTrace,
    k: f64,
    tol: f64,
    out: *mut NlsScattering,
) -> NlsStatus {
    guard(|| {
        let r = scattering_detector(&deref(trace, "trace")?.trace, k, tol)?;
        write_value(
            out,
            NlsScattering {
                scattered: r.scattered,
                count: r.cauchy_residuals.len(),
                final_residual: r.cauchy_residuals.last().copied().unwrap_or(f64::NAN),
            },
        )
    })
}

/// Residual of the localized virial identity with weight radius `m`, using
/// default threshold constants at `delta`.
///
/// # Safety
/// `trace` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nlslab_trace_virial(
    trace: *const NlsTrace,
    m: f64,
    delta: f64,
    out: *mut NlsVirial,
) -> NlsStatus {
    guard(|| {
        let t = &deref(trace, "trace")?.trace;
        let tc = nlslab::functionals::ThresholdConstants::with_defaults(
            t.spec().dim,
            delta,
            t.params().k,
        )?;
        let r = virial_identity_residual(t, m, &tc)?;
        write_value(
            out,
            NlsVirial {
                max_residual: r.max_residual,
                relative_residual: r.relative_residual,
                rows: r.rows.len(),
            },
        )
    })
}

/// Runs the TOML config at `config_path` like `nlslab simulate` and writes
/// all reports into `out_dir` (null: the config's own output directory).
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` null or one.
#[no_mangle]
pub unsafe extern "C" fn nlslab_simulate_config(
    config_path: *const c_char,
    out_dir: *const c_char,
) -> NlsStatus {
    guard(|| {
        let path = c_str(config_path, "config_path")?;
        let out = if out_dir.is_null() {
            None
        } else {
            Some(Path::new(c_str(out_dir, "out_dir")?))
        };
        let cfg = nlslab::config::parse_config(Path::new(path))?;
        let runner = Runner::new(cfg)?;
        let dir = output_dir(&runner.cfg, out);
        run_simulation(&runner, &dir)?;
        Ok(())
    })
}
