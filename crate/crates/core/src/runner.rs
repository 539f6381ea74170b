//! Run orchestration: initial data, classification, simulation, analyses,
//! persistence, sweeps and the verification suite.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{
    analyze_concentration, lower_bound_k, partition_intervals, tower_search, ConcentrationReport,
};
use crate::config::{DataSpec, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve_with_provenance, scattering_detector, HaltStatus, ScatteringReport, Trace,
};
use crate::functionals::{
    correction, critical_energy, critical_power, energy, fmt17, fractional_sobolev_constant,
    htilde_norm, jensen_chain_check, measure_holder_check, AnnularMeasure, EnergyReport,
};
use crate::grid::{free_propagator, smooth_cutoff, BesselBasis, RadialField};
use crate::ground_state::{default_constants, ground_state_profile, GroundStateConstants};
use crate::threshold::{
    check_initial_assumptions, trapping_monitor, AdmissibilityReport, TrappingReport,
};
use crate::virial::{h_forms, virial_identity_residual, VirialReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable that roots relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "NLSLAB_OUTPUT_ROOT";

/// Samples the configured initial-data family on `basis`.
pub fn make_initial_data(
    data: &DataSpec,
    basis: Arc<BesselBasis>,
    seed: u64,
    k: f64,
) -> Result<RadialField> {
    let r_max = basis.spec().r_max;
    match *data {
        DataSpec::Gaussian { amplitude, width } => RadialField::from_fn(basis, |r| {
            Complex64::new(amplitude * (-(r / width).powi(2)).exp(), 0.0)
        }),
        DataSpec::GroundState {
            amplitude,
            scale,
            phase,
            taper_start,
            taper_end,
        } => {
            let w = ground_state_profile(basis, scale, phase)?;
            Ok(w.map(|r, u| {
                amplitude * smooth_cutoff(r, taper_start * r_max, taper_end * r_max) * u
            }))
        }
        DataSpec::Ring {
            amplitude,
            radius,
            width,
        } => RadialField::from_fn(basis, |r| {
            Complex64::new(amplitude * (-((r - radius) / width).powi(2)).exp(), 0.0)
        }),
        DataSpec::RandomSmooth { target, components } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let terms: Vec<(Complex64, f64, f64)> = (0..components)
                .map(|_| {
                    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (a, rng.gen_range(0.5..3.0), rng.gen_range(-0.5..0.5))
                })
                .collect();
            let f = RadialField::from_fn(basis, |r| {
                terms
                    .iter()
                    .map(|&(a, w, chirp)| {
                        a * Complex64::from_polar((-(r / w).powi(2)).exp(), chirp * r * r)
                    })
                    .sum()
            })?;
            let norm = htilde_norm(&f, k)?;
            if target == 0.0 {
                return Ok(f.scaled(Complex64::new(0.0, 0.0)));
            }
            if norm == 0.0 {
                return Err(Error::InvalidArgument("random field vanished".into()));
            }
            Ok(f.scaled(Complex64::new(target / norm, 0.0)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub htilde: f64,
    pub energy: f64,
    pub critical_energy: f64,
    pub crit_norm: f64,
    pub correction: f64,
}

impl DataSummary {
    pub fn compute(f: &RadialField, cfg: &RunConfig) -> Result<Self> {
        let p = cfg.nonlinearity()?;
        Ok(DataSummary {
            htilde: htilde_norm(f, cfg.evolution.k)?,
            energy: energy(f, &p)?,
            critical_energy: critical_energy(f),
            crit_norm: critical_power(f).powf(1.0 / f.spec().critical_exponent()),
            correction: correction(f, &p)?,
        })
    }
}

/// `# nlslab <version>` followed by the effective config as comments.
pub fn file_header(cfg: &RunConfig) -> String {
    let mut s = format!("# nlslab {VERSION}\n");
    for line in cfg.to_toml().lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

/// `--out`, else the config's directory; relative paths sit under the
/// output-root variable when it is set.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}

fn kv(s: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(s, "{key}={value}");
}

pub fn ground_state_text(c: &GroundStateConstants) -> String {
    let mut s = String::new();
    for (k, v) in c.rows() {
        kv(&mut s, k, fmt17(v));
    }
    s
}

pub fn admissibility_text(r: &AdmissibilityReport, summary: &DataSummary) -> String {
    let mut s = String::new();
    kv(&mut s, "energy", fmt17(r.energy));
    kv(&mut s, "critical_energy", fmt17(r.critical_energy));
    kv(&mut s, "correction", fmt17(summary.correction));
    kv(&mut s, "energy_threshold", fmt17(r.energy_threshold));
    kv(&mut s, "energy_margin", fmt17(r.energy_margin));
    kv(&mut s, "crit_norm", fmt17(r.crit_norm));
    kv(&mut s, "w_crit_norm", fmt17(r.w_crit_norm));
    kv(&mut s, "norm_margin", fmt17(r.norm_margin));
    kv(&mut s, "htilde", fmt17(r.htilde));
    kv(&mut s, "size_margin", fmt17(r.size_margin));
    kv(&mut s, "energy_ok", r.energy_ok);
    kv(&mut s, "norm_ok", r.norm_ok);
    kv(&mut s, "size_ok", r.size_ok);
    kv(&mut s, "admissible", r.admissible);
    kv(&mut s, "small_data_route", r.small_data_route);
    match &r.gamma_smallness {
        Some(g) => {
            kv(
                &mut s,
                "gamma_regime",
                format!("{:?}", g.regime).to_lowercase(),
            );
            kv(
                &mut s,
                "gamma_log10_log10_tower",
                fmt17(g.log10_log10_tower),
            );
            kv(
                &mut s,
                "gamma_log10_lhs_plus_one",
                fmt17(g.log10_lhs_plus_one),
            );
            kv(&mut s, "gamma_smallness_passes", g.passes);
        }
        None => kv(&mut s, "gamma_smallness_passes", "undefined"),
    }
    s
}

pub fn trapping_text(r: &TrappingReport) -> String {
    let mut s = String::new();
    kv(&mut s, "delta", fmt17(r.delta));
    kv(&mut s, "delta_prime", fmt17(r.delta_prime));
    kv(&mut s, "snapshots", r.checks.len());
    kv(&mut s, "violations", r.violations);
    kv(
        &mut s,
        "first_violation",
        r.first_violation.map_or_else(|| "none".into(), fmt17),
    );
    kv(
        &mut s,
        "worst_kinetic_margin",
        fmt17(r.worst_kinetic_margin),
    );
    kv(&mut s, "worst_virial_margin", fmt17(r.worst_virial_margin));
    kv(&mut s, "worst_energy_margin", fmt17(r.worst_energy_margin));
    s
}

pub fn scattering_text(r: &ScatteringReport) -> String {
    let mut s = String::new();
    let join = |v: &[f64]| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(" ");
    kv(&mut s, "times", join(&r.times));
    kv(&mut s, "cauchy_residuals", join(&r.cauchy_residuals));
    kv(&mut s, "scattered", r.scattered);
    s
}

pub fn virial_csv(r: &VirialReport) -> String {
    let mut s = String::from(
        "time,m_a,dm_dt,rhs_exact,residual,main,h_term,x_m,y_m,x_ratio,lower_bound,inequality\n",
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "none".into(), fmt17);
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt17(row.time),
            fmt17(row.m_a),
            opt(row.dm_dt),
            fmt17(row.rhs_exact),
            opt(row.residual),
            fmt17(row.main),
            fmt17(row.h_term),
            fmt17(row.x_m),
            fmt17(row.y_m),
            opt(row.x_ratio),
            fmt17(row.lower_bound),
            row.inequality_holds(1e-8),
        );
    }
    s
}

/// Grid, ground-state constants and initial data for one config.
pub struct Runner {
    pub cfg: RunConfig,
    pub basis: Arc<BesselBasis>,
    pub constants: GroundStateConstants,
}

impl Runner {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let basis = BesselBasis::shared(cfg.grid_spec()?)?;
        let constants = default_constants(cfg.grid.dim)?;
        Ok(Runner {
            cfg,
            basis,
            constants,
        })
    }

    pub fn initial_data(&self) -> Result<RadialField> {
        make_initial_data(
            &self.cfg.data,
            self.basis.clone(),
            self.cfg.seed,
            self.cfg.evolution.k,
        )
    }

    pub fn classify(&self) -> Result<(AdmissibilityReport, DataSummary)> {
        let u0 = self.initial_data()?;
        let report = check_initial_assumptions(
            &u0,
            self.cfg.threshold.delta,
            &self.cfg.nonlinearity()?,
            &self.cfg.threshold_constants()?,
            &self.constants,
        )?;
        Ok((report, DataSummary::compute(&u0, &self.cfg)?))
    }

    pub fn simulate(&self) -> Result<Trace> {
        let u0 = self.initial_data()?;
        let summary = DataSummary::compute(&u0, &self.cfg)?;
        let provenance = serde_json::json!({
            "version": VERSION,
            "config": self.cfg.to_toml(),
            "initial_data": summary,
        });
        evolve_with_provenance(&u0, &self.cfg.evolution_params()?, Some(provenance))
    }

    pub fn trapping(&self, trace: &Trace) -> Result<TrappingReport> {
        trapping_monitor(trace, self.cfg.threshold.delta, &self.constants)
    }

    /// `None` when the trace is too short or halted.
    pub fn scattering(&self, trace: &Trace) -> Option<ScatteringReport> {
        scattering_detector(
            trace,
            self.cfg.evolution.k,
            self.cfg.analysis.scattering_tol,
        )
        .ok()
    }

    pub fn virial(&self, trace: &Trace, m: f64) -> Result<VirialReport> {
        virial_identity_residual(trace, m, &self.cfg.threshold_constants()?)
    }

    pub fn concentration(&self, trace: &Trace) -> Result<ConcentrationReport> {
        analyze_concentration(
            trace,
            self.cfg.threshold.delta,
            &self.cfg.analysis.concentration_params(),
        )
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

fn context(cfg: &RunConfig) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Trace(format!("run `{}` (seed {}): {e}", cfg.output_dir, cfg.seed))
}

/// Classification report file.
pub fn run_classify(runner: &Runner, dir: &Path) -> Result<(PathBuf, AdmissibilityReport)> {
    let (report, summary) = runner.classify()?;
    let body = file_header(&runner.cfg) + &admissibility_text(&report, &summary);
    Ok((write(dir, "classify.txt", &body)?, report))
}

/// classify, evolve, analyze and persist.
pub fn run_simulation(runner: &Runner, dir: &Path) -> Result<Trace> {
    let cfg = &runner.cfg;
    let header = file_header(cfg);
    write(dir, "config.toml", &(header.clone() + &cfg.to_toml()))?;
    run_classify(runner, dir).map_err(context(cfg))?;
    let trace = runner.simulate().map_err(context(cfg))?;
    write(dir, "trace.txt", &trace.to_text()?)?;
    write(dir, "energy.csv", &(header.clone() + &trace.reports_csv()))?;
    let trapping = runner.trapping(&trace)?;
    write(
        dir,
        "trapping.txt",
        &(header.clone() + &trapping_text(&trapping)),
    )?;
    if let Some(sc) = runner.scattering(&trace) {
        write(
            dir,
            "scattering.txt",
            &(header.clone() + &scattering_text(&sc)),
        )?;
    }
    run_analyses(
        runner,
        &trace,
        dir,
        &cfg.analysis.virial_m,
        cfg.analysis.concentration,
    )?;
    Ok(trace)
}

/// Virial tables and the concentration report for a finished trace.
pub fn run_analyses(
    runner: &Runner,
    trace: &Trace,
    dir: &Path,
    virial_m: &[f64],
    concentration: bool,
) -> Result<Vec<PathBuf>> {
    let header = file_header(&runner.cfg);
    let mut written = Vec::new();
    for &m in virial_m {
        let rep = runner.virial(trace, m).map_err(context(&runner.cfg))?;
        written.push(write(
            dir,
            &format!("virial_m{m}.csv"),
            &(header.clone() + &virial_csv(&rep)),
        )?);
    }
    if concentration {
        let rep = runner.concentration(trace).map_err(context(&runner.cfg))?;
        written.push(write(
            dir,
            "concentration.txt",
            &(header.clone() + &rep.to_text()),
        )?);
        written.push(write(
            dir,
            "concentration.csv",
            &(header.clone() + &rep.intervals_csv()),
        )?);
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub gamma: f64,
    pub amplitude: f64,
    pub halt: HaltStatus,
    pub halt_time: f64,
    pub admissible: bool,
    pub energy_drift: f64,
    pub mass_drift: f64,
}

fn with_amplitude(data: &DataSpec, a: f64) -> DataSpec {
    let mut d = data.clone();
    match &mut d {
        DataSpec::Gaussian { amplitude, .. }
        | DataSpec::GroundState { amplitude, .. }
        | DataSpec::Ring { amplitude, .. } => *amplitude = a,
        DataSpec::RandomSmooth { target, .. } => *target = a,
    }
    d
}

fn drift(first: &EnergyReport, last: &EnergyReport, f: fn(&EnergyReport) -> f64) -> f64 {
    let base = f(first).abs();
    if base == 0.0 {
        return 0.0;
    }
    (f(last) - f(first)).abs() / base
}

/// Runs the template over `gammas x amplitudes` concurrently, one
/// subdirectory per run, and writes `index.csv` in grid order.
pub fn sweep(
    template: &RunConfig,
    gammas: &[f64],
    amplitudes: &[f64],
    dir: &Path,
) -> Result<Vec<SweepRow>> {
    let grid: Vec<(f64, f64)> = gammas
        .iter()
        .flat_map(|&g| amplitudes.iter().map(move |&a| (g, a)))
        .collect();
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(index, &(gamma, amplitude))| {
            let mut cfg = template.clone();
            cfg.nonlinearity.gamma = gamma;
            cfg.data = with_amplitude(&template.data, amplitude);
            cfg.output_dir = format!("run_{index:03}");
            let runner = Runner::new(cfg)?;
            let sub = dir.join(format!("run_{index:03}"));
            let (_, adm) = run_classify(&runner, &sub)?;
            let trace = run_simulation(&runner, &sub)?;
            let (first, last) = (&trace.reports[0], trace.reports.last().expect("reports"));
            Ok(SweepRow {
                index,
                gamma,
                amplitude,
                halt: trace.halt(),
                halt_time: trace.header.halt_time,
                admissible: adm.admissible,
                energy_drift: drift(first, last, |r| r.energy),
                mass_drift: drift(first, last, |r| r.mass),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = file_header(template)
        + "index,gamma,amplitude,halt,halt_time,admissible,energy_drift,mass_drift\n";
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.index,
            fmt17(r.gamma),
            fmt17(r.amplitude),
            r.halt.as_str(),
            fmt17(r.halt_time),
            r.admissible,
            fmt17(r.energy_drift),
            fmt17(r.mass_drift)
        );
    }
    write(dir, "index.csv", &s)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check {
            name,
            passed,
            detail,
        }
    }
}

/// Invariant suite at the config's grid; every check reports its measured value.
pub fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let runner = Runner::new(cfg.clone())?;
    let b = runner.basis.clone();
    let p = cfg.nonlinearity()?;
    let tc = cfg.threshold_constants()?;
    let gs = &runner.constants;
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field = {
        let (a, w) = (rng.gen_range(0.2..1.0), rng.gen_range(0.5..2.0));
        RadialField::from_fn(b.clone(), |r| {
            Complex64::from_polar(a * (-(r / w).powi(2)).exp(), 0.3 * r)
        })?
    };
    let back = field.to_spectral().to_physical();
    let rt = back.sub(&field)?.mass().sqrt() / field.mass().sqrt();
    checks.push(Check::new(
        "transform round trip",
        rt < 1e-10,
        format!("relative error {rt:e}"),
    ));
    let parseval = (field.to_spectral().seminorm_sq(0.0) - field.mass()).abs() / field.mass();
    checks.push(Check::new(
        "parseval",
        parseval < 1e-10,
        format!("relative error {parseval:e}"),
    ));
    let mut iso: f64 = 0.0;
    let moved = free_propagator(&field, 1.0)?;
    for s in [0.0, 1.0, cfg.evolution.k] {
        iso = iso.max((moved.seminorm(s) - field.seminorm(s)).abs() / field.seminorm(s));
    }
    checks.push(Check::new(
        "propagator isometry",
        iso < 1e-10,
        format!("drift {iso:e} over unit time"),
    ));

    let mut h_gap: f64 = 0.0;
    for i in 0..=30 {
        let y = 1e3 * (i as f64 / 30.0).powi(3);
        let (a, c) = h_forms(y, &p)?;
        if a != 0.0 {
            h_gap = h_gap.max(((a - c) / a).abs());
        }
    }
    checks.push(Check::new(
        "H forms agree",
        h_gap < 1e-9,
        format!("max relative gap {h_gap:e}"),
    ));

    let poh = ((gs.grad_sq - gs.crit_pow) / gs.grad_sq).abs();
    checks.push(Check::new(
        "pohozaev",
        poh < 1e-8,
        format!("relative gap {poh:e}"),
    ));
    let sob = (fractional_sobolev_constant(cfg.grid.dim, 1.0) / gs.sobolev - 1.0).abs();
    checks.push(Check::new(
        "sharp sobolev constant",
        sob < 1e-8,
        format!("relative gap {sob:e}"),
    ));

    let u0 = runner.initial_data()?;
    for (label, f) in [("initial data", &u0), ("random field", &field)] {
        let x = correction(f, &p)?;
        let chain = jensen_chain_check(f, &p, &tc)?;
        let holder = measure_holder_check(f, &AnnularMeasure { m: 1.0, levels: 4 }, &tc)?;
        let e = energy(f, &p)?;
        let ec = critical_energy(f);
        let gap = (e + x - ec).abs() / ec.abs().max(f.kinetic());
        checks.push(Check::new(
            "energy split",
            gap < 1e-10,
            format!("{label}: X = {x:e}, gap {gap:e}"),
        ));
        checks.push(Check::new(
            "jensen chain",
            chain.holds(1e-9),
            format!("{label}: lines {:?}", chain.lines),
        ));
        checks.push(Check::new(
            "measure holder",
            holder.holds(1e-9),
            format!("{label}: {:e} <= {:e}", holder.lhs, holder.rhs),
        ));
    }

    let mut short = cfg.clone();
    short.evolution.t_end = cfg
        .evolution
        .t_end
        .min(20.0 * cfg.evolution.dt.expect("resolved") * 10.0);
    short.evolution.stride = 10;
    let short_runner = Runner {
        cfg: short,
        basis: b.clone(),
        constants: *gs,
    };
    let t1 = short_runner.simulate()?;
    let t2 = short_runner.simulate()?;
    checks.push(Check::new(
        "deterministic trace",
        t1.to_text()? == t2.to_text()?,
        format!("{} snapshots", t1.snapshots.len()),
    ));
    let (first, last) = (&t1.reports[0], t1.reports.last().expect("reports"));
    let md = drift(first, last, |r| r.mass);
    checks.push(Check::new(
        "mass conservation",
        md < 1e-8,
        format!("relative drift {md:e}"),
    ));
    if t1.snapshots.len() >= 2 {
        let part = partition_intervals(&t1, cfg.analysis.eta1)?;
        let sum: f64 = part.masses.iter().sum();
        let gap = if part.total > 0.0 {
            ((sum - part.total) / part.total).abs()
        } else {
            sum.abs()
        };
        checks.push(Check::new(
            "partition masses sum",
            gap < 1e-10,
            format!("relative gap {gap:e}"),
        ));
    }

    let mut uncertified = 0;
    for _ in 0..20 {
        let l = rng.gen_range(1..=12);
        let mut t = 0.0;
        let intervals: Vec<(f64, f64)> = (0..l)
            .map(|_| {
                let len = 2f64.powf(rng.gen_range(-4.0..4.0));
                t += len;
                (t - len, t)
            })
            .collect();
        let eta = rng.gen_range(0.05..1.0);
        if tower_search(&intervals, eta)?.certified != Some(true) {
            uncertified += 1;
        }
    }
    checks.push(Check::new(
        "tower search certified",
        uncertified == 0,
        format!("{uncertified} of 20 disagree"),
    ));
    let hand = lower_bound_k(16, 0.5);
    checks.push(Check::new(
        "tower bound hand value",
        (hand - 0.5).abs() < 1e-15,
        format!("{hand}"),
    ));
    Ok(checks)
}

pub fn checks_text(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    s
}
