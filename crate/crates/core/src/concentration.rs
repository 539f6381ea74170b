//! Interval combinatorics on traces: the eta_1 partition by spacetime mass,
//! exceptional intervals, mass concentration at the origin, the large-interval
//! ratio, the tower search and the count report.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trace;
use crate::functionals::fmt17;
use crate::grid::{FineQuadrature, RadialField};

pub const DEFAULT_ETA1: f64 = 0.1;
pub const DEFAULT_C_TILDE_1: f64 = 10.0;
pub const DEFAULT_C_PRIME: f64 = 0.5;
pub const DEFAULT_BIG_C_PRIME: f64 = 4.0;
pub const DEFAULT_COUNT_CONSTANT: f64 = 10.0;

/// Tolerance on each interval mass, relative to eta_1. Boundaries are
/// bisected to half of it since every interval has two.
pub const BISECTION_TOLERANCE: f64 = 1e-3;

// slack for closed-window membership tests at computed window endpoints
const WINDOW_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationParams {
    pub eta1: f64,
    /// `eta_2 = eta_1^{c_tilde_1}`.
    pub c_tilde_1: f64,
    pub c_prime: f64,
    pub big_c_prime: f64,
    /// Tower parameter; `c_prime^{delta^{-1/2}}` when absent.
    #[serde(default)]
    pub tower_eta: Option<f64>,
    pub c0: f64,
    pub c1: f64,
}

impl Default for ConcentrationParams {
    fn default() -> Self {
        ConcentrationParams {
            eta1: DEFAULT_ETA1,
            c_tilde_1: DEFAULT_C_TILDE_1,
            c_prime: DEFAULT_C_PRIME,
            big_c_prime: DEFAULT_BIG_C_PRIME,
            tower_eta: None,
            c0: DEFAULT_COUNT_CONSTANT,
            c1: DEFAULT_COUNT_CONSTANT,
        }
    }
}

impl ConcentrationParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta1", self.eta1),
            ("c_tilde_1", self.c_tilde_1),
            ("c_prime", self.c_prime),
            ("big_c_prime", self.big_c_prime),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if let Some(eta) = self.tower_eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "tower eta {eta} not in (0, 1]"
                )));
            }
        }
        if !(self.c0 > 1.0 && self.c1 > 1.0) {
            return Err(Error::InvalidArgument(
                "count constants must exceed 1".into(),
            ));
        }
        Ok(())
    }

    pub fn eta2(&self) -> f64 {
        self.eta1.powf(self.c_tilde_1)
    }

    pub fn tower_eta(&self, delta: f64) -> f64 {
        self.tower_eta
            .unwrap_or_else(|| self.c_prime.powf(delta.powf(-0.5)))
    }
}

fn spacetime_exponent(dim: u32) -> f64 {
    let n = dim as f64;
    2.0 * (n + 2.0) / (n - 2.0)
}

fn q_power(f: &RadialField, q: f64) -> f64 {
    f.integrate(|_, u| u.norm().powf(q))
}

/// Cumulative `int_{t_0}^t ||u||_q^q` with `||u||_q^q` linear between snapshots.
#[derive(Clone, Debug)]
struct Cumulative {
    times: Vec<f64>,
    density: Vec<f64>,
    partial: Vec<f64>,
}

impl Cumulative {
    fn new(times: Vec<f64>, density: Vec<f64>) -> Self {
        let mut partial = vec![0.0; times.len()];
        for i in 1..times.len() {
            partial[i] =
                partial[i - 1] + 0.5 * (times[i] - times[i - 1]) * (density[i] + density[i - 1]);
        }
        Cumulative {
            times,
            density,
            partial,
        }
    }

    fn total(&self) -> f64 {
        *self.partial.last().unwrap()
    }

    fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return 0.0;
        }
        if t >= self.times[n - 1] {
            return self.total();
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let h = self.times[i + 1] - self.times[i];
        let s = t - self.times[i];
        self.partial[i]
            + s * self.density[i]
            + 0.5 * s * s * (self.density[i + 1] - self.density[i]) / h
    }

    fn invert(&self, target: f64, tol: f64) -> f64 {
        let (mut lo, mut hi) = (self.times[0], *self.times.last().unwrap());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.at(mid);
            if (v - target).abs() <= tol {
                return mid;
            }
            if v < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    pub eta1: f64,
    /// `t_1 < ... < t_{L+1}`.
    pub boundaries: Vec<f64>,
    /// Spacetime mass `||u||_{L^q L^q(J_l)}^q` per interval.
    pub masses: Vec<f64>,
    pub total: f64,
    /// Set when the whole trace carries less than eta_1.
    pub below_eta1: bool,
}

impl IntervalPartition {
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn interval(&self, l: usize) -> (f64, f64) {
        (self.boundaries[l], self.boundaries[l + 1])
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Splits the trace span into intervals carrying spacetime mass eta_1 each,
/// the last carrying the remainder.
pub fn partition_intervals(trace: &Trace, eta1: f64) -> Result<IntervalPartition> {
    if !(eta1 > 0.0 && eta1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eta1 = {eta1} must be positive"
        )));
    }
    if trace.snapshots.len() < 2 {
        return Err(Error::Trace(format!(
            "{} snapshots, need at least 2",
            trace.snapshots.len()
        )));
    }
    let q = spacetime_exponent(trace.spec().dim);
    let density = trace
        .snapshots
        .iter()
        .map(|s| q_power(&s.field, q))
        .collect();
    let cum = Cumulative::new(trace.times(), density);
    let total = cum.total();
    let tol = BISECTION_TOLERANCE * eta1;
    let mut boundaries = vec![cum.times[0]];
    let mut k = 1;
    while (k as f64) * eta1 < total - tol {
        boundaries.push(cum.invert(k as f64 * eta1, 0.5 * tol));
        k += 1;
    }
    boundaries.push(*cum.times.last().unwrap());
    let at: Vec<f64> = boundaries.iter().map(|&t| cum.at(t)).collect();
    let masses = at.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(IntervalPartition {
        eta1,
        boundaries,
        masses,
        total,
        below_eta1: total < eta1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub eta2: f64,
    /// Spacetime mass on each `J_l` of the free evolution of `u(t_1)`.
    pub free_mass_start: Vec<f64>,
    /// Same for `u(t_2)`.
    pub free_mass_end: Vec<f64>,
    pub flags: Vec<bool>,
    pub count: usize,
    /// `1 / eta_2`, the shape of the count bound.
    pub count_bound_shape: f64,
}

// time nodes of J_l: its endpoints and the snapshot times strictly inside
fn interval_nodes(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut nodes = vec![a];
    nodes.extend(times.iter().copied().filter(|&t| t > a && t < b));
    nodes.push(b);
    nodes
}

/// Flags `J_l` when the free evolutions of the two trace endpoints together
/// carry spacetime mass at least `eta2` on it.
pub fn classify_exceptional(
    trace: &Trace,
    partition: &IntervalPartition,
    eta2: f64,
) -> Result<ExceptionalReport> {
    if !(eta2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta2 = {eta2} must be positive"
        )));
    }
    if trace.snapshots.len() < 2 {
        return Err(Error::Trace(
            "exceptional classification needs both endpoint snapshots".into(),
        ));
    }
    let q = spacetime_exponent(trace.spec().dim);
    let times = trace.times();
    let ends = [&trace.snapshots[0], trace.last()];
    let spectral: Vec<_> = ends.iter().map(|s| s.field.to_spectral()).collect();
    let free_mass = |which: usize, a: f64, b: f64| -> f64 {
        let t0 = ends[which].time;
        let nodes = interval_nodes(&times, a, b);
        let vals: Vec<f64> = nodes
            .iter()
            .map(|&t| {
                let tau = t - t0;
                q_power(
                    &spectral[which]
                        .multiply(|l| Complex64::from_polar(1.0, -tau * l))
                        .to_physical(),
                    q,
                )
            })
            .collect();
        nodes
            .windows(2)
            .zip(vals.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    };
    let mut report = ExceptionalReport {
        eta2,
        free_mass_start: Vec::with_capacity(partition.len()),
        free_mass_end: Vec::with_capacity(partition.len()),
        flags: Vec::with_capacity(partition.len()),
        count: 0,
        count_bound_shape: 1.0 / eta2,
    };
    for l in 0..partition.len() {
        let (a, b) = partition.interval(l);
        let s = free_mass(0, a, b);
        let e = free_mass(1, a, b);
        let flag = s + e >= eta2;
        report.free_mass_start.push(s);
        report.free_mass_end.push(e);
        report.flags.push(flag);
        report.count += flag as usize;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRecord {
    pub interval: usize,
    pub length: f64,
    /// `C' |J_l|^{1/2}`.
    pub radius: f64,
    /// False when the ball does not fit in the grid.
    pub verifiable: bool,
    pub snapshots: usize,
    /// `min_t Mass(u(t), B(0, radius)) / |J_l|^{1/2}` over snapshots in `J_l`.
    pub min_ratio: Option<f64>,
    pub passes: Option<bool>,
    /// `max |d_t Mass| radius / sup ||grad u||` over consecutive snapshots.
    pub lipschitz_ratio: Option<f64>,
}

/// Origin mass concentration on every unexceptional interval.
pub fn mass_concentration_check(
    trace: &Trace,
    partition: &IntervalPartition,
    flags: &[bool],
    c_prime: f64,
    big_c_prime: f64,
) -> Result<Vec<MassRecord>> {
    if flags.len() != partition.len() {
        return Err(Error::InvalidArgument(format!(
            "{} flags for {} intervals",
            flags.len(),
            partition.len()
        )));
    }
    let r_max = trace.spec().r_max;
    let grad: Vec<f64> = trace.reports.iter().map(|r| r.kinetic.sqrt()).collect();
    let mut records = Vec::new();
    for l in (0..partition.len()).filter(|&l| !flags[l]) {
        let (a, b) = partition.interval(l);
        let length = b - a;
        let radius = big_c_prime * length.sqrt();
        let inside: Vec<usize> = (0..trace.snapshots.len())
            .filter(|&i| (a..=b).contains(&trace.snapshots[i].time))
            .collect();
        let mut rec = MassRecord {
            interval: l,
            length,
            radius,
            verifiable: radius <= r_max,
            snapshots: inside.len(),
            min_ratio: None,
            passes: None,
            lipschitz_ratio: None,
        };
        if rec.verifiable && !inside.is_empty() && length > 0.0 {
            let rule = FineQuadrature::new(trace.snapshots[0].field.basis().clone(), 0.0, radius)?;
            let masses = inside
                .iter()
                .map(|&i| {
                    rule.integrate(&trace.snapshots[i].field, |_, u, _| u.norm_sqr())
                        .map(f64::sqrt)
                })
                .collect::<Result<Vec<_>>>()?;
            let min = masses.iter().copied().fold(f64::INFINITY, f64::min) / length.sqrt();
            rec.min_ratio = Some(min);
            rec.passes = Some(min >= c_prime);
            let mut worst: Option<f64> = None;
            for (j, w) in inside.windows(2).enumerate() {
                let sup = grad[..=w[1]].iter().copied().fold(0.0, f64::max);
                let dt = trace.snapshots[w[1]].time - trace.snapshots[w[0]].time;
                if sup > 0.0 && dt > 0.0 {
                    let v = (masses[j + 1] - masses[j]).abs() / dt * radius / sup;
                    worst = Some(worst.map_or(v, |x: f64| x.max(v)));
                }
            }
            rec.lipschitz_ratio = worst;
        }
        records.push(rec);
    }
    Ok(records)
}

/// Maximal runs `[start, end)` of consecutive unexceptional intervals.
pub fn unexceptional_runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (l, &f) in flags.iter().enumerate() {
        match (f, start) {
            (false, None) => start = Some(l),
            (true, Some(s)) => {
                runs.push((s, l));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, flags.len()));
    }
    runs
}

/// `max_l |J_l| / |J~|` over the run `[start, end)`.
pub fn largest_interval_ratio(
    partition: &IntervalPartition,
    start: usize,
    end: usize,
) -> Result<f64> {
    if start >= end || end > partition.len() {
        return Err(Error::InvalidArgument(format!(
            "empty or out-of-range run [{start}, {end})"
        )));
    }
    let lengths = partition.lengths();
    let span = partition.boundaries[end] - partition.boundaries[start];
    if span == 0.0 {
        return Ok(1.0);
    }
    Ok(lengths[start..end].iter().copied().fold(0.0, f64::max) / span)
}

/// `-log(L) / (2 log(eta/8))`, zero for `L <= 1`.
pub fn lower_bound_k(count: usize, eta: f64) -> f64 {
    if count <= 1 {
        return 0.0;
    }
    -(count as f64).ln() / (2.0 * (eta / 8.0).ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerReport {
    pub eta: f64,
    pub anchor: Option<f64>,
    /// Selected intervals, longest first.
    pub indices: Vec<usize>,
    pub k: usize,
    pub bound: f64,
    /// Smallest integer meeting the bound.
    pub required_k: usize,
    pub size_ok: bool,
    pub distance_ok: bool,
    pub meets_bound: bool,
    /// Agreement of `k` with exhaustive enumeration, run when `L <= 12`.
    pub certified: Option<bool>,
}

pub(crate) fn within_window(t: f64, (a, b): (f64, f64), eta: f64) -> bool {
    let d = (a - t).max(t - b).max(0.0);
    let reach = (b - a) / eta;
    d <= reach + WINDOW_SLACK * (reach + t.abs().max(b.abs()))
}

fn halving(lengths: &[f64]) -> bool {
    lengths.windows(2).all(|w| w[0] >= 2.0 * w[1])
}

/// Longest halving chain among intervals whose distance window contains the
/// anchor. Greedy by length is optimal: the longest eligible interval can
/// replace the head of any chain, and the rest follows by induction.
fn greedy_chain(intervals: &[(f64, f64)], eta: f64, anchor: f64) -> Vec<usize> {
    let mut eligible: Vec<usize> = (0..intervals.len())
        .filter(|&i| within_window(anchor, intervals[i], eta))
        .collect();
    let len = |i: usize| intervals[i].1 - intervals[i].0;
    eligible.sort_by(|&i, &j| len(j).total_cmp(&len(i)).then(i.cmp(&j)));
    let mut chain: Vec<usize> = Vec::new();
    for i in eligible {
        if len(i) <= 0.0 {
            continue;
        }
        match chain.last() {
            Some(&last) if len(last) < 2.0 * len(i) => {}
            _ => chain.push(i),
        }
    }
    chain
}

/// Largest towers can only be certified by enumeration up to this many intervals.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Maximum K over all subsets by enumeration: a subset is a tower when its
/// lengths halve and the distance windows of its members intersect.
pub fn tower_exhaustive(intervals: &[(f64, f64)], eta: f64) -> Result<usize> {
    if intervals.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "{} intervals exceed {EXHAUSTIVE_LIMIT}",
            intervals.len()
        )));
    }
    let mut best = 0;
    for mask in 1u32..(1 << intervals.len()) {
        let members: Vec<(f64, f64)> = (0..intervals.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| intervals[i])
            .collect();
        if members.len() <= best {
            continue;
        }
        let mut lengths: Vec<f64> = members.iter().map(|(a, b)| b - a).collect();
        lengths.sort_by(|x, y| y.total_cmp(x));
        if lengths.last().is_some_and(|&l| l <= 0.0) || !halving(&lengths) {
            continue;
        }
        let left = members
            .iter()
            .map(|&(a, b)| a - (b - a) / eta)
            .fold(f64::NEG_INFINITY, f64::max);
        if members.iter().all(|&iv| within_window(left, iv, eta)) {
            best = members.len();
        }
    }
    Ok(best)
}

/// Maximum-K tower over `intervals` with anchors at every window endpoint
/// and interval endpoint.
pub fn tower_search(intervals: &[(f64, f64)], eta: f64) -> Result<TowerReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tower eta {eta} not in (0, 1]"
        )));
    }
    let mut candidates = Vec::with_capacity(4 * intervals.len());
    for &(a, b) in intervals {
        let reach = (b - a) / eta;
        candidates.extend([a - reach, a, b, b + reach]);
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: (Option<f64>, Vec<usize>) = (None, Vec::new());
    for &t in &candidates {
        let chain = greedy_chain(intervals, eta, t);
        if chain.len() > best.1.len() {
            best = (Some(t), chain);
        }
    }
    let (anchor, indices) = best;
    let lengths: Vec<f64> = indices
        .iter()
        .map(|&i| intervals[i].1 - intervals[i].0)
        .collect();
    let bound = lower_bound_k(intervals.len(), eta);
    let k = indices.len();
    Ok(TowerReport {
        eta,
        anchor,
        size_ok: halving(&lengths),
        distance_ok: anchor
            .is_none_or(|t| indices.iter().all(|&i| within_window(t, intervals[i], eta))),
        indices,
        k,
        bound,
        required_k: bound.ceil() as usize,
        meets_bound: k as f64 >= bound,
        certified: if intervals.len() <= EXHAUSTIVE_LIMIT {
            Some(tower_exhaustive(intervals, eta)? == k)
        } else {
            None
        },
    })
}

/// Tower search on the run `[start, end)` of a partition; indices are global.
pub fn bourgain_tower_search(
    partition: &IntervalPartition,
    start: usize,
    end: usize,
    eta: f64,
) -> Result<TowerReport> {
    if start > end || end > partition.len() {
        return Err(Error::InvalidArgument(format!(
            "run [{start}, {end}) out of range"
        )));
    }
    let intervals: Vec<(f64, f64)> = (start..end).map(|l| partition.interval(l)).collect();
    let mut report = tower_search(&intervals, eta)?;
    for i in &mut report.indices {
        *i += start;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub start: usize,
    pub end: usize,
    pub largest_ratio: f64,
    /// `log10 (c')^{delta^{-1/2}}`.
    pub log10_ratio_threshold: f64,
    pub ratio_ok: bool,
    pub tower: TowerReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountBoundReport {
    pub intervals: usize,
    pub exceptional: usize,
    pub runs: usize,
    pub largest_run: usize,
    pub log10_eta2_inverse: f64,
    /// `log10 log10 C0^{C0^{delta^{-1/2}}}`.
    pub log10_log10_c0_bound: f64,
    /// `log10 log10 C1^{C1^{delta^{-1/2}}}`.
    pub log10_log10_c1_bound: f64,
}

fn log_log_tower(c: f64, delta: f64) -> f64 {
    delta.powf(-0.5) * c.log10() + c.log10().log10()
}

/// Counts against the doubly exponential bounds, in log-log form.
pub fn count_bound_report(
    trace: &Trace,
    delta: f64,
    partition: &IntervalPartition,
    exceptional: &ExceptionalReport,
    params: &ConcentrationParams,
) -> CountBoundReport {
    let runs = unexceptional_runs(&exceptional.flags);
    let empty = trace.snapshots.len() < 2;
    CountBoundReport {
        intervals: if empty { 0 } else { partition.len() },
        exceptional: if empty { 0 } else { exceptional.count },
        runs: if empty { 0 } else { runs.len() },
        largest_run: if empty {
            0
        } else {
            runs.iter().map(|(s, e)| e - s).max().unwrap_or(0)
        },
        log10_eta2_inverse: -exceptional.eta2.log10(),
        log10_log10_c0_bound: log_log_tower(params.c0, delta),
        log10_log10_c1_bound: log_log_tower(params.c1, delta),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub delta: f64,
    pub params: ConcentrationParams,
    pub partition: IntervalPartition,
    pub exceptional: ExceptionalReport,
    pub mass: Vec<MassRecord>,
    pub runs: Vec<RunReport>,
    pub counts: CountBoundReport,
}

/// Partition, classification, concentration, runs with towers, and counts.
pub fn analyze_concentration(
    trace: &Trace,
    delta: f64,
    params: &ConcentrationParams,
) -> Result<ConcentrationReport> {
    params.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} not in (0, 1)"
        )));
    }
    let partition = partition_intervals(trace, params.eta1)?;
    let exceptional = classify_exceptional(trace, &partition, params.eta2())?;
    let mass = mass_concentration_check(
        trace,
        &partition,
        &exceptional.flags,
        params.c_prime,
        params.big_c_prime,
    )?;
    let eta = params.tower_eta(delta);
    let log10_ratio_threshold = delta.powf(-0.5) * params.c_prime.log10();
    let runs = unexceptional_runs(&exceptional.flags)
        .into_iter()
        .map(|(s, e)| {
            let largest_ratio = largest_interval_ratio(&partition, s, e)?;
            Ok(RunReport {
                start: s,
                end: e,
                largest_ratio,
                log10_ratio_threshold,
                ratio_ok: largest_ratio.log10() >= log10_ratio_threshold,
                tower: bourgain_tower_search(&partition, s, e, eta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let counts = count_bound_report(trace, delta, &partition, &exceptional, params);
    Ok(ConcentrationReport {
        delta,
        params: *params,
        partition,
        exceptional,
        mass,
        runs,
        counts,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), fmt17)
}

impl ConcentrationReport {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.counts;
        let _ = writeln!(s, "delta={}", fmt17(self.delta));
        let _ = writeln!(s, "eta1={}", fmt17(self.params.eta1));
        let _ = writeln!(s, "eta2={}", fmt17(self.exceptional.eta2));
        let _ = writeln!(s, "total_spacetime_mass={}", fmt17(self.partition.total));
        let _ = writeln!(s, "below_eta1={}", self.partition.below_eta1);
        let _ = writeln!(s, "intervals={}", c.intervals);
        let _ = writeln!(s, "exceptional={}", c.exceptional);
        let _ = writeln!(s, "runs={}", c.runs);
        let _ = writeln!(s, "largest_run={}", c.largest_run);
        let _ = writeln!(s, "log10_eta2_inverse={}", fmt17(c.log10_eta2_inverse));
        let _ = writeln!(s, "log10_log10_c0_bound={}", fmt17(c.log10_log10_c0_bound));
        let _ = writeln!(s, "log10_log10_c1_bound={}", fmt17(c.log10_log10_c1_bound));
        for (i, r) in self.runs.iter().enumerate() {
            let t = &r.tower;
            let _ = writeln!(s, "run.{i}.intervals={}..{}", r.start, r.end);
            let _ = writeln!(s, "run.{i}.largest_ratio={}", fmt17(r.largest_ratio));
            let _ = writeln!(
                s,
                "run.{i}.log10_ratio_threshold={}",
                fmt17(r.log10_ratio_threshold)
            );
            let _ = writeln!(s, "run.{i}.ratio_ok={}", r.ratio_ok);
            let _ = writeln!(s, "run.{i}.tower_eta={}", fmt17(t.eta));
            let _ = writeln!(s, "run.{i}.tower_anchor={}", opt(t.anchor));
            let idx: Vec<String> = t.indices.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "run.{i}.tower_indices={}", idx.join(" "));
            let _ = writeln!(s, "run.{i}.tower_k={}", t.k);
            let _ = writeln!(s, "run.{i}.tower_bound={}", fmt17(t.bound));
            let _ = writeln!(
                s,
                "run.{i}.tower_ok={}",
                t.size_ok && t.distance_ok && t.meets_bound
            );
            let cert = t.certified.map_or_else(|| "none".into(), |c| c.to_string());
            let _ = writeln!(s, "run.{i}.tower_certified={cert}");
        }
        s
    }

    /// One comma-separated row per interval.
    pub fn intervals_csv(&self) -> String {
        let mut s = String::from(
            "interval,start,end,mass,free_mass_start,free_mass_end,exceptional,radius,verifiable,min_ratio,passes,lipschitz_ratio\n",
        );
        let p = &self.partition;
        for l in 0..p.len() {
            let (a, b) = p.interval(l);
            let e = &self.exceptional;
            let rec = self.mass.iter().find(|r| r.interval == l);
            let _ = writeln!(
                s,
                "{l},{},{},{},{},{},{},{},{},{},{},{}",
                fmt17(a),
                fmt17(b),
                fmt17(p.masses[l]),
                fmt17(e.free_mass_start[l]),
                fmt17(e.free_mass_end[l]),
                e.flags[l],
                rec.map_or_else(|| "none".into(), |r| fmt17(r.radius)),
                rec.map_or_else(|| "none".into(), |r| r.verifiable.to_string()),
                opt(rec.and_then(|r| r.min_ratio)),
                rec.and_then(|r| r.passes)
                    .map_or_else(|| "none".into(), |v| v.to_string()),
                opt(rec.and_then(|r| r.lipschitz_ratio)),
            );
        }
        s
    }
}
