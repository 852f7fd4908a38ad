//! Closed-orbit detection on a section plane, period refinement by
//! shooting, rotation numbers, symmetry of orbit pairs, empirical stability
//! probes and sign-pattern classification of spectra.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix3::{solve_linear, sort_descending, StateVec3};
use crate::vectorfields::{flow_with_propagator, integrate, relax, state_stepper, SystemSpec, Tolerance, Trajectory};

/// Oriented plane `{s : normal · (s − point) = 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Section {
    pub point: StateVec3,
    pub normal: StateVec3,
}

/// Orientation of a section crossing relative to the normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

impl Section {
    pub fn new(point: StateVec3, normal: StateVec3) -> Result<Self> {
        let normal = normal.normalized().ok_or(Error::Domain("section normal must be nonzero"))?;
        Ok(Section { point, normal })
    }

    pub fn signed(&self, s: &StateVec3) -> f64 {
        self.normal.dot(&(*s - self.point))
    }

    /// Same normal, shifted to pass through `point`.
    pub fn through(&self, point: StateVec3) -> Section {
        Section { point, normal: self.normal }
    }

    fn is_crossing(&self, g0: f64, g1: f64, dir: Direction) -> bool {
        match dir {
            Direction::Up => g0 < 0.0 && g1 >= 0.0,
            Direction::Down => g0 >= 0.0 && g1 < 0.0,
        }
    }

    // Illinois iteration on the dense output within [t0, t1]
    fn locate(&self, traj: &Trajectory, mut t0: f64, mut t1: f64) -> (f64, StateVec3) {
        let g = |t: f64| self.signed(&traj.at(t).unwrap_or_else(|| traj.last()));
        let (mut g0, mut g1) = (g(t0), g(t1));
        let mut side = 0i8;
        for _ in 0..80 {
            if g1 == g0 {
                break;
            }
            let t = (t0 * g1 - t1 * g0) / (g1 - g0);
            let gt = g(t);
            if (gt < 0.0) == (g0 < 0.0) {
                t0 = t;
                g0 = gt;
                if side == -1 {
                    g1 *= 0.5;
                }
                side = -1;
            } else {
                t1 = t;
                g1 = gt;
                if side == 1 {
                    g0 *= 0.5;
                }
                side = 1;
            }
            if (t1 - t0).abs() <= 4.0 * f64::EPSILON * t1.abs().max(1.0) || gt == 0.0 {
                break;
            }
        }
        let t = if g0.abs() < g1.abs() { t0 } else { t1 };
        (t, traj.at(t).unwrap_or_else(|| traj.last()))
    }

    /// Crossings of the trajectory in one orientation, located on the dense
    /// output between accepted steps.
    pub fn crossings(&self, traj: &Trajectory, dir: Direction) -> Vec<(f64, StateVec3)> {
        let times = traj.times();
        let states = traj.states();
        let mut out = Vec::new();
        let mut g_prev = self.signed(&states[0]);
        for i in 1..states.len() {
            let g = self.signed(&states[i]);
            if self.is_crossing(g_prev, g, dir) {
                out.push(self.locate(traj, times[i - 1], times[i]));
            }
            g_prev = g;
        }
        out
    }
}

/// Whether a cycle passed shooting refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CyclePrecision {
    Refined,
    LowPrecision,
}

/// A closed orbit sampled over one period from its anchor.
#[derive(Clone, Debug)]
pub struct LimitCycle {
    pub period: f64,
    pub anchor: StateVec3,
    pub samples: Trajectory,
    pub rotation_number: u32,
    pub recurrence_residual: f64,
    pub section: Section,
    pub precision: CyclePrecision,
}

impl LimitCycle {
    /// Integrates one period from `anchor` and measures the recurrence.
    fn build(
        sys: &SystemSpec,
        anchor: StateVec3,
        period: f64,
        section: Section,
        precision: CyclePrecision,
        tol: &Tolerance,
    ) -> Result<Self> {
        let samples = integrate(sys, &anchor, 0.0, period, tol)?;
        let recurrence_residual = (samples.last() - anchor).norm();
        let mut cyc =
            LimitCycle { period, anchor, samples, rotation_number: 1, recurrence_residual, section, precision };
        cyc.rotation_number = rotation_number(&cyc).max(1);
        Ok(cyc)
    }

    /// A cycle known in closed form, given one point on it and its period.
    /// The section passes through the anchor along the local flow.
    pub fn through_point(sys: &SystemSpec, anchor: StateVec3, period: f64, tol: &Tolerance) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Domain("period must be positive"));
        }
        let f = StateVec3(sys.field(&anchor.0, 0.0));
        let section = Section::new(anchor, f)?;
        // unstable cycles amplify the local error over one period; tighten
        // the tolerance before declaring the anchor off-cycle
        let mut tol = *tol;
        for _ in 0..3 {
            let cyc = Self::build(sys, anchor, period, section, CyclePrecision::Refined, &tol)?;
            if cyc.recurrence_residual < RESIDUAL_LIMIT {
                return Ok(cyc);
            }
            tol = Tolerance { rtol: tol.rtol / 100.0, atol: tol.atol / 100.0 };
        }
        Err(Error::NotPeriodic { horizon: period, crossings: 0 })
    }

    /// State at any time, wrapping by the period.
    pub fn state_at(&self, t: f64) -> StateVec3 {
        let tau = t - (t / self.period).floor() * self.period;
        self.samples.at(tau.clamp(0.0, self.period)).unwrap_or(self.anchor)
    }

    /// `n` uniformly spaced states over one period, excluding the endpoint.
    pub fn loop_points(&self, n: usize) -> Vec<StateVec3> {
        let mut pts = self.samples.resample(n);
        pts.pop();
        pts
    }

    /// Crossings of `section` over one loop in the given orientation.
    pub fn loop_crossings(&self, section: &Section, dir: Direction) -> Vec<StateVec3> {
        let n = (8 * self.samples.len()).max(1024);
        let dt = self.period / n as f64;
        let g: Vec<f64> = self.loop_points(n).iter().map(|s| section.signed(s)).collect();
        let mut out = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            if !section.is_crossing(g[i], g[j], dir) {
                continue;
            }
            let (t0, t1) = (i as f64 * dt, if j == 0 { self.period } else { j as f64 * dt });
            let g1 = section.signed(&self.samples.at(t1).unwrap_or(self.anchor));
            if section.is_crossing(g[i], g1, dir) {
                out.push(section.locate(&self.samples, t0, t1).1);
            } else {
                out.push(self.samples.at(t1).unwrap_or(self.anchor));
            }
        }
        out
    }
}

const RESIDUAL_LIMIT: f64 = 1e-6;

/// Count of same-direction crossings of the cycle's section in one period.
pub fn rotation_number(cyc: &LimitCycle) -> u32 {
    let n = (8 * cyc.samples.len()).max(1024);
    let g: Vec<f64> = cyc.loop_points(n).iter().map(|s| cyc.section.signed(s)).collect();
    (0..n).filter(|&i| cyc.section.is_crossing(g[i], g[(i + 1) % n], Direction::Up)).count() as u32
}

/// Parameters of the recurrence search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectOptions {
    /// Length of the post-transient window searched for recurrence.
    pub max_horizon: f64,
    pub recurrence: f64,
    /// Looser threshold accepted when the strict one is never met.
    pub coarse_recurrence: f64,
    pub refine: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { max_horizon: 2000.0, recurrence: 1e-5, coarse_recurrence: 1e-3, refine: true }
    }
}

pub fn find_attractor_orbit(sys: &SystemSpec, seed: &StateVec3, transient: f64, tol: &Tolerance) -> Result<LimitCycle> {
    find_attractor_orbit_with(sys, seed, transient, tol, &DetectOptions::default())
}

pub fn find_attractor_orbit_with(
    sys: &SystemSpec,
    seed: &StateVec3,
    transient: f64,
    tol: &Tolerance,
    opts: &DetectOptions,
) -> Result<LimitCycle> {
    if !(transient > 0.0) {
        return Err(Error::Domain("transient must be positive"));
    }
    if !sys.is_autonomous() {
        return Err(Error::InvalidSystem("cycle detection needs an autonomous system"));
    }
    let start = relax(sys, seed, transient, tol)?;
    let traj = integrate(sys, &start, 0.0, opts.max_horizon, tol)?;
    let not_periodic = |crossings| Error::NotPeriodic { horizon: opts.max_horizon, crossings };

    let centroid = time_average(&traj);
    let closest = traj
        .states()
        .iter()
        .min_by(|a, b| (**a - centroid).norm().total_cmp(&(**b - centroid).norm()))
        .copied()
        .unwrap_or(start);
    let flow = StateVec3(sys.field(&closest.0, 0.0));
    if flow.norm() < 1e-9 {
        return Err(not_periodic(0));
    }
    let section = Section::new(centroid, flow)?;
    let ups = section.crossings(&traj, Direction::Up);
    let recur = |thr: f64| (1..ups.len()).find(|&m| (ups[m].1 - ups[0].1).norm() < thr);
    let m = recur(opts.recurrence).or_else(|| recur(opts.coarse_recurrence)).ok_or_else(|| not_periodic(ups.len()))?;

    let (t0, anchor) = ups[0];
    let coarse = LimitCycle::build(sys, anchor, ups[m].0 - t0, section, CyclePrecision::LowPrecision, tol)?;
    let mut cyc = if opts.refine { refine_period(sys, &coarse, tol)? } else { coarse };
    cyc.rotation_number = rotation_number(&cyc).max(1);
    Ok(cyc)
}

// trapezoidal time average over the accepted steps
fn time_average(traj: &Trajectory) -> StateVec3 {
    let (times, states) = (traj.times(), traj.states());
    let mut acc = StateVec3::ZERO;
    for i in 1..states.len() {
        acc = acc + (states[i] + states[i - 1]) * (0.5 * (times[i] - times[i - 1]));
    }
    acc * (1.0 / (traj.end_time() - traj.start_time()))
}

/// Newton shooting on `(anchor, T)` with the anchor held on the section.
///
/// Solves `φ_T(s) = s` and `n · (s − s₀) = 0` using the propagator for the
/// state derivative and the field at `φ_T(s)` for the period derivative.
/// Stops below `1e-9` residual or after 20 iterations. If the result does
/// not close within `1e-6`, the coarse cycle is returned flagged
/// low-precision.
pub fn refine_period(sys: &SystemSpec, cyc: &LimitCycle, tol: &Tolerance) -> Result<LimitCycle> {
    let n = cyc.section.normal;
    let pin = cyc.anchor;
    let mut s = cyc.anchor;
    let mut period = cyc.period;
    let mut best = (f64::INFINITY, s, period);
    for _ in 0..20 {
        let (end, prop) = match flow_with_propagator(sys, &s, period, tol) {
            Ok(v) => v,
            Err(_) => break,
        };
        let r = end - s;
        let rn = r.norm();
        if rn < best.0 {
            best = (rn, s, period);
        }
        if rn < 1e-9 {
            break;
        }
        let f_end = StateVec3(sys.field(&end.0, 0.0));
        let mut a = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = prop.matrix[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            a[i][3] = f_end[i];
            a[3][i] = n[i];
        }
        let b = [-r[0], -r[1], -r[2], -n.dot(&(s - pin))];
        let Some(delta) = solve_linear(a, b) else { break };
        let mut ds = StateVec3([delta[0], delta[1], delta[2]]);
        let mut dt = delta[3];
        let limit = 0.1 * s.norm().max(1.0);
        let scale = (ds.norm() / limit).max(dt.abs() / (0.1 * period)).max(1.0);
        ds = ds * (1.0 / scale);
        dt /= scale;
        s = s + ds;
        period += dt;
        if !(period > 0.0) || !s.is_finite() {
            break;
        }
    }
    let (_, s, period) = best;
    let refined = LimitCycle::build(sys, s, period, cyc.section.through(s), CyclePrecision::Refined, tol)?;
    if refined.recurrence_residual < RESIDUAL_LIMIT {
        // keep the detection section so crossing counts refer to the same plane
        Ok(LimitCycle { section: cyc.section, ..refined })
    } else {
        Ok(cyc.clone())
    }
}

/// Outcome of running an orbit search from `seed` and from `−seed`.
#[derive(Clone, Debug)]
pub struct SymmetryReport {
    /// One cycle if the two runs found the same orbit, else both.
    pub cycles: Vec<LimitCycle>,
    pub self_symmetric: bool,
    /// Set distance between the two runs' section crossings.
    pub separation: f64,
}

impl SymmetryReport {
    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }
}

/// Threshold under which the orbits from `seed` and `−seed` count as one.
pub const SYMMETRY_MATCH: f64 = 1e-5;

pub fn detect_symmetric_pair(
    sys: &SystemSpec,
    seed: &StateVec3,
    transient: f64,
    tol: &Tolerance,
) -> Result<SymmetryReport> {
    detect_symmetric_pair_with(sys, seed, transient, tol, &DetectOptions::default())
}

pub fn detect_symmetric_pair_with(
    sys: &SystemSpec,
    seed: &StateVec3,
    transient: f64,
    tol: &Tolerance,
    opts: &DetectOptions,
) -> Result<SymmetryReport> {
    if !sys.is_odd_symmetric() {
        return Err(Error::InvalidSystem("pair detection needs an odd-symmetric field"));
    }
    let a = find_attractor_orbit_with(sys, seed, transient, tol, opts)?;
    let b = find_attractor_orbit_with(sys, &(-*seed), transient, tol, opts)?;
    let separation = crossing_set_distance(&a, &b);
    let self_symmetric = separation < SYMMETRY_MATCH;
    let cycles = if self_symmetric { alloc::vec![a] } else { alloc::vec![a, b] };
    Ok(SymmetryReport { cycles, self_symmetric, separation })
}

/// Hausdorff distance between the up-crossings of two cycles on the first
/// cycle's section; infinite when the crossing counts differ.
pub fn crossing_set_distance(a: &LimitCycle, b: &LimitCycle) -> f64 {
    let ua = a.loop_crossings(&a.section, Direction::Up);
    let ub = b.loop_crossings(&a.section, Direction::Up);
    if ua.len() != ub.len() || ua.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |p: &[StateVec3], q: &[StateVec3]| {
        p.iter().map(|x| q.iter().map(|y| (*x - *y).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(&ua, &ub).max(one_way(&ub, &ua))
}

/// Closed polyline through points of a cycle.
#[derive(Clone, Debug)]
pub struct Polyline {
    points: Vec<StateVec3>,
}

impl Polyline {
    pub fn from_cycle(cyc: &LimitCycle, per_loop: usize) -> Self {
        Polyline { points: cyc.loop_points(per_loop * cyc.rotation_number.max(1) as usize) }
    }

    pub fn distance(&self, p: &StateVec3) -> f64 {
        let n = self.points.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let ab = b - a;
            let len2 = ab.dot(&ab);
            let u = if len2 > 0.0 { ((*p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d = (*p - (a + ab * u)).norm();
            if d < best {
                best = d;
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StabilityClass {
    AsymptoticallyStable,
    MetaStable,
    Unstable,
    /// Some probe neither converged nor diverged and the others do not
    /// settle the verdict.
    Indeterminate,
}

impl StabilityClass {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityClass::AsymptoticallyStable => "asymptotically-stable",
            StabilityClass::MetaStable => "meta-stable",
            StabilityClass::Unstable => "unstable",
            StabilityClass::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ProbeOutcome {
    Converged { distance: f64 },
    Diverged { time: f64, distance: f64 },
    Inconclusive { distance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub class: StabilityClass,
    pub probes: Vec<ProbeOutcome>,
    pub probe_size: f64,
    pub horizon: f64,
}

/// Integration and bookkeeping settings for the probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOptions {
    pub tol: Tolerance,
    /// Spacing of divergence checks; defaults to `min(T, horizon / 10)`,
    /// widened so that no probe makes more than 10⁴ checks.
    pub check_every: Option<f64>,
    /// Polyline points per loop for the checks and for the final distance.
    pub coarse_points: usize,
    pub fine_points: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { tol: Tolerance::default(), check_every: None, coarse_points: 256, fine_points: 4000 }
    }
}

/// Unit directions in the plane normal to the flow at `anchor`, at angles
/// `2πk / count` from the principal normal toward the binormal.
pub fn probe_directions(sys: &SystemSpec, anchor: &StateVec3, count: usize) -> Result<Vec<StateVec3>> {
    let f = StateVec3(sys.field(&anchor.0, 0.0));
    let t_hat = f.normalized().ok_or(Error::Domain("anchor is an equilibrium"))?;
    let acc = sys.jacobian_at(&anchor.0).mul_vec(&f);
    let normal = acc - t_hat * acc.dot(&t_hat);
    let n_hat = match normal.normalized() {
        Some(n) if normal.norm() > 1e-12 * acc.norm().max(1e-300) => n,
        _ => {
            // straight-line flow locally: any perpendicular will do
            let axis =
                if t_hat.x().abs() < 0.9 { StateVec3::new(1.0, 0.0, 0.0) } else { StateVec3::new(0.0, 1.0, 0.0) };
            (axis - t_hat * axis.dot(&t_hat)).normalized().unwrap_or(axis)
        }
    };
    let b_hat = t_hat.cross(&n_hat);
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    Ok((0..count)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / count as f64;
            n_hat * snap(theta.cos()) + b_hat * snap(theta.sin())
        })
        .collect())
}

pub fn assess_stability(
    sys: &SystemSpec,
    cyc: &LimitCycle,
    probe_count: usize,
    probe_size: f64,
    horizon: f64,
) -> Result<StabilityReport> {
    assess_stability_with(sys, cyc, probe_count, probe_size, horizon, &ProbeOptions::default())
}

pub fn assess_stability_with(
    sys: &SystemSpec,
    cyc: &LimitCycle,
    probe_count: usize,
    probe_size: f64,
    horizon: f64,
    opts: &ProbeOptions,
) -> Result<StabilityReport> {
    if probe_count < 8 {
        return Err(Error::Domain("need at least eight probes"));
    }
    if !(1e-4..=1e-2).contains(&probe_size) {
        return Err(Error::Domain("probe size must lie in [1e-4, 1e-2]"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain("horizon must be positive"));
    }
    opts.tol.validate()?;
    let coarse = Polyline::from_cycle(cyc, opts.coarse_points);
    let fine = Polyline::from_cycle(cyc, opts.fine_points);
    let every = opts.check_every.unwrap_or_else(|| cyc.period.min(horizon / 10.0).max(horizon / 1e4));
    let probes: Vec<ProbeOutcome> = probe_directions(sys, &cyc.anchor, probe_count)?
        .iter()
        .map(|d| run_probe(sys, &(cyc.anchor + *d * probe_size), probe_size, horizon, every, &coarse, &fine, &opts.tol))
        .collect();
    Ok(StabilityReport { class: verdict(&probes), probes, probe_size, horizon })
}

#[allow(clippy::too_many_arguments)]
fn run_probe(
    sys: &SystemSpec,
    start: &StateVec3,
    probe_size: f64,
    horizon: f64,
    every: f64,
    coarse: &Polyline,
    fine: &Polyline,
    tol: &Tolerance,
) -> ProbeOutcome {
    let far = 10.0 * probe_size;
    let mut stepper = state_stepper(sys, start, 0.0, horizon, *tol);
    let mut next_check = every;
    loop {
        match stepper.step() {
            Ok(Some(_)) => {
                let t = stepper.t();
                if t >= next_check {
                    let y = StateVec3(*stepper.y());
                    let d = coarse.distance(&y);
                    if d > far || !d.is_finite() {
                        return ProbeOutcome::Diverged { time: t, distance: d };
                    }
                    while next_check <= t {
                        next_check += every;
                    }
                }
            }
            Ok(None) => break,
            Err(_) => return ProbeOutcome::Diverged { time: stepper.t(), distance: f64::INFINITY },
        }
    }
    let d = fine.distance(&StateVec3(*stepper.y()));
    if d < probe_size / 10.0 {
        ProbeOutcome::Converged { distance: d }
    } else if d > far {
        ProbeOutcome::Diverged { time: horizon, distance: d }
    } else {
        ProbeOutcome::Inconclusive { distance: d }
    }
}

fn verdict(probes: &[ProbeOutcome]) -> StabilityClass {
    let conv = probes.iter().filter(|p| matches!(p, ProbeOutcome::Converged { .. })).count();
    let div = probes.iter().filter(|p| matches!(p, ProbeOutcome::Diverged { .. })).count();
    if conv == probes.len() {
        StabilityClass::AsymptoticallyStable
    } else if div == probes.len() {
        StabilityClass::Unstable
    } else if conv > 0 && div > 0 {
        StabilityClass::MetaStable
    } else {
        StabilityClass::Indeterminate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    Plus,
    Zero,
    Minus,
}

impl Sign {
    pub fn of(v: f64, zero_tol: f64) -> Sign {
        if v > zero_tol {
            Sign::Plus
        } else if v < -zero_tol {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(&self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Zero => '0',
            Sign::Minus => '-',
        }
    }
}

/// The sign patterns (a′)–(e′) of a sorted spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SignDistribution {
    /// (−,−,−)
    A,
    /// (0,−,−)
    B,
    /// (0,0,−)
    C,
    /// (0,0,0)
    D,
    /// (+,−,−)
    E,
    Other,
}

impl SignDistribution {
    pub fn label(&self) -> &'static str {
        match self {
            SignDistribution::A => "a'",
            SignDistribution::B => "b'",
            SignDistribution::C => "c'",
            SignDistribution::D => "d'",
            SignDistribution::E => "e'",
            SignDistribution::Other => "other",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "a'" => SignDistribution::A,
            "b'" => SignDistribution::B,
            "c'" => SignDistribution::C,
            "d'" => SignDistribution::D,
            "e'" => SignDistribution::E,
            "other" => SignDistribution::Other,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignClassification {
    pub distribution: SignDistribution,
    pub signs: [Sign; 3],
    pub zero_tol: f64,
}

impl SignClassification {
    /// Pattern such as `(+,-,-)`.
    pub fn pattern(&self) -> [char; 7] {
        let s = self.signs.map(|s| s.symbol());
        ['(', s[0], ',', s[1], ',', s[2], ')']
    }
}

/// `5e-3 · max(1, max |λᵢ|)`.
pub fn default_zero_tol(spec: &[f64; 3]) -> f64 {
    5e-3 * spec.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn signs_of(spec: &[f64; 3], zero_tol: f64) -> [Sign; 3] {
    sort_descending(*spec).map(|v| Sign::of(v, zero_tol))
}

pub fn classify_signs(spec: &[f64; 3], zero_tol: f64) -> SignClassification {
    use Sign::*;
    let signs = signs_of(spec, zero_tol);
    let distribution = match signs {
        [Minus, Minus, Minus] => SignDistribution::A,
        [Zero, Minus, Minus] => SignDistribution::B,
        [Zero, Zero, Minus] => SignDistribution::C,
        [Zero, Zero, Zero] => SignDistribution::D,
        [Plus, Minus, Minus] => SignDistribution::E,
        _ => SignDistribution::Other,
    };
    SignClassification { distribution, signs, zero_tol }
}

/// Attractor type implied by the classical sign criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AttractorClass {
    StableFixedPoint,
    LimitCycle,
    Torus(u8),
    StrangeAttractor,
}

impl AttractorClass {
    pub fn label(&self) -> &'static str {
        match self {
            AttractorClass::StableFixedPoint => "stable-fixed-point",
            AttractorClass::LimitCycle => "limit-cycle",
            AttractorClass::Torus(_) => "k-torus",
            AttractorClass::StrangeAttractor => "strange-attractor",
        }
    }
}

pub fn classify_ref1(spec: &[f64; 3], zero_tol: f64) -> AttractorClass {
    let signs = signs_of(spec, zero_tol);
    if signs.contains(&Sign::Plus) {
        return AttractorClass::StrangeAttractor;
    }
    match signs.iter().filter(|s| **s == Sign::Zero).count() {
        0 => AttractorClass::StableFixedPoint,
        1 => AttractorClass::LimitCycle,
        k => AttractorClass::Torus(k as u8),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ring(alpha: f64, beta: f64) -> SystemSpec {
        SystemSpec::two_ring_torus(alpha, beta).unwrap()
    }

    #[test]
    fn sign_examples() {
        assert_eq!(classify_signs(&[-0.0701, -0.0701, -0.66], 1e-3).distribution, SignDistribution::A);
        assert_eq!(classify_signs(&[0.0, 0.0, -0.98], 1e-3).distribution, SignDistribution::C);
        assert_eq!(classify_signs(&[0.1129, -0.2234, -0.2234], 1e-3).distribution, SignDistribution::E);
        assert_eq!(classify_signs(&[0.0, -0.5, -0.5], 1e-3).distribution, SignDistribution::B);
        assert_eq!(classify_signs(&[0.0, 0.0, 0.0], 1e-3).distribution, SignDistribution::D);
        assert_eq!(classify_signs(&[0.3, 0.2, -0.5], 1e-3).distribution, SignDistribution::Other);
        let c = classify_signs(&[-0.2234, 0.1129, -0.2234], 1e-3);
        assert_eq!(c.pattern().iter().collect::<alloc::string::String>(), "(+,-,-)");
    }

    #[test]
    fn tolerance_splits_near_zero_values() {
        assert_eq!(classify_signs(&[-0.00018, -0.2511, -0.2511], 5e-5).distribution, SignDistribution::A);
        assert_eq!(classify_signs(&[0.000017, -0.2512, -0.2512], 5e-6).distribution, SignDistribution::E);
        assert_eq!(classify_signs(&[0.000017, -0.2512, -0.2512], 5e-3).distribution, SignDistribution::B);
    }

    #[test]
    fn classical_criteria() {
        assert_eq!(classify_ref1(&[-1.0, -2.0, -3.0], 1e-3), AttractorClass::StableFixedPoint);
        assert_eq!(classify_ref1(&[0.0, -0.5, -0.5], 1e-3), AttractorClass::LimitCycle);
        assert_eq!(classify_ref1(&[0.1129, -0.2234, -0.2234], 1e-3), AttractorClass::StrangeAttractor);
        assert_eq!(classify_ref1(&[-0.4, 0.0, 0.0], 1e-3), AttractorClass::Torus(2));
    }

    #[test]
    fn default_tolerance_scales() {
        assert_eq!(default_zero_tol(&[0.1, -0.2, -0.3]), 5e-3);
        assert_abs_diff_eq!(default_zero_tol(&[0.1, -4.0, -0.3]), 2e-2);
    }

    #[test]
    fn section_orientation() {
        let s = Section::new(StateVec3::ZERO, StateVec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(s.signed(&StateVec3::new(5.0, 5.0, 1.0)), 1.0);
        assert!(Section::new(StateVec3::ZERO, StateVec3::ZERO).is_err());
    }

    #[test]
    fn analytic_circle_has_period_two_pi() {
        let sys = ring(0.5, 1.0);
        let cyc =
            LimitCycle::through_point(&sys, StateVec3::new(0.0, 1.0, 1.0), 2.0 * PI, &Tolerance::default()).unwrap();
        assert!(cyc.recurrence_residual < 1e-8);
        assert_eq!(rotation_number(&cyc), 1);
        // off-cycle anchors do not close
        let off = LimitCycle::through_point(&sys, StateVec3::new(0.0, 1.2, 1.0), 2.0 * PI, &Tolerance::default());
        assert!(matches!(off, Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn detects_attracting_circle() {
        let sys = ring(0.5, 1.0);
        let cyc = find_attractor_orbit(&sys, &StateVec3::new(1.2, 0.0, 0.8), 100.0, &Tolerance::default()).unwrap();
        assert_abs_diff_eq!(cyc.period, 2.0 * PI, epsilon = 1e-6);
        assert_eq!(cyc.rotation_number, 1);
        assert_eq!(cyc.precision, CyclePrecision::Refined);
        assert_abs_diff_eq!(cyc.anchor.z(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(cyc.anchor.x().hypot(cyc.anchor.y()), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn equilibrium_is_not_periodic() {
        // every orbit of this linear flow spirals into the origin
        let sys = SystemSpec::linear(
            crate::matrix3::Matrix3::from_rows([[-0.5, 1.0, 0.0], [-1.0, -0.5, 0.0], [0.0, 0.0, -1.0]]),
            crate::vectorfields::Forcing::Zero,
        )
        .unwrap();
        let err = find_attractor_orbit(&sys, &StateVec3::new(1.0, 0.0, 0.0), 100.0, &Tolerance::default());
        assert!(matches!(err, Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn probe_frame_on_the_circle() {
        let sys = ring(0.5, 1.0);
        let dirs = probe_directions(&sys, &StateVec3::new(0.0, 1.0, 1.0), 8).unwrap();
        assert_eq!(dirs[0], StateVec3::new(0.0, -1.0, 0.0));
        assert_eq!(dirs[2].x(), 0.0);
        assert_eq!(dirs[2].y(), 0.0);
        assert_eq!(dirs[4].z(), 0.0);
        for d in &dirs {
            assert_abs_diff_eq!(d.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn probe_arguments_validated() {
        let sys = ring(0.5, 1.0);
        let cyc =
            LimitCycle::through_point(&sys, StateVec3::new(0.0, 1.0, 1.0), 2.0 * PI, &Tolerance::default()).unwrap();
        assert!(assess_stability(&sys, &cyc, 4, 1e-3, 10.0).is_err());
        assert!(assess_stability(&sys, &cyc, 8, 1e-1, 10.0).is_err());
    }

    #[test]
    fn stable_circle_probes_converge() {
        let sys = ring(0.5, 1.0);
        let cyc =
            LimitCycle::through_point(&sys, StateVec3::new(0.0, 1.0, 1.0), 2.0 * PI, &Tolerance::default()).unwrap();
        let rep = assess_stability(&sys, &cyc, 8, 1e-2, 10.0).unwrap();
        assert_eq!(rep.class, StabilityClass::AsymptoticallyStable, "{:?}", rep.probes);
    }

    #[test]
    fn polyline_distance() {
        let sys = ring(0.5, 0.0);
        let cyc =
            LimitCycle::through_point(&sys, StateVec3::new(0.0, 1.0, 0.0), 2.0 * PI, &Tolerance::default()).unwrap();
        let poly = Polyline::from_cycle(&cyc, 4000);
        assert_abs_diff_eq!(poly.distance(&StateVec3::new(0.0, 0.0, 0.0)), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(poly.distance(&StateVec3::new(0.0, 1.0, 0.3)), 0.3, epsilon = 1e-6);
    }
}
