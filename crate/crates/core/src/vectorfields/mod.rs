//! The dynamical systems, their Jacobians, and adaptive integration of the
//! state together with the integrated Jacobian or the variational propagator.

mod dopri;
mod trajectory;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix3::{Matrix3, StateVec3};
pub(crate) use dopri::{DenseStep, Dopri5};
pub use trajectory::Trajectory;

/// Relative/absolute error tolerances for the adaptive stepper.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-12 }
    }
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        let tol = Tolerance { rtol, atol };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain("tolerances must be positive and finite"))
        }
    }

    pub fn halved(&self) -> Tolerance {
        Tolerance { rtol: self.rtol / 2.0, atol: self.atol / 2.0 }
    }
}

/// External forcing `f(t)` of a linear system. Exponents never depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Forcing {
    #[default]
    Zero,
    Constant(StateVec3),
    /// `amplitude[i] · sin(omega[i] · t + phase[i])` per component.
    Sinusoid {
        amplitude: [f64; 3],
        omega: [f64; 3],
        phase: [f64; 3],
    },
}

impl Forcing {
    pub fn eval(&self, t: f64) -> StateVec3 {
        match self {
            Forcing::Zero => StateVec3::ZERO,
            Forcing::Constant(v) => *v,
            Forcing::Sinusoid { amplitude, omega, phase } => {
                StateVec3(core::array::from_fn(|i| amplitude[i] * (omega[i] * t + phase[i]).sin()))
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Constant(v) => v.is_finite(),
            Forcing::Sinusoid { amplitude, omega, phase } => {
                amplitude.iter().chain(omega).chain(phase).all(|v| v.is_finite())
            }
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Constant(v) => *v == StateVec3::ZERO,
            Forcing::Sinusoid { amplitude, .. } => amplitude.iter().all(|a| *a == 0.0),
        }
    }
}

/// The flows studied here.
///
/// * `Linear`: `Ż = A Z + f(t)`.
/// * `TwoRingTorus`: planar rotation with radial factor
///   `(1 − ρ)(1 + α − ρ)`, `ρ = x² + y²`, and `ż = β² z − z³`; requires `α² < 1`.
/// * `CubedRing`: planar rotation with radial factor `(1 − ρ)³` and the same
///   `z` equation.
/// * `Silnikov`: `ẋ = y, ẏ = z, ż = x³ − a² x − y − b z` with `a, b > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SystemSpec {
    Linear { a: Matrix3, forcing: Forcing },
    TwoRingTorus { alpha: f64, beta: f64 },
    CubedRing { beta: f64 },
    Silnikov { a: f64, b: f64 },
}

impl SystemSpec {
    pub fn linear(a: Matrix3, forcing: Forcing) -> Result<Self> {
        let sys = SystemSpec::Linear { a, forcing };
        sys.validate()?;
        Ok(sys)
    }

    pub fn two_ring_torus(alpha: f64, beta: f64) -> Result<Self> {
        let sys = SystemSpec::TwoRingTorus { alpha, beta };
        sys.validate()?;
        Ok(sys)
    }

    pub fn cubed_ring(beta: f64) -> Result<Self> {
        let sys = SystemSpec::CubedRing { beta };
        sys.validate()?;
        Ok(sys)
    }

    pub fn silnikov(a: f64, b: f64) -> Result<Self> {
        let sys = SystemSpec::Silnikov { a, b };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SystemSpec::Linear { a, forcing } => {
                if !a.is_finite() || !forcing.is_finite() {
                    return Err(Error::InvalidSystem("linear system has non-finite coefficients"));
                }
            }
            SystemSpec::TwoRingTorus { alpha, beta } => {
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::InvalidSystem("non-finite parameter"));
                }
                if alpha * alpha >= 1.0 {
                    return Err(Error::InvalidSystem("two-ring torus requires alpha^2 < 1"));
                }
            }
            SystemSpec::CubedRing { beta } => {
                if !beta.is_finite() {
                    return Err(Error::InvalidSystem("non-finite parameter"));
                }
            }
            SystemSpec::Silnikov { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidSystem("silnikov requires a > 0 and b > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Linear { .. } => "linear",
            SystemSpec::TwoRingTorus { .. } => "tworing",
            SystemSpec::CubedRing { .. } => "cubedring",
            SystemSpec::Silnikov { .. } => "silnikov",
        }
    }

    /// `F(−s) = −F(s)` for all `s`.
    pub fn is_odd_symmetric(&self) -> bool {
        match self {
            SystemSpec::Linear { forcing, .. } => forcing.is_zero(),
            _ => true,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        !matches!(self, SystemSpec::Linear { forcing, .. } if !forcing.is_zero())
    }

    /// Unchecked field evaluation used inside the integrators.
    #[inline]
    pub(crate) fn field(&self, s: &[f64], t: f64) -> [f64; 3] {
        let (x, y, z) = (s[0], s[1], s[2]);
        match self {
            SystemSpec::Linear { a, forcing } => {
                let v = a.mul_vec(&StateVec3([x, y, z])) + forcing.eval(t);
                v.0
            }
            SystemSpec::TwoRingTorus { alpha, beta } => {
                let rho = x * x + y * y;
                let g = (1.0 - rho) * (1.0 + alpha - rho);
                [y + x * g, -x + y * g, beta * beta * z - z * z * z]
            }
            SystemSpec::CubedRing { beta } => {
                let u = 1.0 - x * x - y * y;
                let g = u * u * u;
                [y + x * g, -x + y * g, beta * beta * z - z * z * z]
            }
            SystemSpec::Silnikov { a, b } => [y, z, x * x * x - a * a * x - y - b * z],
        }
    }

    #[inline]
    pub(crate) fn jacobian_at(&self, s: &[f64]) -> Matrix3 {
        let (x, y, z) = (s[0], s[1], s[2]);
        match self {
            SystemSpec::Linear { a, .. } => *a,
            SystemSpec::TwoRingTorus { alpha, beta } => {
                let rho = x * x + y * y;
                let g = (1.0 - rho) * (1.0 + alpha - rho);
                let dg = 2.0 * rho - (2.0 + alpha);
                ring_jacobian(x, y, z, g, dg, *beta)
            }
            SystemSpec::CubedRing { beta } => {
                let u = 1.0 - x * x - y * y;
                ring_jacobian(x, y, z, u * u * u, -3.0 * u * u, *beta)
            }
            SystemSpec::Silnikov { a, b } => {
                Matrix3::from_rows([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [3.0 * x * x - a * a, -1.0, -b]])
            }
        }
    }

    /// Divergence `trace J(s)` of the field.
    pub fn divergence(&self, s: &StateVec3) -> f64 {
        self.jacobian_at(&s.0).trace()
    }
}

// g is the radial factor as a function of ρ = x² + y², dg its ρ-derivative
fn ring_jacobian(x: f64, y: f64, z: f64, g: f64, dg: f64, beta: f64) -> Matrix3 {
    Matrix3::from_rows([
        [g + 2.0 * x * x * dg, 1.0 + 2.0 * x * y * dg, 0.0],
        [-1.0 + 2.0 * x * y * dg, g + 2.0 * y * y * dg, 0.0],
        [0.0, 0.0, beta * beta - 3.0 * z * z],
    ])
}

/// `∫₀ᵗ J(r₀(s)) ds` accumulated along a reference orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratedJacobian {
    pub matrix: Matrix3,
    pub elapsed: f64,
}

impl IntegratedJacobian {
    pub fn new(matrix: Matrix3, elapsed: f64) -> Result<Self> {
        if !(elapsed > 0.0) || !elapsed.is_finite() {
            return Err(Error::Domain("integrated Jacobian needs elapsed > 0"));
        }
        if !matrix.is_finite() {
            return Err(Error::Domain("integrated Jacobian has non-finite entries"));
        }
        Ok(IntegratedJacobian { matrix, elapsed })
    }

    /// The integral of a constant Jacobian: `rate · t`.
    pub fn linear_in_time(rate: &Matrix3, t: f64) -> Result<Self> {
        Self::new(rate.scale(t), t)
    }

    /// Time average `∫J / t`.
    pub fn average(&self) -> Matrix3 {
        self.matrix.scale(1.0 / self.elapsed)
    }
}

/// Fundamental matrix of `Ṁ = J(r₀(t)) M`, `M(0) = I`.
///
/// The determinant is carried separately as a log-magnitude and sign,
/// accumulated over short segments, so it keeps full relative accuracy
/// after the matrix itself has become numerically rank deficient.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Propagator {
    pub matrix: Matrix3,
    pub elapsed: f64,
    log_abs_det: f64,
    det_sign: f64,
}

impl Propagator {
    pub fn new(matrix: Matrix3, elapsed: f64) -> Result<Self> {
        if !(elapsed > 0.0) || !elapsed.is_finite() {
            return Err(Error::Domain("propagator needs elapsed > 0"));
        }
        let det = matrix.determinant();
        Ok(Propagator { matrix, elapsed, log_abs_det: det.abs().ln(), det_sign: det.signum() })
    }

    pub fn determinant(&self) -> f64 {
        self.det_sign * self.log_abs_det.exp()
    }

    /// `ln |det M|`, finite even where `determinant` under- or overflows.
    pub fn log_abs_determinant(&self) -> f64 {
        self.log_abs_det
    }
}

fn check_state(s: &StateVec3) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("state has non-finite components"))
    }
}

/// `F(s) + f(t)`.
pub fn eval_field(sys: &SystemSpec, s: &StateVec3, t: f64) -> Result<StateVec3> {
    sys.validate()?;
    check_state(s)?;
    if !t.is_finite() {
        return Err(Error::Domain("time must be finite"));
    }
    Ok(StateVec3(sys.field(&s.0, t)))
}

/// Exact Jacobian of the field at `s`.
pub fn eval_jacobian(sys: &SystemSpec, s: &StateVec3) -> Result<Matrix3> {
    sys.validate()?;
    check_state(s)?;
    Ok(sys.jacobian_at(&s.0))
}

fn failure<const N: usize, F>(stepper: &Dopri5<N, F>, why: dopri::StepFailure) -> Error
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let y = stepper.y();
    Error::IntegrationFailure { t: stepper.t(), state: StateVec3([y[0], y[1], y[2]]), reason: why.reason() }
}

fn check_run(sys: &SystemSpec, s0: &StateVec3, t0: f64, t1: f64, tol: &Tolerance) -> Result<()> {
    sys.validate()?;
    check_state(s0)?;
    tol.validate()?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Domain("integration interval must satisfy t1 > t0"));
    }
    Ok(())
}

/// Drives a stepper to its end time, handing each accepted step to `on_step`.
pub(crate) fn drive<const N: usize, F>(
    mut stepper: Dopri5<N, F>,
    mut on_step: impl FnMut(&DenseStep<N>),
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    loop {
        match stepper.step() {
            Ok(Some(step)) => on_step(&step),
            Ok(None) => return Ok(*stepper.y()),
            Err(why) => return Err(failure(&stepper, why)),
        }
    }
}

/// Stepper over the bare state.
pub(crate) fn state_stepper<'a>(
    sys: &'a SystemSpec,
    s0: &StateVec3,
    t0: f64,
    t1: f64,
    tol: Tolerance,
) -> Dopri5<3, impl FnMut(f64, &[f64; 3], &mut [f64; 3]) + 'a> {
    Dopri5::new(move |t, y: &[f64; 3], dy: &mut [f64; 3]| *dy = sys.field(y, t), t0, s0.0, t1, tol)
}

fn augmented_rhs(sys: &SystemSpec) -> impl FnMut(f64, &[f64; 12], &mut [f64; 12]) + '_ {
    move |t, y: &[f64; 12], dy: &mut [f64; 12]| {
        let f = sys.field(y, t);
        dy[..3].copy_from_slice(&f);
        dy[3..].copy_from_slice(&sys.jacobian_at(y).to_flat());
    }
}

fn variational_rhs(sys: &SystemSpec) -> impl FnMut(f64, &[f64; 12], &mut [f64; 12]) + '_ {
    move |t, y: &[f64; 12], dy: &mut [f64; 12]| {
        let f = sys.field(y, t);
        dy[..3].copy_from_slice(&f);
        let j = sys.jacobian_at(y);
        let m = Matrix3::from_flat(&y[3..]);
        dy[3..].copy_from_slice(&(j * m).to_flat());
    }
}

fn augmented_start(s0: &StateVec3, block: &Matrix3) -> [f64; 12] {
    let mut y = [0.0; 12];
    y[..3].copy_from_slice(&s0.0);
    y[3..].copy_from_slice(&block.to_flat());
    y
}

/// Dense-output trajectory from `t0` to `t1`.
pub fn integrate(sys: &SystemSpec, s0: &StateVec3, t0: f64, t1: f64, tol: &Tolerance) -> Result<Trajectory> {
    check_run(sys, s0, t0, t1, tol)?;
    let mut traj = Trajectory::start(t0, *s0, *tol);
    drive(state_stepper(sys, s0, t0, t1, *tol), |step| traj.push(step))?;
    Ok(traj)
}

/// Calls `emit` with the initial state and then the end of every accepted
/// step. States emitted before a failure are kept by the caller.
pub fn integrate_streaming(
    sys: &SystemSpec,
    s0: &StateVec3,
    t0: f64,
    t1: f64,
    tol: &Tolerance,
    mut emit: impl FnMut(f64, StateVec3),
) -> Result<()> {
    check_run(sys, s0, t0, t1, tol)?;
    emit(t0, *s0);
    drive(state_stepper(sys, s0, t0, t1, *tol), |step| {
        let end = step.end();
        emit(step.t1(), StateVec3([end[0], end[1], end[2]]));
    })
    .map(|_| ())
}

/// Endpoint of the flow without storing the trajectory.
pub fn propagate(sys: &SystemSpec, s0: &StateVec3, t0: f64, t1: f64, tol: &Tolerance) -> Result<StateVec3> {
    check_run(sys, s0, t0, t1, tol)?;
    drive(state_stepper(sys, s0, t0, t1, *tol), |_| {}).map(StateVec3)
}

/// Runs a transient of `duration` time units and returns the relaxed state.
pub fn relax(sys: &SystemSpec, s0: &StateVec3, duration: f64, tol: &Tolerance) -> Result<StateVec3> {
    if duration == 0.0 {
        check_state(s0)?;
        return Ok(*s0);
    }
    propagate(sys, s0, 0.0, duration, tol)
}

/// Integrates the state together with the nine entries of `∫J ds` in one
/// 12-component system sharing a single error estimate.
pub fn integrate_augmented(
    sys: &SystemSpec,
    s0: &StateVec3,
    t1: f64,
    tol: &Tolerance,
) -> Result<(Trajectory, IntegratedJacobian)> {
    check_run(sys, s0, 0.0, t1, tol)?;
    let mut traj = Trajectory::start(0.0, *s0, *tol);
    let (_, sum) = accumulate(sys, s0, 0.0, t1, tol, |step| traj.push(step))?;
    let ij = IntegratedJacobian::new(sum, t1)?;
    Ok((traj, ij))
}

/// Advances the state and `∫J ds` over `[t0, t1]`. The integral restarts
/// from zero each segment so its error control stays on the segment scale.
fn accumulate(
    sys: &SystemSpec,
    s0: &StateVec3,
    t0: f64,
    t1: f64,
    tol: &Tolerance,
    mut on_step: impl FnMut(&DenseStep<12>),
) -> Result<(StateVec3, Matrix3)> {
    let mut state = *s0;
    let mut sum = [0.0; 9];
    let mut carry = [0.0; 9];
    let mut t = t0;
    while t < t1 {
        let t_next = next_segment_end(t, t1);
        let stepper = Dopri5::new(augmented_rhs(sys), t, augmented_start(&state, &Matrix3::ZERO), t_next, *tol);
        let end = drive(stepper, &mut on_step)?;
        // compensated summation of the segment integrals
        for i in 0..9 {
            let y = end[3 + i] - carry[i];
            let next = sum[i] + y;
            carry[i] = (next - sum[i]) - y;
            sum[i] = next;
        }
        state = StateVec3([end[0], end[1], end[2]]);
        t = t_next;
    }
    Ok((state, Matrix3::from_flat(&sum)))
}

fn next_segment_end(t: f64, t1: f64) -> f64 {
    if t1 - t <= SEGMENT * 1.5 {
        t1
    } else {
        t + SEGMENT
    }
}

/// `∫J ds` evaluated at each of the increasing `horizons`, along one
/// continuous augmented run from `s0`.
pub fn augmented_checkpoints(
    sys: &SystemSpec,
    s0: &StateVec3,
    horizons: &[f64],
    tol: &Tolerance,
) -> Result<Vec<IntegratedJacobian>> {
    let last = *horizons.last().ok_or(Error::Domain("no horizons given"))?;
    check_run(sys, s0, 0.0, last, tol)?;
    if horizons.windows(2).any(|w| !(w[1] > w[0])) || !(horizons[0] > 0.0) {
        return Err(Error::Domain("horizons must be positive and strictly increasing"));
    }
    let mut state = *s0;
    let mut sum = Matrix3::ZERO;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let (next, part) = accumulate(sys, &state, t, h, tol, |_| {})?;
        state = next;
        sum += part;
        t = h;
        out.push(IntegratedJacobian::new(sum, h)?);
    }
    Ok(out)
}

/// Time-ordered fundamental matrix of the variational equation along the
/// orbit from `s0`, integrated jointly with the state.
pub fn integrate_propagator(sys: &SystemSpec, s0: &StateVec3, t1: f64, tol: &Tolerance) -> Result<Propagator> {
    flow_with_propagator(sys, s0, t1, tol).map(|(_, p)| p)
}

/// Endpoint of the flow and the propagator over `[0, t1]`.
pub fn flow_with_propagator(
    sys: &SystemSpec,
    s0: &StateVec3,
    t1: f64,
    tol: &Tolerance,
) -> Result<(StateVec3, Propagator)> {
    let mut total = Matrix3::IDENTITY;
    let (mut log_abs_det, mut det_sign) = (0.0, 1.0);
    let state = propagator_segments(sys, s0, t1, tol, |block| {
        let det = block.determinant();
        log_abs_det += det.abs().ln();
        det_sign *= det.signum();
        total = *block * total;
    })?;
    let mut prop = Propagator::new(total, t1)?;
    prop.log_abs_det = log_abs_det;
    prop.det_sign = det_sign;
    Ok((state, prop))
}

/// Runs the variational system over `[0, t1]` one segment at a time and hands
/// each segment's propagator, started from `I`, to `on_block` in time order.
/// Returns the end state.
pub fn propagator_segments(
    sys: &SystemSpec,
    s0: &StateVec3,
    t1: f64,
    tol: &Tolerance,
    mut on_block: impl FnMut(&Matrix3),
) -> Result<StateVec3> {
    check_run(sys, s0, 0.0, t1, tol)?;
    // restarting from I each segment keeps every block well scaled
    let mut state = *s0;
    let mut t = 0.0;
    while t < t1 {
        let t_next = next_segment_end(t, t1);
        let stepper = Dopri5::new(variational_rhs(sys), t, augmented_start(&state, &Matrix3::IDENTITY), t_next, *tol);
        let end = drive(stepper, |_| {})?;
        on_block(&Matrix3::from_flat(&end[3..]));
        state = StateVec3([end[0], end[1], end[2]]);
        t = t_next;
    }
    Ok(state)
}

/// Length of the segments the augmented runs are assembled from.
const SEGMENT: f64 = 1.0;
