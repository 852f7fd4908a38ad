//! Dormand–Prince 5(4) stepper with the free fourth-order continuous
//! extension, generic over the state dimension.

#[allow(unused_imports)]
use num_traits::Float;

use super::Tolerance;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 200_000_000;

/// Why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum StepFailure {
    StepUnderflow,
    NonFinite,
    TooManySteps,
}

impl StepFailure {
    pub(crate) fn reason(self) -> &'static str {
        match self {
            StepFailure::StepUnderflow => "step size underflow",
            StepFailure::NonFinite => "non-finite derivative",
            StepFailure::TooManySteps => "step budget exhausted",
        }
    }
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    #[cfg(test)]
    pub fn start(&self) -> [f64; N] {
        self.coeffs[0]
    }

    pub fn end(&self) -> [f64; N] {
        core::array::from_fn(|i| self.coeffs[0][i] + self.coeffs[1][i])
    }

    #[cfg(test)]
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let c = &self.coeffs;
        core::array::from_fn(|i| {
            c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])))
        })
    }
}

/// Adaptive stepper state. `f(t, y, dy)` writes the derivative into `dy`.
pub(crate) struct Dopri5<const N: usize, F> {
    f: F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    t_end: f64,
    tol: Tolerance,
    fac_old: f64,
    steps: usize,
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    pub fn new(mut f: F, t0: f64, y0: [f64; N], t_end: f64, tol: Tolerance) -> Self {
        let mut k1 = [0.0; N];
        f(t0, &y0, &mut k1);
        let mut stepper = Dopri5 { f, t: t0, y: y0, k1, h: 0.0, t_end, tol, fac_old: 1e-4, steps: 0 };
        stepper.h = stepper.initial_step();
        stepper
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.tol.atol + self.tol.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let span = self.t_end - self.t;
        if span <= 0.0 {
            return 0.0;
        }
        let rms = |v: &[f64; N], y: &[f64; N], tol: &Tolerance| {
            (v.iter().zip(y).map(|(a, b)| (a / (tol.atol + tol.rtol * b.abs())).powi(2)).sum::<f64>() / N as f64).sqrt()
        };
        let d0 = rms(&self.y, &self.y, &self.tol);
        let d1 = rms(&self.k1, &self.y, &self.tol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: [f64; N] = core::array::from_fn(|i| self.y[i] + h0 * self.k1[i]);
        let mut f1 = [0.0; N];
        (self.f)(self.t + h0, &y1, &mut f1);
        let diff: [f64; N] = core::array::from_fn(|i| f1[i] - self.k1[i]);
        let d2 = rms(&diff, &self.y, &self.tol) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
        // keep clear of the underflow guard when the state starts near zero
        let floor = 1024.0 * f64::EPSILON * self.t.abs().max(1.0);
        let h = (100.0 * h0).min(h1).max(floor).min(span);
        if h.is_finite() && h > 0.0 {
            h
        } else {
            span.min(1e-6)
        }
    }

    /// Advances by one accepted step. Returns `Ok(None)` once `t_end` is reached.
    pub fn step(&mut self) -> Result<Option<DenseStep<N>>, StepFailure> {
        if self.t >= self.t_end {
            return Ok(None);
        }
        let expo = 0.2 - BETA * 0.75;
        let mut non_finite = 0;
        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(StepFailure::TooManySteps);
            }
            let remaining = self.t_end - self.t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { self.h };
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(StepFailure::StepUnderflow);
            }

            let (y_new, k7, err, dense) = self.attempt(h);
            let err = if y_new.iter().chain(k7.iter()).all(|v| v.is_finite()) { err } else { f64::INFINITY };

            if err <= 1.0 {
                let fac11 = err.powf(expo);
                let fac = (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let step = DenseStep { t0: self.t, h, coeffs: dense };
                self.fac_old = err.max(1e-4);
                self.t = if last { self.t_end } else { self.t + h };
                self.y = y_new;
                self.k1 = k7;
                if !last {
                    self.h = h / fac;
                }
                return Ok(Some(step));
            }
            if !err.is_finite() {
                non_finite += 1;
                if non_finite > 60 {
                    return Err(StepFailure::NonFinite);
                }
                self.h = h * FAC_MIN;
                continue;
            }
            let fac11 = err.powf(expo);
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }

    #[allow(clippy::type_complexity)]
    fn attempt(&mut self, h: f64) -> ([f64; N], [f64; N], f64, [[f64; N]; 5]) {
        let t = self.t;
        let y = &self.y;
        let k1 = self.k1;
        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut k5 = [0.0; N];
        let mut k6 = [0.0; N];
        let mut k7 = [0.0; N];

        let tmp: [f64; N] = core::array::from_fn(|i| y[i] + h * A21 * k1[i]);
        (self.f)(t + C2 * h, &tmp, &mut k2);
        let tmp: [f64; N] = core::array::from_fn(|i| y[i] + h * (A31 * k1[i] + A32 * k2[i]));
        (self.f)(t + C3 * h, &tmp, &mut k3);
        let tmp: [f64; N] = core::array::from_fn(|i| y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]));
        (self.f)(t + C4 * h, &tmp, &mut k4);
        let tmp: [f64; N] =
            core::array::from_fn(|i| y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]));
        (self.f)(t + C5 * h, &tmp, &mut k5);
        let tmp: [f64; N] =
            core::array::from_fn(|i| y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]));
        (self.f)(t + h, &tmp, &mut k6);
        let y_new: [f64; N] =
            core::array::from_fn(|i| y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]));
        (self.f)(t + h, &y_new, &mut k7);

        let mut acc = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.weight(y[i], y_new[i]);
            acc += (e / sk).powi(2);
        }
        let err = (acc / N as f64).sqrt();

        let mut dense = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            dense[0][i] = y[i];
            dense[1][i] = ydiff;
            dense[2][i] = bspl;
            dense[3][i] = ydiff - h * k7[i] - bspl;
            dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        (y_new, k7, err, dense)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_endpoint() {
        let tol = Tolerance { rtol: 1e-10, atol: 1e-12 };
        let mut s = Dopri5::new(|_t, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = -y[0], 0.0, [1.0], 2.0, tol);
        let mut last = None;
        while let Some(step) = s.step().unwrap() {
            last = Some(step);
        }
        assert_eq!(s.t(), 2.0);
        assert!((s.y()[0] - (-2f64).exp()).abs() < 1e-10);
        let step = last.unwrap();
        assert_eq!(step.t1(), 2.0);
        // interpolant is exact at both ends
        assert_eq!(step.eval(step.t0)[0], step.start()[0]);
        assert!((step.eval(step.t1())[0] - step.end()[0]).abs() < 1e-15);
    }

    #[test]
    fn dense_output_tracks_solution_inside_steps() {
        let tol = Tolerance { rtol: 1e-9, atol: 1e-12 };
        let rhs = |_t, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let mut s = Dopri5::new(rhs, 0.0, [0.0, 1.0], 10.0, tol);
        while let Some(step) = s.step().unwrap() {
            for k in 1..8 {
                let t = step.t0 + step.h * k as f64 / 8.0;
                let y = step.eval(t);
                assert!((y[0] - t.sin()).abs() < 1e-8, "t = {t}");
            }
        }
    }

    #[test]
    fn finite_time_blow_up_is_reported() {
        let tol = Tolerance { rtol: 1e-10, atol: 1e-12 };
        // y' = y², y(0) = 1 blows up at t = 1
        let mut s = Dopri5::new(|_t, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0] * y[0], 0.0, [1.0], 2.0, tol);
        let outcome = loop {
            match s.step() {
                Ok(Some(_)) => continue,
                other => break other,
            }
        };
        assert!(outcome.is_err());
        assert!(s.t() < 1.0);
    }
}
