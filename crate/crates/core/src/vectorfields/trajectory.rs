use alloc::vec::Vec;

use super::dopri::DenseStep;
use super::Tolerance;
use crate::matrix3::StateVec3;

/// Time-stamped states at the accepted steps of an adaptive run, together
/// with the fourth-order continuous extension of every step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVec3>,
    segments: Vec<[[f64; 3]; 5]>,
    tolerance: Tolerance,
}

impl Trajectory {
    pub(crate) fn start(t0: f64, s0: StateVec3, tolerance: Tolerance) -> Self {
        Trajectory { times: alloc::vec![t0], states: alloc::vec![s0], segments: Vec::new(), tolerance }
    }

    pub(crate) fn push<const N: usize>(&mut self, step: &DenseStep<N>) {
        let end = step.end();
        let mut coeffs = [[0.0; 3]; 5];
        for (dst, src) in coeffs.iter_mut().zip(step.coeffs.iter()) {
            dst.copy_from_slice(&src[..3]);
        }
        self.times.push(step.t1());
        self.states.push(StateVec3([end[0], end[1], end[2]]));
        self.segments.push(coeffs);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVec3] {
        &self.states
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, StateVec3)> + '_ {
        self.times.iter().copied().zip(self.states.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn first(&self) -> StateVec3 {
        self.states[0]
    }

    pub fn last(&self) -> StateVec3 {
        self.states[self.states.len() - 1]
    }

    /// Order of the dense interpolant between samples.
    pub fn interpolation_order(&self) -> u8 {
        4
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    /// Interpolated state at `t`, or `None` outside the covered interval.
    pub fn at(&self, t: f64) -> Option<StateVec3> {
        let (t0, t1) = (self.start_time(), self.end_time());
        if !(t >= t0 && t <= t1) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.states[0]);
        }
        let idx = match self.times.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => return Some(self.states[i]),
            Err(i) => i - 1,
        };
        let h = self.times[idx + 1] - self.times[idx];
        let c = &self.segments[idx];
        let theta = (t - self.times[idx]) / h;
        let theta1 = 1.0 - theta;
        Some(StateVec3(core::array::from_fn(|i| {
            c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])))
        })))
    }

    /// `n + 1` states at uniformly spaced times over the whole run.
    pub fn resample(&self, n: usize) -> Vec<StateVec3> {
        let (t0, t1) = (self.start_time(), self.end_time());
        (0..=n)
            .map(|k| {
                let t = if k == n { t1 } else { t0 + (t1 - t0) * k as f64 / n as f64 };
                self.at(t).unwrap_or_else(|| self.last())
            })
            .collect()
    }
}
