//! Exponent spectra from the integrated Jacobian and from the propagator.
//!
//! `le_j` takes real parts of the eigenvalues of `∫J ds / t`. `le_o_symmetric`
//! takes eigenvalues of the symmetrized average `(∫J + ∫Jᵀ) / 2t`.
//! `le_finite_time_svd` takes `ln σᵢ(M) / t` of the time-ordered propagator.
//! `le_qr` reaches the same limit by re-orthonormalizing after every segment,
//! so it stays finite on horizons where `M` itself under- or overflows.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix3::{
    eig_general, eig_symmetric, expm, qr_diagonal, singular_values, sort_descending, symmetrize_scaled, ComplexTriple,
    Matrix3, StateVec3,
};
use crate::orbitlab::LimitCycle;
use crate::vectorfields::{
    augmented_checkpoints, integrate_augmented, propagator_segments, IntegratedJacobian, Propagator, SystemSpec,
    Tolerance,
};

/// How an [`ExponentSpectrum`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SpectrumMethod {
    OnePeriod,
    LongTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentSpectrum {
    pub le_j: [f64; 3],
    pub le_o: [f64; 3],
    pub horizon: f64,
    pub method: SpectrumMethod,
}

impl ExponentSpectrum {
    pub fn from_integrated(ij: &IntegratedJacobian, method: SpectrumMethod) -> Result<Self> {
        Ok(ExponentSpectrum { le_j: le_j(ij)?, le_o: le_o_symmetric(ij)?, horizon: ij.elapsed, method })
    }

    pub fn le_j_sum(&self) -> f64 {
        self.le_j.iter().sum()
    }

    pub fn le_o_sum(&self) -> f64 {
        self.le_o.iter().sum()
    }
}

fn check_elapsed(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("elapsed time must be positive"))
    }
}

/// Real parts of the eigenvalues of a constant coefficient matrix.
pub fn le_linear(a: &Matrix3) -> [f64; 3] {
    sort_descending(eig_general(a).real_parts())
}

pub fn le_j(ij: &IntegratedJacobian) -> Result<[f64; 3]> {
    check_elapsed(ij.elapsed)?;
    let re = eig_general(&ij.matrix).real_parts();
    Ok(sort_descending(re.map(|r| r / ij.elapsed)))
}

pub fn le_o_symmetric(ij: &IntegratedJacobian) -> Result<[f64; 3]> {
    eig_symmetric(&symmetrize_scaled(&ij.matrix, ij.elapsed)?)
}

/// `ln σᵢ / t`; a singular value that underflows to zero maps to `−∞`.
pub fn le_finite_time_svd(p: &Propagator) -> Result<[f64; 3]> {
    check_elapsed(p.elapsed)?;
    if !p.matrix.is_finite() {
        return Err(Error::Domain("propagator has non-finite entries"));
    }
    let sv = singular_values(&p.matrix);
    Ok(sort_descending(sv.map(|s| if s > 0.0 { s.ln() / p.elapsed } else { f64::NEG_INFINITY })))
}

/// `Σ ln|Rᵢᵢ| / t` from QR re-orthonormalization of the propagator after each
/// segment along the orbit from `s0` over `[0, t]`.
pub fn le_qr(sys: &SystemSpec, s0: &StateVec3, t: f64, tol: &Tolerance) -> Result<[f64; 3]> {
    check_elapsed(t)?;
    let mut frame = Matrix3::IDENTITY;
    let mut logs = [0.0; 3];
    propagator_segments(sys, s0, t, tol, |block| {
        let (q, r) = qr_diagonal(&(*block * frame));
        for (acc, rii) in logs.iter_mut().zip(r) {
            *acc += rii.abs().ln();
        }
        frame = q;
    })?;
    Ok(sort_descending(logs.map(|l| l / t)))
}

/// Size `δl` and direction cosines of an initial perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationDirection {
    magnitude: f64,
    cosines: [f64; 3],
}

impl PerturbationDirection {
    pub fn new(magnitude: f64, cosines: [f64; 3]) -> Result<Self> {
        if !(magnitude > 0.0) || !magnitude.is_finite() {
            return Err(Error::Domain("perturbation magnitude must be positive"));
        }
        let n2: f64 = cosines.iter().map(|c| c * c).sum();
        if !((n2 - 1.0).abs() <= 1e-12) {
            return Err(Error::Domain("direction cosines must have unit norm"));
        }
        Ok(PerturbationDirection { magnitude, cosines })
    }

    /// Splits a nonzero offset `δr₀` into size and direction.
    pub fn from_offset(offset: &StateVec3) -> Result<Self> {
        let magnitude = offset.norm();
        let unit = offset.normalized().ok_or(Error::Domain("offset must be nonzero"))?;
        Self::new(magnitude, unit.0)
    }

    pub fn axis(i: usize) -> Self {
        let mut cosines = [0.0; 3];
        cosines[i] = 1.0;
        PerturbationDirection { magnitude: 1.0, cosines }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn cosines(&self) -> [f64; 3] {
        self.cosines
    }

    pub fn unit(&self) -> StateVec3 {
        StateVec3(self.cosines)
    }
}

/// `|exp(∫J ds) u|`, the linear growth factor along `u`.
pub fn directional_growth(ij: &IntegratedJacobian, d: &PerturbationDirection) -> f64 {
    expm(&ij.matrix).mul_vec(&d.unit()).norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthEigenstructure {
    pub eigenvalues: ComplexTriple,
    /// Largest real part `J*(t)` among the eigenvalues.
    pub j_star: f64,
    pub horizon: f64,
}

pub fn growth_eigenstructure(ij: &IntegratedJacobian) -> GrowthEigenstructure {
    let eigenvalues = eig_general(&ij.matrix);
    GrowthEigenstructure { eigenvalues, j_star: eigenvalues.max_real(), horizon: ij.elapsed }
}

/// Both spectra from `∫J` over exactly one period of `cyc`, starting at its
/// anchor.
pub fn le_periodic(sys: &SystemSpec, cyc: &LimitCycle, tol: &Tolerance) -> Result<ExponentSpectrum> {
    let (_, ij) = integrate_augmented(sys, &cyc.anchor, cyc.period, tol)?;
    ExponentSpectrum::from_integrated(&ij, SpectrumMethod::OnePeriod)
}

/// `J*(t)/t` at each horizon, with the last value as the estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalEstimate {
    pub estimate: f64,
    /// `(t, J*(t)/t)` in horizon order.
    pub trace: Vec<(f64, f64)>,
}

impl MaximalEstimate {
    /// Largest change between consecutive trace values over the last `k`.
    pub fn tail_spread(&self, k: usize) -> f64 {
        let tail = &self.trace[self.trace.len().saturating_sub(k)..];
        let lo = tail.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

pub fn maximal_le_estimate(
    sys: &SystemSpec,
    s0: &StateVec3,
    horizons: &[f64],
    tol: &Tolerance,
) -> Result<MaximalEstimate> {
    if horizons.len() < 3 {
        return Err(Error::Domain("need at least three horizons"));
    }
    let trace: Vec<(f64, f64)> = augmented_checkpoints(sys, s0, horizons, tol)?
        .iter()
        .map(|ij| (ij.elapsed, growth_eigenstructure(ij).j_star / ij.elapsed))
        .collect();
    Ok(MaximalEstimate { estimate: trace[trace.len() - 1].1, trace })
}

/// `n` horizons spaced geometrically from `t_min` to `t_max`.
pub fn geometric_ladder(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) || n < 2 {
        return Err(Error::Domain("ladder needs 0 < t_min < t_max and n >= 2"));
    }
    let ratio = (t_max / t_min).powf(1.0 / (n - 1) as f64);
    let mut out: Vec<f64> = (0..n).map(|k| t_min * ratio.powi(k as i32)).collect();
    out[n - 1] = t_max;
    Ok(out)
}

/// Spectra along a non-periodic orbit at every rung of a geometric ladder.
/// The last rung is the reported value; the rest form the convergence trace.
pub fn long_time_spectrum(
    sys: &SystemSpec,
    s0: &StateVec3,
    t_min: f64,
    t_max: f64,
    rungs: usize,
    tol: &Tolerance,
) -> Result<Vec<ExponentSpectrum>> {
    let horizons = geometric_ladder(t_min, t_max, rungs)?;
    augmented_checkpoints(sys, s0, &horizons, tol)?
        .iter()
        .map(|ij| ExponentSpectrum::from_integrated(ij, SpectrumMethod::LongTime))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorfields::Forcing;
    use approx::assert_abs_diff_eq;

    fn m3() -> Matrix3 {
        Matrix3::from_rows([[-1.0, 10.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, -3.0]])
    }

    fn scaled(m: Matrix3, t: f64) -> IntegratedJacobian {
        IntegratedJacobian::linear_in_time(&m, t).unwrap()
    }

    fn close(a: [f64; 3], b: [f64; 3], eps: f64) {
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() <= eps, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn linear_real_parts() {
        close(le_linear(&Matrix3::from_diagonal([-2.0, -1.0, -3.0])), [-1.0, -2.0, -3.0], 1e-14);
        let rot = Matrix3::from_rows([[-0.3, 2.0, 0.0], [-2.0, -0.3, 0.0], [0.0, 0.0, 0.4]]);
        close(le_linear(&rot), [0.4, -0.3, -0.3], 1e-12);
    }

    #[test]
    fn companion_real_parts() {
        // λ³ + 0.8λ² + λ + 1: real root by bisection, then the pair from
        // the deflated quadratic
        let p = |x: f64| ((x + 0.8) * x + 1.0) * x + 1.0;
        let (mut lo, mut hi) = (-2.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let r = 0.5 * (lo + hi);
        // λ² + (0.8 + r)λ + (1 + r(0.8 + r)) has real part −(0.8 + r)/2
        let pair_re = -(0.8 + r) / 2.0;
        let companion = Matrix3::from_rows([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.0, -0.8]]);
        close(le_linear(&companion), sort_descending([r, pair_re, pair_re]), 1e-10);
    }

    #[test]
    fn matrix_examples() {
        for t in [0.5, 1.0, 7.0] {
            let m1 = scaled(Matrix3::from_rows([[1.0, 0.0, 0.0], [0.0, -2.0, 5.0], [0.0, -5.0, -2.0]]), t);
            close(le_j(&m1).unwrap(), [1.0, -2.0, -2.0], 1e-12);
            close(le_o_symmetric(&m1).unwrap(), [1.0, -2.0, -2.0], 1e-12);

            let m2 = scaled(Matrix3::from_rows([[-1.0, 0.0, 0.0], [0.0, -2.0, 1.0], [0.0, -1.0, -3.0]]), t);
            close(le_j(&m2).unwrap(), [-1.0, -2.5, -2.5], 1e-12);
            close(le_o_symmetric(&m2).unwrap(), [-1.0, -2.0, -3.0], 1e-12);

            let s = 101f64.sqrt();
            close(le_j(&scaled(m3(), t)).unwrap(), [-1.0, -2.0, -3.0], 1e-12);
            close(le_o_symmetric(&scaled(m3(), t)).unwrap(), [(s - 3.0) / 2.0, -3.0, (-s - 3.0) / 2.0], 1e-12);
        }
    }

    #[test]
    fn svd_route_on_triangular_example() {
        let p = Propagator::new(expm(&m3()), 1.0).unwrap();
        let le = le_finite_time_svd(&p).unwrap();
        // σ₁² = (tr + √(tr² − 4det²))/2 for the 2×2 block [[e⁻¹, c], [0, e⁻²]]
        let (e1, e2) = ((-1f64).exp(), (-2f64).exp());
        let c = 10.0 * (e1 - e2);
        let tr = e1 * e1 + c * c + e2 * e2;
        let det = e1 * e2;
        let top = ((tr + (tr * tr - 4.0 * det * det).sqrt()) / 2.0).sqrt();
        assert_abs_diff_eq!(le[0], top.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(le[0], 0.85779, epsilon = 1e-3);
        assert_abs_diff_eq!(le.iter().sum::<f64>(), -6.0, epsilon = 1e-10);
    }

    #[test]
    fn svd_route_underflow_sentinel() {
        let p = Propagator::new(Matrix3::from_diagonal([1.0, 0.5, 0.0]), 2.0).unwrap();
        let le = le_finite_time_svd(&p).unwrap();
        assert_eq!(le[2], f64::NEG_INFINITY);
        assert_abs_diff_eq!(le[1], 0.5f64.ln() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_propagator_any_time() {
        for t in [0.25, 1.0, 3.0] {
            let p = Propagator::new(expm(&Matrix3::from_diagonal([-1.0, -2.0, -3.0]).scale(t)), t).unwrap();
            close(le_finite_time_svd(&p).unwrap(), [-1.0, -2.0, -3.0], 1e-12);
        }
    }

    #[test]
    fn directional_growth_examples() {
        let ij = scaled(m3(), 1.0);
        let e2 = directional_growth(&ij, &PerturbationDirection::axis(1));
        let c = 10.0 * ((-1f64).exp() - (-2f64).exp());
        assert_abs_diff_eq!(e2, (c * c + (-4f64).exp()).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(e2, 2.32932, epsilon = 1e-3);
        let e3 = directional_growth(&ij, &PerturbationDirection::axis(2));
        assert_abs_diff_eq!(e3, (-3f64).exp(), epsilon = 1e-14);
        let diag = scaled(Matrix3::from_diagonal([-1.0, -2.0, -3.0]), 2.0);
        assert_abs_diff_eq!(directional_growth(&diag, &PerturbationDirection::axis(0)), (-2f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn direction_validation() {
        assert!(PerturbationDirection::new(1.0, [1.0, 1.0, 0.0]).is_err());
        assert!(PerturbationDirection::new(0.0, [1.0, 0.0, 0.0]).is_err());
        let d = PerturbationDirection::from_offset(&StateVec3::new(0.0, 3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(d.magnitude(), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.cosines()[2], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn eigenstructure_examples() {
        let t = 3.0;
        assert_abs_diff_eq!(
            growth_eigenstructure(&scaled(Matrix3::from_diagonal([-1.0, -2.0, -3.0]), t)).j_star,
            -t,
            epsilon = 1e-12
        );
        let m2 = Matrix3::from_rows([[-1.0, 0.0, 0.0], [0.0, -2.0, 1.0], [0.0, -1.0, -3.0]]);
        assert_abs_diff_eq!(growth_eigenstructure(&scaled(m2, t)).j_star, -t, epsilon = 1e-12);
        let m1 = Matrix3::from_rows([[1.0, 0.0, 0.0], [0.0, -2.0, 5.0], [0.0, -5.0, -2.0]]);
        assert_abs_diff_eq!(growth_eigenstructure(&scaled(m1, t)).j_star, t, epsilon = 1e-12);
    }

    #[test]
    fn maximal_estimate_on_linear_flow() {
        let sys = SystemSpec::linear(Matrix3::from_diagonal([-1.0, -2.0, -3.0]), Forcing::Zero).unwrap();
        let est =
            maximal_le_estimate(&sys, &StateVec3::new(1.0, 1.0, 1.0), &[1.0, 2.0, 4.0, 8.0], &Tolerance::default())
                .unwrap();
        for (_, v) in &est.trace {
            assert_abs_diff_eq!(*v, -1.0, epsilon = 1e-10);
        }
        assert!(maximal_le_estimate(&sys, &StateVec3::ZERO, &[1.0, 2.0], &Tolerance::default()).is_err());
    }

    #[test]
    fn ladder_is_geometric() {
        let l = geometric_ladder(1.0, 1000.0, 4).unwrap();
        close([l[0], l[1], l[2]], [1.0, 10.0, 100.0], 1e-10);
        assert_eq!(l[3], 1000.0);
        assert!(geometric_ladder(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn elapsed_must_be_positive() {
        let bad = IntegratedJacobian { matrix: Matrix3::IDENTITY, elapsed: 0.0 };
        assert!(le_j(&bad).is_err());
        assert!(le_o_symmetric(&bad).is_err());
    }
}
