//! Dense 3×3 real linear algebra: vectors, matrices, general and symmetric
//! eigenvalues, the matrix exponential and singular values.

use core::f64::consts::PI;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A point (or tangent vector) in three-dimensional phase space.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateVec3(pub [f64; 3]);

impl StateVec3 {
    pub const ZERO: StateVec3 = StateVec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        StateVec3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: &StateVec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &StateVec3) -> StateVec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        StateVec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<StateVec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }
}

impl Add for StateVec3 {
    type Output = StateVec3;
    fn add(self, rhs: StateVec3) -> StateVec3 {
        StateVec3([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for StateVec3 {
    type Output = StateVec3;
    fn sub(self, rhs: StateVec3) -> StateVec3 {
        StateVec3([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Neg for StateVec3 {
    type Output = StateVec3;
    fn neg(self) -> StateVec3 {
        StateVec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for StateVec3 {
    type Output = StateVec3;
    fn mul(self, k: f64) -> StateVec3 {
        StateVec3([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

impl Index<usize> for StateVec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<[f64; 3]> for StateVec3 {
    fn from(v: [f64; 3]) -> Self {
        StateVec3(v)
    }
}

/// Dense real 3×3 matrix stored row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    pub const ZERO: Matrix3 = Matrix3([[0.0; 3]; 3]);
    pub const IDENTITY: Matrix3 = Matrix3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub const fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Matrix3(rows)
    }

    pub const fn from_diagonal(d: [f64; 3]) -> Self {
        Matrix3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    /// Row-major flattening, the layout used by the augmented integrators.
    pub fn to_flat(&self) -> [f64; 9] {
        let m = &self.0;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    pub fn from_flat(v: &[f64]) -> Self {
        Matrix3([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn transpose(&self) -> Matrix3 {
        let m = &self.0;
        Matrix3([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Sum of the principal 2×2 minors (second invariant).
    pub fn principal_minor_sum(&self) -> f64 {
        let m = &self.0;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0])
            + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
            + (m[1][1] * m[2][2] - m[1][2] * m[2][1])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        (0..3).map(|j| (0..3).map(|i| self.0[i][j].abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn scale(&self, k: f64) -> Matrix3 {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|v| *v *= k);
        out
    }

    pub fn mul_vec(&self, v: &StateVec3) -> StateVec3 {
        let m = &self.0;
        StateVec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }

    pub fn column(&self, j: usize) -> StateVec3 {
        StateVec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    /// `‖M Mᵀ − Mᵀ M‖_max`, zero exactly for normal matrices.
    pub fn normality_defect(&self) -> f64 {
        let t = self.transpose();
        (*self * t - t * *self).max_abs()
    }

    /// Solves `self · X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Matrix3) -> Option<Matrix3> {
        let mut out = Matrix3::ZERO;
        for j in 0..3 {
            let col = solve_linear(self.0, rhs.column(j).0)?;
            for i in 0..3 {
                out.0[i][j] = col[i];
            }
        }
        Some(out)
    }

    pub fn inverse(&self) -> Option<Matrix3> {
        self.solve(&Matrix3::IDENTITY)
    }
}

impl Add for Matrix3 {
    type Output = Matrix3;
    fn add(mut self, rhs: Matrix3) -> Matrix3 {
        self += rhs;
        self
    }
}

impl AddAssign for Matrix3 {
    fn add_assign(&mut self, rhs: Matrix3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Matrix3 {
    type Output = Matrix3;
    fn sub(self, rhs: Matrix3) -> Matrix3 {
        self + rhs.scale(-1.0)
    }
}

impl Neg for Matrix3 {
    type Output = Matrix3;
    fn neg(self) -> Matrix3 {
        self.scale(-1.0)
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;
    fn mul(self, rhs: Matrix3) -> Matrix3 {
        let mut out = Matrix3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl Mul<StateVec3> for Matrix3 {
    type Output = StateVec3;
    fn mul(self, v: StateVec3) -> StateVec3 {
        self.mul_vec(&v)
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

/// Gaussian elimination with partial pivoting for small dense systems.
/// Returns `None` when a pivot vanishes.
pub(crate) fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..N {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Three complex numbers ordered by descending real part, then descending
/// imaginary part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexTriple(pub [Complex64; 3]);

impl ComplexTriple {
    /// Sorts with the crate-wide tie-break: real part, then imaginary part,
    /// both descending; equal keys keep their input order.
    pub fn sorted(mut values: [Complex64; 3]) -> Self {
        // insertion sort is stable, which pins the index tie-break
        for i in 1..3 {
            let mut j = i;
            while j > 0 && precedes(&values[j], &values[j - 1]) {
                values.swap(j, j - 1);
                j -= 1;
            }
        }
        ComplexTriple(values)
    }

    pub fn real_parts(&self) -> [f64; 3] {
        [self.0[0].re, self.0[1].re, self.0[2].re]
    }

    /// Spectral abscissa: the largest real part.
    pub fn max_real(&self) -> f64 {
        self.0[0].re
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }
}

fn precedes(a: &Complex64, b: &Complex64) -> bool {
    a.re > b.re || (a.re == b.re && a.im > b.im)
}

/// Sorts three reals in descending order.
pub fn sort_descending(mut v: [f64; 3]) -> [f64; 3] {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Characteristic polynomial `λ³ + c2 λ² + c1 λ + c0` of `m`, as `[c2, c1, c0]`.
pub fn characteristic_coefficients(m: &Matrix3) -> [f64; 3] {
    [-m.trace(), m.principal_minor_sum(), -m.determinant()]
}

/// Evaluates `det(λI − m)` at a complex point.
pub fn charpoly_eval(m: &Matrix3, lambda: Complex64) -> Complex64 {
    let [c2, c1, c0] = characteristic_coefficients(m);
    ((lambda + c2) * lambda + c1) * lambda + c0
}

/// Eigenvalues of a general real 3×3 matrix from its characteristic cubic.
///
/// The matrix is scaled to unit max-norm, one real root is taken from
/// Cardano's formula (trigonometric branch when all three roots are real)
/// and the remaining pair comes from the deflated quadratic. Each root then
/// receives one guarded Newton step on the cubic, so conjugate pairs stay
/// exactly conjugate.
pub fn eig_general(m: &Matrix3) -> ComplexTriple {
    let scale = m.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        let v = if scale == 0.0 { 0.0 } else { f64::NAN };
        return ComplexTriple([Complex64::new(v, 0.0); 3]);
    }
    let a = m.scale(1.0 / scale);
    let coeffs = characteristic_coefficients(&a);
    let roots = cubic_roots(coeffs);
    ComplexTriple::sorted(roots.map(|r| r * scale))
}

fn cubic_roots([p, q, r]: [f64; 3]) -> [Complex64; 3] {
    let eval = |x: f64| ((x + p) * x + q) * x + r;
    let deriv = |x: f64| (3.0 * x + 2.0 * p) * x + q;
    let polish = |x: f64| {
        let d = deriv(x);
        if d == 0.0 {
            return x;
        }
        let candidate = x - eval(x) / d;
        if eval(candidate).abs() < eval(x).abs() {
            candidate
        } else {
            x
        }
    };

    // depressed cubic y³ + P y + Q with λ = y − p/3
    let shift = p / 3.0;
    let big_p = q - p * p / 3.0;
    let big_q = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let disc = (big_q / 2.0).powi(2) + (big_p / 3.0).powi(3);

    let anchor = if disc > 0.0 {
        let sq = disc.sqrt();
        let u = -big_q.signum() * (big_q.abs() / 2.0 + sq).cbrt();
        let v = if u != 0.0 { -big_p / (3.0 * u) } else { 0.0 };
        u + v - shift
    } else if big_p == 0.0 {
        -shift
    } else {
        let rho = 2.0 * (-big_p / 3.0).sqrt();
        let arg = (3.0 * big_q / (2.0 * big_p) * (-3.0 / big_p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        // deflate by the root of largest magnitude
        (0..3)
            .map(|k| rho * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(-shift)
    };
    let r1 = polish(anchor);

    // λ² + b λ + c from synthetic division by (λ − r1)
    let b = p + r1;
    let c = q + r1 * b;
    let half = -b / 2.0;
    let qd = half * half - c;
    let [r2, r3] = if qd >= 0.0 {
        let s = qd.sqrt();
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { c / big } else { 0.0 };
        [Complex64::new(polish(big), 0.0), Complex64::new(polish(small), 0.0)]
    } else {
        let z = Complex64::new(half, (-qd).sqrt());
        let ev = |l: Complex64| ((l + p) * l + q) * l + r;
        let dv = |l: Complex64| (l * 3.0 + 2.0 * p) * l + q;
        let d = dv(z);
        let z = if d.norm() > 0.0 {
            let cand = z - ev(z) / d;
            if ev(cand).norm() < ev(z).norm() && cand.im != 0.0 {
                cand
            } else {
                z
            }
        } else {
            z
        };
        [z, z.conj()]
    };
    [Complex64::new(r1, 0.0), r2, r3]
}

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Uses the closed-form trigonometric solution; when two eigenvalues nearly
/// coincide (normalized discriminant below `1e-6`) the cyclic Jacobi method
/// is used instead, since `acos` loses precision next to ±1.
pub fn eig_symmetric(m: &Matrix3) -> Result<[f64; 3]> {
    if !m.is_finite() {
        return Err(Error::Domain("matrix has non-finite entries"));
    }
    let scale = m.max_abs();
    let asym = (m.0[0][1] - m.0[1][0]).abs().max((m.0[0][2] - m.0[2][0]).abs()).max((m.0[1][2] - m.0[2][1]).abs());
    if asym > 1e-12 * scale {
        return Err(Error::Domain("eig_symmetric requires a symmetric matrix"));
    }
    Ok(symmetric_eigenvalues(m))
}

fn symmetric_eigenvalues(m: &Matrix3) -> [f64; 3] {
    let a = &m.0;
    let q = m.trace() / 3.0;
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let b = (*m - Matrix3::IDENTITY.scale(q)).scale(1.0 / p);
    let r = b.determinant() / 2.0;
    if 1.0 - r.abs() < 1e-6 {
        return jacobi_eigenvalues(m);
    }
    let phi = r.clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    sort_descending([e1, e2, e3])
}

/// Cyclic Jacobi rotations on a symmetric 3×3 matrix.
fn jacobi_eigenvalues(m: &Matrix3) -> [f64; 3] {
    let mut a = m.0;
    let scale = m.max_abs();
    for _sweep in 0..32 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    sort_descending([a[0][0], a[1][1], a[2][2]])
}

/// `(m + mᵀ) / (2t)`.
pub fn symmetrize_scaled(m: &Matrix3, t: f64) -> Result<Matrix3> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain("symmetrize_scaled requires t > 0"));
    }
    let mut out = Matrix3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out.0[i][j] = (m.0[i][j] + m.0[j][i]) / (2.0 * t);
        }
    }
    Ok(out)
}

// Padé (6,6) coefficients: (2q−k)! q! / ((2q)! k! (q−k)!) with q = 6.
const PADE6: [f64; 7] = [1.0, 1.0 / 2.0, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];

/// Matrix exponential by scaling and squaring on the (6,6) Padé approximant.
pub fn expm(m: &Matrix3) -> Matrix3 {
    let norm = m.one_norm();
    if norm == 0.0 {
        return Matrix3::IDENTITY;
    }
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = m.scale(0.5f64.powi(squarings));

    let mut power = Matrix3::IDENTITY;
    let mut numer = Matrix3::ZERO;
    let mut denom = Matrix3::ZERO;
    for (k, c) in PADE6.iter().enumerate() {
        if k > 0 {
            power = power * a;
        }
        numer += power.scale(*c);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        denom += power.scale(sign * c);
    }
    let mut x = denom.solve(&numer).unwrap_or(Matrix3::IDENTITY);
    for _ in 0..squarings {
        x = x * x;
    }
    x
}

/// Singular values in descending order, computed by one-sided Jacobi
/// orthogonalization of the columns. Small singular values keep their
/// relative accuracy, unlike the square roots of eigenvalues of `mᵀm`.
pub fn singular_values(m: &Matrix3) -> [f64; 3] {
    let mut cols = [m.column(0), m.column(1), m.column(2)];
    for _sweep in 0..60 {
        let mut rotated = false;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = cols[i].dot(&cols[i]);
            let beta = cols[j].dot(&cols[j]);
            let gamma = cols[i].dot(&cols[j]);
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let t = if zeta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            let ci = cols[i];
            let cj = cols[j];
            cols[i] = ci * c - cj * s;
            cols[j] = ci * s + cj * c;
        }
        if !rotated {
            break;
        }
    }
    sort_descending(cols.map(|c| c.norm()))
}

/// Orthonormal `Q` and the diagonal of `R` in `m = QR`, by modified
/// Gram–Schmidt with one reorthogonalization pass. The third column of `Q` is
/// `q₀ × q₁`, so `Q` stays orthonormal even when `m` is singular; the diagonal
/// then carries the sign and may be zero.
pub fn qr_diagonal(m: &Matrix3) -> (Matrix3, [f64; 3]) {
    let a = [m.column(0), m.column(1), m.column(2)];
    let r0 = a[0].norm();
    let q0 = a[0].normalized().unwrap_or(StateVec3([1.0, 0.0, 0.0]));
    let mut v1 = a[1];
    for _ in 0..2 {
        v1 = v1 - q0 * q0.dot(&v1);
    }
    let r1 = v1.norm();
    let q1 = v1.normalized().unwrap_or_else(|| {
        // any unit vector normal to q0
        let pick = if q0.x().abs() < 0.9 { StateVec3([1.0, 0.0, 0.0]) } else { StateVec3([0.0, 1.0, 0.0]) };
        q0.cross(&pick).normalized().unwrap_or(StateVec3([0.0, 0.0, 1.0]))
    });
    let q2 = q0.cross(&q1);
    let r2 = q2.dot(&a[2]);
    let q = Matrix3([[q0.0[0], q1.0[0], q2.0[0]], [q0.0[1], q1.0[1], q2.0[1]], [q0.0[2], q1.0[2], q2.0[2]]]);
    (q, [r0, r1, r2])
}
