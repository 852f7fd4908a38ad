use num_complex::Complex64;
use orbex_core::exponents::{directional_growth, le_finite_time_svd, le_j, le_o_symmetric, PerturbationDirection};
use orbex_core::matrix3::{eig_general, eig_symmetric, expm, singular_values};
use orbex_core::orbitlab::{classify_ref1, classify_signs};
use orbex_core::vectorfields::{eval_field, integrate, integrate_augmented, integrate_propagator, propagate};
use orbex_core::{Forcing, IntegratedJacobian, Matrix3, Propagator, StateVec3, SystemSpec, Tolerance};
use proptest::prelude::*;

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

fn mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    Matrix3(core::array::from_fn(|i| core::array::from_fn(|j| (0..3).map(|k| a.0[i][k] * b.0[k][j]).sum())))
}

fn sub(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    Matrix3(core::array::from_fn(|i| core::array::from_fn(|j| a.0[i][j] - b.0[i][j])))
}

/// Rotation about a unit axis, Rodrigues form.
fn rotation(axis: [f64; 3], angle: f64) -> Matrix3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let k = 1.0 - c;
    Matrix3([
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ])
}

/// Smallest max-distance over all pairings of two eigenvalue triples.
fn multiset_gap(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    PERMS.iter().map(|p| (0..3).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max)).fold(f64::INFINITY, f64::min)
}

fn entries(range: f64) -> impl Strategy<Value = Matrix3> {
    prop::array::uniform3(prop::array::uniform3(-range..range)).prop_map(Matrix3)
}

fn axis() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0..1.0f64).prop_filter("axis", |v| v.iter().map(|x| x * x).sum::<f64>() > 0.01)
}

fn state(range: f64) -> impl Strategy<Value = StateVec3> {
    prop::array::uniform3(-range..range).prop_map(StateVec3)
}

fn any_system() -> impl Strategy<Value = SystemSpec> {
    prop_oneof![
        entries(1.0).prop_map(|a| SystemSpec::linear(a, Forcing::Zero).unwrap()),
        (-0.9..0.9f64, 0.0..1.2f64).prop_map(|(a, b)| SystemSpec::two_ring_torus(a, b).unwrap()),
        (0.0..1.2f64).prop_map(|b| SystemSpec::cubed_ring(b).unwrap()),
        (0.33..1.0f64).prop_map(|b| SystemSpec::silnikov(1.0, b).unwrap()),
    ]
}

/// Seeds near the attracting set; farther out the cubic term sends orbits to infinity.
fn silnikov_seed() -> impl Strategy<Value = StateVec3> {
    (prop::bool::ANY, prop::array::uniform3(-0.1..0.1f64)).prop_map(|(flip, d)| {
        let s = [0.5 + d[0], 0.1 + d[1], d[2]];
        StateVec3(if flip { s.map(|v| -v) } else { s })
    })
}

/// Inside the unit cylinder; the two-ring flow blows up outside it.
fn ring_seed() -> impl Strategy<Value = StateVec3> {
    (0.0..0.95f64, -3.2..3.2f64, -1.5..1.5f64).prop_map(|(r, th, z)| StateVec3([r * th.cos(), r * th.sin(), z]))
}

fn seeded_system() -> impl Strategy<Value = (SystemSpec, StateVec3)> {
    any_system().prop_flat_map(|sys| {
        let seed = match sys {
            SystemSpec::Silnikov { .. } => silnikov_seed().boxed(),
            SystemSpec::Linear { .. } => state(1.0).boxed(),
            _ => ring_seed().boxed(),
        };
        (Just(sys), seed)
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn liouville_determinant((sys, s0) in seeded_system(), t in 0.5..100.0f64) {
        // the default tolerance leaves about 1e-10 per unit time in ln det
        let tol = Tolerance::new(1e-12, 1e-14).unwrap();
        let p = integrate_propagator(&sys, &s0, t, &tol).unwrap();
        let (_, ij) = integrate_augmented(&sys, &s0, t, &tol).unwrap();
        let expected = ij.matrix.trace().exp();
        let rel = (p.determinant() - expected).abs() / expected;
        prop_assert!(rel < 1e-8, "{} t={t} rel={rel:e}", sys.name());
    }

    #[test]
    fn eigenvalues_reproduce_trace_and_determinant(m in entries(10.0)) {
        let e = eig_general(&m).0;
        let sum: Complex64 = e.iter().sum();
        let prod: Complex64 = e.iter().product();
        let scale = m.max_abs().max(1.0);
        prop_assert!((sum.re - m.trace()).abs() <= 1e-10 * scale.max(m.trace().abs()));
        prop_assert!((prod.re - m.determinant()).abs() <= 1e-10 * scale.powi(3).max(m.determinant().abs()));
    }

    #[test]
    fn eigenvalues_invariant_under_similarity(
        m in entries(5.0),
        d in prop::array::uniform3(0.5..2.0f64),
        u in axis(), ua in -3.0..3.0f64,
        v in axis(), va in -3.0..3.0f64,
    ) {
        // S = U·D·V with orthogonal U, V, so cond(S) = max d / min d ≤ 4
        let dm = Matrix3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]);
        let s = mul(&mul(&rotation(u, ua), &dm), &rotation(v, va));
        let conj = mul(&mul(&s, &m), &s.inverse().unwrap());
        let gap = multiset_gap(&eig_general(&m).0, &eig_general(&conj).0);
        prop_assert!(gap < 1e-8, "gap {gap:e}");
    }

    #[test]
    fn symmetric_eigenvalues_invariant_under_rotation(m in entries(5.0), u in axis(), angle in -3.0..3.0f64) {
        let sym = Matrix3(core::array::from_fn(|i| core::array::from_fn(|j| 0.5 * (m.0[i][j] + m.0[j][i]))));
        let q = rotation(u, angle);
        let conj = mul(&mul(&q, &sym), &q.transpose());
        let conj = Matrix3(core::array::from_fn(|i| core::array::from_fn(|j| 0.5 * (conj.0[i][j] + conj.0[j][i]))));
        let a = eig_symmetric(&sym).unwrap();
        let b = eig_symmetric(&conj).unwrap();
        for i in 0..3 {
            prop_assert!((a[i] - b[i]).abs() < 1e-10 * sym.max_abs().max(1.0), "{a:?} {b:?}");
        }
    }

    #[test]
    fn exponential_inverse(m in entries(10.0)) {
        let m = m.scale((10.0 / m.frobenius_norm()).min(1.0));
        let (e, f) = (expm(&m), expm(&m.scale(-1.0)));
        // the product cannot beat a few ulps of ‖e^m‖·‖e^-m‖
        let floor = 8.0 * f64::EPSILON * e.frobenius_norm() * f.frobenius_norm();
        let err = sub(&mul(&e, &f), &Matrix3::IDENTITY).max_abs();
        prop_assert!(err < floor.max(1e-10), "err {err:e} floor {floor:e}");
    }

    #[test]
    fn singular_value_product(m in entries(5.0)) {
        let s = singular_values(&m);
        let det = m.determinant().abs();
        prop_assert!(s[0] >= s[1] && s[1] >= s[2] && s[2] >= 0.0);
        prop_assert!((s[0] * s[1] * s[2] - det).abs() <= 1e-10 * det.max(s[0].powi(3) * 1e-6));
    }

    #[test]
    fn normal_matrices_agree_on_all_routes(
        sigma in -2.0..2.0f64, omega in -3.0..3.0f64, mu in -2.0..2.0f64,
        u in axis(), angle in -3.0..3.0f64, t in 0.2..5.0f64,
    ) {
        let q = rotation(u, angle);
        let block = Matrix3([[sigma, omega, 0.0], [-omega, sigma, 0.0], [0.0, 0.0, mu]]);
        let n = mul(&mul(&q, &block), &q.transpose());
        prop_assume!(n.normality_defect() < 1e-12);
        let ij = IntegratedJacobian::linear_in_time(&n, t).unwrap();
        let j = le_j(&ij).unwrap();
        let o = le_o_symmetric(&ij).unwrap();
        let svd = le_finite_time_svd(&Propagator::new(expm(&n.scale(t)), t).unwrap()).unwrap();
        let mut want = [sigma, sigma, mu];
        want.sort_by(|a, b| b.total_cmp(a));
        for i in 0..3 {
            prop_assert!((j[i] - want[i]).abs() < 1e-8, "le_j {j:?} {want:?}");
            prop_assert!((o[i] - want[i]).abs() < 1e-8, "le_o {o:?} {want:?}");
            prop_assert!((svd[i] - want[i]).abs() < 1e-8, "svd {svd:?} {want:?}");
        }
    }

    #[test]
    fn exponent_sums_equal_the_averaged_trace(m in entries(5.0), t in 0.1..50.0f64) {
        let ij = IntegratedJacobian::new(m.scale(t), t).unwrap();
        let want = m.trace();
        let scale = want.abs().max(m.max_abs());
        prop_assert!((le_j(&ij).unwrap().iter().sum::<f64>() - want).abs() <= 1e-10 * scale);
        prop_assert!((le_o_symmetric(&ij).unwrap().iter().sum::<f64>() - want).abs() <= 1e-10 * scale);
    }

    #[test]
    fn directional_growth_bounded_by_top_singular_value(m in entries(1.5), u in axis()) {
        let ij = IntegratedJacobian::new(m, 1.0).unwrap();
        let e = expm(&m);
        let top = singular_values(&e)[0];
        let d = PerturbationDirection::from_offset(&StateVec3(u)).unwrap();
        prop_assert!(directional_growth(&ij, &d) <= top * (1.0 + 1e-12));
        // top right-singular vector by power iteration on EᵀE
        let gram = e.transpose() * e;
        let mut v = StateVec3([1.0, 0.7, 0.3]);
        for _ in 0..2000 {
            v = (gram * v).normalized().unwrap();
        }
        let along = directional_growth(&ij, &PerturbationDirection::from_offset(&v).unwrap());
        prop_assume!(singular_values(&e)[1] < 0.99 * top);
        prop_assert!((along - top).abs() <= 1e-8 * top, "{along} {top}");
    }

    #[test]
    fn classifiers_ignore_order(spec in prop::array::uniform3(-1.0..1.0f64), zero in 1e-4..0.2f64, p in 0usize..6) {
        let shuffled = PERMS[p].map(|i| spec[i]);
        prop_assert_eq!(classify_signs(&spec, zero), classify_signs(&shuffled, zero));
        prop_assert_eq!(classify_ref1(&spec, zero), classify_ref1(&shuffled, zero));
    }

    #[test]
    fn silnikov_field_is_odd(a in 0.1..3.0f64, b in 0.01..2.0f64, s in state(5.0)) {
        let sys = SystemSpec::silnikov(a, b).unwrap();
        let neg = StateVec3(s.0.map(|v| -v));
        let f = eval_field(&sys, &s, 0.0).unwrap();
        let g = eval_field(&sys, &neg, 0.0).unwrap();
        prop_assert_eq!(g.0, f.0.map(|v| -v));
    }

    #[test]
    fn silnikov_trajectories_reflect(b in 0.33..1.0f64, s in silnikov_seed(), t in 1.0..50.0f64) {
        let sys = SystemSpec::silnikov(1.0, b).unwrap();
        let tol = Tolerance::default();
        let neg = StateVec3(s.0.map(|v| -v));
        let fwd = integrate(&sys, &s, 0.0, t, &tol).unwrap();
        let back = integrate(&sys, &neg, 0.0, t, &tol).unwrap();
        for k in 0..=20 {
            let tk = if k == 20 { fwd.end_time() } else { t * k as f64 / 20.0 };
            let (p, q) = (fwd.at(tk).unwrap(), back.at(tk).unwrap());
            for i in 0..3 {
                prop_assert!((p.0[i] + q.0[i]).abs() < 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn halving_the_tolerance_moves_endpoints_little((sys, s0) in seeded_system(), t in 0.5..20.0f64) {
        let tol = Tolerance::new(1e-8, 1e-10).unwrap();
        let a = propagate(&sys, &s0, 0.0, t, &tol).unwrap();
        let b = propagate(&sys, &s0, 0.0, t, &tol.halved()).unwrap();
        // the tolerance is relative to the state where each error is made, so
        // measure it at the endpoint both as is and as carried there from s0;
        // near an unstable equilibrium the second is much larger
        let carried = singular_values(&integrate_propagator(&sys, &s0, t, &tol).unwrap().matrix)[0] * s0.norm();
        let bound = 10.0 * (tol.atol + tol.rtol * a.norm().max(carried).max(1.0));
        prop_assert!((a - b).norm() < bound, "{} {:?} {:?}", sys.name(), a, b);
    }

    #[test]
    fn linear_integrated_jacobian_is_linear_in_time(a in entries(1.0), s0 in state(1.0), t in 0.1..100.0f64) {
        let sys = SystemSpec::linear(a, Forcing::Constant(StateVec3([0.3, -0.1, 0.2]))).unwrap();
        let (_, ij) = integrate_augmented(&sys, &s0, t, &Tolerance::default()).unwrap();
        prop_assert!(sub(&ij.matrix, &a.scale(t)).max_abs() <= 1e-10 * t * a.max_abs().max(1.0));
    }
}
