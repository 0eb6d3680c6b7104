//! Property tests for the invariants each layer promises.

use std::f64::consts::PI;

use ddvv_core::construction::phi_jets_with;
use ddvv_core::expr::{eval_jet, BinaryOp, EvalOptions, UnaryOp};
use ddvv_core::geometry::{canonical_frame, curvatures_of, equality_form, traceless_commutator};
use ddvv_core::jets::Signature;
use ddvv_core::linalg::{gram_schmidt_pivoted, sym_eigen};
use ddvv_core::surface::eval_surface;
use ddvv_core::transforms::{normal_transport, MapKind};
use ddvv_core::{
    builtin, curvatures, fundamental_forms, parse, AmbientMap, ChartPoint, Expr, Jet2, ShapeData, Tolerances,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

// ---- strategies ----

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![Just(Expr::Var), Just(Expr::imag_unit()), (0u32..40).prop_map(|k| Expr::real(k as f64 / 4.0)),]
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    // Depth at most 6.
    literal().prop_recursive(6, 64, 2, |inner| {
        prop_oneof![
            (inner.clone(), 0usize..7).prop_map(|(e, k)| {
                let op = [
                    UnaryOp::Neg,
                    UnaryOp::Exp,
                    UnaryOp::Log,
                    UnaryOp::Sin,
                    UnaryOp::Cos,
                    UnaryOp::Sinh,
                    UnaryOp::Cosh,
                ][k];
                Expr::unary(op, e)
            }),
            (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, k)| {
                let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div][k];
                Expr::binary(op, a, b)
            }),
            (inner, -3i32..5).prop_map(|(e, k)| e.pow(k)),
        ]
    })
}

fn jet2(m: usize) -> impl Strategy<Value = Jet2> {
    (-2.0..2.0f64, prop::collection::vec(-2.0..2.0f64, m), prop::collection::vec(-2.0..2.0f64, m * m))
        .prop_map(move |(v, g, h)| Jet2::from_parts(v, &g, |i, j| h[i.min(j) * m + i.max(j)]))
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |x| {
        let a = DMatrix::from_vec(n, n, x);
        (&a + a.transpose()) * 0.5
    })
}

fn orthogonal(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |x| {
        let a = DMatrix::from_vec(n, n, x) + DMatrix::identity(n, n) * 3.0;
        a.qr().q()
    })
}

fn sized_symmetric_pair() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, f64)> {
    (3usize..=6).prop_flat_map(|n| (symmetric(n), symmetric(n), orthogonal(n), -PI..PI))
}

fn rotate(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    q.transpose() * a * q
}

fn mix(a1: &DMatrix<f64>, a2: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    (a1 * t.cos() + a2 * t.sin(), a2 * t.cos() - a1 * t.sin())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn close_jets(a: &Jet2, b: &Jet2, tol: f64) -> bool {
    let m = a.params();
    if rel(a.value(), b.value()) > tol {
        return false;
    }
    (0..m).all(|i| rel(a.d(i), b.d(i)) <= tol && (0..m).all(|j| rel(a.dd(i, j), b.dd(i, j)) <= tol))
}

// ---- expr ----

proptest! {
    #[test]
    fn print_parse_round_trip(e in expr_tree()) {
        let text = e.to_string();
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn polynomial_derivatives_are_exact(
        coeffs in prop::collection::vec((-3i32..=3, -3i32..=3), 1..6),
        re in -1.5..1.5f64,
        im in -1.5..1.5f64,
    ) {
        // p(z) = sum c_k z^k with Gaussian-integer coefficients.
        let c: Vec<Complex64> = coeffs.iter().map(|&(a, b)| Complex64::new(a as f64, b as f64)).collect();
        let text = c
            .iter()
            .enumerate()
            .map(|(k, ck)| format!("({} + {}*i)*z^{k}", ck.re, ck.im))
            .collect::<Vec<_>>()
            .join(" + ");
        let e = parse(&text).unwrap();
        let z = Complex64::new(re, im);
        let jet = eval_jet(&e, z, 3, &EvalOptions::default()).unwrap();
        for order in 0..=3 {
            // d^order/dz^order of z^k is k!/(k-order)! z^(k-order).
            let want: Complex64 = c
                .iter()
                .enumerate()
                .filter(|(k, _)| *k >= order)
                .map(|(k, ck)| {
                    let falling: f64 = ((k - order + 1)..=k).map(|j| j as f64).product();
                    ck * falling * z.powi((k - order) as i32)
                })
                .sum();
            prop_assert!((jet.deriv(order) - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }
}

// ---- jets ----

proptest! {
    #[test]
    fn jet_ring_laws(a in jet2(3), b in jet2(3), c in jet2(3)) {
        let tol = 1e-12;
        prop_assert!(close_jets(&(a * b), &(b * a), tol));
        prop_assert!(close_jets(
            &((a * b) * c),
            &(a * (b * c)),
            tol
        ));
        prop_assert!(close_jets(
            &((a + b) * c),
            &(a * c + b * c),
            tol
        ));
        prop_assert!(close_jets(&(a - a), &Jet2::constant(0.0, 3), tol));
    }

    #[test]
    fn sqrt_chain_rule_matches_finite_differences(
        x0 in -1.0..1.0f64,
        y0 in -1.0..1.0f64,
        p in 0.1..2.0f64,
    ) {
        // f(x, y) = sqrt(p + x^2 + x y^2 + sin(y)^2)
        let f = |x: f64, y: f64| (p + x * x + x * y * y + y.sin().powi(2)).sqrt();
        let x = Jet2::seed(x0, 0, 2);
        let y = Jet2::seed(y0, 1, 2);
        let arg = (x * x + x * y * y + y.sin() * y.sin()).add_const(p);
        prop_assume!(arg.value() > 0.05);
        let jet = arg.sqrt().unwrap();

        let h = 1e-4;
        prop_assert!(rel(jet.value(), f(x0, y0)) < 1e-14);
        let fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        prop_assert!((jet.d(0) - fx).abs() < 1e-6, "{} vs {fx}", jet.d(0));
        prop_assert!((jet.d(1) - fy).abs() < 1e-6);
        let fxx = (f(x0 + h, y0) - 2.0 * f(x0, y0) + f(x0 - h, y0)) / (h * h);
        let fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h) + f(x0 - h, y0 - h)) / (4.0 * h * h);
        prop_assert!((jet.dd(0, 0) - fxx).abs() < 1e-4, "{} vs {fxx}", jet.dd(0, 0));
        prop_assert!((jet.dd(0, 1) - fxy).abs() < 1e-4);
    }
}

// ---- linalg ----

proptest! {
    #[test]
    fn sym_eigen_reconstructs(a in (1usize..=6).prop_flat_map(symmetric)) {
        let e = sym_eigen(&a).unwrap();
        let n = a.nrows();
        prop_assert!((e.reconstruct() - &a).norm() <= 1e-12 * a.norm().max(1.0));
        let qtq = e.vectors.transpose() * &e.vectors;
        prop_assert!((qtq - DMatrix::identity(n, n)).norm() <= 1e-12);
    }

    #[test]
    fn gram_schmidt_gives_orthonormal_basis(
        vecs in (2usize..=6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-2.0..2.0f64, n), 1..=n)),
    ) {
        let vs: Vec<DVector<f64>> = vecs.iter().map(|v| DVector::from_vec(v.clone())).collect();
        let o = gram_schmidt_pivoted(&vs, &[], 1e-9).unwrap();
        let rank = vs.len().min(vs[0].len());
        let m = DMatrix::from_columns(&vs);
        prop_assume!(m.clone().svd(false, false).singular_values.min() > 1e-6 || vs.len() > vs[0].len());
        prop_assert_eq!(o.basis.len(), rank);
        for (i, a) in o.basis.iter().enumerate() {
            for (j, b) in o.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.dot(b) - want).abs() < 1e-12);
            }
        }
        // Each accepted candidate lies in the span of the basis.
        for &p in &o.pivots {
            let v = &vs[p];
            let proj: DVector<f64> = o.basis.iter().map(|b| b * b.dot(v)).sum();
            prop_assert!((proj - v).norm() < 1e-10 * v.norm().max(1.0));
        }
    }
}

// ---- geometry ----

proptest! {
    #[test]
    fn curvatures_do_not_depend_on_frames((a1, a2, q, t) in sized_symmetric_pair()) {
        let base = curvatures_of(&[a1.clone(), a2.clone()], &[1.0, 1.0]);
        let (b1, b2) = mix(&rotate(&a1, &q), &rotate(&a2, &q), t);
        let moved = curvatures_of(&[b1, b2], &[1.0, 1.0]);
        prop_assert!(rel(base.s, moved.s) < 1e-12);
        prop_assert!(rel(base.s_n, moved.s_n) < 1e-10);
        prop_assert!(rel(base.h2, moved.h2) < 1e-12);
        // The inequality itself.
        prop_assert!(base.s <= base.h2 - base.s_n + 1e-10 * base.h2.abs().max(1.0));
    }

    #[test]
    fn equality_bridge_on_canonical_pairs(
        q in (3usize..=6).prop_flat_map(orthogonal),
        lambda in -3.0..3.0f64,
        mu in 0.0..3.0f64,
        t in -PI..PI,
    ) {
        let n = q.nrows();
        let (ae, az) = equality_form(n, lambda, mu);
        let (b1, b2) = mix(&rotate(&ae, &q), &rotate(&az, &q), t);
        let c = curvatures_of(&[b1.clone(), b2.clone()], &[1.0, 1.0]);
        prop_assert!((c.s - (c.h2 - c.s_n)).abs() <= 1e-12 * c.s.abs().max(1.0));
        let nn = (n * (n - 1)) as f64;
        prop_assert!(rel(c.h2, lambda * lambda) < 1e-12);
        prop_assert!((c.s_n - 4.0 * mu * mu / nn).abs() < 1e-12 * (1.0 + mu * mu));
        let (lhs, rhs) = traceless_commutator(&[
            &b1 - DMatrix::identity(n, n) * (b1.trace() / n as f64),
            &b2 - DMatrix::identity(n, n) * (b2.trace() / n as f64),
        ]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn canonical_frame_recovers_lambda_and_mu(
        q in (3usize..=6).prop_flat_map(orthogonal),
        lambda in -3.0..3.0f64,
        mu in 0.05..3.0f64,
        t in -PI..PI,
    ) {
        let n = q.nrows();
        // Minimal points are rejected by the strict frame.
        prop_assume!(lambda.abs() > 0.05);
        let (ae, az) = equality_form(n, lambda, mu);
        let (b1, b2) = mix(&rotate(&ae, &q), &rotate(&az, &q), t);
        let sd = ShapeData::from_operators(vec![b1, b2]).unwrap();
        let cf = canonical_frame(&sd, &Tolerances::default()).unwrap();
        // lambda is the mean curvature length, so only |lambda| is frame independent.
        prop_assert!((cf.lambda.abs() - lambda.abs()).abs() < 1e-9);
        prop_assert!((cf.mu - mu).abs() < 1e-9);
        // In the Y basis the traceless parts are diag(mu, -mu) and the swap.
        let y = &cf.y_basis;
        let b = y.transpose() * (&cf.a_eta - DMatrix::identity(n, n) * cf.lambda) * y;
        let z = y.transpose() * &cf.a_zeta * y;
        let mut want_b = DMatrix::zeros(n, n);
        want_b[(0, 0)] = mu;
        want_b[(1, 1)] = -mu;
        let mut want_z = DMatrix::zeros(n, n);
        want_z[(0, 1)] = mu;
        want_z[(1, 0)] = mu;
        prop_assert!((b - want_b).norm() < 1e-8 * (1.0 + lambda.abs() + mu));
        prop_assert!((z - want_z).norm() < 1e-8 * (1.0 + mu));
    }
}

// ---- transforms ----

fn away_from(p: &[f64], center: &[f64], sig: Signature, margin: f64) -> bool {
    let q: Vec<f64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
    sig.dot(&q, &q).abs() > margin
}

proptest! {
    #[test]
    fn inversions_are_involutions(
        p in prop::collection::vec(-3.0..3.0f64, 4),
        c in prop::collection::vec(-1.0..1.0f64, 4),
        d in 0.2..2.0f64,
        lorentz in any::<bool>(),
    ) {
        let (m, sig) = if lorentz {
            (AmbientMap::lorentz_inversion(c.clone(), d).unwrap(), Signature::Lorentz)
        } else {
            (AmbientMap::euclidean_inversion(c.clone(), d).unwrap(), Signature::Euclidean)
        };
        prop_assume!(away_from(&p, &c, sig, 0.1));
        let y = m.apply_point(&p).unwrap();
        let back = m.apply_point(&y).unwrap();
        let err: f64 = back.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = y.iter().map(|x| x.abs()).fold(1.0, f64::max);
        prop_assert!(err < 1e-11 * scale, "{err}");
    }

    #[test]
    fn stereographic_images_lie_on_model_spaces(
        x in prop::collection::vec(-3.0..3.0f64, 4),
        d in 0.2..2.0f64,
    ) {
        let sphere = AmbientMap::new(MapKind::StereoPlaneToSphere { d }, 5).unwrap();
        let y = sphere.apply_point(&x).unwrap();
        // |Y - d e_N|^2 = d^2
        let mut r2 = 0.0;
        for (k, v) in y.iter().enumerate() {
            let c = if k == 4 { v - d } else { *v };
            r2 += c * c;
        }
        prop_assert!((r2 - d * d).abs() < 1e-12 * (1.0 + r2));

        let xx: f64 = x.iter().map(|v| v * v).sum();
        prop_assume!((xx - 4.0 * d * d).abs() > 0.05);
        let hyp = AmbientMap::new(MapKind::StereoBallToHyp { d }, 5).unwrap();
        let y = hyp.apply_point(&x).unwrap();
        // <Y + d e_N, Y + d e_N> = -d^2 in L^N
        let mut shifted = y.clone();
        shifted[4] += d;
        let q = Signature::Lorentz.dot(&shifted, &shifted);
        let scale: f64 = shifted.iter().map(|v| v * v).sum();
        prop_assert!((q + d * d).abs() < 1e-11 * (1.0 + scale), "{q}");
    }

    #[test]
    fn normal_transport_is_an_isometry(
        f in prop::collection::vec(-3.0..3.0f64, 4),
        xi in prop::collection::vec(-1.0..1.0f64, 4),
        lorentz in any::<bool>(),
    ) {
        let c = vec![0.0; 4];
        let (m, sig) = if lorentz {
            (AmbientMap::lorentz_inversion(c.clone(), 1.0).unwrap(), Signature::Lorentz)
        } else {
            (AmbientMap::euclidean_inversion(c.clone(), 1.0).unwrap(), Signature::Euclidean)
        };
        prop_assume!(away_from(&f, &c, sig, 0.1));
        let p = normal_transport(&m, &f, &xi).unwrap();
        let before = sig.dot(&xi, &xi);
        let after = sig.dot(p.as_slice(), p.as_slice());
        prop_assert!((before - after).abs() < 1e-10 * (1.0 + p.norm_squared()));
    }
}

// ---- construction ----

fn curve_point() -> impl Strategy<Value = (&'static str, f64, f64, f64)> {
    (prop::sample::select(vec!["enneper-pair", "helicoid-pair", "null-exp"]), -0.8..0.8f64, -0.8..0.8f64, 0.0..2.0 * PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fiber_gauge_does_not_change_the_image((name, u, v, theta) in curve_point()) {
        let c = builtin(name).unwrap();
        let tol = Tolerances::default();
        let at = |t: f64, pv: Option<&[usize]>| phi_jets_with(&c, &ChartPoint::new(u, v, vec![t]), &tol, pv);
        let base = at(0.0, None).unwrap();
        let quarter = at(PI / 2.0, Some(&base.pivots)).unwrap();
        let reversed: Vec<usize> = base.pivots.iter().rev().copied().collect();
        let other = at(theta, Some(&reversed)).unwrap();

        // Locate the same fiber point in the default gauge.
        let w = other.w.value();
        let e1 = base.w.value();
        let e2 = quarter.w.value();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let t2 = dot(&w, &e2).atan2(dot(&w, &e1));
        prop_assert!((dot(&w, &e1).hypot(dot(&w, &e2)) - 1.0).abs() < 1e-10);
        let same = at(t2, Some(&base.pivots)).unwrap();

        let pa = other.phi.value();
        let pb = same.phi.value();
        let gap: f64 = pa.iter().zip(&pb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-10, "{gap}");
        prop_assume!(!other.singular && !same.singular);
        let ca = curvatures(&fundamental_forms(&other.phi, &tol).unwrap());
        let cb = curvatures(&fundamental_forms(&same.phi, &tol).unwrap());
        prop_assert!(
            rel(ca.s, cb.s) < 1e-7 && rel(ca.s_n, cb.s_n) < 1e-7 && rel(ca.h2, cb.h2) < 1e-7,
            "{ca:?} vs {cb:?} (theta {theta}, mapped {t2}, margins {} {})",
            other.rank_margin,
            same.rank_margin
        );
    }

    #[test]
    fn g_is_conformal((name, u, v, _t) in curve_point()) {
        let c = builtin(name).unwrap();
        let s = eval_surface(&c, Complex64::new(u, v), 2, &Tolerances::default()).unwrap();
        let (gu, gv) = (s.gu.value(), s.gv.value());
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let e = dot(&gu, &gu);
        prop_assert!((e - dot(&gv, &gv)).abs() < 1e-12 * e.max(1.0));
        prop_assert!(dot(&gu, &gv).abs() < 1e-12 * e.max(1.0));
        prop_assert!(s.conjugacy_residual() < 1e-12 * e.sqrt().max(1.0));
    }

    #[test]
    fn isotropy_agrees_with_finite_differences((name, u, v, _t) in curve_point()) {
        let c = builtin(name).unwrap();
        let z = Complex64::new(u, v);
        let (q, scale) = c.isotropy_at(z).unwrap();
        prop_assert!(q.norm() <= 1e-12 * (scale * scale).max(1.0));
        // Central differences of G give the same vanishing square.
        let h = 1e-5;
        let plus = c.eval(z + h).unwrap();
        let minus = c.eval(z - h).unwrap();
        let dg: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let fd: Complex64 = dg.iter().map(|x| x * x).sum();
        let size: f64 = dg.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!(fd.norm() <= 1e-8 * size.max(1.0), "{fd}");
    }
}
