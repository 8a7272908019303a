use std::sync::Arc;

use hbarlab_core::explosion::*;
use hbarlab_core::poly::{Poly, PolyMap};
use hbarlab_core::sampling::{self, uniform};
use hbarlab_core::Error;
use proptest::prelude::*;

fn pt(x: &[f64], y: &[f64], z: &[f64], h: f64) -> ExplodedPoint {
    ExplodedPoint::new(x.to_vec(), y.to_vec(), z.to_vec(), h)
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol * scale)
}

fn big_chart() -> ExplosiveChart {
    ExplosiveChart::symmetric(1, 1, 1, 10.0).unwrap()
}

#[test]
fn projection_examples() {
    let c = big_chart();
    assert_eq!(project(&c, &pt(&[1.0], &[2.0], &[3.0], 0.0)).unwrap(), vec![1.0, 0.0, 0.0]);
    assert_eq!(project(&c, &pt(&[0.0], &[1.0], &[1.0], 2.0)).unwrap(), vec![0.0, 2.0, 4.0]);
    let q = project(&c, &pt(&[0.5], &[-1.0], &[2.0], 0.1)).unwrap();
    assert!(rel_close(&q, &[0.5, -0.1, 0.02], 1e-15));
    let small = ExplosiveChart::symmetric(1, 1, 1, 1.0).unwrap();
    match project(&small, &pt(&[0.0], &[1.0], &[1.0], 2.0)) {
        Err(Error::OutOfDomain { coords, .. }) => assert_eq!(coords, vec![0.0, 2.0, 4.0]),
        other => panic!("expected out-of-domain, got {other:?}"),
    }
}

#[test]
fn chart_validation() {
    assert!(ExplosiveChart::new(0, 0, 0, vec![], vec![]).is_err());
    // The normal directions must contain the zero section.
    assert!(ExplosiveChart::new(1, 1, 0, vec![0.0, 0.5], vec![1.0, 1.0]).is_err());
    assert!(ExplosiveChart::new(1, 0, 0, vec![3.0], vec![4.0]).is_ok());
}

#[test]
fn compatibility_examples() {
    let mut rng = sampling::rng(1);
    for name in ["identity", "sample-compatible", "quadratic-scaling", "cubic-mixed", "heisenberg-product"] {
        let m = builtin_map(name).unwrap();
        let r = check_compatible(&m, 50, 1e-12, &mut rng).unwrap();
        assert!(r.passed, "{name}: {r:?}");
    }
    let id = check_compatible(&builtin_map("identity").unwrap(), 20, 1e-12, &mut rng).unwrap();
    assert!(id.residuals.iter().all(|r| r.max == 0.0));
    let bad = check_compatible(&builtin_map("normal-violating").unwrap(), 20, 1e-9, &mut rng).unwrap();
    assert!(!bad.passed);
    let w = bad.get("phi_z_y(x,0,0)").unwrap();
    assert_eq!(w.max, 1.0);
    assert!(w.witness.is_some());
}

#[test]
fn finite_difference_partials_match_closed_form() {
    let poly = builtin_map("cubic-mixed").unwrap();
    let fd = CompatibleMap::new(
        Arc::new(FnMap::new(3, 3, {
            let p = poly.map.clone();
            move |v| p.eval(v)
        })),
        poly.source.clone(),
        poly.target.clone(),
    )
    .unwrap();
    let p = [0.4, 0.0, 0.0];
    for idx in [vec![1], vec![0, 1], vec![1, 1], vec![0, 1, 1], vec![1, 1, 1], vec![1, 2]] {
        for out in 0..3 {
            let a = poly.partial(out, &idx, &p).unwrap();
            let b = fd.partial(out, &idx, &p).unwrap();
            assert!((a - b).abs() < 1e-6, "out {out} idx {idx:?}: {a} vs {b}");
        }
    }
}

#[test]
fn noisy_third_partial_is_refused() {
    // A tiny high-frequency wiggle makes third differences unreliable.
    let f = FnMap::new(3, 3, |v| vec![v[0], v[1], v[2] + v[1] * v[1] + 1e-5 * (3e3 * v[1]).sin()]);
    let c = ExplosiveChart::symmetric(1, 1, 1, 2.0).unwrap();
    let m = CompatibleMap::new(Arc::new(f), c.clone(), c).unwrap();
    match m.partial(2, &[1, 1, 1], &[0.0, 0.0, 0.0]) {
        Err(Error::Derivative { partial, reason }) => {
            assert!(partial.contains("[1, 1, 1]"));
            assert!(reason.contains("closed form"));
        }
        other => panic!("expected derivative error, got {other:?}"),
    }
    let err = explode_jacobian(&m, &pt(&[0.0], &[1.0], &[0.5], 0.0)).unwrap_err();
    assert!(matches!(err, Error::Derivative { .. }));
}

#[test]
fn explode_map_examples() {
    let id = builtin_map("identity").unwrap();
    let p = pt(&[0.3], &[-0.7], &[1.1], 0.25);
    assert_eq!(explode_map(&id, &p).unwrap(), p);
    let p0 = pt(&[0.3], &[-0.7], &[1.1], 0.0);
    assert_eq!(explode_map(&id, &p0).unwrap(), p0);

    let m = builtin_map("quadratic-scaling").unwrap();
    let e = explode_map(&m, &pt(&[0.0], &[1.0], &[0.0], 0.0)).unwrap();
    assert_eq!(e, pt(&[0.0], &[2.0], &[1.0], 0.0));
    let (lim, _) = explode_map_limit(&m, &pt(&[0.0], &[1.0], &[0.0], 0.0), &[1e-2, 1e-3, 1e-4]).unwrap();
    assert!(rel_close(&lim, &[0.0, 2.0, 1.0, 0.0], 1e-9));
}

#[test]
fn heisenberg_product_at_zero() {
    let m = builtin_map("heisenberg-product").unwrap();
    let (y, y2) = ([0.7, -0.4], [0.2, 1.3]);
    let p = pt(&[0.1, 0.2], &[y[0], y[1], y2[0], y2[1]], &[0.5, -0.25], 0.0);
    let e = explode_map(&m, &p).unwrap();
    let pi = y[0] * y2[1] - y[1] * y2[0];
    assert!(rel_close(&e.y, &[y[0] + y2[0], y[1] + y2[1]], 1e-15));
    assert!((e.z[0] - (0.5 - 0.25 - 0.5 * pi)).abs() < 1e-14);
    assert_eq!(e.x, vec![0.1, 0.2]);
}

#[test]
fn naturality_is_exact_off_zero() {
    let m = builtin_map("cubic-mixed").unwrap();
    let mut rng = sampling::rng(3);
    for _ in 0..200 {
        let h = uniform(&mut rng, 0.05, 1.0) * if uniform(&mut rng, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
        let p = pt(&[uniform(&mut rng, -1.5, 1.5)], &[uniform(&mut rng, -1.0, 1.0)], &[uniform(&mut rng, -1.0, 1.0)], h);
        let lhs = project(&m.target, &explode_map(&m, &p).unwrap()).unwrap();
        let rhs = m.eval(&project(&m.source, &p).unwrap());
        assert!(rel_close(&lhs, &rhs, 1e-14), "{lhs:?} vs {rhs:?}");
    }
}

#[test]
fn continuity_at_zero() {
    let mut rng = sampling::rng(4);
    for name in ["sample-compatible", "quadratic-scaling", "cubic-mixed", "heisenberg-product"] {
        let m = builtin_map(name).unwrap();
        for _ in 0..20 {
            let v: Vec<f64> = (0..m.source.dim()).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            let mut flat = v.clone();
            flat.push(0.0);
            let p = ExplodedPoint::from_flat(&m.source, &flat).unwrap();
            let closed = explode_map(&m, &p).unwrap().flat();
            let (lim, _) = explode_map_limit(&m, &p, &[1e-2, 1e-3, 1e-4]).unwrap();
            assert!(rel_close(&closed, &lim, 1e-6), "{name}: {closed:?} vs {lim:?}");
        }
    }
}

#[test]
fn jacobian_examples() {
    let id = builtin_map("identity").unwrap();
    let j = explode_jacobian(&id, &pt(&[0.2], &[0.3], &[0.4], 0.0)).unwrap();
    assert_eq!(j, nalgebra::DMatrix::identity(4, 4));

    // Linear map: block diagonal with the hbar entry 1.
    let v = |i| Poly::var(3, i);
    let lin = CompatibleMap::from_poly(
        PolyMap::new(3, vec![v(0).scale(2.0), v(1).scale(-3.0), v(2).scale(0.5)]).unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 2.0).unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 10.0).unwrap(),
    )
    .unwrap();
    let j = explode_jacobian(&lin, &pt(&[0.7], &[-1.2], &[0.9], 0.0)).unwrap();
    let expect = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -3.0, 0.5, 1.0]));
    assert_eq!(j, expect);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = sampling::rng(5);
    for name in ["sample-compatible", "quadratic-scaling", "cubic-mixed", "heisenberg-product"] {
        let m = builtin_map(name).unwrap();
        for _ in 0..20 {
            let mut flat: Vec<f64> = (0..m.source.dim()).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            flat.push(0.0);
            let p = ExplodedPoint::from_flat(&m.source, &flat).unwrap();
            let j = explode_jacobian(&m, &p).unwrap();
            let fd = explode_jacobian_fd(&m, &p, 1e-4).unwrap();
            let scale = j.amax().max(1.0);
            assert!((&j - &fd).amax() <= 1e-6 * scale, "{name}:\n{j}\n{fd}");
        }
    }
}

#[test]
fn jacobian_with_finite_difference_oracle() {
    // Same map, no closed-form partials: third differences at the default
    // steps are still accurate enough for the Jacobian.
    let poly = builtin_map("cubic-mixed").unwrap();
    let inner = poly.map.clone();
    let m = CompatibleMap::new(
        Arc::new(FnMap::new(3, 3, move |v| inner.eval(v))),
        poly.source.clone(),
        poly.target.clone(),
    )
    .unwrap();
    let p = pt(&[0.3], &[0.8], &[-0.6], 0.0);
    let a = explode_jacobian(&poly, &p).unwrap();
    let b = explode_jacobian(&m, &p).unwrap();
    assert!((&a - &b).amax() < 1e-6, "\n{a}\n{b}");
}

#[test]
fn functoriality_at_zero() {
    let phi = builtin_map("cubic-mixed").unwrap();
    let v = |i| Poly::var(3, i);
    // psi lands inside the source chart of phi for the sampled points.
    let psi = CompatibleMap::from_poly(
        PolyMap::new(
            3,
            vec![
                v(0).scale(0.5).add(&v(1).mul(&v(1)).scale(0.1)),
                v(1).scale(0.8).add(&v(0).mul(&v(1)).scale(0.2)),
                v(2).scale(0.6).add(&v(1).pow(2).scale(-0.3)),
            ],
        )
        .unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 2.0).unwrap(),
        phi.source.clone(),
    )
    .unwrap();
    let comp = phi.compose(&psi).unwrap();
    let mut rng = sampling::rng(6);
    for _ in 0..100 {
        let p = pt(&[uniform(&mut rng, -1.5, 1.5)], &[uniform(&mut rng, -2.0, 2.0)], &[uniform(&mut rng, -2.0, 2.0)], 0.0);
        let lhs = explode_map(&comp, &p).unwrap().flat();
        let rhs = explode_map(&phi, &explode_map(&psi, &p).unwrap()).unwrap().flat();
        assert!(rel_close(&lhs, &rhs, 1e-8), "{lhs:?} vs {rhs:?}");
    }
}

#[test]
fn classification_examples() {
    let mut rng = sampling::rng(7);
    let id = classify_map(&builtin_map("identity").unwrap(), 10, 1e-9, &mut rng).unwrap();
    assert_eq!((id.submersion, id.immersion, id.injective_immersion), (Verdict::Yes, Verdict::Yes, Verdict::Yes));

    let v = |i| Poly::var(4, i);
    let proj = CompatibleMap::from_poly(
        PolyMap::new(4, vec![v(0), v(2), v(3)]).unwrap(),
        ExplosiveChart::symmetric(2, 1, 1, 1.0).unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 1.0).unwrap(),
    )
    .unwrap();
    let c = classify_map(&proj, 10, 1e-9, &mut rng).unwrap();
    assert_eq!((c.submersion, c.immersion), (Verdict::Yes, Verdict::No));

    let incl = CompatibleMap::from_poly(
        PolyMap::new(1, vec![Poly::var(1, 0), Poly::zero(1), Poly::zero(1)]).unwrap(),
        ExplosiveChart::new(1, 0, 0, vec![-1.0], vec![1.0]).unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 2.0).unwrap(),
    )
    .unwrap();
    let c = classify_map(&incl, 10, 1e-9, &mut rng).unwrap();
    assert_eq!((c.submersion, c.injective_immersion), (Verdict::No, Verdict::Yes));

    // A y-block of size 5e-9 sits in the ambiguous band.
    let x = |i| Poly::var(3, i);
    let tiny = CompatibleMap::from_poly(
        PolyMap::new(3, vec![x(0), x(1).scale(5e-9), x(2)]).unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 1.0).unwrap(),
        ExplosiveChart::symmetric(1, 1, 1, 1.0).unwrap(),
    )
    .unwrap();
    let c = classify_map(&tiny, 5, 1e-9, &mut rng).unwrap();
    assert_eq!(c.immersion, Verdict::Indeterminate);
    assert_eq!(c.submersion, Verdict::Indeterminate);
}

fn form(chart: ExplosiveChart, comps: Vec<Poly>) -> NormalOneForm {
    let n = chart.dim();
    NormalOneForm::new(chart, Arc::new(PolyMap::new(n, comps).unwrap())).unwrap()
}

fn contact_form() -> NormalOneForm {
    // theta = y dx + dz on the (1,1,1) chart.
    form(big_chart(), vec![Poly::var(3, 1), Poly::zero(3), Poly::constant(3, 1.0)])
}

#[test]
fn exploded_contact_form() {
    let theta = contact_form();
    let mut rng = sampling::rng(8);
    assert!(theta.check_normal(20, 1e-14, &mut rng).passed);
    for _ in 0..20 {
        let (x, y, z) = (uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0));
        let at0 = explode_form(&theta, &pt(&[x], &[y], &[z], 0.0), FormOptions::default()).unwrap();
        assert!(rel_close(&at0, &[y, 0.0, 0.0, 2.0 * z], 1e-10), "{at0:?}");
        let h = uniform(&mut rng, 0.1, 1.0);
        let off = explode_form(&theta, &pt(&[x], &[y], &[z], h), FormOptions::default()).unwrap();
        assert!(rel_close(&off, &[y, 0.0, h, 2.0 * z], 1e-14), "{off:?}");
    }
}

#[test]
fn exploded_form_small_examples() {
    let zero = form(big_chart(), vec![Poly::zero(3), Poly::zero(3), Poly::zero(3)]);
    let e = explode_form(&zero, &pt(&[1.0], &[1.0], &[1.0], 0.0), FormOptions::default()).unwrap();
    assert_eq!(e, vec![0.0; 4]);

    // theta = x y dx: (Pr^* theta)/hbar has dx coefficient x * (hbar y) / hbar.
    let xy = form(big_chart(), vec![Poly::var(3, 0).mul(&Poly::var(3, 1)), Poly::zero(3), Poly::zero(3)]);
    let e = explode_form(&xy, &pt(&[1.0], &[2.0], &[0.0], 0.0), FormOptions::default()).unwrap();
    assert!(rel_close(&e, &[2.0, 0.0, 0.0, 0.0], 1e-10), "{e:?}");
}

#[test]
fn non_normal_form_is_rejected_at_zero() {
    let dx = form(big_chart(), vec![Poly::constant(3, 1.0), Poly::zero(3), Poly::zero(3)]);
    let err = explode_form(&dx, &pt(&[0.0], &[1.0], &[0.0], 0.0), FormOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Convergence(_)), "{err:?}");
    let dy = form(big_chart(), vec![Poly::zero(3), Poly::constant(3, 1.0), Poly::zero(3)]);
    assert!(explode_form(&dy, &pt(&[0.0], &[1.0], &[0.0], 0.0), FormOptions::default()).is_err());
}

#[test]
fn form_identity_off_zero() {
    let v = |i| Poly::var(3, i);
    let theta = form(
        big_chart(),
        vec![v(1).mul(&v(0)).add(&v(2).scale(0.3)), v(1).pow(2).add(&v(2)), Poly::constant(3, 1.0).add(&v(0).pow(2))],
    );
    let mut rng = sampling::rng(9);
    for _ in 0..100 {
        let h = uniform(&mut rng, -1.0, 1.0);
        let p = pt(&[uniform(&mut rng, -2.0, 2.0)], &[uniform(&mut rng, -2.0, 2.0)], &[uniform(&mut rng, -2.0, 2.0)], h);
        let e = explode_form(&theta, &p, FormOptions::default()).unwrap();
        let pull = pullback_projection(&theta, &p).unwrap();
        let lhs: Vec<f64> = e.iter().map(|c| c * h).collect();
        assert!(rel_close(&lhs, &pull, 1e-14), "{lhs:?} vs {pull:?}");
    }
}

#[test]
fn rescale_examples() {
    let c = big_chart();
    let p = pt(&[0.4], &[1.0], &[1.0], 1.0);
    assert_eq!(rescale(&c, &RescaleFunction::constant(3, 0.0), &p).unwrap(), p);
    let r = rescale(&c, &RescaleFunction::constant(3, 2f64.ln()), &p).unwrap();
    assert!(rel_close(&r.flat(), &[0.4, 2.0, 4.0, 0.5], 1e-15), "{r:?}");
}

fn r_poly(a: f64, b: f64, c: f64) -> RescaleFunction {
    let v = |i| Poly::var(3, i);
    RescaleFunction::new(Arc::new(
        PolyMap::new(3, vec![v(0).scale(a).add(&v(1).mul(&v(0)).scale(b)).add(&v(2).scale(c))]).unwrap(),
    ))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rescale_group_law(
        a in -0.5f64..0.5, b in -0.5f64..0.5, c in -0.5f64..0.5,
        a2 in -0.5f64..0.5, b2 in -0.5f64..0.5,
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, h in -1.0f64..1.0,
    ) {
        let chart = big_chart();
        let (r, s) = (r_poly(a, b, c), r_poly(a2, b2, 0.0));
        let sum = r_poly(a + a2, b + b2, c);
        let p = pt(&[x], &[y], &[z], h);
        let lhs = rescale(&chart, &r, &rescale(&chart, &s, &p).unwrap()).unwrap().flat();
        let rhs = rescale(&chart, &sum, &p).unwrap().flat();
        prop_assert!(rel_close(&lhs, &rhs, 1e-12), "{:?} vs {:?}", lhs, rhs);
        // The projection is untouched and hbar picks up e^{-r}.
        let q = project(&chart, &p).unwrap();
        let rp = rescale(&chart, &r, &p).unwrap();
        prop_assert!(rel_close(&project(&chart, &rp).unwrap(), &q, 1e-14));
        let rho = r.r.eval(&q)[0];
        prop_assert_eq!(rp.hbar, h / rho.exp());
    }
}

#[test]
fn rescale_pullback_of_exploded_form() {
    let v = |i| Poly::var(3, i);
    let theta = form(
        big_chart(),
        vec![v(1).mul(&v(0).add(&Poly::constant(3, 1.0))), v(1).scale(0.5).add(&v(2)), Poly::constant(3, 1.0).add(&v(0).scale(0.2))],
    );
    let r = r_poly(0.3, -0.2, 0.1);
    let mut rng = sampling::rng(10);
    for i in 0..50 {
        let h = if i % 5 == 0 { 0.0 } else { uniform(&mut rng, -1.0, 1.0) };
        let p = pt(&[uniform(&mut rng, -1.0, 1.0)], &[uniform(&mut rng, -1.0, 1.0)], &[uniform(&mut rng, -1.0, 1.0)], h);
        let (lhs, rhs) = rescale_pullback_sides(&theta, &r, &p, 1e-5, FormOptions::default()).unwrap();
        assert!(rel_close(&lhs, &rhs, 1e-6), "hbar={h}: {lhs:?} vs {rhs:?}");
    }
}
