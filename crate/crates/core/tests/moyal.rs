use std::f64::consts::PI;

use hbarlab_core::groupoid::ConstantPoissonData;
use hbarlab_core::moyal::io::{decode_grid, encode_grid, read_csv, write_csv};
use hbarlab_core::moyal::*;
use hbarlab_core::numerics::loglog_slope;
use hbarlab_core::sampling::{self, uniform};
use hbarlab_core::{Error, C64};
use proptest::prelude::*;

fn std_pi() -> ConstantPoissonData {
    ConstantPoissonData::standard(2).unwrap()
}

fn kahler() -> ConstantPoissonData {
    ConstantPoissonData::standard_kahler(2).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Direct double sum over the grid with the cocycle evaluated pointwise.
fn naive_convolution(a: &LatticeFunction, b: &LatticeFunction, hbar: f64, data: &ConstantPoissonData, case: PolarizationCase) -> LatticeFunction {
    let g = &a.grid;
    let vol = g.cell_volume();
    LatticeFunction::from_fn(g.clone(), |y| {
        let mut acc = c(0.0, 0.0);
        for k in 0..g.len() {
            let y1 = g.point(k);
            let y2: Vec<f64> = y.iter().zip(&y1).map(|(p, q)| p - q).collect();
            if let Some(k2) = g.locate(&y2) {
                acc += a.values[k] * b.values[k2] * cocycle_sigma(&y1, &y2, hbar, case, data);
            }
        }
        acc * vol
    })
}

/// `exp(-w |y - centre|^2 + i k.y)`.
fn gaussian(grid: &GridSpec, w: f64, centre: [f64; 2], k: [f64; 2]) -> LatticeFunction {
    LatticeFunction::from_fn(grid.clone(), |y| {
        let r2 = (y[0] - centre[0]).powi(2) + (y[1] - centre[1]).powi(2);
        C64::from_polar((-w * r2).exp(), k[0] * y[0] + k[1] * y[1])
    })
}

fn random_gaussian(grid: &GridSpec, rng: &mut sampling::SampleRng) -> LatticeFunction {
    let centre = [uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5)];
    let k = [uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)];
    gaussian(grid, uniform(rng, 0.8, 1.5), centre, k).scale(c(uniform(rng, 0.5, 2.0), uniform(rng, -1.0, 1.0)))
}

fn y_grid() -> GridSpec {
    GridSpec::with_extent(2, 41, 8.0).unwrap()
}

#[test]
fn cocycle_examples() {
    let d = std_pi();
    let s = cocycle_sigma(&[1.0, 0.0], &[0.0, 1.0], 1.0, PolarizationCase::FlatV, &d);
    assert!((s - C64::from_polar(1.0, 0.5)).norm() < 1e-15);
    let k = cocycle_sigma(&[1.0, 0.0], &[0.0, 1.0], 1.0, PolarizationCase::Kahler, &d);
    assert!((k - C64::from_polar(1.0, -0.5)).norm() < 1e-15);
    for case in [PolarizationCase::Abelian, PolarizationCase::FlatV, PolarizationCase::Kahler] {
        assert_eq!(cocycle_sigma(&[3.0, -2.0], &[0.5, 7.0], 0.0, case, &d), c(1.0, 0.0));
    }
    let tiny = cocycle_sigma(&[1.0, 2.0], &[-3.0, 1.0], 1e-12, PolarizationCase::Kahler, &d);
    assert!((tiny - 1.0).norm() < 1e-11);
}

proptest! {
    #[test]
    fn cocycle_identity(
        y in prop::array::uniform2(-5.0f64..5.0),
        y1 in prop::array::uniform2(-5.0f64..5.0),
        y2 in prop::array::uniform2(-5.0f64..5.0),
        hbar in 0.0f64..3.0,
    ) {
        let d = std_pi();
        for case in [PolarizationCase::FlatV, PolarizationCase::Kahler] {
            let s = |p: &[f64], q: &[f64]| cocycle_sigma(p, q, hbar, case, &d);
            let yy1 = [y[0] + y1[0], y[1] + y1[1]];
            let y1y2 = [y1[0] + y2[0], y1[1] + y2[1]];
            let lhs = s(&y, &y1) * s(&yy1, &y2);
            let rhs = s(&y, &y1y2) * s(&y1, &y2);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_convolution_matches_direct_sum(
        re in prop::collection::vec(-1.0f64..1.0, 49),
        im in prop::collection::vec(-1.0f64..1.0, 49),
        hbar in 0.0f64..2.0,
    ) {
        let grid = GridSpec::new(vec![7, 7], vec![0.7, 0.4]).unwrap();
        let a = LatticeFunction::new(grid.clone(), re.iter().zip(&im).map(|(r, i)| c(*r, *i)).collect()).unwrap();
        let b = a.involution().scale(c(0.3, 1.0));
        let d = std_pi();
        for case in [PolarizationCase::FlatV, PolarizationCase::Kahler] {
            let fast = convolve(&a, &b, hbar, &d, case).unwrap();
            let slow = naive_convolution(&a, &b, hbar, &d, case);
            prop_assert!(fast.max_diff(&slow) < 1e-12);
        }
    }
}

#[test]
fn convolution_in_one_and_three_dimensions_matches_direct_sum() {
    let mut rng = sampling::rng(3);
    let d1 = ConstantPoissonData::zero(1);
    let g1 = GridSpec::cube(1, 15, 0.5).unwrap();
    let vals: Vec<C64> = (0..g1.len()).map(|_| c(uniform(&mut rng, 0.0, 1.0), 0.0)).collect();
    let a1 = LatticeFunction::new(g1.clone(), vals).unwrap();
    let b1 = LatticeFunction::from_fn(g1, |y| c((-y[0] * y[0]).exp(), y[0]));
    assert!(convolve(&a1, &b1, 1.0, &d1, PolarizationCase::Abelian).unwrap().max_diff(&naive_convolution(&a1, &b1, 1.0, &d1, PolarizationCase::Abelian)) < 1e-13);

    let pi = vec![vec![0.0, 1.0, -0.5], vec![-1.0, 0.0, 2.0], vec![0.5, -2.0, 0.0]];
    let d3 = ConstantPoissonData { n: 3, pi, metric: None };
    let g3 = GridSpec::new(vec![5, 7, 3], vec![0.5, 0.3, 1.0]).unwrap();
    let vals: Vec<C64> = (0..g3.len()).map(|_| c(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0))).collect();
    let a3 = LatticeFunction::new(g3.clone(), vals).unwrap();
    let b3 = a3.involution();
    let fast = convolve(&a3, &b3, 0.7, &d3, PolarizationCase::FlatV).unwrap();
    assert!(fast.max_diff(&naive_convolution(&a3, &b3, 0.7, &d3, PolarizationCase::FlatV)) < 1e-12);
}

#[test]
fn untwisted_convolution_is_pointwise_product_after_fourier() {
    let g = y_grid();
    let x = GridSpec::with_extent(2, 21, 3.0).unwrap();
    let a = gaussian(&g, 1.0, [0.5, -0.3], [0.4, 0.0]);
    let b = gaussian(&g, 1.3, [-0.2, 0.6], [0.0, -0.7]);
    let ab = twisted_convolution(&a, &b, 0.0, &std_pi()).unwrap();
    assert!(ab.warning.is_none());
    let lhs = symbol_of(&ab.value, &x).unwrap();
    let fa = symbol_of(&a, &x).unwrap();
    let fb = symbol_of(&b, &x).unwrap();
    let rhs = LatticeFunction::new(x, fa.values.iter().zip(&fb.values).map(|(p, q)| p * q).collect()).unwrap();
    assert!(lhs.max_diff(&rhs) < 1e-8, "{}", lhs.max_diff(&rhs));
}

#[test]
fn zero_pi_is_the_commutative_case_for_every_hbar() {
    let g = y_grid();
    let zero = ConstantPoissonData::zero(2);
    let a = gaussian(&g, 1.0, [0.5, -0.3], [0.4, 0.0]);
    let b = gaussian(&g, 1.3, [-0.2, 0.6], [0.0, -0.7]);
    let at0 = twisted_convolution(&a, &b, 0.0, &zero).unwrap().value;
    for hbar in [0.5, 1.0, 3.0] {
        let ab = twisted_convolution(&a, &b, hbar, &zero).unwrap().value;
        let ba = twisted_convolution(&b, &a, hbar, &zero).unwrap().value;
        assert!(ab.max_diff(&at0) < 1e-14);
        assert!(ab.max_diff(&ba) < 1e-12);
    }
}

#[test]
fn delta_is_the_identity() {
    let g = y_grid();
    let b = gaussian(&g, 0.7, [1.0, 0.0], [0.3, 0.3]);
    let delta = LatticeFunction::delta(g);
    for hbar in [0.0, 1.0] {
        let left = twisted_convolution(&delta, &b, hbar, &std_pi()).unwrap().value;
        let right = twisted_convolution(&b, &delta, hbar, &std_pi()).unwrap().value;
        assert!(left.max_diff(&b) < 1e-13);
        assert!(right.max_diff(&b) < 1e-13);
    }
}

#[test]
fn twisted_convolution_is_associative_and_involutive() {
    let g = y_grid();
    let d = std_pi();
    let mut rng = sampling::rng(7);
    for _ in 0..3 {
        let a = random_gaussian(&g, &mut rng);
        let b = random_gaussian(&g, &mut rng);
        let e = random_gaussian(&g, &mut rng);
        let m = |p: &LatticeFunction, q: &LatticeFunction| twisted_convolution(p, q, 1.0, &d).unwrap().value;
        let left = m(&m(&a, &b), &e);
        let right = m(&a, &m(&b, &e));
        assert!(left.max_diff(&right) < 1e-7, "associativity {}", left.max_diff(&right));
        let star = m(&a, &b).involution();
        let swapped = m(&b.involution(), &a.involution());
        assert!(star.max_diff(&swapped) < 1e-8);
        assert!(m(&a, &b).max_diff(&m(&b, &a)) > 1e-3, "the product should not commute at hbar = 1");
    }
}

#[test]
fn truncation_is_flagged_and_grids_must_match() {
    let g = GridSpec::with_extent(2, 21, 3.0).unwrap();
    let wide = gaussian(&g, 0.05, [0.0, 0.0], [0.0, 0.0]);
    let r = twisted_convolution(&wide, &wide, 1.0, &std_pi()).unwrap();
    assert!(r.boundary_mass > TRUNCATION_MASS);
    assert!(r.warning.is_some());
    let other = gaussian(&y_grid(), 1.0, [0.0, 0.0], [0.0, 0.0]);
    assert!(matches!(twisted_convolution(&wide, &other, 1.0, &std_pi()), Err(Error::Shape(_))));
}

#[test]
fn grids_must_be_odd_and_symmetric() {
    assert!(matches!(GridSpec::new(vec![64], vec![0.1]), Err(Error::Validation(_))));
    assert!(matches!(GridSpec::new(vec![5], vec![0.0]), Err(Error::Validation(_))));
    let g = GridSpec::new(vec![5, 3], vec![0.5, 1.0]).unwrap();
    for k in 0..g.len() {
        let p = g.point(k);
        let m = g.point(g.mirror(k));
        assert_eq!(p, m.iter().map(|v| -v).collect::<Vec<_>>());
        assert_eq!(g.locate(&p), Some(k));
    }
}

#[test]
fn epsilon_factor_and_unit_multiplier_value() {
    let eps = EpsilonFactor::for_case(PolarizationCase::Kahler, &kahler()).unwrap();
    assert_eq!(eps.m, 1);
    assert!((eps.eps - 1.0 / (2.0 * PI)).abs() < 1e-15);
    assert_eq!(EpsilonFactor::for_case(PolarizationCase::FlatV, &std_pi()).unwrap(), EpsilonFactor::trivial());
    let k = unit_multiplier(1.0, &kahler()).unwrap();
    assert!(k.is_translation_invariant());
    let v = k.eval(&[3.0, -1.0], &[0.0, 0.0]);
    assert!((v - (2.0 * PI).powf(-0.5)).norm() < 1e-14);
    assert_eq!(k.eval(&[0.0, 0.0], &[0.0, 0.0]), v);
    let e4 = EpsilonFactor::for_case(PolarizationCase::Kahler, &ConstantPoissonData::standard_kahler(4).unwrap()).unwrap();
    assert_eq!(e4.m, 2);
    assert!((e4.eps - (2.0 * PI).powi(-2)).abs() < 1e-15);
}

#[test]
fn kahler_case_needs_compatible_metric_and_nonnegative_hbar() {
    assert!(matches!(unit_multiplier(-1.0, &kahler()), Err(Error::Positivity(_))));
    assert!(unit_multiplier(1.0, &std_pi()).is_err());
    let mut scaled = kahler();
    scaled.metric = Some(vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
    assert!(matches!(unit_multiplier(1.0, &scaled), Err(Error::Validation(_))));
    let k = unit_multiplier(1.0, &kahler()).unwrap();
    let mut neg = k.clone();
    neg.hbar = -1.0;
    assert!(matches!(kahler_product(&neg, &neg, &kahler()), Err(Error::Positivity(_))));
    let other = unit_multiplier(0.5, &kahler()).unwrap();
    assert!(matches!(kahler_product(&k, &other, &kahler()), Err(Error::Argument(_))));
}

#[test]
fn unit_multiplier_is_idempotent() {
    for hbar in [0.5, 1.0, 2.0] {
        let k = unit_multiplier(hbar, &kahler()).unwrap();
        let kk = kahler_product(&k, &k, &kahler()).unwrap();
        let err = kk.max_diff(&k).unwrap();
        assert!(err < 1e-6, "hbar = {hbar}: {err}");
        assert!(kk.diagnostics.warning.is_none());
    }
}

#[test]
fn polarized_elements_absorb_the_unit() {
    let d = kahler();
    let k = unit_multiplier(1.0, &d).unwrap();
    let Representation::TranslationInvariant(kf) = &k.rep else { unreachable!() };
    let g = gaussian(&kf.grid, 0.3, [1.0, -0.5], [0.2, 0.0]);
    let a = kahler_product(&MoyalElement::translation_invariant(1.0, k.eps, g), &k, &d).unwrap();
    let ak = kahler_product(&a, &k, &d).unwrap();
    let scale = match &a.rep {
        Representation::TranslationInvariant(f) => f.sup_norm(),
        _ => unreachable!(),
    };
    assert!(ak.max_diff(&a).unwrap() < 1e-6 * scale.max(1.0));
}

#[test]
fn full_representation_agrees_with_the_fast_path() {
    let d = kahler();
    let y = GridSpec::with_extent(2, 21, 10.5).unwrap();
    let k = unit_multiplier_on(1.0, &d, y).unwrap();
    let x = GridSpec::with_extent(2, 5, 2.0).unwrap();
    let fast = kahler_product(&k, &k, &d).unwrap();
    let full = kahler_product(&k.to_full(&x).unwrap(), &k, &d).unwrap();
    assert!(!full.is_translation_invariant());
    assert!(full.max_diff(&fast).unwrap() < 1e-12);
    let big = GridSpec::cube(3, 3, 1.0).unwrap();
    assert!(MoyalElement::full(1.0, k.eps, big.clone(), big, |_, _| c(0.0, 0.0)).is_err());
}

/// Exact product of `f(x) K` with `K`, evaluating `f` at the shifted points
/// in closed form instead of interpolating.
#[test]
fn x_dependent_product_tracks_interpolation_error() {
    let d = kahler();
    let hbar = 0.5;
    let y = GridSpec::with_extent(2, 21, 13.0).unwrap();
    let x = GridSpec::with_extent(2, 13, 3.0).unwrap();
    let k = unit_multiplier_on(hbar, &d, y.clone()).unwrap();
    let f = |x: &[f64]| (-(x[0] * x[0] + 0.5 * x[1] * x[1]) / 2.0).exp();
    let a = MoyalElement::full(hbar, k.eps, x.clone(), y.clone(), |x, yy| f(x) * k.eval(x, yy)).unwrap();
    let prod = kahler_product(&a, &k, &d).unwrap();
    let est = prod.diagnostics.interpolation_error.expect("13 = 1 mod 4");
    let pref = k.eps.prefactor(hbar).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let xi = x.point(i);
        for j in (0..y.len()).step_by(7) {
            let yj = y.point(j);
            let mut acc = c(0.0, 0.0);
            for j1 in 0..y.len() {
                let y1 = y.point(j1);
                let y2: Vec<f64> = yj.iter().zip(&y1).map(|(p, q)| p - q).collect();
                if y.locate(&y2).is_none() {
                    continue;
                }
                let sh = d.sharp(&y2);
                let xa = [xi[0] + 0.5 * hbar * sh[0], xi[1] + 0.5 * hbar * sh[1]];
                let xa_clamped = [xa[0].clamp(-3.0, 3.0), xa[1].clamp(-3.0, 3.0)];
                acc += f(&xa_clamped) * k.eval(&xa, &y1) * k.eval(&xi, &y2) * cocycle_sigma(&y1, &y2, hbar, PolarizationCase::Kahler, &d);
            }
            let exact = acc * y.cell_volume() * pref;
            worst = worst.max((exact - prod.eval(&xi, &yj)).norm());
        }
    }
    let scale = pref;
    assert!(worst / scale < 5.0 * est + 1e-9, "error {worst:e} vs estimate {est:e}");
    assert!(est < 0.05);
}

fn k_family(hbars: &[f64], points: usize, spacing: f64) -> Vec<MoyalElement> {
    hbars.iter().map(|&h| unit_multiplier_on(h, &kahler(), GridSpec::cube(2, points, spacing).unwrap()).unwrap()).collect()
}

#[test]
fn ev0_of_the_unit_multiplier_is_one() {
    let fam = k_family(&[0.2, 0.1, 0.05], 189, 0.5);
    let mut rng = sampling::rng(11);
    for _ in 0..10 {
        let x = [uniform(&mut rng, -5.0, 5.0), uniform(&mut rng, -5.0, 5.0)];
        // Quadratic extrapolation error grows like (|y|^2 hbar / 4)^3.
        let y = [uniform(&mut rng, -1.5, 1.5), uniform(&mut rng, -1.5, 1.5)];
        let r = ev0(&fam, &x, &y).unwrap();
        assert!((r.value - 1.0).norm() < 1e-3, "{:?} at {y:?}", r);
    }
}

#[test]
fn ev0_of_zero_and_of_x_dependent_families() {
    let hbars = [0.2, 0.1, 0.05];
    let zeros: Vec<MoyalElement> = k_family(&hbars, 21, 1.0).iter().map(|k| k.scale(c(0.0, 0.0))).collect();
    assert_eq!(ev0(&zeros, &[0.3, 0.1], &[1.0, 1.0]).unwrap().value, c(0.0, 0.0));

    let f = |x: &[f64]| 1.0 + x[0] - 0.5 * x[1];
    let x = GridSpec::with_extent(2, 9, 2.0).unwrap();
    let fam: Vec<MoyalElement> = k_family(&hbars, 21, 1.0)
        .into_iter()
        .map(|k| MoyalElement::full(k.hbar, k.eps, x.clone(), k.y_grid().clone(), |xx, yy| f(xx) * k.eval(xx, yy)).unwrap())
        .collect();
    for (xp, yp) in [([0.5, -1.0], [0.0, 0.0]), ([1.0, 1.5], [2.0, -1.0]), ([0.25, 0.3], [1.0, 1.0])] {
        let r = ev0(&fam, &xp, &yp).unwrap();
        assert!((r.value - f(&xp)).norm() < 1e-3, "{:?} vs {}", r, f(&xp));
    }
    assert!(matches!(ev0(&fam[..2], &[0.0, 0.0], &[0.0, 0.0]), Err(Error::InsufficientData(_))));
}

#[test]
fn ev0_refuses_families_without_a_limit() {
    let hbars = [0.2, 0.1, 0.05];
    let blowup: Vec<MoyalElement> = k_family(&hbars, 21, 1.0).iter().map(|k| k.scale(c(1.0 / k.hbar, 0.0))).collect();
    assert!(matches!(ev0(&blowup, &[0.0, 0.0], &[0.0, 0.0]), Err(Error::LimitDoesNotExist(_))));
    let osc: Vec<MoyalElement> =
        k_family(&[0.2, 0.1, 0.05, 0.025], 21, 1.0).iter().map(|k| k.scale(c((1.0 / k.hbar).sin() * 3.0, 0.0))).collect();
    assert!(matches!(ev0(&osc, &[0.0, 0.0], &[0.0, 0.0]), Err(Error::LimitDoesNotExist(_))));
}

#[test]
fn ev0_is_multiplicative() {
    let d = kahler();
    let (l0, l1, m0, m1) = (1.5, -0.7, -0.4, 2.0);
    let hbars = [0.2, 0.1, 0.05];
    let ks: Vec<MoyalElement> = hbars.iter().map(|&h| unit_multiplier(h, &d).unwrap()).collect();
    let a: Vec<MoyalElement> = ks.iter().map(|k| k.scale(c(l0 + k.hbar * l1, 0.0))).collect();
    let b: Vec<MoyalElement> = ks.iter().map(|k| k.scale(c(m0 + k.hbar * m1, 0.0))).collect();
    let ab: Vec<MoyalElement> = a.iter().zip(&b).map(|(p, q)| kahler_product(p, q, &d).unwrap()).collect();
    let pt = ([0.0, 0.0], [0.0, 0.0]);
    let ea = ev0(&a, &pt.0, &pt.1).unwrap().value;
    let eb = ev0(&b, &pt.0, &pt.1).unwrap().value;
    let eab = ev0(&ab, &pt.0, &pt.1).unwrap().value;
    assert!((eab - ea * eb).norm() < 1e-4, "{eab} vs {}", ea * eb);
    assert!((eab - l0 * m0).norm() < 1e-4);
}

fn x_grid() -> GridSpec {
    GridSpec::with_extent(2, 81, 10.0).unwrap()
}

fn q_grid() -> GridSpec {
    GridSpec::with_extent(2, 65, 8.0).unwrap()
}

fn symbol(f: impl Fn(f64, f64) -> f64) -> LatticeFunction {
    LatticeFunction::from_fn(x_grid(), |x| c(f(x[0], x[1]), 0.0))
}

#[test]
fn weyl_quantization_of_a_gaussian_is_a_gaussian() {
    let a = weyl_quantize(&symbol(|x, y| (-(x * x + y * y) / 2.0).exp()), &q_grid()).unwrap();
    let expected = LatticeFunction::from_fn(q_grid(), |y| c((-(y[0] * y[0] + y[1] * y[1]) / 2.0).exp() / (2.0 * PI), 0.0));
    assert!(a.max_diff(&expected) < 1e-12);
    let back = symbol_of(&a, &x_grid()).unwrap();
    let f = symbol(|x, y| (-(x * x + y * y) / 2.0).exp());
    assert!(back.max_diff(&f) < 1e-10);
}

#[test]
fn weyl_quantization_is_a_homomorphism_at_hbar_zero() {
    let f = symbol(|x, y| (-(x * x + y * y) / 2.0).exp() * (1.0 + 0.3 * x));
    let g = symbol(|x, y| (-((x - 0.5).powi(2) + 2.0 * y * y) / 2.0).exp());
    let fg = LatticeFunction::new(x_grid(), f.values.iter().zip(&g.values).map(|(p, q)| p * q).collect()).unwrap();
    let qf = weyl_quantize(&f, &q_grid()).unwrap();
    let qg = weyl_quantize(&g, &q_grid()).unwrap();
    let prod = twisted_convolution(&qf, &qg, 0.0, &std_pi()).unwrap().value;
    let qfg = weyl_quantize(&fg, &q_grid()).unwrap();
    assert!(prod.max_diff(&qfg) < 1e-8, "{}", prod.max_diff(&qfg));
}

#[test]
fn window_symbols_do_not_commute_for_positive_hbar() {
    let f = symbol(|x, y| x * (-(x * x + y * y) / 2.0).exp());
    let g = symbol(|x, y| y * (-(x * x + y * y) / 2.0).exp());
    let qf = weyl_quantize(&f, &q_grid()).unwrap();
    let qg = weyl_quantize(&g, &q_grid()).unwrap();
    let comm = |h: f64| {
        let ab = twisted_convolution(&qf, &qg, h, &std_pi()).unwrap().value;
        let ba = twisted_convolution(&qg, &qf, h, &std_pi()).unwrap().value;
        ab.max_diff(&ba)
    };
    assert!(comm(0.0) < 1e-12);
    assert!(comm(1.0) > 1e-3);
}

#[test]
fn under_resolved_symbols_are_refused() {
    let sharp = symbol(|x, y| (-8.0 * (x * x + y * y)).exp());
    assert!(matches!(weyl_quantize(&sharp, &q_grid()), Err(Error::Resolution(_))));
    let complex = LatticeFunction::from_fn(x_grid(), |_| c(0.0, 1.0));
    assert!(matches!(weyl_quantize(&complex, &q_grid()), Err(Error::Argument(_))));
}

#[test]
fn dirac_defect_vanishes_in_the_commutative_cases() {
    let f = symbol(|x, y| (-(x * x + y * y) / 2.0).exp());
    let g = symbol(|x, y| (-((x - 1.0).powi(2) + (y + 0.5).powi(2)) / 2.0).exp());
    assert!(dirac_defect(&f, &g, 0.0, &std_pi(), &q_grid()).unwrap() < 1e-8);
    for hbar in [0.3, 1.0] {
        assert!(dirac_defect(&f, &g, hbar, &ConstantPoissonData::zero(2), &q_grid()).unwrap() < 1e-8);
    }
}

#[test]
fn dirac_defect_is_higher_order_in_hbar() {
    let f = symbol(|x, y| (-(x * x + y * y) / 2.0).exp());
    let g = symbol(|x, y| (-((x - 1.0).powi(2) + (y + 0.5).powi(2)) / 2.0).exp());
    let hbars = [0.4, 0.2, 0.1];
    let defects: Vec<f64> = hbars.iter().map(|&h| dirac_defect(&f, &g, h, &std_pi(), &q_grid()).unwrap()).collect();
    let scaled: Vec<f64> = defects.iter().zip(&hbars).map(|(d, h)| d / (h * h)).collect();
    assert!(scaled.windows(2).all(|w| w[1] <= w[0]), "{scaled:?}");
    let order = loglog_slope(&hbars, &defects).unwrap();
    assert!(order >= 1.8, "order {order}");
}

#[test]
fn poisson_bracket_of_coordinates() {
    let x = GridSpec::with_extent(2, 21, 2.0).unwrap();
    let f = LatticeFunction::from_fn(x.clone(), |p| c(p[0] * p[0], 0.0));
    let g = LatticeFunction::from_fn(x.clone(), |p| c(p[1], 0.0));
    let b = poisson_bracket(&f, &g, &std_pi()).unwrap();
    let centre = x.locate(&[0.4, -0.2]).unwrap();
    assert!((b.values[centre] - c(0.8, 0.0)).norm() < 1e-12);
}

#[test]
fn binary_grid_roundtrip_and_errors() {
    let g = GridSpec::new(vec![5, 3], vec![0.5, 1.25]).unwrap();
    let f = gaussian(&g, 0.3, [0.2, 0.0], [0.5, 0.5]);
    let bytes = encode_grid(&f, 0.75);
    let (back, hbar) = decode_grid(&bytes).unwrap();
    assert_eq!(hbar, 0.75);
    assert_eq!(back.grid, g);
    assert!(back.max_diff(&f) < 1e-6);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_grid(&bad), Err(Error::Decode(_))));
    assert!(matches!(decode_grid(&bytes[..bytes.len() - 3]), Err(Error::Decode(_))));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(decode_grid(&extra), Err(Error::Decode(_))));
    let mut even = bytes.clone();
    even[9..13].copy_from_slice(&4u32.to_le_bytes());
    assert!(matches!(decode_grid(&even), Err(Error::Decode(_))));
    let mut extent = bytes.clone();
    extent[21..29].copy_from_slice(&7.0f64.to_le_bytes());
    assert!(matches!(decode_grid(&extent), Err(Error::Decode(_))));
    assert!(matches!(decode_grid(b""), Err(Error::Decode(_))));
}

#[test]
fn csv_roundtrip() {
    let g = GridSpec::new(vec![3, 5], vec![1.0, 0.25]).unwrap();
    let f = gaussian(&g, 0.3, [0.2, 0.0], [0.5, 0.5]);
    let mut buf = Vec::new();
    write_csv(&f, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("y1,y2,re,im\n"));
    let back = read_csv(&g, buf.as_slice()).unwrap();
    assert!(back.max_diff(&f) < 1e-15);
    let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
    assert!(matches!(read_csv(&g, truncated.as_bytes()), Err(Error::Decode(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn decoder_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode_grid(&bytes);
        let mut framed = b"HBLG\x01".to_vec();
        framed.extend_from_slice(&bytes);
        let _ = decode_grid(&framed);
    }
}
