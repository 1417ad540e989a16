//! Transport, amplitude and gauge properties.

use fraclab::cgo::*;
use fraclab::gauge::*;
use fraclab::grid::*;
use fraclab::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn transport_commutes_with_laplacian(a in -1.0f64..1.0, b in -1.0f64..1.0, sign in prop::bool::ANY) {
        let g = working_grid(1.5, 96, &[]).unwrap();
        let p = LinearPhase::standard(2, if sign { 1.0 } else { -1.0 }, 0.2).unwrap();
        let f = RectField::from_fn(&g, |y| C64::new((a * y[0] + y[1] * y[1]).sin(), b * y[0] * y[1]));
        let c = transport_apply(&f.laplacian(), &p).sub(&transport_apply(&f, &p).laplacian());
        let mask = g.inner_mask(RESIDUAL_MARGIN);
        prop_assert!(c.masked_max(&mask) <= 1e-9);
    }

    #[test]
    fn rotated_phase_is_null(theta in 0.0f64..6.28, phi in 0.0f64..3.14) {
        let e1 = vec![theta.cos() * phi.sin(), theta.sin() * phi.sin(), phi.cos()];
        let aux = if e1[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let dot: f64 = e1.iter().zip(&aux).map(|(a, b)| a * b).sum();
        let mut eta: Vec<f64> = aux.iter().zip(&e1).map(|(a, b)| a - dot * b).collect();
        let nrm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        eta.iter_mut().for_each(|v| *v /= nrm);
        let p = LinearPhase::new(e1, eta, 1.0, 0.1).unwrap();
        prop_assert!(p.null_defect().norm() <= 1e-14);
    }

    #[test]
    fn product_rule_for_random_quadratics(c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let g = RectGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![257, 257]).unwrap();
        let w = flat_bump(&g, 12, |x| 1.0 + 0.3 * x[0]);
        let t = gauge_from_w(&w).unwrap();
        let u = RectField::from_real_fn(&g, |x| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]);
        prop_assert!(product_rule_residual(&t, &u) <= 1e-6);
    }
}

#[test]
fn null_phase_exponential_is_harmonic() {
    let mut errs = Vec::new();
    for n in [64usize, 128] {
        let g = working_grid(1.0, n, &[]).unwrap();
        let p = LinearPhase::standard(2, -1.0, 0.5).unwrap();
        let e = RectField::from_fn(&g, |y| (p.value_rotated(y) / p.h).exp());
        let mask = g.inner_mask(RESIDUAL_MARGIN);
        errs.push(e.laplacian().masked_max(&mask) / e.masked_max(&mask));
    }
    assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
}

#[test]
fn transport_residual_fourth_order() {
    let mut errs = Vec::new();
    for n in [64usize, 128] {
        let g = working_grid(2.0, n, &[]).unwrap();
        let p = LinearPhase::standard(2, 1.0, 0.1).unwrap();
        let astar = RectField::from_fn(&g, |y| C64::new((y[0] * y[1]).sin(), (y[0] - 0.5 * y[1]).cos()));
        let f = transport_apply(&astar, &p);
        let a = transport_solve(&f, &p, 1).unwrap();
        errs.push(transport_residual(&a, &f, &p, 1));
    }
    assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
}

#[test]
fn harmonic_and_biharmonic_levels() {
    let g = working_grid(2.0, 128, &[(-1.5, 1.5, 17)]).unwrap();
    let p = LinearPhase::standard(3, -1.0, 0.1).unwrap();
    let a = build_amplitudes(AmplitudeKind::Harmonic, &p, 3, &g, Some(exponential_seed(&g, 1.0))).unwrap();
    assert!(a.residuals.iter().all(|r| *r <= 1e-5), "{:?}", a.residuals);
    let b = build_amplitudes(AmplitudeKind::Biharmonic, &p, 2, &g, Some(biharmonic_seed(&g, 1.0))).unwrap();
    let t = conjugated_residual(&b, &[0.2, 0.1, 0.05]).unwrap();
    assert!(t.rows.iter().all(|r| r.relative_error <= 1e-4), "{:?}", t.rows);
}

#[test]
fn manufactured_psi_recovered() {
    fn bump(x: &[f64], c: [f64; 2], r: f64) -> [f64; 6] {
        let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
        let s = 1.0 - (dx * dx + dy * dy) / (r * r);
        if s <= 0.0 {
            return [0.0; 6];
        }
        let (f1, f2) = (10.0 * s.powi(9), 90.0 * s.powi(8));
        let (sx, sy, sxx) = (-2.0 * dx / (r * r), -2.0 * dy / (r * r), -2.0 / (r * r));
        [s.powi(10), f1 * sx, f1 * sy, f2 * sx * sx + f1 * sxx, f2 * sx * sy, f2 * sy * sy + f1 * sxx]
    }
    let g = RectGrid::new(vec![-0.6, 0.0], vec![0.6, 1.2], vec![241, 241]).unwrap();
    let ps = |x: &[f64]| bump(x, [0.0, 0.6], 0.35);
    let ws = |x: &[f64]| bump(x, [0.1, 0.55], 0.3);
    let t11 = RectField::from_real_fn(&g, |x| ps(x)[3] + ws(x)[0]);
    let t12 = RectField::from_real_fn(&g, |x| ps(x)[4]);
    let t22 = RectField::from_real_fn(&g, |x| ps(x)[5] + ws(x)[0]);
    let rep = psi_from_theta(&[vec![t11, t12.clone()], vec![t12, t22]]).unwrap();
    assert!(rep.residual <= 1e-4, "{}", rep.residual);
    let psi_star = RectField::from_real_fn(&g, |x| ps(x)[0]);
    assert!(rep.psi.sub(&psi_star).max_abs() <= 1e-4 * psi_star.max_abs());
    // Same normalization as the residual: relative to max|θ²|.
    let w_star = RectField::from_real_fn(&g, |x| ws(x)[0]);
    let scale = RectField::from_real_fn(&g, |x| ps(x)[3] + ws(x)[0]).max_abs();
    assert!(rep.w.sub(&w_star).max_abs() <= 1e-4 * scale);
}

#[test]
fn stationary_phase_refines_with_order() {
    let a = PolyGauss::new(1.0, &[((0, 0), C64::new(1.0, 0.0)), ((2, 0), C64::new(0.5, 0.0)), ((0, 2), C64::new(0.5, 0.0))]).unwrap();
    let p = QuadraticPhase::new([[1.0, 0.0], [0.0, 1.0]], 0.05).unwrap();
    let exact = exact_integral(&a, &p);
    let e1 = (stationary_phase_expand(&a, &p, 1).unwrap().value - exact).norm();
    let e3 = stationary_phase_expand(&a, &p, 3).unwrap();
    assert!((e3.value - exact).norm() < e1);
    assert!((e3.value - exact).norm() <= e3.bound);
}
