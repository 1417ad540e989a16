//! Eigenbasis and fractional operator properties.

use fraclab::eigenbasis::*;
use fraclab::fracops::*;
use fraclab::Complex64 as C64;
use proptest::prelude::*;

fn random_field(d: &BoxDomain, re: &[f64], im: &[f64]) -> SpectralField {
    let coeffs = (0..d.mode_count()).map(|i| C64::new(re[i % re.len()], im[i % im.len()]) / (1.0 + i as f64)).collect();
    SpectralField::new(d, coeffs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_for_band_limited(re in prop::collection::vec(-1.0f64..1.0, 7), im in prop::collection::vec(-1.0f64..1.0, 5)) {
        let d = BoxDomain::cube(2, 8).unwrap();
        let c = random_field(&d, &re, &im);
        let f = synthesize(&c);
        let e = volume_inner(&f, &f).unwrap().re;
        let l2 = c.l2_norm().powi(2);
        prop_assert!((e - l2).abs() <= 1e-10 * l2.max(1e-300));
        prop_assert!(analyze(&f).coeffs.iter().zip(&c.coeffs).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn synthesized_traces_vanish(re in prop::collection::vec(-1.0f64..1.0, 5), im in prop::collection::vec(-1.0f64..1.0, 3)) {
        for n in 1..=3 {
            let d = BoxDomain::cube(n, 4).unwrap();
            let c = random_field(&d, &re, &im);
            let t = trace_of_closed(&d, &synthesize_closed(&c));
            prop_assert!(t.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn semigroup_exact(s1 in 0.05f64..0.5, s2 in 0.05f64..0.5, re in prop::collection::vec(-1.0f64..1.0, 6)) {
        let d = BoxDomain::cube(2, 6).unwrap();
        let v = random_field(&d, &re, &re);
        let a = apply_homogeneous(&apply_homogeneous(&v, s1).unwrap(), s2).unwrap();
        let b = apply_homogeneous(&v, s1 + s2).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            prop_assert!((x - y).norm() <= 1e-13 * y.norm().max(1e-300));
        }
    }

    #[test]
    fn norm_equivalence(s in 0.05f64..1.0, re in prop::collection::vec(-1.0f64..1.0, 6)) {
        let d = BoxDomain::cube(2, 6).unwrap();
        let v = random_field(&d, &re, &re);
        let a = apply_homogeneous(&v, s).unwrap().l2_norm();
        let b = sobolev_norm(&v, 2.0 * s);
        prop_assert!((a - b).abs() <= 1e-13 * b);
    }

    #[test]
    fn inhom_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0.1f64..0.9) {
        let d = BoxDomain::cube(2, 8).unwrap();
        let u = InhomFunction::from_real_fn(&d, |x| (x[0] * 0.7).cos() + x[1]);
        let w = InhomFunction::from_real_fn(&d, |x| x[0] * x[1] - 1.0);
        let lhs = inhom_coefficients(&u.scale(C64::new(a, 0.0)).add(&w.scale(C64::new(b, 0.0))).unwrap(), s).unwrap();
        let cu = inhom_coefficients(&u, s).unwrap();
        let cw = inhom_coefficients(&w, s).unwrap();
        for i in 0..lhs.coeffs.len() {
            let expect = cu.coeffs[i] * a + cw.coeffs[i] * b;
            prop_assert!((lhs.coeffs[i] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
        }
    }
}

#[test]
fn zero_trace_matches_homogeneous() {
    let d = BoxDomain::cube(2, 16).unwrap();
    let u = InhomFunction::compactly_supported(GridField::from_real_fn(&d, |x| (x[0].sin() * x[1].sin()).powi(3)));
    for s in [0.3, 0.75] {
        let a = inhom_coefficients(&u, s).unwrap();
        let b = apply_homogeneous(&analyze(&u.interior), s).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((x - y).norm() <= 1e-10);
        }
    }
}

#[test]
fn eigen_relation_second_order() {
    // Second-order differences on the closed grid of a synthesized unit mode.
    let k = Mode::new(&[2, 3]);
    let mut errs = Vec::new();
    for n in [8usize, 16, 32] {
        let d = BoxDomain::cube(2, n).unwrap();
        let closed = synthesize_closed(&SpectralField::unit(&d, &k).unwrap());
        let shape = d.closed_shape();
        let h = d.spacing(0);
        let lap = GridField::from_fn(&d, |_| C64::new(0.0, 0.0));
        let mut vals = lap.values.clone();
        let g = d.grid()[0];
        for i in 0..g {
            for j in 0..g {
                let at = |a: usize, b: usize| closed[a * shape[1] + b];
                let (a, b) = (i + 1, j + 1);
                vals[i * g + j] = (at(a + 1, b) + at(a - 1, b) + at(a, b + 1) + at(a, b - 1) - at(a, b) * 4.0) / (h * h);
            }
        }
        let c = analyze(&GridField::new(&d, vals).unwrap());
        let lam = mode_eigenvalue(&d, &k).unwrap();
        errs.push((c.get(&k).unwrap() + lam).norm());
    }
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn ibp_second_order_refinement() {
    let mut r = Vec::new();
    for n in [16usize, 32] {
        let d = BoxDomain::cube(2, n).unwrap();
        let u = InhomFunction::from_real_fn(&d, |x| (0.5 * x[0]).exp() * (x[1] + 0.3).cos());
        let v = analyze(&GridField::from_real_fn(&d, |x| (x[0] * (std::f64::consts::PI - x[0]) * x[1] * (std::f64::consts::PI - x[1])).powi(2)));
        r.push(ibp_residual(&u, &v, 0.6).unwrap());
    }
    assert!(r[0] / r[1] >= 4.0 * 0.9, "{r:?}");
}
