//! Fourier sampling and reconstruction properties.

use fraclab::dnmap::dn_linearized_apply;
use fraclab::eigenbasis::*;
use fraclab::inversion::*;
use fraclab::solvers::Potential;
use proptest::prelude::*;

fn fixture(d: &BoxDomain) -> Potential {
    Potential::from_fn(d, |x| (2.0 * x[0]).sin() * (2.0 * x[1]).sin() + 0.5 * (4.0 * x[0]).sin() * (2.0 * x[1]).sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn conjugate_symmetry(k1 in -3i32..=3, k2 in -3i32..=3) {
        let d = BoxDomain::cube(2, 12).unwrap();
        let q = fixture(&d);
        let dn = |g: &BoundaryField| dn_linearized_apply(&q, 0.75, g);
        let xi = [k1 as f64, k2 as f64];
        let mxi = [-xi[0], -xi[1]];
        let a = fourier_sample(&dn, &d, &xi).unwrap();
        let b = fourier_sample(&dn, &d, &mxi).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-9 * (1.0 + a.norm()));
    }
}

#[test]
fn band_limited_reconstruction() {
    let d = BoxDomain::cube(2, 32).unwrap();
    let q = fixture(&d);
    let dn = |g: &BoundaryField| dn_linearized_apply(&q, 0.75, g);
    let lat = Lattice::padded(&d, 0.0).unwrap();
    let rec = reconstruct(&dn, &d, &lat, 5.0).unwrap();
    let exact = GridField::from_real_fn(&d, |x| (2.0 * x[0]).sin() * (2.0 * x[1]).sin() + 0.5 * (4.0 * x[0]).sin() * (2.0 * x[1]).sin());
    let num: f64 = rec.values.iter().zip(&exact.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = exact.values.iter().map(|b| b.norm_sqr()).sum();
    assert!((num / den).sqrt() <= 1e-3, "{}", (num / den).sqrt());
}

#[test]
fn alessandrini_converges() {
    let bump = |x: &[f64]| {
        let r2 = (x[0] - 1.5).powi(2) + (x[1] - 1.7).powi(2);
        if r2 < 1.0 { (1.0 - r2).powi(6) } else { 0.0 }
    };
    let r: Vec<f64> = [16usize, 32]
        .iter()
        .map(|&n| {
            let d = BoxDomain::cube(2, n).unwrap();
            alessandrini_residual(&Potential::from_fn(&d, bump), 0.75, &[2.0, 1.0]).unwrap()
        })
        .collect();
    assert!(r[0] / r[1] >= 4.0 * 0.9, "{r:?}");
}

#[test]
fn identical_maps_give_zero_t() {
    let d = BoxDomain::cube(2, 8).unwrap();
    let q = fixture(&d);
    let basis = fraclab::dnmap::BoundaryBasis::new(&d, 2).unwrap();
    let lat = Lattice::padded(&d, 1.0).unwrap();
    let r = stability_experiment(&q, &q, 0.75, RhoRule::Logarithmic, &basis, Weighting::HALF, &lat, &[32, 32]).unwrap();
    assert_eq!(r.t, 0.0);
    assert!(r.bound.is_none());
    assert!(r.err <= 1e-14);
}
