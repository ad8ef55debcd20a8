mod common;

use std::f64::consts::PI;

use common::{grid, quad, rel, Bumps};
use inls_core::radial::ComplexRadialField;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn laplacian_of_gaussian() {
    let g = grid(16.0, 2047, "0");
    let u = ComplexRadialField::from_real_fn(g.clone(), |r| (-r * r).exp());
    let lap = u.laplacian().u();
    let err = g
        .nodes()
        .iter()
        .zip(&lap)
        .map(|(&r, l)| (l - Complex64::new((4.0 * r * r - 6.0) * (-r * r).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn sine_mode_and_zero_field() {
    let g = grid(10.0, 255, "1/4");
    let k = PI / 10.0;
    let v: Vec<Complex64> = g.nodes().iter().map(|r| Complex64::new((k * r).sin(), 0.0)).collect();
    let f = ComplexRadialField::from_v(g.clone(), v.clone()).unwrap();
    let lap = f.laplacian();
    let err = lap.v().iter().zip(&v).map(|(a, b)| (a + b * k * k).norm()).fold(0.0, f64::max);
    // roundoff in the top modes is amplified by k_max²
    let k_max = g.wavenumbers()[g.n() - 1];
    assert!(err < 1e-14 * k_max * k_max, "{err:e}");
    let z = ComplexRadialField::zeros(g);
    assert!(z.laplacian().v().iter().all(|x| x.norm() == 0.0));
}

#[test]
fn gaussian_integrals() {
    let g = grid(12.0, 1199, "0");
    assert!(g.dr() <= 1e-2);
    let f: Vec<f64> = g.nodes().iter().map(|r| (-2.0 * r * r).exp()).collect();
    assert!(rel(g.integrate(&f), (PI / 2.0).powf(1.5)) < 1e-8);
    let ball: Vec<f64> = g.nodes().iter().map(|&r| if r <= 5.0 { 1.0 } else { 0.0 }).collect();
    assert!(rel(g.integrate(&ball), 4.0 * PI * 125.0 / 3.0) < 1e-2);
}

#[test]
fn singular_weight_integral_matches_adaptive_quadrature() {
    let g = grid(8.0, 8191, "1/4");
    let f: Vec<f64> = g
        .nodes()
        .iter()
        .zip(g.weights())
        .map(|(r, w)| w * (-4.0 * r * r).exp())
        .collect();
    let oracle = 4.0 * PI * quad(|r| r.powf(1.75) * (-4.0 * r * r).exp(), 0.0, 8.0, 1e-15);
    let got = g.integrate(&f);
    assert!(rel(got, oracle) < 1e-6, "{got} vs {oracle}");
}

#[test]
fn free_propagation_examples() {
    let g = grid(32.0, 511, "1/4");
    let u = Bumps::random(3).field(&g);
    assert_eq!(u.free_propagate(0.0).v(), u.v());
    let back = u.free_propagate(0.7).free_propagate(-0.7);
    assert!(back.relative_max_distance(&u) < 1e-12);
}

fn field_for(seed: u64) -> ComplexRadialField {
    Bumps::random(seed).field(&grid(24.0, 383, "1/4"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sine_transform_round_trip(seed in any::<u64>()) {
        let u = field_for(seed);
        let g = u.grid();
        let back = g.synthesize(&g.analyze(u.v()));
        let f = ComplexRadialField::from_v(g.clone(), back).unwrap();
        prop_assert!(f.relative_max_distance(&u) < 1e-12);
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let u = field_for(seed);
        let g = u.grid();
        let nodal: f64 = u.v().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dr();
        let modal: f64 = u.sine_coefficients().iter().map(|z| z.norm_sqr()).sum::<f64>() * 0.5 * g.r_max();
        prop_assert!(rel(modal, nodal) < 1e-12);
    }

    #[test]
    fn laplacian_is_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let f = field_for(s1);
        let h = Bumps::random(s2).field(f.grid());
        let a = f.inner(&h.laplacian());
        let b = f.laplacian().inner(&h);
        let scale = f.laplacian().inner(&f.laplacian()).norm().sqrt() * h.mass().sqrt();
        prop_assert!((a - b).norm() < 1e-10 * scale);
    }

    #[test]
    fn free_flow_is_unitary(seed in any::<u64>(), t in -5.0f64..5.0) {
        let u = field_for(seed);
        let ut = u.free_propagate(t);
        prop_assert!(rel(ut.mass(), u.mass()) < 1e-12);
        prop_assert!(ut.free_propagate(-t).relative_max_distance(&u) < 1e-12);
    }

    #[test]
    fn integral_of_nonnegative_samples_is_nonnegative(seed in any::<u64>()) {
        let u = field_for(seed);
        prop_assert!(u.grid().integrate(&u.density()) >= 0.0);
        prop_assert!(u.grad_sq() >= 0.0 && u.potential() >= 0.0);
    }

    #[test]
    fn gradient_is_minus_real_part_of_laplacian_pairing(seed in any::<u64>()) {
        let u = field_for(seed);
        let pairing = -u.inner(&u.laplacian()).re;
        prop_assert!(rel(pairing, u.grad_sq()) < 1e-10);
    }
}
