use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use dzk_core::dump::{read_field, write_field};
use dzk_core::lab::InputFamily;
use dzk_core::norms::{mixed_norm, spatial_norm, MixedNormSpec};
use dzk_core::propagators::{riesz_derivative, schrodinger_group, wave_cosine, wave_sine};
use dzk_core::{Axis, FieldSeries, Grid3, ScalarField, TimeGrid};

fn grid() -> Grid3 {
    Grid3::new(16, 12, 8, 6.0, 5.0, 4.0).unwrap()
}

fn member(seed: u64) -> ScalarField {
    InputFamily::random(1, seed, [3, 3, 2]).member(&grid(), 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn group_is_unitary_and_additive(seed in 0u64..1000, t in -3.0f64..3.0, s in -3.0f64..3.0) {
        let f = member(seed);
        let a = schrodinger_group(&schrodinger_group(&f, s).unwrap(), t).unwrap();
        let b = schrodinger_group(&f, t + s).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
        prop_assert!((b.l2_norm() - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn wave_propagators_obey_bounds(seed in 0u64..1000, t in 0.01f64..3.0) {
        let f = member(seed).real_part();
        prop_assert!(wave_cosine(&f, t).unwrap().l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
        prop_assert!(wave_sine(&f, t).unwrap().l2_norm() <= t * f.l2_norm() * (1.0 + 1e-12));
        prop_assert!(wave_sine(&f, t).unwrap().max_imag() < 1e-12);
    }

    #[test]
    fn dumps_round_trip_bit_exactly(seed in 0u64..1000) {
        let f = member(seed);
        let mut bytes = Vec::new();
        write_field(&mut bytes, &f).unwrap();
        prop_assert_eq!(bytes.len(), 4 + 48 + 16 * f.grid().size());
        let g = read_field(bytes.as_slice()).unwrap();
        prop_assert!(g.values().iter().zip(f.values()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
        prop_assert_eq!(g.grid(), f.grid());
    }
}

#[test]
fn riesz_orders_compose() {
    let f = member(4);
    let a = riesz_derivative(&riesz_derivative(&f, 0.3, Axis::X).unwrap(), 0.7, Axis::X).unwrap();
    let b = riesz_derivative(&f, 1.0, Axis::X).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-12);
}

#[test]
fn separable_mixed_norm_factorizes() {
    // |cos(2 pi x / L)| e^{-y^2} gives L^inf_x L^2_y = ||e^{-y^2}||_{L^2}
    let g = Grid3::new(32, 64, 4, 2.0, 12.0, 1.0).unwrap();
    let f = ScalarField::from_fn(&g, |x, y, _| Complex64::new((PI * x).cos() * (-y * y).exp(), 0.0)).unwrap();
    let spec: MixedNormSpec = "Linf:x | L2:y,z".parse().unwrap();
    let v = spatial_norm(&f, &spec).unwrap().value;
    let exact = (PI / 2.0).sqrt().sqrt();
    assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
}

#[test]
fn time_norm_of_free_flow_is_constant_in_l2() {
    let f = member(8);
    let time = TimeGrid::new(1.0, 9).unwrap();
    let s = FieldSeries::from_fn(time, |t| schrodinger_group(&f, t)).unwrap();
    let spec: MixedNormSpec = "Linf:t | L2:x,y,z".parse().unwrap();
    assert!((mixed_norm(&s, &spec).unwrap().value - f.l2_norm()).abs() < 1e-12);
    let spec: MixedNormSpec = "L2:t | L2:x,y,z".parse().unwrap();
    assert!((mixed_norm(&s, &spec).unwrap().value - f.l2_norm()).abs() < 1e-12);
}
