mod common;

use std::f64::consts::{E, PI};

use latreal::basic1d::{alpha0_exclusion_factor, BlockFactorProcess1D};
use latreal::bounds::{lower_1d, lower_r_a, lower_r_c, upper_r_f};
use latreal::lattice::{
    eval_g_alpha, eval_structure_function, BoxRegion, LatticeVector, RadialSpec, WaveVector,
};
use latreal::product::{realize, FieldSample};
use proptest::prelude::*;

fn process(max_window: usize) -> impl Strategy<Value = BlockFactorProcess1D> {
    (1..=max_window).prop_flat_map(|w| {
        (0.0..=1.0f64, prop::collection::vec(0.0..=1.0f64, 1 << w))
            .prop_map(move |(p, q)| BlockFactorProcess1D::new(w, p, q).unwrap())
    })
}

fn lattice_vector(dim: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-4i64..=4, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_is_symmetric_and_permutation_invariant(
        alpha in 0.0..3.0f64,
        (x, rot) in (1usize..5).prop_flat_map(|d| (lattice_vector(d), 0..d)),
    ) {
        let v = LatticeVector::new(x.clone()).unwrap();
        let g = eval_g_alpha(alpha, &v).unwrap();
        prop_assert_eq!(g, eval_g_alpha(alpha, &v.neg()).unwrap());
        let mut y = x.clone();
        y.rotate_left(rot);
        prop_assert_eq!(g, eval_g_alpha(alpha, &LatticeVector::new(y).unwrap()).unwrap());
        let n2: i64 = x.iter().map(|c| c * c).sum();
        let want = match n2 { 0 => 0.0, 1 => alpha, _ => 1.0 };
        prop_assert_eq!(g, want);
    }

    #[test]
    fn structure_function_periodic_even_and_matches_fourier_sum(
        alpha in 0.0..3.0f64,
        rho in 0.0..=1.0f64,
        (k, axis) in (1usize..5).prop_flat_map(|d| (prop::collection::vec(-PI..PI, d), 0..d)),
    ) {
        let d = k.len();
        let spec = RadialSpec::new(alpha, rho, d).unwrap();
        let s = eval_structure_function(&spec, &WaveVector::new(k.clone()).unwrap()).unwrap();
        let neg: Vec<f64> = k.iter().map(|v| -v).collect();
        let mut shifted = k.clone();
        shifted[axis] += 2.0 * PI;
        let s_neg = eval_structure_function(&spec, &WaveVector::new(neg).unwrap()).unwrap();
        let s_shift = eval_structure_function(&spec, &WaveVector::new(shifted).unwrap()).unwrap();
        prop_assert!((s - s_neg).abs() < 1e-12);
        prop_assert!((s - s_shift).abs() < 1e-12);
        prop_assert!((s - common::structure_function_fourier(alpha, rho, &k)).abs() < 1e-12);
    }

    #[test]
    fn enumeration_matches_independent_oracle(proc in process(6)) {
        let prof = proc.profile().unwrap();
        prop_assert!((prof.density - common::density(&proc)).abs() < 1e-12);
        for k in 1..proc.window() {
            prop_assert!((prof.lag(k) - common::lag(&proc, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn correlations_vanish_at_window(proc in process(6)) {
        let w = proc.window();
        let g = common::density(&proc);
        prop_assert!((common::lag(&proc, w) - g * g).abs() < 1e-12);
        prop_assert!((proc.exact_lag_correlation(w).unwrap() - g * g).abs() < 1e-12);
        prop_assert!((proc.exact_lag_correlation(w + 3).unwrap() - g * g).abs() < 1e-12);
    }

    #[test]
    fn thinning_scales_density_and_lags(proc in process(5), t in 0.0..=1.0f64) {
        let thin = proc.thin(t).unwrap();
        let (a, b) = (proc.profile().unwrap(), thin.profile().unwrap());
        prop_assert!((b.density - t * a.density).abs() < 1e-12);
        for k in 1..proc.window() {
            prop_assert!((b.lag(k) - t * t * a.lag(k)).abs() < 1e-12);
        }
        if let (Some(x), Some(y)) = (a.alpha_hat(), b.alpha_hat()) {
            if t > 1e-3 && a.density > 1e-3 {
                prop_assert!((x - y).abs() < 1e-8 * x.max(1.0));
            }
        }
    }

    #[test]
    fn record_round_trip(proc in process(6)) {
        let back = BlockFactorProcess1D::parse_record(&proc.to_record()).unwrap();
        prop_assert_eq!(back, proc);
    }

    #[test]
    fn field_round_trip(
        sides in prop::collection::vec(1usize..6, 1..4),
        seed in any::<u64>(),
    ) {
        let region = BoxRegion::with_sides(sides.clone()).unwrap();
        let n: usize = sides.iter().product();
        let values: Vec<u8> = (0..n).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let f = FieldSample::new(region, values).unwrap();
        prop_assert_eq!(FieldSample::parse_text(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn bounds_are_ordered(alpha in 0.0..1.0f64, d in 1usize..8) {
        let rf = upper_r_f(alpha, d);
        prop_assert!(lower_r_a(alpha, d) <= rf + 1e-15);
        prop_assert!((lower_r_a(alpha, d) / rf - 1.0 / E).abs() < 1e-12);
        if d == 1 {
            prop_assert!(lower_1d(alpha) <= rf + 1e-15);
        } else {
            prop_assert!(lower_r_c(alpha, d).unwrap() <= rf + 1e-15);
        }
    }

    #[test]
    fn bounds_above_one(alpha in 1.0..5.0f64, d in 2usize..7) {
        let rf = upper_r_f(alpha, d);
        prop_assert!(lower_r_a(alpha, d) <= rf + 1e-15);
        prop_assert!(lower_r_c(alpha, d).unwrap() <= rf + 1e-15);
        prop_assert!(lower_r_c(alpha, d).unwrap() >= lower_r_a(alpha, d) - 1e-15);
    }

    #[test]
    fn product_matches_four_case_table(p in 0.05..0.95f64, d in 2usize..4) {
        let f = alpha0_exclusion_factor(p).unwrap();
        let gamma = common::density(&f);
        let proc = realize(&f, d).unwrap();
        let rho = gamma.powi(d as i32);
        let side = 7usize;
        for flat in 0..side.pow(d as u32) {
            let x: Vec<i64> = (0..d)
                .map(|m| ((flat / side.pow(m as u32)) % side) as i64 - 3)
                .collect();
            let got = proc
                .exact_pair_expectation(&LatticeVector::zero(d), &LatticeVector::new(x.clone()).unwrap())
                .unwrap();
            prop_assert!((got - common::pair_target(&x, rho, 0.0)).abs() < 1e-12, "{:?}", x);
        }
    }
}
