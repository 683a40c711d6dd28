use hardy_core::grid::{convolve, convolve_direct, integrate, lp_quasinorm};
use hardy_core::{Grid, SampledFunction};
use proptest::prelude::*;

const M: usize = 64;

fn interior(values: Vec<f64>) -> SampledFunction {
    let g = Grid::new(1, 1.0, M).unwrap();
    let mut v = vec![0.0; M];
    v[2..M - 2].copy_from_slice(&values);
    SampledFunction::new(g, v).unwrap()
}

fn samples() -> impl Strategy<Value = SampledFunction> {
    prop::collection::vec(-1.0f64..1.0, M - 4).prop_map(interior)
}

proptest! {
    #[test]
    fn quadrature_is_linear(f in samples(), g in samples(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = integrate(&f.scaled(a).add(&g.scaled(b)).unwrap());
        let rhs = a * integrate(&f) + b * integrate(&g);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
    }

    #[test]
    fn p_power_is_subadditive(f in samples(), g in samples(), p in 0.2f64..1.0) {
        let pw = |h: &SampledFunction| lp_quasinorm(h, p).unwrap().powf(p);
        prop_assert!(pw(&f.add(&g).unwrap()) <= (pw(&f) + pw(&g)) * (1.0 + 1e-12));
    }

    #[test]
    fn fast_convolution_matches_direct_sum(f in samples(), k in samples()) {
        let fast = convolve(&f, &k).unwrap();
        let slow = convolve_direct(&f, &k).unwrap();
        let scale = slow.max_abs().max(1e-300);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}
