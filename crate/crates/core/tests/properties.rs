use etmsim::amplitude::{build_amplitude, PairAmplitude};
use etmsim::hom::coincidence_scan;
use etmsim::params::ControlParams;
use etmsim::schmidt::{collision_entropy, schmidt_decompose, Method};
use etmsim::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ControlParams> {
    (
        -5.0f64..-2.0,
        (0.05f64).log10()..(2.0f64).log10(),
        24usize..=64,
    )
        .prop_map(|(t, s, n)| ControlParams::new(10f64.powf(t), 10f64.powf(s)).with_points(n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn amplitude_is_normalised_and_exchange_symmetric(p in params()) {
        let amp = build_amplitude(&p).unwrap();
        prop_assert!((amp.norm_squared() - 1.0).abs() <= 1e-10);
        prop_assert!(amp.max_asymmetry() <= 1e-10);
    }

    #[test]
    fn rescaling_before_normalisation_is_invisible(p in params(), scale in 0.1f64..10.0) {
        let amp = build_amplitude(&p).unwrap();
        let scaled = amp.values.map(|z| z * Complex64::new(scale, 0.0));
        let again = PairAmplitude::from_values(amp.grid.clone(), scaled).unwrap();
        let diff = again.values.iter().zip(amp.values.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let top = amp.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12 * top);
    }

    #[test]
    fn both_routes_give_the_same_spectrum(p in params()) {
        let amp = build_amplitude(&p).unwrap();
        let a = schmidt_decompose(&amp, Method::KernelEig).unwrap();
        let b = schmidt_decompose(&amp, Method::SvdOracle).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
        prop_assert!((a.kappa - b.kappa).abs() <= 1e-8 * a.kappa);
    }

    #[test]
    fn spectrum_invariants(p in params()) {
        let amp = build_amplitude(&p).unwrap();
        let s = schmidt_decompose(&amp, Method::KernelEig).unwrap();
        let total: f64 = s.probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-8);
        prop_assert!(s.probs.iter().all(|&q| q >= 0.0));
        prop_assert!(s.probs.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.kappa >= 1.0 - 1e-12);
        prop_assert!(s.kappa <= s.rank() as f64 + 1e-9);
        prop_assert!(s.orthonormality_error() <= 1e-8);
    }

    #[test]
    fn coincidence_stays_in_range_and_is_even(p in params(), d in 0.0f64..3.0) {
        let amp = build_amplitude(&p).unwrap();
        let s = schmidt_decompose(&amp, Method::KernelEig).unwrap();
        let scan = coincidence_scan(&s, &[-d, 0.0, d]).unwrap();
        prop_assert!(scan.p12.iter().all(|&v| (0.5 - 1e-12..=1.0 + 1e-12).contains(&v)));
        prop_assert!((scan.p12[0] - scan.p12[2]).abs() <= 1e-9);
        prop_assert!((scan.p12[1] - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn collision_entropy_is_permutation_invariant(mut w in prop::collection::vec(0.0f64..1.0, 1..12)) {
        let total: f64 = w.iter().sum::<f64>() + 1e-3;
        w.iter_mut().for_each(|x| *x = (*x + 1e-3 / 12.0) / total);
        let norm: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= norm);
        let h = collision_entropy(&w).unwrap();
        let mut r = w.clone();
        r.reverse();
        prop_assert!((h - collision_entropy(&r).unwrap()).abs() <= 1e-12);
        prop_assert!(h >= -1e-12 && h <= (w.len() as f64).log2() + 1e-12);
    }
}
