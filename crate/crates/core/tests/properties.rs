use dsrs_core::confidence::cp_lower;
use dsrs_core::dsrs::expectations;
use dsrs_core::noise::{angular_cdf, radial_cdf, radial_log_density, radial_quantile, sigma_prime};
use dsrs_core::np::{np_worst_case, CertQuery};
use dsrs_core::pipeline::{certified_accuracy, CertResult, Method};
use dsrs_core::NoiseSpec;
use proptest::prelude::*;

fn general_spec() -> impl Strategy<Value = NoiseSpec> {
    (2u32..2000, 0.05f64..3.0, 0.0f64..1.0).prop_map(|(d, sigma, frac)| {
        // k ranges over 0 ..= ceil(d/2) - 1 so that 2k < d.
        let k_max = (d - 1) / 2;
        let k = (frac * k_max as f64).floor() as u32;
        NoiseSpec::general(sigma, k, d).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_density_strictly_decreasing(spec in general_spec(), a in 1e-3f64..10.0, gap in 1e-3f64..10.0) {
        let t1 = a * spec.sigma_prime();
        let t2 = (a + gap) * spec.sigma_prime();
        prop_assert!(radial_log_density(&spec, t1).unwrap() > radial_log_density(&spec, t2).unwrap());
    }

    #[test]
    fn cdf_quantile_round_trip(spec in general_spec(), log_t in -2.0f64..0.6) {
        let t = 10f64.powf(log_t) * spec.sigma_prime();
        let p = radial_cdf(&spec, t).unwrap();
        prop_assume!(p > 1e-300 && p < 1.0 - 1e-12);
        let back = radial_quantile(&spec, p).unwrap();
        prop_assert!((back - t).abs() <= 1e-8 * t, "t={t} back={back}");
    }

    #[test]
    fn k_zero_general_equals_standard(d in 2u32..3000, sigma in 0.05f64..3.0, t in 0.01f64..10.0, u in 0.001f64..0.999) {
        let s = NoiseSpec::standard(sigma, d).unwrap();
        let g = NoiseSpec::general(sigma, 0, d).unwrap();
        let t = t * sigma;
        let (ls, lg) = (radial_log_density(&s, t).unwrap(), radial_log_density(&g, t).unwrap());
        prop_assert!((ls - lg).abs() <= 1e-12 * ls.abs().max(1.0));
        prop_assert!((radial_cdf(&s, t).unwrap() - radial_cdf(&g, t).unwrap()).abs() <= 1e-12);
        prop_assert!((radial_quantile(&s, u).unwrap() - radial_quantile(&g, u).unwrap()).abs() <= 1e-12 * sigma * (d as f64).sqrt());
    }

    #[test]
    fn angular_cdf_symmetric(d in 2u32..5000, c in -1.0f64..1.0) {
        let sum = angular_cdf(d, c).unwrap() + angular_cdf(d, -c).unwrap();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sigma_prime_formula(d in 3u32..5000, sigma in 0.01f64..5.0, frac in 0.0f64..1.0) {
        let k = (frac * ((d - 1) / 2) as f64) as u32;
        let want = (d as f64 / (d - 2 * k) as f64).sqrt() * sigma;
        prop_assert_eq!(sigma_prime(d, k, sigma), want);
        prop_assert_eq!(NoiseSpec::general(sigma, k, d).unwrap().sigma_prime(), want);
    }

    #[test]
    fn cp_lower_monotone_and_below_estimate(n in 1u64..5000, frac in 0.0f64..1.0, a in 1e-6f64..0.5) {
        let x = ((n as f64) * frac) as u64;
        let lo = cp_lower(x, n, a).unwrap();
        if x < n {
            prop_assert!(cp_lower(x + 1, n, a).unwrap() >= lo);
        }
        if x > 0 && x < n {
            prop_assert!(lo < x as f64 / n as f64);
        }
        // A larger failure probability gives a less conservative bound.
        prop_assert!(cp_lower(x, n, (2.0 * a).min(0.9)).unwrap() >= lo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn np_worst_case_monotone(
        d in 2u32..800, frac in 0.0f64..1.0, pa in 0.55f64..0.999,
        dp in 0.0f64..0.05, r in 0.0f64..1.5, dr in 0.0f64..0.5,
    ) {
        let k = (frac * ((d - 1) / 2) as f64) as u32;
        let spec = NoiseSpec::general(0.5, k, d).unwrap();
        let at = |pa: f64, r: f64| np_worst_case(&CertQuery { spec_p: spec, pa, radius: r }).unwrap();
        let base = at(pa, r);
        prop_assert!(at(pa, r + dr) <= base + 1e-7);
        prop_assert!(at((pa + dp).min(0.9999), r) >= base - 1e-7);
    }

    #[test]
    fn expectations_monotone_in_multipliers(
        d in 2u32..400, frac in 0.0f64..1.0, ratio in 0.5f64..1.5, r in 0.05f64..1.0,
        l1 in -3.0f64..3.0, l2 in -3.0f64..3.0, step in 0.01f64..2.0,
    ) {
        let k = (frac * ((d - 1) / 2) as f64) as u32;
        let p = NoiseSpec::general(0.5, k, d).unwrap();
        let q = NoiseSpec::general(0.5 * ratio, k, d).unwrap();
        let base = expectations(&p, &q, r, l1, l2).unwrap();
        for bumped in [expectations(&p, &q, r, l1 + step, l2).unwrap(), expectations(&p, &q, r, l1, l2 + step).unwrap()] {
            prop_assert!(bumped.e_p >= base.e_p - 1e-7);
            prop_assert!(bumped.e_q >= base.e_q - 1e-7);
            prop_assert!(bumped.e_pdelta >= base.e_pdelta - 1e-7);
        }
    }

    #[test]
    fn certified_accuracy_nonincreasing(
        radii in prop::collection::vec((0.0f64..3.5, any::<bool>(), any::<bool>()), 0..60),
    ) {
        let run: Vec<CertResult> = radii
            .iter()
            .map(|&(radius, correct, abstained)| CertResult {
                example_id: String::new(),
                method: Method::Dsrs,
                radius: if abstained { 0.0 } else { radius },
                abstained,
                correct,
                pa_low: 0.0,
                qa_low: 0.0,
                qa_high: 0.0,
                wall_time: 0.0,
            })
            .collect();
        let grid = dsrs_core::pipeline::default_grid();
        let rows = certified_accuracy(&[&run], &grid).unwrap();
        prop_assert!(rows.windows(2).all(|w| w[1].accuracy <= w[0].accuracy));
    }
}
