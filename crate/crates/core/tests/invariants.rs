use num_complex::Complex64;
use proptest::prelude::*;
use qperp_core::perpetuity::{levy_exponent, wiener_hopf_factors};
use qperp_core::qcalc::{q_gamma, qpochhammer_finite, qpochhammer_inf};
use qperp_core::samplers::{format_number, SampleBatch, SamplerConfig, SamplerId};
use qperp_core::{MellinForm, PerpetuityLaw, QGammaLaw, QParams, SeriesTolerance};

fn law(q: f64, mu: f64) -> PerpetuityLaw {
    PerpetuityLaw::new(QParams::new(q, mu).unwrap(), SeriesTolerance::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pochhammer_splits(a in -2.0f64..2.0, q in 0.05f64..0.95, n in 0usize..30) {
        let a = Complex64::new(a, 0.0);
        let tol = SeriesTolerance::default();
        let whole = qpochhammer_inf(a, q, &tol).unwrap().0;
        let tail = qpochhammer_inf(a * q.powi(n as i32), q, &tol).unwrap().0;
        let split = qpochhammer_finite(a, q, n) * tail;
        prop_assert!((whole - split).norm() <= 1e-11 * (1.0 + whole.norm()));
    }

    #[test]
    fn q_gamma_recurrence(x in 0.1f64..6.0, q in 0.05f64..0.95) {
        let tol = SeriesTolerance::default();
        let lhs = q_gamma(x + 1.0, q, &tol).unwrap();
        let rhs = (1.0 - q.powf(x)) / (1.0 - q) * q_gamma(x, q, &tol).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs());
    }

    #[test]
    fn mellin_forms_agree(q in 0.1f64..0.9, mu in 0.3f64..4.0, frac in -2.0f64..0.95) {
        let l = law(q, mu);
        let s = Complex64::new(frac * mu, 0.0);
        let p = l.mellin(s, MellinForm::Pochhammer).unwrap();
        let g = l.mellin(s, MellinForm::QGamma).unwrap();
        prop_assert!((p - g).norm() <= 1e-9 * p.norm());
    }

    #[test]
    fn wiener_hopf_product(q in 0.1f64..0.95, mu in 0.2f64..5.0, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let params = QParams::new(q, mu).unwrap();
        let s = Complex64::new(re, im);
        let psi = levy_exponent(&params, s);
        let product = wiener_hopf_factors(&params, s).0 * wiener_hopf_factors(&params, -s).1;
        prop_assert!((psi + product).norm() <= 1e-13 * (1.0 + psi.norm()));
    }

    #[test]
    fn cdf_is_monotone_and_bounded(q in 0.3f64..0.8, mu in 0.5f64..3.0, x in 0.01f64..20.0, dx in 0.001f64..5.0) {
        let l = law(q, mu);
        let lo = l.cdf(x).unwrap().0;
        let hi = l.cdf(x + dx).unwrap().0;
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&lo));
        prop_assert!(hi >= lo - 1e-9);
    }

    #[test]
    fn qgamma_pmf_is_positive(a in 0.01f64..0.99, q in 0.1f64..0.95, n in 0u64..200) {
        prop_assert!(QGammaLaw::new(a, q).unwrap().pmf(n) >= 0.0);
    }

    #[test]
    fn format_number_round_trips(x in prop::num::f64::NORMAL) {
        prop_assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn batches_are_positive_and_reproducible(q in 0.2f64..0.8, mu in 0.5f64..3.0, seed in any::<u64>()) {
        let params = QParams::new(q, mu).unwrap();
        for id in [SamplerId::Path, SamplerId::Series, SamplerId::Factorization] {
            let a = SampleBatch::generate(id, params, seed, 20, &SamplerConfig::default()).unwrap();
            let b = SampleBatch::generate(id, params, seed, 20, &SamplerConfig::default()).unwrap();
            prop_assert!(a.values.iter().all(|v| *v > 0.0 && v.is_finite()));
            prop_assert_eq!(a.to_csv(), b.to_csv());
        }
    }
}

#[test]
fn batch_prefix_is_stable_across_sizes() {
    // Chunked streams make a longer batch extend a shorter one.
    let params = QParams::new(0.5, 1.5).unwrap();
    let cfg = SamplerConfig::default();
    let short = SampleBatch::generate(SamplerId::Factorization, params, 3, 5000, &cfg).unwrap();
    let long = SampleBatch::generate(SamplerId::Factorization, params, 3, 9000, &cfg).unwrap();
    assert_eq!(short.values[..], long.values[..5000]);
}
