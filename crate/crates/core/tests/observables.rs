use hybridlab::expr::{parse_polynomial, ParameterBinding};
use hybridlab::observables::{
    classically_measurable, purify_diagonal, trace_expectation, validate_density, variance, DiagonalDistribution,
    FiniteDensity,
};
use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = DiagonalDistribution> {
    prop::collection::vec(0.0..1.0f64, 1..=64).prop_filter("nonzero mass", |w| w.iter().sum::<f64>() > 1e-3).prop_map(
        |w| {
            let total: f64 = w.iter().sum();
            DiagonalDistribution::new(w.iter().map(|v| v / total).collect()).unwrap()
        },
    )
}

fn complex_matrix(d: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
        .prop_map(move |v| DMatrix::from_iterator(d, d, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

/// `B B^dagger / tr(B B^dagger)` together with a Hermitian `(C + C^dagger)/2`.
fn density_and_observable() -> impl Strategy<Value = (FiniteDensity, DMatrix<Complex64>)> {
    (1usize..=16).prop_flat_map(|d| (complex_matrix(d), complex_matrix(d))).prop_map(|(b, c)| {
        let rho = &b * b.adjoint();
        let rho = &rho / rho.trace();
        let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let a = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
        (FiniteDensity::new(rho).unwrap(), a)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn purification_is_pure_with_the_same_populations(d in distribution()) {
        let p = purify_diagonal(&d);
        let rho = p.density.matrix();
        prop_assert!(validate_density(rho).pass);
        prop_assert!((p.density.purity() - 1.0).abs() < 1e-12);
        for (m, probability) in d.probabilities().iter().enumerate() {
            prop_assert!((rho[(m, m)].re - probability).abs() < 1e-15);
            for n in 0..d.len() {
                let expected = (probability * d.probabilities()[n]).sqrt();
                prop_assert!((rho[(m, n)] - Complex64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
        let eigenvalues = p.density.eigenvalues();
        let (top, rest) = eigenvalues.split_last().unwrap();
        prop_assert!((top - 1.0).abs() < 1e-12);
        prop_assert!(rest.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn diagonal_observables_see_only_populations(d in distribution(), seed in 0u64..1000) {
        let values: Vec<f64> = (0..d.len()).map(|m| ((m as u64 * 7 + seed) % 13) as f64 - 6.0).collect();
        let a = DMatrix::from_diagonal(&DVector::from_iterator(d.len(), values.iter().map(|v| Complex64::new(*v, 0.0))));
        let purified = trace_expectation(&purify_diagonal(&d).density, &a).unwrap();
        let mixed = FiniteDensity::new(DMatrix::from_diagonal(&DVector::from_iterator(
            d.len(),
            d.probabilities().iter().map(|p| Complex64::new(*p, 0.0)),
        )))
        .unwrap();
        let classical = d.mean(&values).unwrap();
        prop_assert!((purified.value - classical).abs() < 1e-12);
        prop_assert!((trace_expectation(&mixed, &a).unwrap().value - classical).abs() < 1e-12);
    }

    #[test]
    fn variance_is_nonnegative((rho, a) in density_and_observable()) {
        let v = variance(&rho, &a).unwrap();
        prop_assert!(v >= -1e-12, "variance {}", v);
        prop_assert!(trace_expectation(&rho, &a).unwrap().imaginary.abs() < 1e-12);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(DiagonalDistribution::new(vec![0.5, 0.6]).is_err());
    assert!(DiagonalDistribution::new(vec![1.5, -0.5]).is_err());
    let not_hermitian = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 0.5].map(|v| Complex64::new(v, 0.0)));
    let report = validate_density(&not_hermitian);
    assert!(report.unit_trace && !report.hermitian && !report.pass);
    assert!(FiniteDensity::new(not_hermitian).is_err());
    let rho = FiniteDensity::maximally_mixed(3);
    assert!(trace_expectation(&rho, &DMatrix::identity(2, 2)).is_err());
}

#[test]
fn shift_free_observables_are_measurable() {
    let params = ParameterBinding::new();
    for (source, measurable) in [("x^2 + y", true), ("q*x", true), ("p_x", false), ("y*p_y + 1", false)] {
        let a = parse_polynomial(source, &params).unwrap();
        assert_eq!(classically_measurable(&a), measurable, "{source}");
    }
}
